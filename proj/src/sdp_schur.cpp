// Schur-complement assembly for the interior-point solver. The OpenMP
// variants are the production path; the serial loops are kept as the
// reference they are tested against.
#include <omp.h>

#include "smfsync/parallel.hpp"
#include "smfsync/sdp.hpp"

namespace smfsync {

int max_threads() { return omp_get_max_threads(); }

}  // namespace smfsync

namespace smfsync::sdp::detail {

namespace {

void scale_one(const ConicProgram& program, const std::vector<Mat>& g, ScaledData& out, std::size_t j,
               std::size_t i) {
  const Mat& gj = g[j];
  out[j][i].noalias() = gj.transpose() * program.blocks[j].a[i] * gj;
}

// Frobenius inner product of two symmetric matrices.
double inner(const Mat& a, const Mat& b) { return a.cwiseProduct(b).sum(); }

}  // namespace

ScaledData scale_constraints(const ConicProgram& program, const std::vector<Mat>& g, Execution exec) {
  const std::size_t nb = program.blocks.size();
  const std::size_t m = static_cast<std::size_t>(program.num_free());
  ScaledData out(nb, std::vector<Mat>(m));
  const long total = static_cast<long>(nb * m);
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (long t = 0; t < total; ++t)
      scale_one(program, g, out, static_cast<std::size_t>(t) / m, static_cast<std::size_t>(t) % m);
  } else {
    for (long t = 0; t < total; ++t)
      scale_one(program, g, out, static_cast<std::size_t>(t) / m, static_cast<std::size_t>(t) % m);
  }
  return out;
}

Mat assemble_schur(const ScaledData& scaled, Eigen::Index m, Execution exec) {
  Mat schur = Mat::Zero(m, m);
  // Each (i, k) entry with i <= k is independent; blocks are summed in a
  // fixed order so both paths give bit-identical results.
  auto entry = [&](Eigen::Index i, Eigen::Index k) {
    double s = 0.0;
    for (const auto& block : scaled)
      s += inner(block[static_cast<std::size_t>(i)], block[static_cast<std::size_t>(k)]);
    schur(i, k) = s;
    schur(k, i) = s;
  };
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index k = i; k < m; ++k) entry(i, k);
  } else {
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index k = i; k < m; ++k) entry(i, k);
  }
  return schur;
}

}  // namespace smfsync::sdp::detail
