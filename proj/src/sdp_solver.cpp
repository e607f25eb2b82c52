// Infeasible-start primal-dual interior-point method with Nesterov-Todd
// scaling and Mehrotra predictor-corrector steps.
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "smfsync/sdp.hpp"

namespace smfsync::sdp {

namespace {

double inner(const Mat& a, const Mat& b) { return a.cwiseProduct(b).sum(); }

Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

struct Scaling {
  Mat g;      // W = G G^T, G^T Z G = G^{-1} X G^{-T} = diag(lambda)
  Mat ginvt;  // G^{-T}
  Vec lambda;
};

bool nt_scaling(const Mat& x, const Mat& z, Scaling& out) {
  Eigen::LLT<Mat> lx(x), lz(z);
  if (lx.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
  const Mat Lx = lx.matrixL();
  const Mat Lz = lz.matrixL();
  Eigen::JacobiSVD<Mat> svd(Lz.transpose() * Lx, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec s = svd.singularValues();
  if (!s.allFinite() || s.minCoeff() <= 0.0) return false;
  const Vec isq = s.array().rsqrt();
  out.g = Lx * svd.matrixV() * isq.asDiagonal();
  out.ginvt = Lz * svd.matrixU() * isq.asDiagonal();
  out.lambda = s;
  return true;
}

// Largest alpha with diag(lambda) + alpha * d >= 0 (infinity if unbounded).
double max_step(const Vec& lambda, const Mat& d) {
  const Vec isq = lambda.array().rsqrt();
  const Mat m = isq.asDiagonal() * d * isq.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(m), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

// D_ab = rhs_ab / (lambda_a + lambda_b)
Mat divide_by_lambda_sum(const Mat& rhs, const Vec& lambda) {
  Mat d(rhs.rows(), rhs.cols());
  for (Eigen::Index a = 0; a < rhs.rows(); ++a)
    for (Eigen::Index b = 0; b < rhs.cols(); ++b) d(a, b) = rhs(a, b) / (lambda(a) + lambda(b));
  return d;
}

struct Direction {
  Vec dy;
  std::vector<Mat> dx;  // scaled
  std::vector<Mat> dz;  // scaled
};

}  // namespace

ConicResult solve_conic(const ConicProgram& program, const Options& opts) {
  const std::size_t nb = program.blocks.size();
  const Eigen::Index m = program.num_free();
  ConicResult result;
  result.y = Vec::Zero(m);
  if (nb == 0) throw std::invalid_argument("solve_conic: no cone blocks");
  for (const auto& b : program.blocks)
    if (static_cast<Eigen::Index>(b.a.size()) != m || b.c.rows() != b.dim)
      throw std::invalid_argument("solve_conic: inconsistent block data");

  double norm_c = 0.0;
  Eigen::Index total_dim = 0;
  for (const auto& b : program.blocks) {
    norm_c += b.c.squaredNorm();
    total_dim += b.dim;
  }
  norm_c = std::sqrt(norm_c);
  const double norm_b = program.b.norm();

  // Starting point scaled to the data, as in SDPT3.
  std::vector<Mat> x(nb), z(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    const auto& blk = program.blocks[j];
    const double d = static_cast<double>(blk.dim);
    double xi = std::max(10.0, std::sqrt(d));
    double eta = std::max({10.0, std::sqrt(d), blk.c.norm()});
    for (Eigen::Index i = 0; i < m; ++i) {
      const double an = blk.a[static_cast<std::size_t>(i)].norm();
      xi = std::max(xi, d * (1.0 + std::abs(program.b(i))) / (1.0 + an));
      eta = std::max(eta, an);
    }
    x[j] = xi * Mat::Identity(blk.dim, blk.dim);
    z[j] = eta * Mat::Identity(blk.dim, blk.dim);
  }
  Vec y = Vec::Zero(m);

  std::vector<double> gap_history;
  std::vector<Scaling> sc(nb);
  std::vector<Mat> rd(nb), rd_scaled(nb);

  auto finish = [&](Status s, std::string msg) {
    result.status = s;
    result.y = y;
    result.x = x;
    result.z = z;
    result.message = std::move(msg);
    return result;
  };

  for (int it = 0;; ++it) {
    // Residuals and objectives.
    Vec ax = Vec::Zero(m);
    double pobj = 0.0, xz = 0.0, rd_norm = 0.0;
    for (std::size_t j = 0; j < nb; ++j) {
      const auto& blk = program.blocks[j];
      rd[j] = blk.c - z[j];
      for (Eigen::Index i = 0; i < m; ++i) {
        const Mat& a = blk.a[static_cast<std::size_t>(i)];
        ax(i) += inner(a, x[j]);
        rd[j] -= y(i) * a;
      }
      pobj += inner(blk.c, x[j]);
      xz += inner(x[j], z[j]);
      rd_norm += rd[j].squaredNorm();
    }
    const Vec rp = program.b - ax;
    const double dobj = program.b.dot(y);
    const double pinf = rp.norm() / (1.0 + norm_b);
    const double dinf = std::sqrt(rd_norm) / (1.0 + norm_c);
    const double denom = 1.0 + std::abs(pobj) + std::abs(dobj);
    const double relgap = std::max(std::abs(pobj - dobj), xz) / denom;
    const double mu = xz / static_cast<double>(total_dim);

    result.iterations = it;
    result.objective = dobj;
    result.dual_objective = pobj;
    result.residuals = {dinf, pinf, relgap};
    if (opts.on_iteration) opts.on_iteration({it, dobj, pobj, dinf, pinf, relgap, mu});

    if (!std::isfinite(pobj) || !std::isfinite(dobj) || !std::isfinite(mu))
      return finish(Status::NumericalFailure, "non-finite iterate");
    if (pinf <= opts.tol && dinf <= opts.tol && relgap <= opts.gap) return finish(Status::Optimal, "converged");

    // Certificates: X >= 0 with A(X) = 0, <C, X> < 0 proves the LMI empty;
    // y with sum y_i A_i <= 0, b^T y > 0 proves the objective unbounded.
    if (pobj < 0.0 && ax.norm() <= opts.tol * -pobj && dinf > opts.tol)
      return finish(Status::Infeasible, "LMI constraints admit no solution");
    if (dobj > 0.0) {
      // sum_i y_i A_ji = C_j - Z_j - Rd_j
      double worst = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < nb; ++j) {
        Eigen::SelfAdjointEigenSolver<Mat> es(sym(program.blocks[j].c - z[j] - rd[j]), Eigen::EigenvaluesOnly);
        worst = std::max(worst, es.eigenvalues()(es.eigenvalues().size() - 1));
      }
      if (worst <= opts.tol * dobj && pinf > opts.tol)
        return finish(Status::Infeasible, "objective unbounded below");
    }

    gap_history.push_back(relgap);
    if (gap_history.size() > 20) {
      const double before = gap_history[gap_history.size() - 21];
      if (relgap > 0.1 * before) {
        if (dinf > opts.tol) return finish(Status::Infeasible, "no progress while the LMI residual stays positive");
        return finish(Status::NumericalFailure, "duality gap stalled");
      }
    }
    if (it >= opts.max_iterations) return finish(Status::NumericalFailure, "iteration limit reached");

    // Scaling point.
    for (std::size_t j = 0; j < nb; ++j) {
      if (!nt_scaling(x[j], z[j], sc[j])) {
        if (dinf > opts.tol && pobj < 0.0) return finish(Status::Infeasible, "iterates diverged without LMI feasibility");
        return finish(Status::NumericalFailure, "scaling factorization broke down");
      }
    }
    std::vector<Mat> g(nb);
    for (std::size_t j = 0; j < nb; ++j) {
      g[j] = sc[j].g;
      rd_scaled[j] = sym(sc[j].g.transpose() * rd[j] * sc[j].g);
    }
    const detail::ScaledData scaled = detail::scale_constraints(program, g, opts.execution);
    const Mat schur = detail::assemble_schur(scaled, m, opts.execution);
    Eigen::LLT<Mat> chol(schur);
    Eigen::LDLT<Mat> ldlt;
    const bool use_llt = chol.info() == Eigen::Success;
    if (!use_llt) {
      ldlt.compute(schur);
      if (ldlt.info() != Eigen::Success) return finish(Status::NumericalFailure, "Schur complement is singular");
    }

    auto solve_direction = [&](const std::vector<Mat>& d) {
      Direction dir;
      Vec h = rp;
      for (std::size_t j = 0; j < nb; ++j)
        for (Eigen::Index i = 0; i < m; ++i) {
          const Mat& at = scaled[j][static_cast<std::size_t>(i)];
          h(i) += inner(at, rd_scaled[j]) - inner(at, d[j]);
        }
      dir.dy = use_llt ? Vec(chol.solve(h)) : Vec(ldlt.solve(h));
      dir.dx.resize(nb);
      dir.dz.resize(nb);
      for (std::size_t j = 0; j < nb; ++j) {
        Mat dzj = rd_scaled[j];
        for (Eigen::Index i = 0; i < m; ++i) dzj -= dir.dy(i) * scaled[j][static_cast<std::size_t>(i)];
        dir.dz[j] = sym(dzj);
        dir.dx[j] = sym(d[j] - dir.dz[j]);
      }
      return dir;
    };
    auto step_lengths = [&](const Direction& dir, double& ap, double& ad) {
      ap = std::numeric_limits<double>::infinity();
      ad = ap;
      for (std::size_t j = 0; j < nb; ++j) {
        ap = std::min(ap, max_step(sc[j].lambda, dir.dx[j]));
        ad = std::min(ad, max_step(sc[j].lambda, dir.dz[j]));
      }
    };

    // Predictor.
    std::vector<Mat> d(nb);
    for (std::size_t j = 0; j < nb; ++j) d[j] = -Mat(sc[j].lambda.asDiagonal());
    const Direction aff = solve_direction(d);
    double ap_aff, ad_aff;
    step_lengths(aff, ap_aff, ad_aff);
    ap_aff = std::min(1.0, ap_aff);
    ad_aff = std::min(1.0, ad_aff);
    double xz_aff = 0.0;
    for (std::size_t j = 0; j < nb; ++j) {
      const Mat lam = sc[j].lambda.asDiagonal();
      xz_aff += inner(lam + ap_aff * aff.dx[j], lam + ad_aff * aff.dz[j]);
    }
    const double mu_aff = xz_aff / static_cast<double>(total_dim);
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

    // Corrector.
    for (std::size_t j = 0; j < nb; ++j) {
      const Vec& lam = sc[j].lambda;
      Mat rhs = -(aff.dx[j] * aff.dz[j] + aff.dz[j] * aff.dx[j]);
      rhs.diagonal().array() += 2.0 * sigma * mu - 2.0 * lam.array().square();
      d[j] = divide_by_lambda_sum(rhs, lam);
    }
    const Direction dir = solve_direction(d);
    double ap, ad;
    step_lengths(dir, ap, ad);
    const double gamma = 0.9 + 0.09 * std::min(ap_aff, ad_aff);
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);

    for (std::size_t j = 0; j < nb; ++j) {
      x[j] = sym(x[j] + ap * sc[j].g * dir.dx[j] * sc[j].g.transpose());
      z[j] = sym(z[j] + ad * sc[j].ginvt * dir.dz[j] * sc[j].ginvt.transpose());
    }
    y += ad * dir.dy;
  }
}

}  // namespace smfsync::sdp
