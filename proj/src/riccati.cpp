#include "smfsync/riccati.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <string>

#include "smfsync/errors.hpp"

namespace smfsync::riccati {

namespace {

void check_pair(const Mat& a, const Mat& b) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.rows() != n) throw DimensionMismatch("A must be n x n and B n x m");
  if (b.cols() == 0 || b.cols() > n) throw RankDeficientB("B must have between 1 and n columns");
  const Mat btb = b.transpose() * b;
  const double top = linalg::max_symmetric_eigenvalue(btb);
  if (!(top > 0.0) || linalg::min_symmetric_eigenvalue(btb) <= 1e-12 * top)
    throw RankDeficientB("B is not full column rank");
}

Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

// A'PB (B'PB)^{-1} B'PA
Mat correction_term(const Mat& a, const Mat& b, const Mat& p) {
  const Mat bpa = b.transpose() * p * a;
  const Mat bpb = sym(b.transpose() * p * b);
  Eigen::LLT<Mat> llt(bpb);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("B'PB is not positive definite");
  return bpa.transpose() * llt.solve(bpa);
}

}  // namespace

double riccati_residual(const Mat& a, const Mat& b, const Mat& p, const Mat& q) {
  return linalg::sigma_max(a.transpose() * p * a - p + q - correction_term(a, b, p));
}

RiccatiSolution solve_riccati_like(const Mat& a, const Mat& b, const SpdMat& q, const RiccatiOptions& opts) {
  check_pair(a, b);
  if (q.dim() != a.rows()) throw DimensionMismatch("Q must be n x n");
  Mat p = q.matrix();
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const Mat next = sym(a.transpose() * p * a + q.matrix() - correction_term(a, b, p));
    const double step = linalg::sigma_max(next - p), scale = linalg::sigma_max(p);
    p = next;
    if (step <= opts.tol * scale) {
      SpdMat sol(p);
      const double res = riccati_residual(a, b, sol.matrix(), q.matrix());
      if (res > 1e-8 * linalg::sigma_max(sol.matrix()))
        throw NoConvergence("Riccati-like iteration stalled with residual " + std::to_string(res));
      return {std::move(sol), res, it};
    }
  }
  throw NoConvergence("Riccati-like iteration did not converge in " + std::to_string(opts.max_iterations) +
                      " iterations");
}

Mat gain(const Mat& a, const Mat& b, const Mat& p) {
  const Mat bpb = sym(b.transpose() * p * b);
  return bpb.llt().solve(b.transpose() * p * a);
}

graph::Radius robustness_radius(const Mat& a, const Mat& b, const Mat& p, const SpdMat& q) {
  const Mat qi = linalg::inverse_sqrt(q);
  const double s = linalg::sigma_max(qi * correction_term(a, b, p) * qi);
  if (s == 0.0) return graph::Unconstrained{};
  return 1.0 / std::sqrt(s);
}

Vec power_norms(const Mat& ac, int horizon) {
  Vec out(horizon + 1);
  Mat pk = Mat::Identity(ac.rows(), ac.cols());
  for (int k = 0; k <= horizon; ++k) {
    out(k) = linalg::sigma_max(pk);
    pk = ac * pk;
  }
  return out;
}

DecayCertificate fit_decay_certificate(const Mat& ac, int horizon) {
  const double rho = linalg::spectral_radius(ac);
  if (!(rho < 1.0)) throw SpectralRadiusNotContractive("fit_decay_certificate: rho(A_c) = " + std::to_string(rho));
  const Vec norms = power_norms(ac, horizon);
  DecayCertificate best{std::numeric_limits<double>::infinity(), 0.0};
  double best_score = std::numeric_limits<double>::infinity();
  constexpr int kGrid = 200;
  for (int i = 0; i < kGrid; ++i) {
    const double mu = rho + (1.0 - rho) * i / kGrid;
    if (mu <= 0.0) continue;
    double alpha = 1.0;
    // norms(k) / mu^k, accumulated in log space to avoid overflow for tiny mu.
    for (int k = 0; k <= horizon; ++k) {
      if (norms(k) == 0.0) continue;
      alpha = std::max(alpha, std::exp(std::log(norms(k)) - k * std::log(mu)));
    }
    const double score = alpha / (1.0 - mu);
    if (score < best_score) {
      best_score = score;
      best = {alpha, mu};
    }
  }
  return best;
}

bool verify_decay_certificate(const Mat& ac, const DecayCertificate& cert, int horizon) {
  if (!(cert.alpha > 0.0) || !(cert.mu >= 0.0) || !(cert.mu < 1.0)) return false;
  const Vec norms = power_norms(ac, horizon);
  double bound = cert.alpha;
  for (int k = 0; k <= horizon; ++k, bound *= cert.mu)
    if (norms(k) > bound * (1.0 + 1e-12)) return false;
  return true;
}

Mat closed_loop_matrix(const Mat& a, const Mat& b, const Mat& k, const Mat& gamma, double c) {
  const Eigen::Index n = gamma.rows();
  return linalg::kron(Mat::Identity(n, n), a) - c * linalg::kron(gamma, b * k);
}

double modal_spectral_radius(const Mat& a, const Mat& b, const Mat& k, const std::vector<Complex>& lambda, double c) {
  const Mat bk = b * k;
  double worst = 0.0;
  for (const Complex& l : lambda)
    worst = std::max(worst, linalg::spectral_radius_complex(a - c * l.real() * bk, -c * l.imag() * bk));
  return worst;
}

Design design(const Mat& a, const Mat& b, const SpdMat& q, const graph::GammaMatrix& gamma, double c0, double r0,
              const DesignOptions& opts) {
  RiccatiSolution sol = solve_riccati_like(a, b, q, opts.riccati);
  const graph::Radius r = robustness_radius(a, b, sol.p.matrix(), q);
  if (!graph::circle_condition(gamma.eigenvalues, c0, r0, r))
    throw CircleConditionViolated("circle C(" + std::to_string(c0) + ", " + std::to_string(r0) +
                                  ") does not enclose every eigenvalue of Gamma with r0/c0 < r");
  const Mat k = gain(a, b, sol.p.matrix());
  const double c = 1.0 / c0;

  ClosedLoop loop;
  loop.ac = closed_loop_matrix(a, b, k, gamma.gamma, c);
  loop.bc = c * linalg::kron(gamma.gamma, b * k);
  loop.rho = linalg::spectral_radius(loop.ac);
  if (!(loop.rho < 1.0))
    throw SpectralRadiusNotContractive("rho(A_c) = " + std::to_string(loop.rho) + " despite the circle condition");
  if (opts.certificate) {
    if (!verify_decay_certificate(loop.ac, *opts.certificate, opts.horizon))
      throw ValidationError("supplied decay certificate (alpha, mu) does not bound |A_c^k|");
    loop.cert = *opts.certificate;
  } else {
    loop.cert = fit_decay_certificate(loop.ac, opts.horizon);
  }
  RiccatiDesign rd{q, sol.p, k, r, c0, r0, c, sol.residual};
  return {std::move(rd), std::move(loop)};
}

}  // namespace smfsync::riccati
