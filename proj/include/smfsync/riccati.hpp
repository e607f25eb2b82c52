#pragma once

#include <optional>

#include "smfsync/graph.hpp"
#include "smfsync/linalg.hpp"

/// Cooperative gain design for the leader-follower protocol: the Riccati-like
/// equation P = A'PA + Q - A'PB(B'PB)^{-1}B'PA, the robustness radius r, the
/// coupling c = 1/c0, and the stacked closed-loop matrices.
namespace smfsync::riccati {

struct RiccatiOptions {
  double tol = 1e-12;  // relative step size for convergence
  int max_iterations = 10000;
};

struct RiccatiSolution {
  SpdMat p;
  double residual;
  int iterations;
};

/// Fixed-point iteration started at Q. Throws RankDeficientB, NoConvergence,
/// or NotPositiveDefinite if an iterate loses definiteness.
RiccatiSolution solve_riccati_like(const Mat& a, const Mat& b, const SpdMat& q, const RiccatiOptions& opts = {});

/// |A'PA - P + Q - A'PB(B'PB)^{-1}B'PA| (induced 2-norm).
double riccati_residual(const Mat& a, const Mat& b, const Mat& p, const Mat& q);

/// K = (B'PB)^{-1} B'PA.
Mat gain(const Mat& a, const Mat& b, const Mat& p);

/// r = sigma_max(Q^{-1/2} A'PB(B'PB)^{-1}B'PA Q^{-1/2})^{-1/2}; Unconstrained
/// when the inner matrix vanishes.
graph::Radius robustness_radius(const Mat& a, const Mat& b, const Mat& p, const SpdMat& q);

/// |A_c^k| <= alpha mu^k.
struct DecayCertificate {
  double alpha;
  double mu;
};

/// Scans 200 values of mu from rho(A_c) towards 1 (mu = 0 skipped); for each
/// the smallest alpha >= 1 valid on k = 0..horizon, keeping the pair with the
/// least alpha / (1 - mu). Requires rho(A_c) < 1.
DecayCertificate fit_decay_certificate(const Mat& ac, int horizon);

/// Pointwise check of |A_c^k| <= alpha mu^k (relative slack 1e-12) on k = 0..horizon.
bool verify_decay_certificate(const Mat& ac, const DecayCertificate& cert, int horizon);

/// |A_c^k| for k = 0..horizon.
Vec power_norms(const Mat& ac, int horizon);

struct RiccatiDesign {
  SpdMat q;
  SpdMat p;
  Mat k;
  graph::Radius r;
  double c0, r0;
  double c;
  double residual;
};

struct ClosedLoop {
  Mat ac;  // I_N (x) A - c Gamma (x) BK
  Mat bc;  // c Gamma (x) BK
  double rho;
  DecayCertificate cert;
};

struct DesignOptions {
  RiccatiOptions riccati;
  /// Horizon over which the decay certificate is fitted or verified.
  int horizon = 60;
  /// User-supplied certificate; verified rather than fitted.
  std::optional<DecayCertificate> certificate;
};

struct Design {
  RiccatiDesign riccati;
  ClosedLoop loop;
};

/// Throws CircleConditionViolated, SpectralRadiusNotContractive, or
/// ValidationError when a user certificate does not hold.
Design design(const Mat& a, const Mat& b, const SpdMat& q, const graph::GammaMatrix& gamma, double c0, double r0,
              const DesignOptions& opts = {});

/// A_c = I_N (x) A - c Gamma (x) BK.
Mat closed_loop_matrix(const Mat& a, const Mat& b, const Mat& k, const Mat& gamma, double c);

/// max_i rho(A - c Lambda_i B K): the modal form of rho(A_c).
double modal_spectral_radius(const Mat& a, const Mat& b, const Mat& k, const std::vector<Complex>& lambda, double c);

}  // namespace smfsync::riccati
