#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

namespace smfsync {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Complex = std::complex<double>;

namespace linalg {

/// Numerical tolerances shared by every kernel in this namespace.
struct Tolerances {
  double symmetry = 1e-12;         // relative, entrywise
  double factor_residual = 1e-10;  // relative Frobenius, E E^T vs M
  double eigen_residual = 1e-9;
};

inline constexpr Tolerances kTolerances{};

bool all_finite(const Mat& m);

/// max |M - M^T| <= tol * (1 + max |M|), entrywise.
bool is_symmetric(const Mat& m, double tol = kTolerances.symmetry);

}  // namespace linalg

/// Symmetric positive definite matrix. Construction validates symmetry and
/// positive definiteness (via Cholesky) and stores the symmetrized matrix
/// together with its lower-triangular factor.
class SpdMat {
 public:
  explicit SpdMat(const Mat& m);

  static SpdMat identity(Eigen::Index n, double scale = 1.0);
  static SpdMat scalar(double value) { return identity(1, value); }

  const Mat& matrix() const { return m_; }
  const Mat& factor() const { return factor_; }
  Eigen::Index dim() const { return m_.rows(); }
  double trace() const { return m_.trace(); }

  Mat inverse() const;
  /// M^{-1} rhs using the stored factor.
  Mat solve(const Mat& rhs) const;

 private:
  Mat m_;
  Mat factor_;
};

namespace linalg {

/// Lower-triangular E with E E^T = m. Throws NotPositiveDefinite when a
/// pivot is not strictly positive.
Mat cholesky(const Mat& m);

/// All eigenvalues of a real square matrix (Householder Hessenberg reduction
/// followed by Francis double-shift QR). Ordering is unspecified.
std::vector<Complex> eigenvalues_general(const Mat& m);

double spectral_radius(const Mat& m);

struct SymmetricEigen {
  Vec values;   // ascending
  Mat vectors;  // columns, orthonormal
};

/// Cyclic Jacobi rotations; input must be symmetric.
SymmetricEigen symmetric_eigen(const Mat& m);

double max_symmetric_eigenvalue(const Mat& m);
double min_symmetric_eigenvalue(const Mat& m);

/// Largest singular value (induced 2-norm).
double sigma_max(const Mat& m);

Mat kron(const Mat& a, const Mat& b);

/// e^m by scaling and squaring with a diagonal (6,6) Pade approximant.
Mat matrix_exponential(const Mat& m);

/// Symmetric inverse square root of an SPD matrix.
Mat inverse_sqrt(const SpdMat& m);

/// Spectral radius of the complex matrix re + i*im, computed from the real
/// 2n x 2n embedding [[re, -im], [im, re]] whose spectrum is the union of the
/// spectra of the matrix and its conjugate.
double spectral_radius_complex(const Mat& re, const Mat& im);

}  // namespace linalg
}  // namespace smfsync
