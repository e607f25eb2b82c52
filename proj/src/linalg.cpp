#include "smfsync/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "smfsync/errors.hpp"

namespace smfsync {

namespace linalg {

bool all_finite(const Mat& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j))) return false;
  return true;
}

bool is_symmetric(const Mat& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = 1.0 + (m.size() > 0 ? m.cwiseAbs().maxCoeff() : 0.0);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > tol * scale) return false;
  return true;
}

Mat cholesky(const Mat& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("cholesky: matrix is not square");
  const Eigen::Index n = m.rows();
  Mat e = Mat::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = m(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= e(j, k) * e(j, k);
    if (!(d > 0.0)) {
      std::ostringstream os;
      os << "cholesky: non-positive pivot " << d << " at index " << j;
      throw NotPositiveDefinite(os.str());
    }
    const double djj = std::sqrt(d);
    e(j, j) = djj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= e(i, k) * e(j, k);
      e(i, j) = s / djj;
    }
  }
  return e;
}

namespace {

// Householder reduction to upper Hessenberg form, in place.
void reduce_to_hessenberg(Mat& h) {
  const Eigen::Index n = h.rows();
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    Vec x = h.block(k + 1, k, n - k - 1, 1);
    const double alpha = x.norm();
    if (alpha == 0.0) continue;
    Vec v = x;
    v(0) += (x(0) >= 0.0 ? alpha : -alpha);
    const double vnorm2 = v.squaredNorm();
    if (vnorm2 == 0.0) continue;
    // H <- P H P with P = I - 2 v v^T / (v^T v), acting on rows/cols k+1..n-1
    auto rows = h.bottomRows(n - k - 1);
    Eigen::RowVectorXd w = (v.transpose() * rows) * (2.0 / vnorm2);
    rows -= v * w;
    auto cols = h.rightCols(n - k - 1);
    Vec z = (cols * v) * (2.0 / vnorm2);
    cols -= z * v.transpose();
    for (Eigen::Index i = k + 2; i < n; ++i) h(i, k) = 0.0;
  }
}

double sign_of(double a, double b) { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

// Francis double-shift QR on an upper Hessenberg matrix (eigenvalues only).
std::vector<Complex> hessenberg_qr(Mat h) {
  const int n = static_cast<int>(h.rows());
  std::vector<double> wr(n + 1, 0.0), wi(n + 1, 0.0);
  // 1-based accessor keeps the index arithmetic close to the textbook form.
  auto a = [&h](int i, int j) -> double& { return h(i - 1, j - 1); };

  double anorm = 0.0;
  for (int i = 1; i <= n; ++i)
    for (int j = std::max(i - 1, 1); j <= n; ++j) anorm += std::abs(a(i, j));

  int nn = n;
  double t = 0.0;
  constexpr int kMaxIterations = 60;
  while (nn >= 1) {
    int its = 0;
    int l = 1;
    do {
      for (l = nn; l >= 2; --l) {
        double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
        if (s == 0.0) s = anorm;
        if (std::abs(a(l, l - 1)) + s == s) {
          a(l, l - 1) = 0.0;
          break;
        }
      }
      double x = a(nn, nn);
      if (l == nn) {
        wr[nn] = x + t;
        wi[nn] = 0.0;
        --nn;
      } else {
        double y = a(nn - 1, nn - 1);
        double w = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1) {
          double p = 0.5 * (y - x);
          double q = p * p + w;
          double z = std::sqrt(std::abs(q));
          x += t;
          if (q >= 0.0) {
            z = p + sign_of(z, p);
            wr[nn - 1] = wr[nn] = x + z;
            if (z != 0.0) wr[nn] = x - w / z;
            wi[nn - 1] = wi[nn] = 0.0;
          } else {
            wr[nn - 1] = wr[nn] = x + p;
            wi[nn] = z;
            wi[nn - 1] = -z;
          }
          nn -= 2;
        } else {
          if (its == kMaxIterations)
            throw NoConvergence("eigenvalues_general: QR iteration did not converge");
          if (its > 0 && its % 10 == 0) {
            // exceptional shift
            t += x;
            for (int i = 1; i <= nn; ++i) a(i, i) -= x;
            double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
          }
          ++its;
          int m = nn - 2;
          double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
          for (; m >= l; --m) {
            z = a(m, m);
            r = x - z;
            double s = y - z;
            p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
            q = a(m + 1, m + 1) - z - r - s;
            r = a(m + 2, m + 1);
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
            double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
            if (u + v == v) break;
          }
          for (int i = m + 2; i <= nn; ++i) {
            a(i, i - 2) = 0.0;
            if (i != m + 2) a(i, i - 3) = 0.0;
          }
          for (int k = m; k <= nn - 1; ++k) {
            if (k != m) {
              p = a(k, k - 1);
              q = a(k + 1, k - 1);
              r = 0.0;
              if (k != nn - 1) r = a(k + 2, k - 1);
              x = std::abs(p) + std::abs(q) + std::abs(r);
              if (x != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
            if (s != 0.0) {
              if (k == m) {
                if (l != m) a(k, k - 1) = -a(k, k - 1);
              } else {
                a(k, k - 1) = -s * x;
              }
              p += s;
              x = p / s;
              y = q / s;
              z = r / s;
              q /= p;
              r /= p;
              for (int j = k; j <= nn; ++j) {
                p = a(k, j) + q * a(k + 1, j);
                if (k != nn - 1) {
                  p += r * a(k + 2, j);
                  a(k + 2, j) -= p * z;
                }
                a(k + 1, j) -= p * y;
                a(k, j) -= p * x;
              }
              const int mmin = nn < k + 3 ? nn : k + 3;
              for (int i = l; i <= mmin; ++i) {
                p = x * a(i, k) + y * a(i, k + 1);
                if (k != nn - 1) {
                  p += z * a(i, k + 2);
                  a(i, k + 2) -= p * r;
                }
                a(i, k + 1) -= p * q;
                a(i, k) -= p;
              }
            }
          }
        }
      }
    } while (l < nn - 1);
  }

  std::vector<Complex> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) out.emplace_back(wr[i], wi[i]);
  return out;
}

}  // namespace

std::vector<Complex> eigenvalues_general(const Mat& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("eigenvalues_general: matrix is not square");
  if (!all_finite(m)) throw Error("eigenvalues_general: non-finite entry");
  if (m.rows() == 0) return {};
  Mat h = m;
  reduce_to_hessenberg(h);
  return hessenberg_qr(std::move(h));
}

double spectral_radius(const Mat& m) {
  double rho = 0.0;
  for (const Complex& z : eigenvalues_general(m)) rho = std::max(rho, std::abs(z));
  return rho;
}

double spectral_radius_complex(const Mat& re, const Mat& im) {
  if (re.rows() != im.rows() || re.cols() != im.cols())
    throw DimensionMismatch("spectral_radius_complex: part shapes differ");
  const Eigen::Index n = re.rows();
  Mat embed(2 * n, 2 * n);
  embed << re, -im, im, re;
  return spectral_radius(embed);
}

SymmetricEigen symmetric_eigen(const Mat& m) {
  if (!is_symmetric(m, 1e-9)) throw Error("symmetric_eigen: matrix is not symmetric");
  const Eigen::Index n = m.rows();
  Mat a = 0.5 * (m + m.transpose());
  Mat v = Mat::Identity(n, n);
  constexpr int kMaxSweeps = 100;
  const double scale = a.norm();
  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * scale || off == 0.0) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = sign_of(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (sweep == kMaxSweeps) throw NoConvergence("symmetric_eigen: Jacobi sweeps did not converge");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&a](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });
  SymmetricEigen out{Vec(n), Mat(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

double max_symmetric_eigenvalue(const Mat& m) {
  if (m.rows() == 0) return 0.0;
  return symmetric_eigen(m).values(m.rows() - 1);
}

double min_symmetric_eigenvalue(const Mat& m) {
  if (m.rows() == 0) return 0.0;
  return symmetric_eigen(m).values(0);
}

double sigma_max(const Mat& m) {
  if (m.size() == 0) return 0.0;
  const Mat gram = m.rows() >= m.cols() ? Mat(m.transpose() * m) : Mat(m * m.transpose());
  return std::sqrt(std::max(0.0, max_symmetric_eigenvalue(gram)));
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Mat matrix_exponential(const Mat& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("matrix_exponential: matrix is not square");
  const Eigen::Index n = m.rows();
  if (n == 0) return Mat(0, 0);
  const double norm_inf = m.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm_inf > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm_inf / 0.5)));
  const Mat a = m / std::ldexp(1.0, squarings);

  constexpr int q = 6;
  double c = 1.0;
  Mat power = Mat::Identity(n, n);
  Mat num = Mat::Identity(n, n);
  Mat den = Mat::Identity(n, n);
  for (int k = 1; k <= q; ++k) {
    c *= static_cast<double>(q - k + 1) / static_cast<double>(k * (2 * q - k + 1));
    power = power * a;
    num += c * power;
    den += ((k % 2 == 0) ? c : -c) * power;
  }
  Mat x = den.partialPivLu().solve(num);
  for (int i = 0; i < squarings; ++i) x = x * x;
  return x;
}

Mat inverse_sqrt(const SpdMat& m) {
  const SymmetricEigen eig = symmetric_eigen(m.matrix());
  Vec d = eig.values.array().rsqrt();
  return eig.vectors * d.asDiagonal() * eig.vectors.transpose();
}

}  // namespace linalg

SpdMat::SpdMat(const Mat& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("SpdMat: matrix is not square");
  if (!linalg::all_finite(m)) throw NotPositiveDefinite("SpdMat: non-finite entry");
  if (!linalg::is_symmetric(m)) throw NotPositiveDefinite("SpdMat: matrix is not symmetric");
  m_ = 0.5 * (m + m.transpose());
  factor_ = linalg::cholesky(m_);
}

SpdMat SpdMat::identity(Eigen::Index n, double scale) {
  return SpdMat(Mat::Identity(n, n) * scale);
}

Mat SpdMat::inverse() const { return solve(Mat::Identity(dim(), dim())); }

Mat SpdMat::solve(const Mat& rhs) const {
  if (rhs.rows() != dim()) throw DimensionMismatch("SpdMat::solve: row count differs");
  const auto lower = factor_.triangularView<Eigen::Lower>();
  Mat y = lower.solve(rhs);
  return lower.transpose().solve(y);
}

}  // namespace smfsync
