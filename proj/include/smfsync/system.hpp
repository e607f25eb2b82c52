#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "smfsync/linalg.hpp"

namespace smfsync {

/// E(c, P) = { x : (x - c)^T P^{-1} (x - c) <= 1 }
class Ellipsoid {
 public:
  Ellipsoid(Vec center, SpdMat shape);

  const Vec& center() const { return center_; }
  const SpdMat& shape() const { return shape_; }
  Eigen::Index dim() const { return center_.size(); }

  double quadratic_form(const Vec& x) const;
  bool contains(const Vec& x, double tol = 1e-6) const { return quadratic_form(x) <= 1.0 + tol; }
  /// c + E z, a point of the ellipsoid whenever |z| <= 1.
  Vec point(const Vec& z) const;
  /// Half-widths sqrt(P_ii) of the bounding box.
  Vec semi_axes_box() const;

 private:
  Vec center_;
  SpdMat shape_;
};

/// One time step of
///   x_{k+1} = A x_k + B u_k + G w_k,   y_k = C x_k + D v_k,
/// with w_k in E(0, Q) and v_k in E(0, R).
struct StepMatrices {
  Mat a, b, g, c, d;
  SpdMat q, r;
};

class LtvSystem {
 public:
  /// Same matrices at every step.
  static LtvSystem time_invariant(StepMatrices m);
  /// Matrices for steps 0..steps.size()-1.
  static LtvSystem from_sequence(std::vector<StepMatrices> steps);

  const StepMatrices& at(Eigen::Index k) const;
  bool is_time_invariant() const { return steps_.size() == 1 && invariant_; }
  /// Number of defined steps (unbounded for time-invariant systems).
  Eigen::Index steps() const;

  Eigen::Index n() const { return steps_.front().a.rows(); }
  Eigen::Index m() const { return steps_.front().b.cols(); }
  Eigen::Index w() const { return steps_.front().g.cols(); }
  Eigen::Index p() const { return steps_.front().c.rows(); }
  Eigen::Index v() const { return steps_.front().d.cols(); }

  Vec step(Eigen::Index k, const Vec& x, const Vec& u, const Vec& w) const;
  Vec measure(Eigen::Index k, const Vec& x, const Vec& v) const;

 private:
  LtvSystem() = default;
  static void check(const StepMatrices& s, const StepMatrices& first, std::size_t k);

  std::vector<StepMatrices> steps_;
  bool invariant_ = false;
};

/// Uniform double in [0, 1) from the top 53 bits of one engine draw, so that
/// streams are identical across standard libraries.
double unit_uniform(std::mt19937_64& rng);

enum class DisturbanceKind { Zero, Sinusoidal, UniformBox };

struct DisturbanceSpec {
  DisturbanceKind kind = DisturbanceKind::Zero;
  double amplitude = 0.0;  // sinusoidal: every component is amplitude * sin(frequency * t_k + phase)
  double frequency = 0.0;  // rad per unit time
  double phase = 0.0;
  Vec half_widths;  // uniform box: component i uniform in [-h_i, h_i]
};

/// Emits admissible disturbance samples; every sample is checked against
/// its bounding ellipsoid before it leaves.
class DisturbanceSource {
 public:
  DisturbanceSource(DisturbanceSpec spec, Eigen::Index dim, double dt, std::uint64_t seed);

  Vec sample(Eigen::Index k, const SpdMat& bound);
  /// Box draws rejected because they fell outside the ellipsoid.
  std::uint64_t rejected() const { return rejected_; }
  const DisturbanceSpec& spec() const { return spec_; }

 private:
  DisturbanceSpec spec_;
  Eigen::Index dim_;
  double dt_;
  std::mt19937_64 rng_;
  std::uint64_t rejected_ = 0;
};

/// Zero-order hold of x' = A_c x + G_c w over dt, from the exponential of the
/// augmented matrix [[A_c, G_c], [0, 0]] * dt. Returns (A_d, G_d).
std::pair<Mat, Mat> zoh_discretize(const Mat& a_cont, const Mat& g_cont, double dt);

/// Where the time-varying coefficient is frozen over [t_k, t_{k+1}).
enum class CoefficientSample { Start, End };

/// x1' = x2,  x2' = -omega0^2 (1 + epsilon sin(omega t)) x1 + w
struct MathieuParams {
  double omega = 2.0 * 3.14159265358979323846;
  double omega0 = 3.14159265358979323846;
  double epsilon = 0.3;
  double dt = 0.1;
  Eigen::Index horizon = 200;
  CoefficientSample sample = CoefficientSample::Start;
  double q = 0.0025;
  double r = 0.0025;
};

/// Discrete system with one state matrix per step k = 0..horizon, C = [1 0],
/// D = 1 and no control input.
LtvSystem zoh_discretize_mathieu(const MathieuParams& params);

}  // namespace smfsync
