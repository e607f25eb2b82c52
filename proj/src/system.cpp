#include "smfsync/system.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "smfsync/errors.hpp"

namespace smfsync {

Ellipsoid::Ellipsoid(Vec center, SpdMat shape) : center_(std::move(center)), shape_(std::move(shape)) {
  if (center_.size() != shape_.dim()) throw DimensionMismatch("Ellipsoid: center and shape sizes differ");
  if (!center_.allFinite()) throw ValidationError("Ellipsoid: non-finite center");
}

double Ellipsoid::quadratic_form(const Vec& x) const {
  if (x.size() != dim()) throw DimensionMismatch("Ellipsoid::quadratic_form: wrong vector size");
  // |E^{-1}(x - c)|^2 with the stored lower factor.
  const Vec s = shape_.factor().triangularView<Eigen::Lower>().solve(x - center_);
  return s.squaredNorm();
}

Vec Ellipsoid::point(const Vec& z) const {
  if (z.size() != dim()) throw DimensionMismatch("Ellipsoid::point: wrong vector size");
  return center_ + shape_.factor() * z;
}

Vec Ellipsoid::semi_axes_box() const { return shape_.matrix().diagonal().cwiseSqrt(); }

void LtvSystem::check(const StepMatrices& s, const StepMatrices& first, std::size_t k) {
  const std::string at = " at step " + std::to_string(k);
  const Eigen::Index n = first.a.rows();
  if (s.a.rows() != n || s.a.cols() != n) throw DimensionMismatch("A must be n x n" + at);
  if (s.b.rows() != n || s.b.cols() != first.b.cols()) throw DimensionMismatch("B must be n x m" + at);
  if (s.g.rows() != n || s.g.cols() != first.g.cols()) throw DimensionMismatch("G must be n x w" + at);
  if (s.c.cols() != n || s.c.rows() != first.c.rows()) throw DimensionMismatch("C must be p x n" + at);
  if (s.d.rows() != s.c.rows() || s.d.cols() != first.d.cols()) throw DimensionMismatch("D must be p x v" + at);
  if (s.q.dim() != s.g.cols()) throw DimensionMismatch("Q must be w x w" + at);
  if (s.r.dim() != s.d.cols()) throw DimensionMismatch("R must be v x v" + at);
  for (const Mat* m : {&s.a, &s.b, &s.g, &s.c, &s.d})
    if (!linalg::all_finite(*m)) throw ValidationError("non-finite system matrix" + at);
}

LtvSystem LtvSystem::time_invariant(StepMatrices m) {
  LtvSystem sys;
  check(m, m, 0);
  sys.steps_.push_back(std::move(m));
  sys.invariant_ = true;
  return sys;
}

LtvSystem LtvSystem::from_sequence(std::vector<StepMatrices> steps) {
  if (steps.empty()) throw std::invalid_argument("LtvSystem::from_sequence: no steps");
  for (std::size_t k = 0; k < steps.size(); ++k) check(steps[k], steps.front(), k);
  LtvSystem sys;
  sys.steps_ = std::move(steps);
  return sys;
}

const StepMatrices& LtvSystem::at(Eigen::Index k) const {
  if (invariant_) return steps_.front();
  if (k < 0 || k >= static_cast<Eigen::Index>(steps_.size()))
    throw std::out_of_range("LtvSystem::at: step " + std::to_string(k) + " outside the defined horizon");
  return steps_[static_cast<std::size_t>(k)];
}

Eigen::Index LtvSystem::steps() const {
  return invariant_ ? std::numeric_limits<Eigen::Index>::max() : static_cast<Eigen::Index>(steps_.size());
}

Vec LtvSystem::step(Eigen::Index k, const Vec& x, const Vec& u, const Vec& w) const {
  const StepMatrices& s = at(k);
  if (x.size() != n() || u.size() != m() || w.size() != this->w())
    throw DimensionMismatch("LtvSystem::step: state, input or disturbance has the wrong size");
  return s.a * x + s.b * u + s.g * w;
}

Vec LtvSystem::measure(Eigen::Index k, const Vec& x, const Vec& v) const {
  const StepMatrices& s = at(k);
  if (x.size() != n() || v.size() != this->v())
    throw DimensionMismatch("LtvSystem::measure: state or noise has the wrong size");
  return s.c * x + s.d * v;
}

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

DisturbanceSource::DisturbanceSource(DisturbanceSpec spec, Eigen::Index dim, double dt, std::uint64_t seed)
    : spec_(std::move(spec)), dim_(dim), dt_(dt), rng_(seed) {
  if (spec_.kind == DisturbanceKind::UniformBox) {
    if (spec_.half_widths.size() == 1 && dim_ > 1) spec_.half_widths = Vec::Constant(dim_, spec_.half_widths(0));
    if (spec_.half_widths.size() != dim_) throw DimensionMismatch("uniform box: half-width count differs from dimension");
    if ((spec_.half_widths.array() < 0.0).any()) throw ValidationError("uniform box: negative half-width");
  }
}

Vec DisturbanceSource::sample(Eigen::Index k, const SpdMat& bound) {
  if (bound.dim() != dim_) throw DimensionMismatch("disturbance bound has the wrong dimension");
  const Ellipsoid set(Vec::Zero(dim_), bound);
  switch (spec_.kind) {
    case DisturbanceKind::Zero:
      return Vec::Zero(dim_);
    case DisturbanceKind::Sinusoidal: {
      const double t = static_cast<double>(k) * dt_;
      Vec w = Vec::Constant(dim_, spec_.amplitude * std::sin(spec_.frequency * t + spec_.phase));
      if (!set.contains(w, 1e-12))
        throw ValidationError("sinusoidal disturbance leaves its bounding ellipsoid at step " + std::to_string(k));
      return w;
    }
    case DisturbanceKind::UniformBox: {
      // Reject and redraw until the sample is admissible.
      for (int attempt = 0; attempt < 10000; ++attempt) {
        Vec w(dim_);
        for (Eigen::Index i = 0; i < dim_; ++i) w(i) = (2.0 * unit_uniform(rng_) - 1.0) * spec_.half_widths(i);
        if (set.contains(w, 0.0)) return w;
        ++rejected_;
      }
      throw ValidationError("uniform box disturbance: no admissible sample after 10000 draws");
    }
  }
  return Vec::Zero(dim_);
}

std::pair<Mat, Mat> zoh_discretize(const Mat& a_cont, const Mat& g_cont, double dt) {
  const Eigen::Index n = a_cont.rows(), w = g_cont.cols();
  if (a_cont.cols() != n || g_cont.rows() != n) throw DimensionMismatch("zoh_discretize: shape mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("zoh_discretize: dt must be positive");
  Mat aug = Mat::Zero(n + w, n + w);
  aug.topLeftCorner(n, n) = a_cont * dt;
  aug.topRightCorner(n, w) = g_cont * dt;
  const Mat phi = linalg::matrix_exponential(aug);
  return {phi.topLeftCorner(n, n), phi.topRightCorner(n, w)};
}

LtvSystem zoh_discretize_mathieu(const MathieuParams& p) {
  if (!(p.dt > 0.0)) throw std::invalid_argument("zoh_discretize_mathieu: dt must be positive");
  if (p.horizon < 0) throw std::invalid_argument("zoh_discretize_mathieu: negative horizon");
  Mat g_cont(2, 1);
  g_cont << 0.0, 1.0;
  Mat c(1, 2);
  c << 1.0, 0.0;
  std::vector<StepMatrices> steps;
  steps.reserve(static_cast<std::size_t>(p.horizon + 1));
  for (Eigen::Index k = 0; k <= p.horizon; ++k) {
    const double t = p.dt * static_cast<double>(p.sample == CoefficientSample::Start ? k : k + 1);
    Mat a_cont(2, 2);
    a_cont << 0.0, 1.0, -p.omega0 * p.omega0 * (1.0 + p.epsilon * std::sin(p.omega * t)), 0.0;
    auto [a, g] = zoh_discretize(a_cont, g_cont, p.dt);
    steps.push_back({a, Mat(2, 0), g, c, Mat::Ones(1, 1), SpdMat::scalar(p.q), SpdMat::scalar(p.r)});
  }
  return LtvSystem::from_sequence(std::move(steps));
}

}  // namespace smfsync
