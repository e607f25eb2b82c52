#include <cmath>
#include <random>

#include "doctest.h"
#include "smfsync/filter.hpp"
#include "test_helpers.hpp"

using namespace smfsync;
using namespace smfsync::smf;

namespace {

Mat row(double a, double b) {
  Mat m(1, 2);
  m << a, b;
  return m;
}

// Minimal trace of an ellipsoid containing E(0, P1) + E(0, P2).
double minkowski_trace(const Mat& p1, const Mat& p2) {
  return std::pow(std::sqrt(p1.trace()) + std::sqrt(p2.trace()), 2);
}

LtvSystem mathieu() {
  MathieuParams p;
  p.horizon = 200;
  return zoh_discretize_mathieu(p);
}

FilterOptions tight() {
  FilterOptions o;
  o.solver.tol = 1e-9;
  o.solver.gap = 1e-9;
  return o;
}

}  // namespace

TEST_CASE("first correction of the Mathieu example") {
  LtvSystem sys = mathieu();
  FilterState st = initialize(Ellipsoid(Vec::Zero(2), SpdMat::identity(2, 10.5)));
  const Vec x0 = Eigen::Vector2d(0.5, 0.0);
  const Vec y0 = sys.measure(0, x0, Vec::Zero(1));
  FilterState c = correct(sys, st, y0, tight());
  REQUIRE(c.corrected);
  // Frozen values from an independent conic solver.
  CHECK(c.corrected->shape().trace() == doctest::Approx(10.8239984568).epsilon(1e-8));
  CHECK(c.corrected->shape().trace() < 21.0);
  CHECK((*c.gain)(0, 0) == doctest::Approx(0.98456784).epsilon(1e-5));
  CHECK(c.corrected->center()(0) == doctest::Approx(0.49228392).epsilon(1e-5));
  CHECK((x0 - c.corrected->center()).norm() < 0.5 * x0.norm());
  CHECK(c.corrected->contains(x0));
  CHECK(c.tau.tau1 >= -1e-9);
  CHECK(c.tau.tau2 >= -1e-9);
  CHECK(c.tau.tau1 + c.tau.tau2 <= 1.0 + 1e-9);
  // Factor consistency.
  const Mat& e = c.corrected->shape().factor();
  CHECK((e * e.transpose() - c.corrected->shape().matrix()).norm() <= 1e-10 * c.corrected->shape().matrix().norm());

  FilterState p = predict(sys, c, Vec(0), tight());
  CHECK(p.k == 1);
  CHECK_FALSE(p.corrected);
  CHECK(p.predicted.shape().trace() == doctest::Approx(10.0798111631).epsilon(1e-6));
  CHECK((p.predicted.center() - sys.at(0).a * c.corrected->center()).norm() < 1e-15);
}

TEST_CASE("correction with zero innovation keeps the center") {
  StepMatrices s{Mat::Identity(2, 2), Mat::Zero(2, 0), Mat::Identity(2, 2), Mat::Identity(2, 2),
                 1e-4 * Mat::Identity(2, 2), SpdMat::identity(2, 0.1), SpdMat::identity(2, 1.0)};
  LtvSystem sys = LtvSystem::time_invariant(s);
  Vec x = Eigen::Vector2d(1.0, -2.0);
  FilterState st = initialize(Ellipsoid(x, SpdMat::identity(2, 3.0)));
  FilterState c = correct(sys, st, x);
  CHECK((c.corrected->center() - x).norm() < 1e-14);
  // Nearly noiseless full-state measurement collapses the set.
  CHECK(c.corrected->shape().trace() < 1e-3);
  CHECK_THROWS_AS(correct(sys, c, x), FilterError);
}

TEST_CASE("prediction special cases") {
  SUBCASE("identity dynamics without disturbance shrink-wrap the same set") {
    StepMatrices s{Mat::Identity(2, 2), Mat::Zero(2, 1), Mat::Zero(2, 1), row(1, 0), Mat::Ones(1, 1),
                   SpdMat::scalar(1.0), SpdMat::scalar(1.0)};
    LtvSystem sys = LtvSystem::time_invariant(s);
    Mat p0(2, 2);
    p0 << 2.0, 0.3, 0.3, 1.0;
    FilterState st = initialize(Ellipsoid(Eigen::Vector2d(1, 2), SpdMat(p0)));
    st.corrected = st.predicted;
    FilterState p = predict(sys, st, Vec::Zero(1));
    CHECK(p.predicted.center() == Eigen::Vector2d(1, 2));
    CHECK(p.predicted.shape().trace() <= p0.trace() * (1 + 1e-6));
    CHECK((p.predicted.shape().matrix() - p0).norm() < 1e-4);
  }
  SUBCASE("zero dynamics leave only the disturbance set") {
    StepMatrices s{Mat::Zero(2, 2), Mat::Identity(2, 2), Mat::Identity(2, 2), row(1, 0), Mat::Ones(1, 1),
                   SpdMat::identity(2, 0.3), SpdMat::scalar(1.0)};
    LtvSystem sys = LtvSystem::time_invariant(s);
    FilterState st = initialize(Ellipsoid(Eigen::Vector2d(4, 4), SpdMat::identity(2, 5.0)));
    st.corrected = st.predicted;
    Vec u = Eigen::Vector2d(0.5, -1.0);
    FilterState p = predict(sys, st, u);
    CHECK((p.predicted.center() - u).norm() < 1e-14);
    CHECK((p.predicted.shape().matrix() - 0.3 * Mat::Identity(2, 2)).norm() < 1e-5);
  }
  SUBCASE("optimal trace of a Minkowski sum") {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 30; ++trial) {
      const Eigen::Index n = 2 + trial % 3, w = 1 + trial % 2;
      Mat a = testing::random_matrix(rng, n, n, 1.5);
      Mat g = testing::random_matrix(rng, n, w);
      SpdMat pc(testing::random_spd(rng, n, 0.2));
      SpdMat q(testing::random_spd(rng, w, 0.05));
      PredictionVars v;
      sdp::Solution s = sdp::solve(prediction_problem(a, pc.factor(), g, q, v));
      REQUIRE(s.status == sdp::Status::Optimal);
      const double expected = minkowski_trace(a * pc.matrix() * a.transpose(), g * q.matrix() * g.transpose());
      CHECK(s.objective == doctest::Approx(expected).epsilon(1e-5));
    }
  }
}

TEST_CASE("Monte-Carlo containment of single steps") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 6; ++trial) {
    const Eigen::Index n = 2, p = 1 + trial % 2, v = p, w = 1 + trial % 2;
    StepMatrices s{testing::random_matrix(rng, n, n, 1.2), Mat::Identity(n, n), testing::random_matrix(rng, n, w),
                   testing::random_matrix(rng, p, n), Mat::Identity(p, v), SpdMat(testing::random_spd(rng, w, 0.05)),
                   SpdMat(testing::random_spd(rng, v, 0.05))};
    LtvSystem sys = LtvSystem::time_invariant(s);
    Ellipsoid init(testing::random_matrix(rng, n, 1), SpdMat(testing::random_spd(rng, n, 0.3)));
    FilterState st = initialize(init);
    // Measurement of a nominal state; containment must hold for every
    // admissible (z, v) pair, whatever y was.
    const Vec y = sys.measure(0, init.point(testing::random_in_ball(rng, n)), Vec::Zero(v));
    FilterState c = correct(sys, st, y);
    const Mat& l = *c.gain;
    const Mat& e = init.shape().factor();
    const Ellipsoid err_set(Vec::Zero(n), c.corrected->shape());
    const Mat rf = s.r.factor();
    int violations = 0;
    for (int i = 0; i < 10000; ++i) {
      const Vec z = testing::random_in_ball(rng, n);
      const Vec vk = rf * testing::random_in_ball(rng, v);
      const Vec x = init.center() + e * z;
      const Vec yk = s.c * x + s.d * vk;
      const Vec xc = init.center() + l * (yk - s.c * init.center());
      if (!Ellipsoid(xc, c.corrected->shape()).contains(x, 1e-6)) ++violations;
      if (!err_set.contains((Mat::Identity(n, n) - l * s.c) * e * z - l * s.d * vk, 1e-6)) ++violations;
    }
    CHECK(violations == 0);

    const Vec u = testing::random_matrix(rng, n, 1);
    FilterState pr = predict(sys, c, u);
    const Mat qf = s.q.factor();
    violations = 0;
    for (int i = 0; i < 10000; ++i) {
      const Vec x = c.corrected->point(testing::random_in_ball(rng, n));
      const Vec wk = qf * testing::random_in_ball(rng, w);
      if (!pr.predicted.contains(sys.step(0, x, u, wk), 1e-6)) ++violations;
    }
    CHECK(violations == 0);
  }
}

TEST_CASE("run") {
  LtvSystem sys = mathieu();
  Ellipsoid init(Vec::Zero(2), SpdMat::identity(2, 10.5));
  SUBCASE("zero horizon performs exactly one correction") {
    std::vector<StepRecord> records;
    FilterRun r = run(sys, init, {}, {Vec::Constant(1, 0.5)}, 0, {}, [&](const StepRecord& rec) { records.push_back(rec); });
    REQUIRE(r.states.size() == 1);
    CHECK(r.states[0].corrected);
    REQUIRE(records.size() == 1);
    CHECK(records[0].k == 0);
    CHECK(records[0].trace_pred == doctest::Approx(21.0));
    CHECK(records[0].bounds.size() == 2);
  }
  SUBCASE("short run tracks a simulated trajectory") {
    const Eigen::Index horizon = 30;
    Vec x = Eigen::Vector2d(0.5, 0.0);
    std::vector<Vec> ys, us(horizon, Vec(0)), xs;
    DisturbanceSource wsrc({DisturbanceKind::Sinusoidal, 0.05, 2 * 3.14159265358979323846, 0.0, {}}, 1, 0.1, 0);
    for (Eigen::Index k = 0; k <= horizon; ++k) {
      const Vec w = wsrc.sample(k, sys.at(k).q);
      ys.push_back(sys.measure(k, x, w));
      xs.push_back(x);
      x = sys.step(k, x, Vec(0), w);
    }
    FilterRun r = run(sys, init, us, ys, horizon);
    REQUIRE(r.states.size() == horizon + 1);
    for (Eigen::Index k = 0; k <= horizon; ++k) {
      const auto& st = r.states[static_cast<std::size_t>(k)];
      CHECK(st.k == k);
      CHECK(st.corrected->contains(xs[static_cast<std::size_t>(k)], 1e-6));
      CHECK(st.predicted.contains(xs[static_cast<std::size_t>(k)], 1e-6));
      const Vec err = (xs[static_cast<std::size_t>(k)] - st.corrected->center()).cwiseAbs();
      CHECK((err.array() <= st.corrected->semi_axes_box().array() * (1 + 1e-6)).all());
    }
    CHECK_THROWS_AS(run(sys, init, us, ys, horizon + 1), DimensionMismatch);
  }
}
