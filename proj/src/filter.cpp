#include "smfsync/filter.hpp"

#include <cmath>

namespace smfsync::smf {

namespace {

Mat eye(Eigen::Index n) { return Mat::Identity(n, n); }

Mat one(double v) { return Mat::Constant(1, 1, v); }

// Shared block layout [n | 1 | n | k]:
//   [[-P, 0, M0 + left * V * right, N0 + left2 * V * right2], ...,
//    diag(-(1 - t_a - t_b), -t_a I, -t_b W)]
struct ShapeLmi {
  Eigen::Index n, k;
  sdp::VarId p, ta, tb;
  sdp::AffineExpr state_block;  // block (0, 2), n x n
  sdp::AffineExpr noise_block;  // block (0, 3), n x k
  Mat weight;                   // W, k x k
};

void add_shape_lmi(sdp::Problem& pr, ShapeLmi s, const std::string& label) {
  const Eigen::Index n = s.n, k = s.k;
  sdp::LmiConstraint lmi({n, 1, n, k}, sdp::Sense::NegativeSemidefinite, label);
  lmi.set_block(0, 0, sdp::AffineExpr(n, n).plus_product(-eye(n), s.p, eye(n)));
  lmi.set_block(0, 2, std::move(s.state_block));
  lmi.set_block(0, 3, std::move(s.noise_block));
  lmi.set_block(1, 1, sdp::AffineExpr(one(-1.0)).plus_scaled(s.ta, one(1.0)).plus_scaled(s.tb, one(1.0)));
  lmi.set_block(2, 2, sdp::AffineExpr(n, n).plus_scaled(s.ta, -eye(n)));
  lmi.set_block(3, 3, sdp::AffineExpr(k, k).plus_scaled(s.tb, -s.weight));
  pr.add_constraint(std::move(lmi));
  pr.require_positive_definite(s.p);
  pr.minimize_trace(s.p);
}

sdp::Solution solve_step(const sdp::Problem& pr, const FilterOptions& opts, Eigen::Index k, const char* what,
                         int& iterations) {
  sdp::Solution s = sdp::solve(pr, opts.solver);
  iterations += s.iterations;
  if (s.status == sdp::Status::NumericalFailure && opts.retry_relaxation > 1.0) {
    sdp::Options relaxed = opts.solver;
    relaxed.tol *= opts.retry_relaxation;
    relaxed.gap *= opts.retry_relaxation;
    s = sdp::solve(pr, relaxed);
    iterations += s.iterations;
  }
  if (s.status != sdp::Status::Optimal)
    throw FilterError(k, std::string(what) + " SDP failed: " + sdp::to_string(s.status) + " (" + s.message + ")");
  return s;
}

// Shape matrix from the solver, with one jitter attempt if it is not
// numerically positive definite.
SpdMat shape_from(const Mat& p, const FilterOptions& opts, Eigen::Index k, const char* what) {
  const Mat sym = 0.5 * (p + p.transpose());
  try {
    return SpdMat(sym);
  } catch (const NotPositiveDefinite&) {
  }
  const double eps = opts.jitter * std::max(sym.trace(), 1e-300);
  try {
    return SpdMat(sym + eps * eye(sym.rows()));
  } catch (const NotPositiveDefinite&) {
    throw FilterError(k, std::string(what) + " shape is not positive definite");
  }
}

}  // namespace

sdp::Problem correction_problem(const Mat& e, const Mat& c, const Mat& d, const SpdMat& r, CorrectionVars& vars) {
  const Eigen::Index n = e.rows(), p = c.rows(), v = d.cols();
  if (e.cols() != n || c.cols() != n || d.rows() != p || r.dim() != v)
    throw DimensionMismatch("correction_problem: inconsistent dimensions");
  sdp::Problem pr;
  vars.p = pr.add_symmetric("P", n);
  vars.l = pr.add_rectangular("L", n, p);
  vars.tau1 = pr.add_nonnegative("tau1");
  vars.tau2 = pr.add_nonnegative("tau2");
  ShapeLmi s{n, v, vars.p, vars.tau1, vars.tau2,
             sdp::AffineExpr(e).plus_product(-eye(n), vars.l, c * e),
             sdp::AffineExpr(n, v).plus_product(-eye(n), vars.l, d), r.inverse()};
  add_shape_lmi(pr, std::move(s), "correction");
  return pr;
}

sdp::Problem prediction_problem(const Mat& a, const Mat& e, const Mat& g, const SpdMat& q, PredictionVars& vars) {
  const Eigen::Index n = e.rows(), w = g.cols();
  if (a.rows() != n || a.cols() != n || e.cols() != n || g.rows() != n || q.dim() != w)
    throw DimensionMismatch("prediction_problem: inconsistent dimensions");
  sdp::Problem pr;
  vars.p = pr.add_symmetric("P", n);
  vars.tau3 = pr.add_nonnegative("tau3");
  vars.tau4 = pr.add_nonnegative("tau4");
  ShapeLmi s{n, w, vars.p, vars.tau3, vars.tau4, sdp::AffineExpr(Mat(a * e)), sdp::AffineExpr(g), q.inverse()};
  add_shape_lmi(pr, std::move(s), "prediction");
  return pr;
}

FilterState initialize(const Ellipsoid& init) { return FilterState{0, init, std::nullopt, std::nullopt, {}}; }

FilterState correct(const LtvSystem& sys, const FilterState& st, const Vec& y, const FilterOptions& opts,
                    int* iterations) {
  if (st.corrected) throw FilterError(st.k, "correct called twice without a prediction in between");
  const StepMatrices& m = sys.at(st.k);
  if (y.size() != m.c.rows()) throw DimensionMismatch("correct: output has the wrong size");
  const Vec& xp = st.predicted.center();
  const Mat& ep = st.predicted.shape().factor();

  CorrectionVars vars;
  const sdp::Problem pr = correction_problem(ep, m.c, m.d, m.r, vars);
  int its = 0;
  const sdp::Solution s = solve_step(pr, opts, st.k, "correction", its);
  if (iterations) *iterations += its;

  FilterState out = st;
  const Mat& gain = s.value(vars.l);
  out.corrected.emplace(xp + gain * (y - m.c * xp), shape_from(s.value(vars.p), opts, st.k, "correction"));
  out.gain = gain;
  out.tau.tau1 = s.scalar(vars.tau1);
  out.tau.tau2 = s.scalar(vars.tau2);
  return out;
}

FilterState predict(const LtvSystem& sys, const FilterState& st, const Vec& u, const FilterOptions& opts,
                    int* iterations) {
  if (!st.corrected) throw FilterError(st.k, "predict called before correct");
  const StepMatrices& m = sys.at(st.k);
  if (u.size() != m.b.cols()) throw DimensionMismatch("predict: input has the wrong size");
  const Ellipsoid& c = *st.corrected;

  PredictionVars vars;
  const sdp::Problem pr = prediction_problem(m.a, c.shape().factor(), m.g, m.q, vars);
  int its = 0;
  const sdp::Solution s = solve_step(pr, opts, st.k, "prediction", its);
  if (iterations) *iterations += its;

  FilterState out{st.k + 1, Ellipsoid(m.a * c.center() + m.b * u, shape_from(s.value(vars.p), opts, st.k, "prediction")),
                  std::nullopt, std::nullopt, st.tau};
  out.tau.tau3 = s.scalar(vars.tau3);
  out.tau.tau4 = s.scalar(vars.tau4);
  return out;
}

FilterRun run(const LtvSystem& sys, const Ellipsoid& init, const std::vector<Vec>& inputs,
              const std::vector<Vec>& outputs, Eigen::Index horizon, const FilterOptions& opts,
              const TraceHook& hook) {
  if (horizon < 0) throw std::invalid_argument("run: negative horizon");
  if (static_cast<Eigen::Index>(outputs.size()) < horizon + 1)
    throw DimensionMismatch("run: need horizon + 1 outputs");
  if (static_cast<Eigen::Index>(inputs.size()) < horizon) throw DimensionMismatch("run: need horizon inputs");
  FilterRun result;
  result.states.reserve(static_cast<std::size_t>(horizon + 1));
  FilterState st = initialize(init);
  int its = 0;
  for (Eigen::Index k = 0;; ++k) {
    st = correct(sys, st, outputs[static_cast<std::size_t>(k)], opts, &its);
    result.states.push_back(st);
    if (hook) {
      const Ellipsoid& c = *st.corrected;
      hook({k, st.predicted.center(), c.center(), c.semi_axes_box(), st.predicted.shape().trace(),
            c.shape().trace(), st.tau, its});
    }
    its = 0;
    if (k == horizon) break;
    st = predict(sys, st, inputs[static_cast<std::size_t>(k)], opts, &its);
  }
  return result;
}

}  // namespace smfsync::smf
