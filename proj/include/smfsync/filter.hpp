#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "smfsync/errors.hpp"
#include "smfsync/sdp.hpp"
#include "smfsync/system.hpp"

/// Two-step ellipsoidal set-membership filter. Each step solves a
/// trace-minimization SDP for the corrected ellipsoid E(x_{k|k}, P_{k|k}) and
/// another for the predicted ellipsoid E(x_{k+1|k}, P_{k+1|k}).
namespace smfsync::smf {

/// Raised when a step cannot be completed; carries the step index.
class FilterError : public Error {
 public:
  FilterError(Eigen::Index step, const std::string& what)
      : Error("step " + std::to_string(step) + ": " + what), step_(step) {}
  Eigen::Index step() const { return step_; }

 private:
  Eigen::Index step_;
};

struct Multipliers {
  double tau1 = 0.0, tau2 = 0.0;  // correction
  double tau3 = 0.0, tau4 = 0.0;  // prediction
};

struct FilterState {
  Eigen::Index k = 0;
  Ellipsoid predicted;                 // E(x_{k|k-1}, P_{k|k-1})
  std::optional<Ellipsoid> corrected;  // E(x_{k|k}, P_{k|k}), present after correct()
  std::optional<Mat> gain;             // L_k
  Multipliers tau;
};

struct FilterOptions {
  sdp::Options solver;
  /// Relative jitter added once when the returned shape is not numerically PD.
  double jitter = 1e-10;
  /// Retry a NumericalFailure once with tolerances multiplied by this factor.
  double retry_relaxation = 100.0;
};

/// Per-step record handed to the trace hook.
struct StepRecord {
  Eigen::Index k;
  Vec x_pred;
  Vec x_corr;
  Vec bounds;  // sqrt(diag(P_{k|k}))
  double trace_pred;
  double trace_corr;
  Multipliers tau;
  int iterations;  // SDP iterations in this correction + preceding prediction
};

using TraceHook = std::function<void(const StepRecord&)>;

/// Variable handles of an assembled step problem.
struct CorrectionVars {
  sdp::VarId p, l, tau1, tau2;
};
struct PredictionVars {
  sdp::VarId p, tau3, tau4;
};

/// min trace(P) s.t. [[-P, Pi], [Pi^T, -Theta]] <= 0, P > 0, with
/// Pi = [0, E - L C E, -L D], Theta = diag(1 - tau1 - tau2, tau1 I, tau2 R^{-1}).
sdp::Problem correction_problem(const Mat& e, const Mat& c, const Mat& d, const SpdMat& r, CorrectionVars& vars);

/// min trace(P) s.t. [[-P, Pi], [Pi^T, -Psi]] <= 0, P > 0, with
/// Pi = [0, A E, G], Psi = diag(1 - tau3 - tau4, tau3 I, tau4 Q^{-1}).
sdp::Problem prediction_problem(const Mat& a, const Mat& e, const Mat& g, const SpdMat& q, PredictionVars& vars);

/// State at k = 0 with x_{0|-1} = x0 and P_{0|-1} = P0.
FilterState initialize(const Ellipsoid& init);

FilterState correct(const LtvSystem& sys, const FilterState& st, const Vec& y, const FilterOptions& opts = {},
                    int* iterations = nullptr);

FilterState predict(const LtvSystem& sys, const FilterState& st, const Vec& u, const FilterOptions& opts = {},
                    int* iterations = nullptr);

struct FilterRun {
  std::vector<FilterState> states;  // corrected states k = 0..horizon
};

/// initialize -> (correct -> predict)* -> correct. `outputs` needs horizon+1
/// entries and `inputs` at least horizon.
FilterRun run(const LtvSystem& sys, const Ellipsoid& init, const std::vector<Vec>& inputs,
              const std::vector<Vec>& outputs, Eigen::Index horizon, const FilterOptions& opts = {},
              const TraceHook& hook = {});

}  // namespace smfsync::smf
