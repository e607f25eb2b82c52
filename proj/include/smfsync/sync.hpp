#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "smfsync/filter.hpp"
#include "smfsync/graph.hpp"
#include "smfsync/parallel.hpp"
#include "smfsync/riccati.hpp"
#include "smfsync/system.hpp"

/// Leader-follower synchronization driven by per-agent set-membership
/// filters. Agents share (A, B, C, D, G); the leader is the autonomous system
/// x0_{k+1} = A x0_k.
namespace smfsync::sync {

/// A filter failure inside the multi-agent loop, tagged with the agent.
class AgentError : public Error {
 public:
  AgentError(Eigen::Index agent, Eigen::Index step, const std::string& what)
      : Error("agent " + std::to_string(agent + 1) + ", " + what), agent_(agent), step_(step) {}
  Eigen::Index agent() const { return agent_; }
  Eigen::Index step() const { return step_; }

 private:
  Eigen::Index agent_, step_;
};

/// eps_i = sum_j a_ij (xhat_j - xhat_i) + g_i (x0 - xhat_i).
std::vector<Vec> tracking_errors(const graph::InteractionGraph& g, const std::vector<Vec>& estimates,
                                 const Vec& leader);

/// u_i = c (1 + d_ii + g_i)^{-1} K eps_i.
Vec control_input(const riccati::RiccatiDesign& design, const graph::InteractionGraph& g, const Vec& eps,
                  Eigen::Index i);

/// Stacked B u in closed form: -c (Gamma (x) BK) xhat + c (Gamma (x) BK)(1_N (x) x0).
Vec global_control_term(const riccati::RiccatiDesign& design, const Mat& gamma, const Mat& b, const Vec& xhat,
                        const Vec& leader);

Vec stack(const std::vector<Vec>& parts);

struct Dynamics {
  Mat a, b, c, d, g;
};

struct AgentSetup {
  Ellipsoid init;         // E(xhat_0, P_0)
  Vec x0_low, x0_high;    // true initial state drawn uniformly from this box
  SpdMat q, r;            // disturbance ellipsoids
  DisturbanceSpec w, v;
};

struct WorldSetup {
  Dynamics dyn;
  Vec leader;
  graph::InteractionGraph graph;
  riccati::RiccatiDesign design;
  std::vector<AgentSetup> agents;
  smf::FilterOptions filter;
  std::uint64_t seed = 0;
  Execution execution = Execution::Serial;
};

/// Independent 64-bit seed for (agent, stream) derived from the world seed.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t agent, std::uint64_t stream);

struct AgentState {
  Eigen::Index i;
  LtvSystem sys;
  Vec x;
  smf::FilterState filter;
  Vec u;
  DisturbanceSource wsrc, vsrc;
  int iterations = 0;  // SDP iterations since the last record
};

struct AgentRecord {
  Vec x;
  Vec x_pred, x_hat;  // x_{k|k-1}, x_{k|k}
  Vec bounds;         // sqrt(diag P_{k|k})
  double trace_pred, trace_corr;
  double q_pred, q_corr;  // quadratic forms of x in both ellipsoids (<= 1 when contained)
  smf::Multipliers tau;
  Vec v, y, eps, u;
  Vec w;  // realized when the world advances; empty until then
  int iterations;
};

struct WorldRecord {
  Eigen::Index k;
  Vec leader;
  std::vector<AgentRecord> agents;
  Vec delta;  // x^(g) - 1_N (x) x0
  Vec error;  // e^(g) = x^(g) - xhat^(g)_{k|k}
};

class World {
 public:
  explicit World(WorldSetup setup);

  /// Measure and correct every agent, then compute eps and u.
  WorldRecord observe();
  /// Predict with the applied u, step every true state and the leader.
  /// Returns the realized process disturbances.
  std::vector<Vec> advance();
  WorldRecord step();

  Eigen::Index k() const { return k_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(agents_.size()); }
  const Vec& leader() const { return leader_; }
  const std::vector<AgentState>& agents() const { return agents_; }
  const WorldSetup& setup() const { return setup_; }

 private:
  template <class F>
  void for_each_agent(F&& f);

  WorldSetup setup_;
  std::vector<AgentState> agents_;
  Vec leader_;
  Eigen::Index k_ = 0;
  bool observed_ = false;
};

/// Global error-system data and the bound constants.
struct GlobalErrorModel {
  Mat ac, bc;
  Mat g;  // I_N (x) G
  Eigen::Index agents;
  double alpha, mu;
  double mubar;  // alpha sqrt(N) / (1 - mu)
  double p0, qbar, rbar;
};

/// p0, qbar, rbar default to the largest |P_0|, |Q|, |R| over agents.
GlobalErrorModel make_error_model(const riccati::ClosedLoop& loop, const riccati::DecayCertificate& cert,
                                  const Mat& g, Eigen::Index agents, double p0, double qbar, double rbar);
GlobalErrorModel make_error_model(const riccati::ClosedLoop& loop, const riccati::DecayCertificate& cert,
                                  const WorldSetup& setup);

/// alpha mu^k |delta_0| + mubar (|B_c| sqrt(p0) + |G| sqrt(qbar)).
double disagreement_bound(const GlobalErrorModel& m, double delta0, Eigen::Index k);
/// The same bound divided by mubar.
double normalized_bound(const GlobalErrorModel& m, double delta0, Eigen::Index k);
/// |B_c| sqrt(p0) + |G| sqrt(qbar): the limit of the normalized bound.
double asymptotic_normalized_bound(const GlobalErrorModel& m);

/// Comparison functions of the ISS estimate.
struct IssBound {
  double alpha, mu, bc_norm, g_norm;
  double beta(double s, Eigen::Index k) const;
  double gamma1(double s) const;
  double gamma2(double s) const;
};

IssBound iss_bound(const GlobalErrorModel& m);

/// beta(|delta_0|, k) + gamma1(||e||) + gamma2(||w||).
double iss_envelope(const GlobalErrorModel& m, double delta0, double e_sup, double w_sup, Eigen::Index k);

/// delta_{k+1} = A_c delta_k + B_c e_k + (I (x) G) w_k.
std::vector<Vec> simulate_error_system(const GlobalErrorModel& m, const Vec& delta0, const std::vector<Vec>& e,
                                       const std::vector<Vec>& w);

struct SyncStep {
  WorldRecord world;
  double delta_norm;
  double delta_bar;       // |delta| / mubar
  double bound;           // normalized disagreement bound
  double envelope;        // ISS envelope with running sups of |e|, |w|
  double envelope_conservative;  // with ||e|| <= sqrt(p0 N), ||w|| <= sqrt(qbar N)
};

using SyncHook = std::function<void(const SyncStep&)>;

/// observe/advance for k = 0..horizon (no advance after the last observation).
std::vector<SyncStep> simulate(World& world, const GlobalErrorModel& model, Eigen::Index horizon,
                               const SyncHook& hook = {});

}  // namespace smfsync::sync
