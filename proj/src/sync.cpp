#include "smfsync/sync.hpp"

#include <cmath>
#include <exception>
#include <limits>

#include "smfsync/errors.hpp"

namespace smfsync::sync {

std::vector<Vec> tracking_errors(const graph::InteractionGraph& g, const std::vector<Vec>& estimates,
                                 const Vec& leader) {
  const Eigen::Index n = g.size();
  if (static_cast<Eigen::Index>(estimates.size()) != n) throw DimensionMismatch("one estimate per agent required");
  std::vector<Vec> eps;
  eps.reserve(estimates.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec& xi = estimates[static_cast<std::size_t>(i)];
    if (xi.size() != leader.size()) throw DimensionMismatch("estimate and leader sizes differ");
    Vec e = g.pinning()(i) * (leader - xi);
    for (Eigen::Index j : g.neighbors(i)) e += g.adjacency()(i, j) * (estimates[static_cast<std::size_t>(j)] - xi);
    eps.push_back(std::move(e));
  }
  return eps;
}

Vec control_input(const riccati::RiccatiDesign& design, const graph::InteractionGraph& g, const Vec& eps,
                  Eigen::Index i) {
  return design.c / (1.0 + g.in_degree(i) + g.pinning()(i)) * (design.k * eps);
}

Vec global_control_term(const riccati::RiccatiDesign& design, const Mat& gamma, const Mat& b, const Vec& xhat,
                        const Vec& leader) {
  const Mat m = design.c * linalg::kron(gamma, b * design.k);
  const Vec ones_leader = leader.replicate(gamma.rows(), 1);
  return -m * xhat + m * ones_leader;
}

Vec stack(const std::vector<Vec>& parts) {
  Eigen::Index total = 0;
  for (const Vec& p : parts) total += p.size();
  Vec out(total);
  Eigen::Index at = 0;
  for (const Vec& p : parts) {
    out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t agent, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(agent), static_cast<std::uint32_t>(stream)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

World::World(WorldSetup setup) : setup_(std::move(setup)), leader_(setup_.leader) {
  const Dynamics& d = setup_.dyn;
  const Eigen::Index n = d.a.rows();
  if (setup_.graph.size() != static_cast<Eigen::Index>(setup_.agents.size()))
    throw DimensionMismatch("graph size differs from the number of agents");
  if (leader_.size() != n) throw DimensionMismatch("leader state has the wrong size");
  if (setup_.design.k.rows() != d.b.cols() || setup_.design.k.cols() != n)
    throw DimensionMismatch("gain K must be m x n");
  agents_.reserve(setup_.agents.size());
  for (std::size_t i = 0; i < setup_.agents.size(); ++i) {
    const AgentSetup& a = setup_.agents[i];
    LtvSystem sys = LtvSystem::time_invariant({d.a, d.b, d.g, d.c, d.d, a.q, a.r});
    if (a.init.dim() != n || a.x0_low.size() != n || a.x0_high.size() != n)
      throw DimensionMismatch("agent " + std::to_string(i + 1) + ": initial state has the wrong size");
    std::mt19937_64 rng(stream_seed(setup_.seed, i, 0));
    Vec x(n);
    for (Eigen::Index j = 0; j < n; ++j) x(j) = a.x0_low(j) + (a.x0_high(j) - a.x0_low(j)) * unit_uniform(rng);
    agents_.push_back(AgentState{static_cast<Eigen::Index>(i), std::move(sys), std::move(x), smf::initialize(a.init),
                                 Vec::Zero(d.b.cols()), DisturbanceSource(a.w, d.g.cols(), 1.0, stream_seed(setup_.seed, i, 1)),
                                 DisturbanceSource(a.v, d.d.cols(), 1.0, stream_seed(setup_.seed, i, 2))});
  }
}

// Runs f(agent) for every agent, in parallel if requested. Exceptions are
// collected per agent and the lowest-index one is rethrown, so both paths
// fail identically.
template <class F>
void World::for_each_agent(F&& f) {
  const int n = static_cast<int>(agents_.size());
  std::vector<std::exception_ptr> errors(agents_.size());
#pragma omp parallel for schedule(dynamic) if (setup_.execution == Execution::Parallel)
  for (int i = 0; i < n; ++i) {
    try {
      f(agents_[static_cast<std::size_t>(i)]);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const smf::FilterError& e) {
      throw AgentError(static_cast<Eigen::Index>(i), e.step(), e.what());
    }
  }
}

WorldRecord World::observe() {
  if (observed_) throw std::logic_error("World::observe called twice without advance");
  const Eigen::Index n = size();
  WorldRecord rec;
  rec.k = k_;
  rec.leader = leader_;
  rec.agents.resize(agents_.size());

  for_each_agent([&](AgentState& a) {
    AgentRecord& r = rec.agents[static_cast<std::size_t>(a.i)];
    r.v = a.vsrc.sample(k_, a.sys.at(k_).r);
    r.y = a.sys.measure(k_, a.x, r.v);
    a.filter = smf::correct(a.sys, a.filter, r.y, setup_.filter, &a.iterations);
    r.x = a.x;
    r.x_pred = a.filter.predicted.center();
    r.x_hat = a.filter.corrected->center();
    r.bounds = a.filter.corrected->semi_axes_box();
    r.trace_pred = a.filter.predicted.shape().trace();
    r.trace_corr = a.filter.corrected->shape().trace();
    r.q_pred = a.filter.predicted.quadratic_form(a.x);
    r.q_corr = a.filter.corrected->quadratic_form(a.x);
    r.tau = a.filter.tau;
    r.iterations = a.iterations;
    a.iterations = 0;
  });

  // Synchronization point: every corrected estimate is available.
  std::vector<Vec> estimates;
  estimates.reserve(agents_.size());
  for (const AgentRecord& r : rec.agents) estimates.push_back(r.x_hat);
  std::vector<Vec> eps = tracking_errors(setup_.graph, estimates, leader_);
  std::vector<Vec> xs, es;
  for (Eigen::Index i = 0; i < n; ++i) {
    AgentRecord& r = rec.agents[static_cast<std::size_t>(i)];
    AgentState& a = agents_[static_cast<std::size_t>(i)];
    r.eps = std::move(eps[static_cast<std::size_t>(i)]);
    a.u = control_input(setup_.design, setup_.graph, r.eps, i);
    r.u = a.u;
    xs.push_back(r.x - leader_);
    es.push_back(r.x - r.x_hat);
  }
  rec.delta = stack(xs);
  rec.error = stack(es);
  observed_ = true;
  return rec;
}

std::vector<Vec> World::advance() {
  if (!observed_) throw std::logic_error("World::advance called before observe");
  std::vector<Vec> ws(agents_.size());
  for_each_agent([&](AgentState& a) {
    a.filter = smf::predict(a.sys, a.filter, a.u, setup_.filter, &a.iterations);
    Vec w = a.wsrc.sample(k_, a.sys.at(k_).q);
    a.x = a.sys.step(k_, a.x, a.u, w);
    ws[static_cast<std::size_t>(a.i)] = std::move(w);
  });
  leader_ = setup_.dyn.a * leader_;
  ++k_;
  observed_ = false;
  return ws;
}

WorldRecord World::step() {
  WorldRecord rec = observe();
  std::vector<Vec> ws = advance();
  for (std::size_t i = 0; i < ws.size(); ++i) rec.agents[i].w = std::move(ws[i]);
  return rec;
}

GlobalErrorModel make_error_model(const riccati::ClosedLoop& loop, const riccati::DecayCertificate& cert,
                                  const Mat& g, Eigen::Index agents, double p0, double qbar, double rbar) {
  if (!(cert.alpha > 0.0) || !(cert.mu >= 0.0) || !(cert.mu < 1.0))
    throw ValidationError("decay certificate needs alpha > 0 and 0 <= mu < 1");
  if (agents < 1) throw ValidationError("at least one agent required");
  if (!(p0 > 0.0) || !(qbar > 0.0) || !(rbar > 0.0)) throw ValidationError("p0, qbar, rbar must be positive");
  GlobalErrorModel m;
  m.ac = loop.ac;
  m.bc = loop.bc;
  m.g = linalg::kron(Mat::Identity(agents, agents), g);
  m.agents = agents;
  m.alpha = cert.alpha;
  m.mu = cert.mu;
  m.mubar = cert.alpha * std::sqrt(static_cast<double>(agents)) / (1.0 - cert.mu);
  m.p0 = p0;
  m.qbar = qbar;
  m.rbar = rbar;
  return m;
}

GlobalErrorModel make_error_model(const riccati::ClosedLoop& loop, const riccati::DecayCertificate& cert,
                                  const WorldSetup& setup) {
  double p0 = 0.0, qbar = 0.0, rbar = 0.0;
  for (const AgentSetup& a : setup.agents) {
    p0 = std::max(p0, linalg::sigma_max(a.init.shape().matrix()));
    qbar = std::max(qbar, linalg::sigma_max(a.q.matrix()));
    rbar = std::max(rbar, linalg::sigma_max(a.r.matrix()));
  }
  return make_error_model(loop, cert, setup.dyn.g, static_cast<Eigen::Index>(setup.agents.size()), p0, qbar, rbar);
}

double asymptotic_normalized_bound(const GlobalErrorModel& m) {
  return linalg::sigma_max(m.bc) * std::sqrt(m.p0) + linalg::sigma_max(m.g) * std::sqrt(m.qbar);
}

double disagreement_bound(const GlobalErrorModel& m, double delta0, Eigen::Index k) {
  return m.alpha * std::pow(m.mu, static_cast<double>(k)) * delta0 + m.mubar * asymptotic_normalized_bound(m);
}

double normalized_bound(const GlobalErrorModel& m, double delta0, Eigen::Index k) {
  return disagreement_bound(m, delta0, k) / m.mubar;
}

double IssBound::beta(double s, Eigen::Index k) const { return alpha * std::pow(mu, static_cast<double>(k)) * s; }
double IssBound::gamma1(double s) const { return alpha * bc_norm * s / (1.0 - mu); }
double IssBound::gamma2(double s) const { return alpha * g_norm * s / (1.0 - mu); }

IssBound iss_bound(const GlobalErrorModel& m) {
  return {m.alpha, m.mu, linalg::sigma_max(m.bc), linalg::sigma_max(m.g)};
}

double iss_envelope(const GlobalErrorModel& m, double delta0, double e_sup, double w_sup, Eigen::Index k) {
  const IssBound b = iss_bound(m);
  return b.beta(delta0, k) + b.gamma1(e_sup) + b.gamma2(w_sup);
}

std::vector<Vec> simulate_error_system(const GlobalErrorModel& m, const Vec& delta0, const std::vector<Vec>& e,
                                       const std::vector<Vec>& w) {
  if (e.size() != w.size()) throw DimensionMismatch("simulate_error_system: e and w lengths differ");
  std::vector<Vec> out{delta0};
  out.reserve(e.size() + 1);
  for (std::size_t k = 0; k < e.size(); ++k) out.push_back(m.ac * out.back() + m.bc * e[k] + m.g * w[k]);
  return out;
}

std::vector<SyncStep> simulate(World& world, const GlobalErrorModel& model, Eigen::Index horizon,
                               const SyncHook& hook) {
  if (horizon < 0) throw std::invalid_argument("simulate: negative horizon");
  const IssBound iss = iss_bound(model);
  const double n = static_cast<double>(world.size());
  const double conservative = iss.gamma1(std::sqrt(model.p0 * n)) + iss.gamma2(std::sqrt(model.qbar * n));
  std::vector<SyncStep> out;
  out.reserve(static_cast<std::size_t>(horizon + 1));
  double delta0 = 0.0, e_sup = 0.0, w_sup = 0.0;
  for (Eigen::Index k = 0; k <= horizon; ++k) {
    SyncStep s;
    s.world = world.observe();
    s.delta_norm = s.world.delta.norm();
    if (k == 0) delta0 = s.delta_norm;
    e_sup = std::max(e_sup, s.world.error.norm());
    s.delta_bar = s.delta_norm / model.mubar;
    s.bound = normalized_bound(model, delta0, k);
    s.envelope = iss.beta(delta0, k) + iss.gamma1(e_sup) + iss.gamma2(w_sup);
    s.envelope_conservative = iss.beta(delta0, k) + conservative;
    if (k < horizon) {
      std::vector<Vec> ws = world.advance();
      for (std::size_t i = 0; i < ws.size(); ++i) s.world.agents[i].w = std::move(ws[i]);
      w_sup = std::max(w_sup, stack(ws).norm());
    }
    if (hook) hook(s);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace smfsync::sync
