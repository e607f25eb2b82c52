#include "smfsync/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "smfsync/errors.hpp"
#include "smfsync/filter.hpp"
#include "smfsync/sync.hpp"

namespace smfsync::scenario {

void MetricsReport::set(const std::string& name, double value) {
  for (auto& [k, v] : metrics)
    if (k == name) {
      v = value;
      return;
    }
  metrics.emplace_back(name, value);
}

std::optional<double> MetricsReport::get(const std::string& name) const {
  for (const auto& [k, v] : metrics)
    if (k == name) return v;
  return std::nullopt;
}

double MetricsReport::at(const std::string& name) const {
  if (auto v = get(name)) return *v;
  throw std::out_of_range("no metric '" + name + "' in report " + scenario);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

// Minimal CSV writer: one header line, then numeric rows.
class Csv {
 public:
  Csv(const std::filesystem::path& file, const std::vector<std::string>& header) : out_(file, std::ios::binary) {
    if (!out_) throw Error("cannot write " + file.string());
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }
  Csv& operator<<(double v) {
    cell(format_double(v));
    return *this;
  }
  Csv& operator<<(const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) *this << v(i);
    return *this;
  }
  void cell(const std::string& s) {
    out_ << (first_ ? "" : ",") << s;
    first_ = false;
  }
  void end() {
    out_ << '\n';
    first_ = true;
  }

 private:
  std::ofstream out_;
  bool first_ = true;
};

void add_columns(std::vector<std::string>& h, const std::string& prefix, Eigen::Index n) {
  for (Eigen::Index i = 1; i <= n; ++i) h.push_back(prefix + "_" + std::to_string(i));
}

std::vector<std::string> agent_header(Eigen::Index n, Eigen::Index m, bool multi) {
  std::vector<std::string> h{"k"};
  if (!multi) h.push_back("t");
  add_columns(h, "x", n);
  add_columns(h, "x_pred", n);
  add_columns(h, "x_hat", n);
  add_columns(h, "bound", n);
  add_columns(h, "e", n);
  if (multi) {
    add_columns(h, "eps", n);
    add_columns(h, "u", m);
  }
  for (const char* c : {"trace_pred", "trace_corr", "q_pred", "q_corr", "tau1", "tau2", "tau3", "tau4", "iterations"})
    h.emplace_back(c);
  return h;
}

void write_metrics(const MetricsReport& r, const std::filesystem::path& dir) {
  Csv csv(dir / "metrics.csv", {"metric", "value"});
  csv.cell("horizon");
  csv << static_cast<double>(r.horizon);
  csv.end();
  csv.cell("seed");
  csv << static_cast<double>(r.seed);
  csv.end();
  csv.cell("violations");
  csv << static_cast<double>(r.violations);
  csv.end();
  for (const auto& [k, v] : r.metrics) {
    csv.cell(k);
    csv << v;
    csv.end();
  }
}

smf::FilterOptions filter_options(const ScenarioConfig& cfg) {
  smf::FilterOptions o;
  o.solver = solver_options(cfg.tol);
  return o;
}

// Writes one trace row; shared by both modes.
void trace_row(Csv& csv, double k, const std::optional<double>& t, const Vec& x, const Vec& x_pred, const Vec& x_hat,
               const Vec& bounds, const Vec* eps, const Vec* u, double trace_pred, double trace_corr, double q_pred,
               double q_corr, const smf::Multipliers& tau, int iterations) {
  csv << k;
  if (t) csv << *t;
  csv << x << x_pred << x_hat << bounds << Vec(x - x_hat);
  if (eps) csv << *eps << *u;
  csv << trace_pred << trace_corr << q_pred << q_corr << tau.tau1 << tau.tau2 << tau.tau3 << tau.tau4
      << static_cast<double>(iterations);
  csv.end();
}

MetricsReport run_single(const ScenarioConfig& cfg, const std::optional<std::filesystem::path>& out) {
  const FilterSpec& f = *cfg.filter;
  const Eigen::Index horizon = cfg.horizon;
  const LtvSystem sys = [&] {
    if (cfg.system.mathieu) {
      MathieuParams p = *cfg.system.mathieu;
      p.horizon = horizon;
      p.q = f.q.matrix()(0, 0);
      p.r = f.r.matrix()(0, 0);
      return zoh_discretize_mathieu(p);
    }
    return LtvSystem::time_invariant({cfg.system.a, cfg.system.b, cfg.system.g, cfg.system.c, cfg.system.d, f.q, f.r});
  }();
  const Eigen::Index n = sys.n();
  const Vec u = Vec::Zero(sys.m());
  DisturbanceSource wsrc(f.w, sys.w(), cfg.system.dt, sync::stream_seed(cfg.seed, 0, 1));
  DisturbanceSource vsrc(f.v, sys.v(), cfg.system.dt, sync::stream_seed(cfg.seed, 0, 2));
  const smf::FilterOptions opts = filter_options(cfg);

  std::optional<Csv> csv;
  if (out) csv.emplace(*out / "trace_agent_1.csv", agent_header(n, 0, false));

  MetricsReport rep;
  rep.scenario = cfg.name;
  rep.horizon = horizon;
  rep.seed = cfg.seed;
  double sum_abs = 0.0, max_q = 0.0;
  Vec sum_sq = Vec::Zero(n);
  double iterations = 0.0;
  Vec x = f.x0;
  smf::FilterState st = smf::initialize(f.init);
  int its = 0;  // prediction iterations carry into the next row
  for (Eigen::Index k = 0; k <= horizon; ++k) {
    const Vec v = vsrc.sample(k, sys.at(k).r);
    st = smf::correct(sys, st, sys.measure(k, x, v), opts, &its);
    const Ellipsoid& corr = *st.corrected;
    const double q_pred = st.predicted.quadratic_form(x), q_corr = corr.quadratic_form(x);
    rep.violations += (q_pred > 1.0 + kContainmentTol) + (q_corr > 1.0 + kContainmentTol);
    max_q = std::max({max_q, q_pred, q_corr});
    const Vec e = x - corr.center();
    sum_abs += e.norm();
    sum_sq += e.cwiseAbs2();
    iterations += its;
    if (k == 0) {
      rep.set("initial_trace_pred", st.predicted.shape().trace());
      rep.set("initial_trace_corr", corr.shape().trace());
      rep.set("initial_error_pred", (x - st.predicted.center()).norm());
      rep.set("initial_error_corr", e.norm());
    }
    if (csv)
      trace_row(*csv, static_cast<double>(k), static_cast<double>(k) * cfg.system.dt, x, st.predicted.center(),
                corr.center(), corr.semi_axes_box(), nullptr, nullptr, st.predicted.shape().trace(),
                corr.shape().trace(), q_pred, q_corr, st.tau, its);
    if (k == horizon) {
      rep.set("final_trace_pred", st.predicted.shape().trace());
      rep.set("final_trace_corr", corr.shape().trace());
      break;
    }
    its = 0;
    const Vec w = wsrc.sample(k, sys.at(k).q);
    st = smf::predict(sys, st, u, opts, &its);
    x = sys.step(k, x, u, w);
  }
  const double samples = static_cast<double>(horizon + 1);
  std::vector<std::pair<std::string, double>> head{{"mean_abs_error", sum_abs / samples}};
  for (Eigen::Index i = 0; i < n; ++i) head.emplace_back("mse_" + std::to_string(i + 1), sum_sq(i) / samples);
  head.insert(head.end(), rep.metrics.begin(), rep.metrics.end());
  rep.metrics = std::move(head);
  rep.set("max_quadratic_form", max_q);
  rep.set("sdp_iterations", iterations);
  rep.set("disturbance_rejections", static_cast<double>(wsrc.rejected() + vsrc.rejected()));
  if (out) write_metrics(rep, *out);
  return rep;
}

MetricsReport run_multi(const ScenarioConfig& cfg, const std::optional<std::filesystem::path>& out) {
  const graph::InteractionGraph& g = *cfg.graph;
  const DesignSpec& ds = *cfg.design;
  riccati::DesignOptions dopts;
  dopts.horizon = static_cast<int>(std::max<Eigen::Index>(cfg.horizon, 60));
  dopts.certificate = ds.certificate;
  const graph::GammaMatrix gm = graph::gamma(g);
  const riccati::Design design =
      riccati::design(cfg.system.a, cfg.system.b, ds.q, gm, ds.c0, ds.r0, dopts);

  sync::WorldSetup setup{{cfg.system.a, cfg.system.b, cfg.system.c, cfg.system.d, cfg.system.g},
                         cfg.leader,
                         g,
                         design.riccati,
                         cfg.agents,
                         filter_options(cfg),
                         cfg.seed,
                         cfg.execution};
  sync::GlobalErrorModel model = sync::make_error_model(design.loop, design.loop.cert, setup);
  model = sync::make_error_model(design.loop, design.loop.cert, cfg.system.g, g.size(),
                                 cfg.bounds.p0.value_or(model.p0), cfg.bounds.qbar.value_or(model.qbar),
                                 cfg.bounds.rbar.value_or(model.rbar));
  sync::World world(setup);

  const Eigen::Index n = cfg.system.a.rows(), m = cfg.system.b.cols(), agents = g.size();
  std::vector<Csv> traces;
  std::optional<Csv> global;
  const Vec powers = riccati::power_norms(design.loop.ac, static_cast<int>(cfg.horizon));
  if (out) {
    traces.reserve(static_cast<std::size_t>(agents));
    for (Eigen::Index i = 0; i < agents; ++i)
      traces.emplace_back(*out / ("trace_agent_" + std::to_string(i + 1) + ".csv"), agent_header(n, m, true));
    std::vector<std::string> h{"k"};
    add_columns(h, "leader", n);
    for (const char* c : {"delta_norm", "delta_bar", "bound", "envelope", "envelope_conservative", "error_norm",
                          "ac_power_norm", "alpha_mu_k"})
      h.emplace_back(c);
    global.emplace(*out / "global.csv", h);
  }

  MetricsReport rep;
  rep.scenario = cfg.name;
  rep.horizon = cfg.horizon;
  rep.seed = cfg.seed;
  double sum = 0.0, sum_sq = 0.0, max_q = 0.0, iterations = 0.0;
  std::uint64_t bound_violations = 0, envelope_violations = 0;
  bool monotone = true;
  double prev_bound = INFINITY, final_trace = 0.0;
  const auto hook = [&](const sync::SyncStep& s) {
    const double k = static_cast<double>(s.world.k);
    sum += s.delta_bar;
    sum_sq += s.delta_bar * s.delta_bar;
    bound_violations += s.delta_bar > s.bound;
    envelope_violations += s.delta_norm > s.envelope * (1 + 1e-12);
    monotone = monotone && s.bound <= prev_bound;
    prev_bound = s.bound;
    final_trace = 0.0;
    for (std::size_t i = 0; i < s.world.agents.size(); ++i) {
      const sync::AgentRecord& a = s.world.agents[i];
      rep.violations += (a.q_pred > 1.0 + kContainmentTol) + (a.q_corr > 1.0 + kContainmentTol);
      max_q = std::max({max_q, a.q_pred, a.q_corr});
      iterations += a.iterations;
      final_trace = std::max(final_trace, a.trace_corr);
      if (out)
        trace_row(traces[i], k, std::nullopt, a.x, a.x_pred, a.x_hat, a.bounds, &a.eps, &a.u, a.trace_pred,
                  a.trace_corr, a.q_pred, a.q_corr, a.tau, a.iterations);
    }
    if (global) {
      *global << k << s.world.leader << s.delta_norm << s.delta_bar << s.bound << s.envelope
              << s.envelope_conservative << s.world.error.norm() << powers(s.world.k)
              << model.alpha * std::pow(model.mu, k);
      global->end();
    }
  };
  const std::vector<sync::SyncStep> steps = sync::simulate(world, model, cfg.horizon, hook);

  const double samples = static_cast<double>(cfg.horizon + 1);
  rep.set("mean_delta_bar", sum / samples);
  rep.set("rms_delta_bar", std::sqrt(sum_sq / samples));
  rep.set("initial_delta_bar", steps.front().delta_bar);
  rep.set("final_delta_bar", steps.back().delta_bar);
  rep.set("asymptotic_bound", sync::asymptotic_normalized_bound(model));
  rep.set("bound_violations", static_cast<double>(bound_violations));
  rep.set("envelope_violations", static_cast<double>(envelope_violations));
  rep.set("bound_monotone", monotone ? 1.0 : 0.0);
  rep.set("final_trace_corr_max", final_trace);
  rep.set("max_quadratic_form", max_q);
  rep.set("sdp_iterations", iterations);

  if (out) {
    Csv d(*out / "design.csv", {"quantity", "value"});
    const auto row = [&](const std::string& name, double v) {
      d.cell(name);
      d << v;
      d.end();
    };
    const graph::Radius& r = design.riccati.r;
    row("r", std::holds_alternative<double>(r) ? std::get<double>(r) : INFINITY);
    row("c", design.riccati.c);
    row("c0", design.riccati.c0);
    row("r0", design.riccati.r0);
    row("riccati_residual", design.riccati.residual);
    row("rho_ac", design.loop.rho);
    row("alpha", model.alpha);
    row("mu", model.mu);
    row("mubar", model.mubar);
    row("p0", model.p0);
    row("qbar", model.qbar);
    row("rbar", model.rbar);
    row("bc_norm", linalg::sigma_max(model.bc));
    row("g_norm", linalg::sigma_max(model.g));
    row("asymptotic_bound", sync::asymptotic_normalized_bound(model));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        row("P_" + std::to_string(i + 1) + std::to_string(j + 1), design.riccati.p.matrix()(i, j));
    for (Eigen::Index i = 0; i < design.riccati.k.rows(); ++i)
      for (Eigen::Index j = 0; j < design.riccati.k.cols(); ++j)
        row("K_" + std::to_string(i + 1) + std::to_string(j + 1), design.riccati.k(i, j));
    for (std::size_t i = 0; i < gm.eigenvalues.size(); ++i) {
      row("gamma_eig_re_" + std::to_string(i + 1), gm.eigenvalues[i].real());
      row("gamma_eig_im_" + std::to_string(i + 1), gm.eigenvalues[i].imag());
    }
    write_metrics(rep, *out);
  }
  return rep;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  return out;
}

}  // namespace

MetricsReport run_scenario(const ScenarioConfig& cfg, const std::optional<std::filesystem::path>& out_dir) {
  validate(cfg);
  if (out_dir) std::filesystem::create_directories(*out_dir);
  return cfg.mode == Mode::SingleFilter ? run_single(cfg, out_dir) : run_multi(cfg, out_dir);
}

MetricsReport read_metrics(const std::filesystem::path& dir) {
  const std::filesystem::path file = dir / "metrics.csv";
  std::ifstream in(file);
  if (!in) throw ParseError(file.string() + ": cannot open file");
  MetricsReport r;
  r.scenario = std::filesystem::path(dir).lexically_normal().filename().string();
  if (r.scenario.empty()) r.scenario = std::filesystem::path(dir).lexically_normal().parent_path().filename().string();
  std::string line;
  int lineno = 0;
  bool have_horizon = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != "metric,value") throw ParseError(file.string() + ":1: expected header 'metric,value'");
      continue;
    }
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    double v = 0.0;
    try {
      if (cells.size() != 2) throw std::invalid_argument("cells");
      std::size_t used = 0;
      v = std::stod(cells[1], &used);
      if (used != cells[1].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(file.string() + ":" + std::to_string(lineno) + ": expected 'name,number'");
    }
    if (cells[0] == "horizon") {
      r.horizon = static_cast<Eigen::Index>(v);
      have_horizon = true;
    } else if (cells[0] == "seed") {
      r.seed = static_cast<std::uint64_t>(v);
    } else if (cells[0] == "violations") {
      r.violations = static_cast<std::uint64_t>(v);
    } else {
      r.set(cells[0], v);
    }
  }
  if (!have_horizon) throw ParseError(file.string() + ": missing 'horizon' row");
  return r;
}

Comparison compare_runs(const std::vector<MetricsReport>& reports) {
  if (reports.size() < 2) throw ValidationError("compare_runs needs at least two reports");
  Comparison c;
  for (const MetricsReport& r : reports) {
    if (r.horizon != reports.front().horizon)
      throw HorizonMismatch("run '" + r.scenario + "' has horizon " + std::to_string(r.horizon) + ", '" +
                            reports.front().scenario + "' has " + std::to_string(reports.front().horizon));
    c.runs.push_back(r.scenario);
  }
  c.metrics.push_back("violations");
  for (const MetricsReport& r : reports)
    for (const auto& [k, v] : r.metrics)
      if (std::find(c.metrics.begin(), c.metrics.end(), k) == c.metrics.end()) c.metrics.push_back(k);
  for (const std::string& name : c.metrics) {
    std::vector<std::optional<double>> row;
    for (const MetricsReport& r : reports)
      row.push_back(name == "violations" ? std::optional<double>(static_cast<double>(r.violations)) : r.get(name));
    c.values.push_back(std::move(row));
  }
  return c;
}

void write_comparison_csv(const Comparison& c, const std::filesystem::path& file) {
  std::vector<std::string> header{"metric"};
  header.insert(header.end(), c.runs.begin(), c.runs.end());
  Csv csv(file, header);
  for (std::size_t i = 0; i < c.metrics.size(); ++i) {
    csv.cell(c.metrics[i]);
    for (const auto& v : c.values[i]) v ? (void)(csv << *v) : csv.cell("");
    csv.end();
  }
}

std::string format_comparison(const Comparison& c) {
  std::size_t name_w = 6;
  for (const auto& m : c.metrics) name_w = std::max(name_w, m.size());
  std::vector<std::size_t> col_w;
  for (const auto& r : c.runs) col_w.push_back(std::max<std::size_t>(12, r.size()));
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(name_w)) << "metric";
  for (std::size_t j = 0; j < c.runs.size(); ++j) os << "  " << std::right << std::setw(static_cast<int>(col_w[j])) << c.runs[j];
  os << '\n';
  for (std::size_t i = 0; i < c.metrics.size(); ++i) {
    os << std::left << std::setw(static_cast<int>(name_w)) << c.metrics[i];
    for (std::size_t j = 0; j < c.runs.size(); ++j) {
      std::ostringstream cell;
      if (c.values[i][j]) cell << std::setprecision(6) << *c.values[i][j];
      else cell << "-";
      os << "  " << std::right << std::setw(static_cast<int>(col_w[j])) << cell.str();
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace smfsync::scenario
