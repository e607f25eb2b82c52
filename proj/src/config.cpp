#include "smfsync/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <regex>
#include <set>
#include <sstream>

#include "smfsync/errors.hpp"

namespace smfsync::scenario {

std::string to_string(Mode m) { return m == Mode::SingleFilter ? "single-filter" : "multi-agent"; }

std::string to_string(TolProfile t) {
  switch (t) {
    case TolProfile::Strict: return "strict";
    case TolProfile::Loose: return "loose";
    default: return "default";
  }
}

TolProfile parse_tol_profile(const std::string& s) {
  if (s == "strict") return TolProfile::Strict;
  if (s == "default") return TolProfile::Default;
  if (s == "loose") return TolProfile::Loose;
  throw ValidationError("unknown tolerance profile '" + s + "' (strict, default, loose)");
}

sdp::Options solver_options(TolProfile t) {
  sdp::Options o;
  switch (t) {
    case TolProfile::Strict:
      o.tol = 1e-9;
      o.gap = 1e-9;
      break;
    case TolProfile::Loose:
      o.tol = 1e-5;
      o.gap = 1e-4;
      break;
    case TolProfile::Default:
      break;
  }
  return o;
}

namespace {

// Collects every violation with its source line instead of stopping at the
// first one.
struct Reader {
  std::string source;
  std::vector<std::string> errors;

  void error(const YAML::Node& at, const std::string& msg) {
    const int line = at.IsDefined() ? at.Mark().line + 1 : 0;
    errors.push_back(source + ":" + (line > 0 ? std::to_string(line) : std::string("?")) + ": " + msg);
  }

  // Accepts plain numbers plus "a/b", "pi", "2pi", "2*pi", "pi/2".
  std::optional<double> number(const YAML::Node& n, const std::string& key) {
    if (!n.IsDefined()) return std::nullopt;  // already reported as missing
    if (!n.IsScalar()) {
      error(n, key + ": expected a number");
      return std::nullopt;
    }
    static const std::regex expr(R"(^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*(\*?\s*pi)?\s*(?:/\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?))?\s*$)");
    std::smatch m;
    const std::string s = n.Scalar();
    if (!s.empty() && std::regex_match(s, m, expr) && (m[1].matched || m[2].matched)) {
      double v = m[1].matched ? std::stod(m[1].str()) : 1.0;
      if (m[2].matched) v *= std::numbers::pi;
      if (m[3].matched) v /= std::stod(m[3].str());
      if (std::isfinite(v)) return v;
    }
    error(n, key + ": '" + s + "' is not a number");
    return std::nullopt;
  }

  std::optional<Vec> vector(const YAML::Node& n, const std::string& key) {
    if (!n.IsDefined()) return std::nullopt;  // already reported as missing
    if (n.IsScalar()) {
      auto v = number(n, key);
      if (!v) return std::nullopt;
      return Vec::Constant(1, *v);
    }
    if (!n.IsSequence()) {
      error(n, key + ": expected a list of numbers");
      return std::nullopt;
    }
    Vec out(static_cast<Eigen::Index>(n.size()));
    bool ok = true;
    for (std::size_t i = 0; i < n.size(); ++i) {
      auto v = number(n[i], key);
      ok = ok && v.has_value();
      if (v) out(static_cast<Eigen::Index>(i)) = *v;
    }
    if (!ok) return std::nullopt;
    return out;
  }

  std::optional<Mat> matrix(const YAML::Node& n, const std::string& key) {
    if (!n.IsDefined()) return std::nullopt;  // already reported as missing
    if (!n.IsSequence() || n.size() == 0) {
      error(n, key + ": expected a list of rows");
      return std::nullopt;
    }
    // An empty inner list denotes a zero-column matrix row.
    const std::size_t rows = n.size();
    if (!n[0].IsSequence()) {
      error(n, key + ": expected a list of rows, e.g. [[1, 0], [0, 1]]");
      return std::nullopt;
    }
    const std::size_t cols = n[0].size();
    Mat out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    bool ok = true;
    for (std::size_t r = 0; r < rows; ++r) {
      if (!n[r].IsSequence() || n[r].size() != cols) {
        error(n[r], key + ": row " + std::to_string(r + 1) + " has the wrong length");
        ok = false;
        continue;
      }
      for (std::size_t c = 0; c < cols; ++c) {
        auto v = number(n[r][c], key);
        ok = ok && v.has_value();
        if (v) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *v;
      }
    }
    if (!ok) return std::nullopt;
    return out;
  }

  // scalar s -> s I, list -> diag, list of lists -> matrix.
  std::optional<SpdMat> spd(const YAML::Node& n, const std::string& key, Eigen::Index dim) {
    if (!n.IsDefined()) return std::nullopt;  // already reported as missing
    std::optional<Mat> m;
    if (n.IsScalar()) {
      if (auto v = number(n, key)) m = *v * Mat::Identity(dim, dim);
    } else if (n.IsSequence() && n.size() > 0 && n[0].IsScalar()) {
      if (auto v = vector(n, key)) m = Mat(v->asDiagonal());
    } else {
      m = matrix(n, key);
    }
    if (!m) return std::nullopt;
    if (m->rows() != dim || m->cols() != dim) {
      error(n, key + ": expected " + std::to_string(dim) + "x" + std::to_string(dim) + ", got " +
                   std::to_string(m->rows()) + "x" + std::to_string(m->cols()));
      return std::nullopt;
    }
    if (!linalg::is_symmetric(*m)) {
      error(n, key + " is not symmetric");
      return std::nullopt;
    }
    try {
      return SpdMat(*m);
    } catch (const NotPositiveDefinite&) {
      error(n, key + " is not positive definite");
    }
    return std::nullopt;
  }

  std::optional<std::string> text(const YAML::Node& n, const std::string& key) {
    if (!n.IsDefined()) return std::nullopt;  // already reported as missing
    if (!n.IsScalar()) {
      error(n, key + ": expected a string");
      return std::nullopt;
    }
    return n.Scalar();
  }

  std::optional<std::int64_t> integer(const YAML::Node& n, const std::string& key) {
    if (!n.IsDefined()) return std::nullopt;  // already reported as missing
    auto v = number(n, key);
    if (!v) return std::nullopt;
    if (*v != std::floor(*v) || std::abs(*v) > 9.0e15) {
      error(n, key + ": expected an integer");
      return std::nullopt;
    }
    return static_cast<std::int64_t>(*v);
  }

  void only_keys(const YAML::Node& n, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!n.IsDefined()) return;
    if (!n.IsMap()) {
      error(n, where + ": expected a mapping");
      return;
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : n) {
      const std::string k = kv.first.Scalar();
      if (!ok.count(k)) error(kv.first, where + ": unknown key '" + k + "'");
    }
  }

  // Node lookup with a fallback mapping.
  static YAML::Node get(const YAML::Node& n, const char* key, const YAML::Node& fallback = YAML::Node()) {
    if (n.IsMap() && n[key]) return n[key];
    if (fallback.IsMap() && fallback[key]) return fallback[key];
    // A default Node is a defined null; lookups in a const map yield an undefined one.
    static const YAML::Node empty(YAML::NodeType::Map);
    return empty[key];
  }

  YAML::Node require(const YAML::Node& n, const char* key, const std::string& where,
                     const YAML::Node& fallback = YAML::Node()) {
    YAML::Node v = get(n, key, fallback);
    if (!v) error(n, where + ": missing '" + key + "'");
    return v;
  }

  std::optional<DisturbanceSpec> disturbance(const YAML::Node& n, const std::string& key) {
    if (!n.IsDefined()) return std::nullopt;  // already reported as missing
    only_keys(n, key, {"kind", "amplitude", "frequency", "phase", "half_width"});
    if (!n.IsMap()) return std::nullopt;
    auto kind = text(require(n, "kind", key), key + ".kind");
    if (!kind) return std::nullopt;
    DisturbanceSpec s;
    if (*kind == "zero") {
      s.kind = DisturbanceKind::Zero;
    } else if (*kind == "sinusoidal") {
      s.kind = DisturbanceKind::Sinusoidal;
      auto a = number(require(n, "amplitude", key), key + ".amplitude");
      auto f = number(require(n, "frequency", key), key + ".frequency");
      std::optional<double> p = 0.0;
      if (n["phase"]) p = number(n["phase"], key + ".phase");
      if (!a || !f || !p) return std::nullopt;
      s.amplitude = *a;
      s.frequency = *f;
      s.phase = *p;
    } else if (*kind == "uniform") {
      s.kind = DisturbanceKind::UniformBox;
      auto h = vector(require(n, "half_width", key), key + ".half_width");
      if (!h) return std::nullopt;
      if ((h->array() < 0.0).any()) {
        error(n, key + ".half_width must be nonnegative");
        return std::nullopt;
      }
      s.half_widths = *h;
    } else {
      error(n["kind"], key + ".kind: unknown disturbance kind '" + *kind + "' (zero, sinusoidal, uniform)");
      return std::nullopt;
    }
    return s;
  }
};

void check_disturbance(Reader& rd, const YAML::Node& at, const std::string& key, const DisturbanceSpec& s,
                       const SpdMat& bound) {
  const Eigen::Index dim = bound.dim();
  if (s.kind == DisturbanceKind::UniformBox && s.half_widths.size() != 1 && s.half_widths.size() != dim)
    rd.error(at, key + ".half_width: expected 1 or " + std::to_string(dim) + " entries");
  if (s.kind == DisturbanceKind::Sinusoidal) {
    const Ellipsoid e(Vec::Zero(dim), bound);
    if (!e.contains(Vec::Constant(dim, std::abs(s.amplitude)), 1e-12))
      rd.error(at, key + ": sinusoid amplitude exceeds its bounding ellipsoid");
  }
}

SystemSpec read_system(Reader& rd, const YAML::Node& n, double& dt) {
  SystemSpec sys;
  if (!n) return sys;
  if (n["mathieu"]) {
    rd.only_keys(n, "system", {"mathieu"});
    const YAML::Node m = n["mathieu"];
    rd.only_keys(m, "system.mathieu", {"omega", "omega0", "epsilon", "dt", "sample"});
    MathieuParams p;
    if (m["omega"]) p.omega = rd.number(m["omega"], "omega").value_or(p.omega);
    if (m["omega0"]) p.omega0 = rd.number(m["omega0"], "omega0").value_or(p.omega0);
    if (m["epsilon"]) p.epsilon = rd.number(m["epsilon"], "epsilon").value_or(p.epsilon);
    if (m["dt"]) p.dt = rd.number(m["dt"], "dt").value_or(p.dt);
    if (!(p.dt > 0.0)) rd.error(m, "system.mathieu.dt must be positive");
    if (m["sample"]) {
      const std::string s = rd.text(m["sample"], "sample").value_or("start");
      if (s == "start") p.sample = CoefficientSample::Start;
      else if (s == "end") p.sample = CoefficientSample::End;
      else rd.error(m["sample"], "system.mathieu.sample must be 'start' or 'end'");
    }
    sys.mathieu = p;
    dt = p.dt;
    return sys;
  }
  rd.only_keys(n, "system", {"A", "B", "C", "D", "G", "dt"});
  const auto a = rd.matrix(rd.require(n, "A", "system"), "A");
  const auto c = rd.matrix(rd.require(n, "C", "system"), "C");
  const auto d = rd.matrix(rd.require(n, "D", "system"), "D");
  const auto g = rd.matrix(rd.require(n, "G", "system"), "G");
  std::optional<Mat> b;
  if (n["B"]) b = rd.matrix(n["B"], "B");
  if (n["dt"]) dt = rd.number(n["dt"], "dt").value_or(1.0);
  if (!a || !c || !d || !g || (n["B"] && !b)) return sys;
  const Eigen::Index nx = a->rows();
  if (a->cols() != nx) rd.error(n["A"], "A must be square");
  if (b && b->rows() != nx) rd.error(n["B"], "B must have as many rows as A");
  if (c->cols() != nx) rd.error(n["C"], "C must have as many columns as A");
  if (d->rows() != c->rows()) rd.error(n["D"], "D must have as many rows as C");
  if (g->rows() != nx) rd.error(n["G"], "G must have as many rows as A");
  sys.a = *a;
  sys.b = b ? *b : Mat(nx, 0);
  sys.c = *c;
  sys.d = *d;
  sys.g = *g;
  return sys;
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node doc;
  try {
    doc = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  const YAML::Node root = doc;
  Reader rd{source, {}};
  if (!root.IsMap()) throw ParseError(source + ":1: top level must be a mapping");
  rd.only_keys(root, "config", {"name", "mode", "horizon", "seed", "output", "tolerance", "execution", "system",
                                "filter", "leader", "agents", "agent_defaults", "graph", "design", "bounds"});

  ScenarioConfig cfg;
  if (root["name"]) cfg.name = rd.text(root["name"], "name").value_or(cfg.name);
  if (auto m = rd.text(rd.require(root, "mode", "config"), "mode")) {
    if (*m == "single-filter") cfg.mode = Mode::SingleFilter;
    else if (*m == "multi-agent") cfg.mode = Mode::MultiAgent;
    else rd.error(root["mode"], "mode must be 'single-filter' or 'multi-agent'");
  }
  if (auto h = rd.integer(rd.require(root, "horizon", "config"), "horizon")) {
    if (*h < 0) rd.error(root["horizon"], "horizon must be nonnegative");
    cfg.horizon = *h;
  }
  if (root["seed"]) {
    if (auto s = rd.integer(root["seed"], "seed")) cfg.seed = static_cast<std::uint64_t>(*s);
  }
  if (root["output"]) cfg.output = rd.text(root["output"], "output").value_or("");
  if (root["tolerance"]) {
    try {
      cfg.tol = parse_tol_profile(rd.text(root["tolerance"], "tolerance").value_or("default"));
    } catch (const ValidationError& e) {
      rd.error(root["tolerance"], e.what());
    }
  }
  if (root["execution"]) {
    const std::string e = rd.text(root["execution"], "execution").value_or("serial");
    if (e == "parallel") cfg.execution = Execution::Parallel;
    else if (e != "serial") rd.error(root["execution"], "execution must be 'serial' or 'parallel'");
  }

  double dt = 1.0;
  cfg.system = read_system(rd, rd.require(root, "system", "config"), dt);
  cfg.system.dt = dt;
  const bool have_system = cfg.system.mathieu || cfg.system.a.size() > 0;
  const Eigen::Index nx = cfg.system.mathieu ? 2 : cfg.system.a.rows();
  const Eigen::Index nw = cfg.system.mathieu ? 1 : cfg.system.g.cols();
  const Eigen::Index nv = cfg.system.mathieu ? 1 : cfg.system.d.cols();

  if (cfg.mode == Mode::SingleFilter && have_system) {
    const YAML::Node f = rd.require(root, "filter", "single-filter mode");
    if (f) {
      rd.only_keys(f, "filter", {"x0", "xhat0", "P0", "Q", "R", "w", "v"});
      auto x0 = rd.vector(rd.require(f, "x0", "filter"), "x0");
      auto xh = rd.vector(rd.require(f, "xhat0", "filter"), "xhat0");
      auto p0 = rd.spd(rd.require(f, "P0", "filter"), "P0", nx);
      auto q = rd.spd(rd.require(f, "Q", "filter"), "Q", nw);
      auto r = rd.spd(rd.require(f, "R", "filter"), "R", nv);
      auto w = rd.disturbance(rd.require(f, "w", "filter"), "w");
      auto v = rd.disturbance(rd.require(f, "v", "filter"), "v");
      if (x0 && x0->size() != nx) rd.error(f["x0"], "x0 must have " + std::to_string(nx) + " entries");
      if (xh && xh->size() != nx) rd.error(f["xhat0"], "xhat0 must have " + std::to_string(nx) + " entries");
      if (q && w) check_disturbance(rd, f["w"], "w", *w, *q);
      if (r && v) check_disturbance(rd, f["v"], "v", *v, *r);
      if (x0 && xh && p0 && q && r && w && v && x0->size() == nx && xh->size() == nx) {
        cfg.filter = FilterSpec{*x0, Ellipsoid(*xh, *p0), *q, *r, *w, *v};
        if (cfg.system.mathieu) {
          cfg.system.mathieu->q = q->matrix()(0, 0);
          cfg.system.mathieu->r = r->matrix()(0, 0);
          cfg.system.mathieu->horizon = cfg.horizon;
        }
      }
    }
  }

  if (cfg.mode == Mode::MultiAgent && have_system) {
    if (cfg.system.mathieu) rd.error(root["system"], "multi-agent mode needs explicit matrices A, B, C, D, G");
    else if (cfg.system.b.cols() == 0) rd.error(root["system"], "multi-agent mode needs an input matrix B");
    if (auto l = rd.vector(rd.require(root, "leader", "multi-agent mode"), "leader")) {
      if (l->size() != nx) rd.error(root["leader"], "leader must have " + std::to_string(nx) + " entries");
      cfg.leader = *l;
    }
    const YAML::Node defaults = root["agent_defaults"];
    if (defaults) rd.only_keys(defaults, "agent_defaults", {"x0", "xhat0", "P0", "Q", "R", "w", "v"});
    const YAML::Node agents = rd.require(root, "agents", "multi-agent mode");
    if (agents && (!agents.IsSequence() || agents.size() == 0)) rd.error(agents, "agents: expected a non-empty list");
    if (agents && agents.IsSequence()) {
      for (std::size_t i = 0; i < agents.size(); ++i) {
        const YAML::Node a = agents[i];
        const std::string where = "agents[" + std::to_string(i + 1) + "]";
        rd.only_keys(a, where, {"x0", "xhat0", "P0", "Q", "R", "w", "v"});
        auto xh = rd.vector(rd.require(a, "xhat0", where, defaults), where + ".xhat0");
        auto p0 = rd.spd(rd.require(a, "P0", where, defaults), where + ".P0", nx);
        auto q = rd.spd(rd.require(a, "Q", where, defaults), where + ".Q", nw);
        auto r = rd.spd(rd.require(a, "R", where, defaults), where + ".R", nv);
        auto w = rd.disturbance(rd.require(a, "w", where, defaults), where + ".w");
        auto v = rd.disturbance(rd.require(a, "v", where, defaults), where + ".v");
        // x0: exact state, or {low, high} box.
        std::optional<Vec> lo, hi;
        const YAML::Node x0 = rd.require(a, "x0", where, defaults);
        if (x0 && x0.IsMap()) {
          rd.only_keys(x0, where + ".x0", {"low", "high"});
          lo = rd.vector(rd.require(x0, "low", where + ".x0"), where + ".x0.low");
          hi = rd.vector(rd.require(x0, "high", where + ".x0"), where + ".x0.high");
        } else if (x0) {
          lo = hi = rd.vector(x0, where + ".x0");
        }
        if (xh && xh->size() != nx) rd.error(a, where + ".xhat0 must have " + std::to_string(nx) + " entries");
        if (lo && hi) {
          if (lo->size() != nx || hi->size() != nx)
            rd.error(x0, where + ".x0 must have " + std::to_string(nx) + " entries");
          else if ((lo->array() > hi->array()).any())
            rd.error(x0, where + ".x0.low exceeds x0.high");
        }
        if (q && w) check_disturbance(rd, a, where + ".w", *w, *q);
        if (r && v) check_disturbance(rd, a, where + ".v", *v, *r);
        if (xh && p0 && q && r && w && v && lo && hi && xh->size() == nx && lo->size() == nx && hi->size() == nx)
          cfg.agents.push_back({Ellipsoid(*xh, *p0), *lo, *hi, *q, *r, *w, *v});
      }
    }

    const YAML::Node g = rd.require(root, "graph", "multi-agent mode");
    if (g) {
      rd.only_keys(g, "graph", {"edges", "pinning"});
      const auto n_agents = static_cast<Eigen::Index>(agents && agents.IsSequence() ? agents.size() : 0);
      std::vector<graph::Edge> edges;
      const YAML::Node e = rd.require(g, "edges", "graph");
      if (e && !e.IsSequence()) rd.error(e, "graph.edges: expected a list of [from, to] or [from, to, weight]");
      if (e && e.IsSequence()) {
        for (const YAML::Node& item : e) {
          auto v = rd.vector(item, "graph.edges");
          if (!v) continue;
          if (v->size() != 2 && v->size() != 3) {
            rd.error(item, "graph.edges: expected [from, to] or [from, to, weight]");
            continue;
          }
          const auto from = static_cast<Eigen::Index>((*v)(0)) - 1, to = static_cast<Eigen::Index>((*v)(1)) - 1;
          if (from < 0 || from >= n_agents || to < 0 || to >= n_agents || from == to ||
              (*v)(0) != std::floor((*v)(0)) || (*v)(1) != std::floor((*v)(1))) {
            rd.error(item, "graph.edges: endpoints must be distinct agent numbers 1.." + std::to_string(n_agents));
            continue;
          }
          const double wgt = v->size() == 3 ? (*v)(2) : 1.0;
          if (!(wgt > 0.0)) {
            rd.error(item, "graph.edges: weight must be positive");
            continue;
          }
          edges.push_back({from, to, wgt});
        }
      }
      auto pin = rd.vector(rd.require(g, "pinning", "graph"), "graph.pinning");
      if (pin && pin->size() != n_agents)
        rd.error(g["pinning"], "graph.pinning must have one gain per agent (" + std::to_string(n_agents) + ")");
      else if (pin && (pin->array() < 0.0).any())
        rd.error(g["pinning"], "graph.pinning gains must be nonnegative");
      else if (pin && n_agents > 0)
        cfg.graph = graph::InteractionGraph::from_edges(n_agents, edges, *pin);
    }

    const YAML::Node d = rd.require(root, "design", "multi-agent mode");
    if (d) {
      rd.only_keys(d, "design", {"Q", "c0", "r0", "circle", "alpha", "mu"});
      auto q = rd.spd(rd.require(d, "Q", "design"), "design.Q", nx);
      std::optional<double> c0, r0;
      const bool auto_circle = d["circle"] && d["circle"].IsScalar() && d["circle"].Scalar() == "auto";
      if (d["circle"] && !auto_circle) rd.error(d["circle"], "design.circle: only 'auto' is supported");
      if (auto_circle) {
        if (d["c0"] || d["r0"]) rd.error(d, "design: give either circle: auto or c0 and r0");
        if (cfg.graph) {
          try {
            const graph::Circle c = graph::smallest_ratio_circle(graph::gamma(*cfg.graph).eigenvalues);
            c0 = c.c0;
            r0 = c.r0;
          } catch (const std::exception& ex) {
            rd.error(d["circle"], std::string("design.circle: ") + ex.what());
          }
        }
      } else {
        c0 = rd.number(rd.require(d, "c0", "design"), "design.c0");
        r0 = rd.number(rd.require(d, "r0", "design"), "design.r0");
        if (c0 && !(*c0 > 0.0)) rd.error(d["c0"], "design.c0 must be positive");
        if (r0 && !(*r0 > 0.0)) rd.error(d["r0"], "design.r0 must be positive");
      }
      std::optional<riccati::DecayCertificate> cert;
      if (d["alpha"] || d["mu"]) {
        auto al = rd.number(rd.require(d, "alpha", "design"), "design.alpha");
        auto mu = rd.number(rd.require(d, "mu", "design"), "design.mu");
        if (al && !(*al > 0.0)) rd.error(d["alpha"], "design.alpha must be positive");
        if (mu && !(*mu >= 0.0 && *mu < 1.0)) rd.error(d["mu"], "design.mu must lie in [0, 1)");
        if (al && mu) cert = riccati::DecayCertificate{*al, *mu};
      }
      if (q && c0 && r0) cfg.design = DesignSpec{*q, *c0, *r0, cert};
    }

    if (const YAML::Node b = root["bounds"]) {
      rd.only_keys(b, "bounds", {"p0", "qbar", "rbar"});
      auto read = [&](const char* key, std::optional<double>& out) {
        if (!b[key]) return;
        out = rd.number(b[key], std::string("bounds.") + key);
        if (out && !(*out > 0.0)) {
          rd.error(b[key], std::string("bounds.") + key + " must be positive");
          out.reset();
        }
      };
      read("p0", cfg.bounds.p0);
      read("qbar", cfg.bounds.qbar);
      read("rbar", cfg.bounds.rbar);
    }
  }
  if (!rd.errors.empty()) {
    std::ostringstream os;
    for (std::size_t i = 0; i < rd.errors.size(); ++i) os << (i ? "\n" : "") << rd.errors[i];
    throw ValidationError(os.str());
  }
  validate(cfg);
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void validate(const ScenarioConfig& cfg) {
  std::vector<std::string> errs;
  if (cfg.horizon < 0) errs.push_back("horizon must be nonnegative");
  if (cfg.mode == Mode::SingleFilter) {
    if (!cfg.filter) {
      errs.push_back("single-filter mode needs a filter section");
    } else if (!cfg.filter->init.contains(cfg.filter->x0, 0.0)) {
      errs.push_back("x0 lies outside the initial ellipsoid E(xhat0, P0)");
    }
  } else {
    if (!cfg.graph) errs.push_back("multi-agent mode needs a graph");
    if (!cfg.design) errs.push_back("multi-agent mode needs a design section");
    if (cfg.agents.empty()) errs.push_back("multi-agent mode needs at least one agent");
    for (std::size_t i = 0; i < cfg.agents.size(); ++i) {
      const sync::AgentSetup& a = cfg.agents[i];
      const Eigen::Index n = a.x0_low.size();
      if (n > 20) continue;
      // The box lies in the (convex) ellipsoid iff all its corners do.
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        Vec corner(n);
        for (Eigen::Index j = 0; j < n; ++j) corner(j) = (mask >> j) & 1u ? a.x0_high(j) : a.x0_low(j);
        if (!a.init.contains(corner, 0.0)) {
          errs.push_back("agents[" + std::to_string(i + 1) + "]: initial state box leaves E(xhat0, P0)");
          break;
        }
      }
    }
    if (cfg.graph && static_cast<Eigen::Index>(cfg.agents.size()) == cfg.graph->size()) {
      if (!graph::has_pinned_spanning_tree(*cfg.graph).exists)
        errs.push_back("graph: some agent is not reachable from the leader through pinned edges");
      if (cfg.design && errs.empty()) {
        try {
          riccati::DesignOptions o;
          o.horizon = static_cast<int>(std::max<Eigen::Index>(cfg.horizon, 60));
          o.certificate = cfg.design->certificate;
          riccati::design(cfg.system.a, cfg.system.b, cfg.design->q, graph::gamma(*cfg.graph), cfg.design->c0,
                          cfg.design->r0, o);
        } catch (const Error& e) {
          errs.push_back(std::string("design: ") + e.what());
        }
      }
    }
  }
  if (!errs.empty()) {
    std::ostringstream os;
    for (std::size_t i = 0; i < errs.size(); ++i) os << (i ? "\n" : "") << errs[i];
    throw ValidationError(os.str());
  }
}

ScenarioConfig preset(const std::string& name, int setting) {
  ScenarioConfig cfg;
  cfg.name = name;
  if (name == "example1") {
    cfg.mode = Mode::SingleFilter;
    cfg.horizon = 200;
    MathieuParams p;
    p.sample = CoefficientSample::End;
    p.horizon = cfg.horizon;
    cfg.system.mathieu = p;
    cfg.system.dt = p.dt;
    const DisturbanceSpec sine{DisturbanceKind::Sinusoidal, 0.05, 2 * std::numbers::pi, 0.0, {}};
    cfg.filter = FilterSpec{Eigen::Vector2d(0.5, 0.0), Ellipsoid(Vec::Zero(2), SpdMat::identity(2, 10.5)),
                            SpdMat::scalar(p.q), SpdMat::scalar(p.r), sine, sine};
    return cfg;
  }
  if (name == "example2") {
    if (setting < 1 || setting > 3) throw ValidationError("example2 setting must be 1, 2 or 3");
    static constexpr double kAmplitude[] = {0.05, 0.5, 1.0}, kQ[] = {0.1, 1.0, 2.0}, kR[] = {0.1, 1.0, 1.0};
    const auto s = static_cast<std::size_t>(setting - 1);
    cfg.mode = Mode::MultiAgent;
    cfg.horizon = 60;
    cfg.seed = 1;
    if (setting > 1) cfg.name += "-setting" + std::to_string(setting);
    Mat a(2, 2), c(1, 2);
    a << 0, -1, 1, 0;
    c << 1, 0;
    cfg.system.a = a;
    cfg.system.b = Mat::Identity(2, 2);
    cfg.system.c = c;
    cfg.system.d = Mat::Ones(1, 1);
    cfg.system.g = Mat::Identity(2, 2);
    cfg.leader = Eigen::Vector2d(5, -5);
    const DisturbanceSpec w{DisturbanceKind::UniformBox, 0, 0, 0, Vec::Constant(1, kAmplitude[s])};
    for (int i = 0; i < 4; ++i) {
      const Vec xh = i < 2 ? Eigen::Vector2d(50, -50) : Eigen::Vector2d(-50, 50);
      cfg.agents.push_back({Ellipsoid(xh, SpdMat::identity(2, 2.0)), xh, xh + Vec::Ones(2),
                            SpdMat::identity(2, kQ[s]), SpdMat::scalar(kR[s]), w, w});
    }
    cfg.graph = graph::InteractionGraph::from_edges(4, {{3, 0}, {0, 1}, {1, 2}, {2, 3}}, Eigen::Vector4d(1, 0, 0, 0));
    cfg.design = DesignSpec{SpdMat::identity(2, 0.1), 2.0 / 3.0, 0.6, riccati::DecayCertificate{1.1, 0.9}};
    // p0 = |P0|; qbar and rbar follow the setting's disturbance ellipsoids.
    cfg.bounds = {2.0, kQ[s], kR[s]};
    return cfg;
  }
  throw ValidationError("unknown preset '" + name + "' (example1, example2)");
}

}  // namespace smfsync::scenario
