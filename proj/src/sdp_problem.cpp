#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "smfsync/errors.hpp"
#include "smfsync/sdp.hpp"

namespace smfsync::sdp {

AffineExpr& AffineExpr::plus_product(const Mat& left, VarId var, const Mat& right, bool transposed) {
  if (left.rows() != rows() || right.cols() != cols())
    throw DimensionMismatch("AffineExpr::plus_product: outer dimensions do not match the expression");
  products_.push_back({var, left, right, transposed});
  return *this;
}

AffineExpr& AffineExpr::plus_scaled(VarId var, const Mat& coefficient) {
  if (coefficient.rows() != rows() || coefficient.cols() != cols())
    throw DimensionMismatch("AffineExpr::plus_scaled: coefficient shape does not match the expression");
  scaled_.push_back({var, coefficient});
  return *this;
}

AffineExpr& AffineExpr::plus_constant(const Mat& c) {
  if (c.rows() != rows() || c.cols() != cols())
    throw DimensionMismatch("AffineExpr::plus_constant: shape mismatch");
  constant_ += c;
  return *this;
}

LmiConstraint::LmiConstraint(std::vector<Eigen::Index> block_sizes, Sense sense, std::string label)
    : sizes_(std::move(block_sizes)), sense_(sense), label_(std::move(label)) {
  if (sizes_.empty()) throw std::invalid_argument("LmiConstraint: no blocks");
  for (Eigen::Index s : sizes_)
    if (s < 0) throw std::invalid_argument("LmiConstraint: negative block size");
}

void LmiConstraint::set_block(std::size_t i, std::size_t j, AffineExpr expr) {
  if (i > j) throw std::invalid_argument("LmiConstraint::set_block: only upper blocks (i <= j) are stored");
  if (j >= sizes_.size()) throw std::out_of_range("LmiConstraint::set_block: block index out of range");
  if (expr.rows() != sizes_[i] || expr.cols() != sizes_[j])
    throw DimensionMismatch("LmiConstraint::set_block: expression shape differs from block (" + std::to_string(i) +
                            ", " + std::to_string(j) + ") of " + label_);
  auto it = std::find_if(blocks_.begin(), blocks_.end(), [&](const Block& b) { return b.row == i && b.col == j; });
  if (it != blocks_.end())
    it->expr = std::move(expr);
  else
    blocks_.push_back({i, j, std::move(expr)});
}

Eigen::Index LmiConstraint::dim() const {
  Eigen::Index d = 0;
  for (Eigen::Index s : sizes_) d += s;
  return d;
}

VarId Problem::add_symmetric(std::string name, Eigen::Index dim) {
  if (dim <= 0) throw std::invalid_argument("add_symmetric: dimension must be positive");
  for (const auto& v : variables_)
    if (v.name == name) throw std::invalid_argument("variable declared twice: " + name);
  variables_.push_back({std::move(name), VariableKind::Symmetric, dim, dim});
  return {variables_.size() - 1};
}

VarId Problem::add_rectangular(std::string name, Eigen::Index rows, Eigen::Index cols) {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("add_rectangular: dimensions must be positive");
  for (const auto& v : variables_)
    if (v.name == name) throw std::invalid_argument("variable declared twice: " + name);
  variables_.push_back({std::move(name), VariableKind::Rectangular, rows, cols});
  return {variables_.size() - 1};
}

VarId Problem::add_nonnegative(std::string name) {
  for (const auto& v : variables_)
    if (v.name == name) throw std::invalid_argument("variable declared twice: " + name);
  variables_.push_back({std::move(name), VariableKind::Nonnegative, 1, 1});
  return {variables_.size() - 1};
}

const Variable& Problem::variable(VarId id) const {
  check(id);
  return variables_[id.index];
}

void Problem::check(VarId id) const {
  if (id.index >= variables_.size()) throw std::invalid_argument("reference to an undeclared variable");
}

void Problem::check(const AffineExpr& e) const {
  for (const auto& t : e.products()) {
    const Variable& v = variable(t.var);
    const Eigen::Index vr = t.transposed ? v.cols : v.rows;
    const Eigen::Index vc = t.transposed ? v.rows : v.cols;
    if (t.left.cols() != vr || t.right.rows() != vc)
      throw DimensionMismatch("product term does not conform to variable " + v.name);
  }
  for (const auto& t : e.scaled()) {
    const Variable& v = variable(t.var);
    if (v.rows != 1 || v.cols != 1) throw DimensionMismatch("scaled term needs a scalar variable, got " + v.name);
  }
}

void Problem::add_constraint(LmiConstraint c) {
  for (const auto& b : c.blocks()) check(b.expr);
  constraints_.push_back(std::move(c));
}

void Problem::require_positive_definite(VarId var) {
  const Variable& v = variable(var);
  if (v.kind != VariableKind::Symmetric) throw std::invalid_argument("positive definiteness needs a symmetric variable");
  LmiConstraint c({v.rows}, Sense::PositiveDefinite, v.name + " > 0");
  AffineExpr e(v.rows, v.rows);
  e.plus_product(Mat::Identity(v.rows, v.rows), var, Mat::Identity(v.rows, v.rows));
  c.set_block(0, 0, std::move(e));
  add_constraint(std::move(c));
}

void Problem::minimize_trace(VarId var) {
  if (variable(var).kind != VariableKind::Symmetric)
    throw std::invalid_argument("trace objective needs a symmetric matrix variable");
  trace_var_ = var;
  has_trace_ = true;
}

void Problem::add_objective_term(VarId scalar, double weight) {
  const Variable& v = variable(scalar);
  if (v.rows != 1 || v.cols != 1) throw std::invalid_argument("objective term needs a scalar variable");
  objective_terms_.emplace_back(scalar, weight);
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal:
      return "Optimal";
    case Status::Infeasible:
      return "Infeasible";
    case Status::NumericalFailure:
      return "NumericalFailure";
  }
  return "?";
}

std::vector<Eigen::Index> ConicProgram::psd_vec_dims() const {
  std::vector<Eigen::Index> out;
  for (const auto& b : blocks)
    if (!b.orthant) out.push_back(b.dim * (b.dim + 1) / 2);
  return out;
}

Eigen::Index ConicProgram::orthant_dim() const {
  Eigen::Index n = 0;
  for (const auto& b : blocks)
    if (b.orthant) n += b.dim;
  return n;
}

std::vector<Mat> ConicProgram::back_map(const Vec& y) const {
  std::vector<Mat> values;
  values.reserve(variables.size());
  for (const auto& v : variables) values.push_back(Mat::Zero(v.rows, v.cols));
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const Slot& s = slots[i];
    Mat& m = values[s.var.index];
    m(s.row, s.col) = y(static_cast<Eigen::Index>(i));
    if (variables[s.var.index].kind == VariableKind::Symmetric) m(s.col, s.row) = y(static_cast<Eigen::Index>(i));
  }
  return values;
}

double ConicProgram::max_violation(const Vec& y) const {
  double worst = 0.0;
  for (const auto& b : blocks) {
    Mat s = b.c;
    for (Eigen::Index i = 0; i < y.size(); ++i) s -= y(i) * b.a[static_cast<std::size_t>(i)];
    worst = std::max(worst, -linalg::min_symmetric_eigenvalue(s));
  }
  return worst;
}

namespace {

// Linear part of `e` evaluated at the unit direction of coordinate `slot`.
Mat linear_part(const AffineExpr& e, const ConicProgram::Slot& slot, VariableKind kind) {
  Mat out = Mat::Zero(e.rows(), e.cols());
  const bool symmetric_pair = kind == VariableKind::Symmetric && slot.row != slot.col;
  for (const auto& t : e.products()) {
    if (!(t.var == slot.var)) continue;
    // left * E_rc * right = left.col(r) * right.row(c); transposed uses E_cr.
    const Eigen::Index r = t.transposed ? slot.col : slot.row;
    const Eigen::Index c = t.transposed ? slot.row : slot.col;
    out.noalias() += t.left.col(r) * t.right.row(c);
    if (symmetric_pair) out.noalias() += t.left.col(c) * t.right.row(r);
  }
  for (const auto& t : e.scaled())
    if (t.var == slot.var) out += t.coefficient;
  return out;
}

Mat assemble(const LmiConstraint& c, const std::vector<Mat>& block_values) {
  const auto& sizes = c.block_sizes();
  std::vector<Eigen::Index> offsets(sizes.size(), 0);
  for (std::size_t i = 1; i < sizes.size(); ++i) offsets[i] = offsets[i - 1] + sizes[i - 1];
  Mat out = Mat::Zero(c.dim(), c.dim());
  for (std::size_t k = 0; k < c.blocks().size(); ++k) {
    const auto& b = c.blocks()[k];
    const Mat& v = block_values[k];
    out.block(offsets[b.row], offsets[b.col], v.rows(), v.cols()) += v;
    if (b.row != b.col) out.block(offsets[b.col], offsets[b.row], v.cols(), v.rows()) += v.transpose();
  }
  return out;
}

void require_symmetric(const Mat& m, const std::string& label) {
  if (!linalg::is_symmetric(m, 1e-12))
    throw std::invalid_argument("LMI '" + label + "' has a diagonal block that is not symmetric");
}

}  // namespace

ConicProgram scalarize(const Problem& p, double strict_margin) {
  if (p.constraints().empty()) throw std::invalid_argument("scalarize: problem has no constraints");
  if (p.trace_objective() == nullptr && p.objective_terms().empty())
    throw std::invalid_argument("scalarize: problem has no objective");

  ConicProgram out;
  out.variables = p.variables();
  for (std::size_t vi = 0; vi < out.variables.size(); ++vi) {
    const Variable& v = out.variables[vi];
    const VarId id{vi};
    switch (v.kind) {
      case VariableKind::Symmetric:
        for (Eigen::Index c = 0; c < v.cols; ++c)
          for (Eigen::Index r = 0; r <= c; ++r) out.slots.push_back({id, r, c});
        break;
      case VariableKind::Rectangular:
        for (Eigen::Index c = 0; c < v.cols; ++c)
          for (Eigen::Index r = 0; r < v.rows; ++r) out.slots.push_back({id, r, c});
        break;
      case VariableKind::Nonnegative:
        out.slots.push_back({id, 0, 0});
        break;
    }
  }
  const Eigen::Index m = static_cast<Eigen::Index>(out.slots.size());

  // Objective: maximize b^T y with b = -f for minimize f^T y.
  out.b = Vec::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& s = out.slots[static_cast<std::size_t>(i)];
    if (p.trace_objective() != nullptr && s.var == *p.trace_objective() && s.row == s.col) out.b(i) -= 1.0;
    for (const auto& [var, w] : p.objective_terms())
      if (s.var == var) out.b(i) -= w;
  }

  double data_scale = 0.0;
  for (const auto& c : p.constraints())
    for (const auto& b : c.blocks())
      if (b.expr.constant().size() > 0) data_scale = std::max(data_scale, b.expr.constant().cwiseAbs().maxCoeff());
  const double margin = strict_margin * (1.0 + data_scale);

  for (const auto& c : p.constraints()) {
    std::vector<Mat> constants;
    for (const auto& b : c.blocks()) constants.push_back(b.expr.constant());
    for (std::size_t k = 0; k < c.blocks().size(); ++k)
      if (c.blocks()[k].row == c.blocks()[k].col) require_symmetric(constants[k], c.label());
    const Mat f0 = assemble(c, constants);
    const double sign = c.sense() == Sense::NegativeSemidefinite ? -1.0 : 1.0;

    ConicProgram::Block block{c.dim(), false, sign * f0, {}};
    if (c.sense() == Sense::PositiveDefinite) block.c -= margin * Mat::Identity(c.dim(), c.dim());
    block.a.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& s = out.slots[static_cast<std::size_t>(i)];
      const VariableKind kind = out.variables[s.var.index].kind;
      std::vector<Mat> parts;
      for (const auto& b : c.blocks()) parts.push_back(linear_part(b.expr, s, kind));
      for (std::size_t k = 0; k < c.blocks().size(); ++k)
        if (c.blocks()[k].row == c.blocks()[k].col) require_symmetric(parts[k], c.label());
      // S = C - sum y_i A_i: NSD sense has S = -F(y), PD sense has S = F(y) - margin I.
      block.a.push_back(-sign * assemble(c, parts));
    }
    out.blocks.push_back(std::move(block));
  }

  // Orthant: tau >= 0 for every nonnegative scalar.
  std::vector<Eigen::Index> nonneg;
  for (Eigen::Index i = 0; i < m; ++i)
    if (out.variables[out.slots[static_cast<std::size_t>(i)].var.index].kind == VariableKind::Nonnegative)
      nonneg.push_back(i);
  if (!nonneg.empty()) {
    const Eigen::Index k = static_cast<Eigen::Index>(nonneg.size());
    ConicProgram::Block block{k, true, Mat::Zero(k, k), std::vector<Mat>(static_cast<std::size_t>(m), Mat::Zero(k, k))};
    for (Eigen::Index j = 0; j < k; ++j) block.a[static_cast<std::size_t>(nonneg[static_cast<std::size_t>(j)])](j, j) = -1.0;
    out.blocks.push_back(std::move(block));
  }
  return out;
}

Solution solve(const Problem& p, const Options& opts) {
  const ConicProgram program = scalarize(p, opts.strict_margin);
  ConicResult r = solve_conic(program, opts);
  Solution s;
  s.status = r.status;
  s.iterations = r.iterations;
  s.residuals = r.residuals;
  s.message = r.message;
  s.values = program.back_map(r.y);
  s.objective = -r.objective;
  s.dual_objective = -r.dual_objective;
  s.max_violation = program.max_violation(r.y);
  if (s.status == Status::Optimal) {
    double scale = 1.0;
    for (const auto& b : program.blocks) scale = std::max(scale, b.c.cwiseAbs().maxCoeff());
    if (s.max_violation > opts.tol * scale) {
      s.status = Status::NumericalFailure;
      s.message = "post-hoc eigenvalue check rejected the solution";
    }
  }
  return s;
}

}  // namespace smfsync::sdp
