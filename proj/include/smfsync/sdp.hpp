#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "smfsync/linalg.hpp"
#include "smfsync/parallel.hpp"

/// Small trace-minimization semidefinite programs over affine LMI
/// constraints, solved by a primal-dual interior-point method.
namespace smfsync::sdp {

enum class VariableKind { Symmetric, Rectangular, Nonnegative };

struct VarId {
  std::size_t index = 0;
  friend bool operator==(VarId, VarId) = default;
};

struct Variable {
  std::string name;
  VariableKind kind;
  Eigen::Index rows;
  Eigen::Index cols;
};

/// constant + sum_k left_k * V_k * right_k (V_k^T when transposed)
///          + sum_k s_k * coefficient_k      (s_k a 1x1 variable)
class AffineExpr {
 public:
  struct ProductTerm {
    VarId var;
    Mat left;
    Mat right;
    bool transposed;
  };
  struct ScaledTerm {
    VarId var;
    Mat coefficient;
  };

  AffineExpr() = default;
  AffineExpr(Eigen::Index rows, Eigen::Index cols) : constant_(Mat::Zero(rows, cols)) {}
  explicit AffineExpr(Mat constant) : constant_(std::move(constant)) {}

  AffineExpr& plus_product(const Mat& left, VarId var, const Mat& right, bool transposed = false);
  AffineExpr& plus_scaled(VarId var, const Mat& coefficient);
  AffineExpr& plus_constant(const Mat& c);

  Eigen::Index rows() const { return constant_.rows(); }
  Eigen::Index cols() const { return constant_.cols(); }
  const Mat& constant() const { return constant_; }
  const std::vector<ProductTerm>& products() const { return products_; }
  const std::vector<ScaledTerm>& scaled() const { return scaled_; }

 private:
  Mat constant_;
  std::vector<ProductTerm> products_;
  std::vector<ScaledTerm> scaled_;
};

enum class Sense {
  NegativeSemidefinite,  // F(x) <= 0
  PositiveDefinite,      // F(x) > 0, realized as F(x) >= margin * I
};

/// Symmetric block matrix of affine expressions. Only blocks (i, j) with
/// i <= j are stored; block (j, i) is the transpose of block (i, j).
class LmiConstraint {
 public:
  LmiConstraint(std::vector<Eigen::Index> block_sizes, Sense sense, std::string label = {});

  void set_block(std::size_t i, std::size_t j, AffineExpr expr);

  const std::vector<Eigen::Index>& block_sizes() const { return sizes_; }
  Eigen::Index dim() const;
  Sense sense() const { return sense_; }
  const std::string& label() const { return label_; }

  struct Block {
    std::size_t row;
    std::size_t col;
    AffineExpr expr;
  };
  const std::vector<Block>& blocks() const { return blocks_; }

 private:
  std::vector<Eigen::Index> sizes_;
  Sense sense_;
  std::string label_;
  std::vector<Block> blocks_;
};

class Problem {
 public:
  VarId add_symmetric(std::string name, Eigen::Index dim);
  VarId add_rectangular(std::string name, Eigen::Index rows, Eigen::Index cols);
  VarId add_nonnegative(std::string name);

  void add_constraint(LmiConstraint c);
  /// Adds var > 0 as a PositiveDefinite constraint.
  void require_positive_definite(VarId var);

  void minimize_trace(VarId var);
  void add_objective_term(VarId scalar, double weight);

  const std::vector<Variable>& variables() const { return variables_; }
  const Variable& variable(VarId id) const;
  const std::vector<LmiConstraint>& constraints() const { return constraints_; }
  /// Trace-objective variable, if set.
  const VarId* trace_objective() const { return has_trace_ ? &trace_var_ : nullptr; }
  const std::vector<std::pair<VarId, double>>& objective_terms() const { return objective_terms_; }

 private:
  void check(VarId id) const;
  void check(const AffineExpr& e) const;

  std::vector<Variable> variables_;
  std::vector<LmiConstraint> constraints_;
  VarId trace_var_;
  bool has_trace_ = false;
  std::vector<std::pair<VarId, double>> objective_terms_;
};

/// Standard LMI form over free variables y:
///   maximize b^T y  subject to  S_j = C_j - sum_i y_i A_ji >= 0 (PSD) for every block j.
/// Nonnegative scalars are collected into one diagonal orthant block. The
/// conic dual is: minimize sum_j <C_j, X_j> s.t. sum_j <A_ji, X_j> = b_i, X_j >= 0.
struct ConicProgram {
  struct Block {
    Eigen::Index dim;
    bool orthant;
    Mat c;
    std::vector<Mat> a;  // one per free variable
  };
  /// Coordinate i of y is entry (row, col) of variable `var`.
  struct Slot {
    VarId var;
    Eigen::Index row;
    Eigen::Index col;
  };

  std::vector<Block> blocks;
  Vec b;
  std::vector<Slot> slots;
  std::vector<Variable> variables;

  Eigen::Index num_free() const { return b.size(); }
  /// Sizes n(n+1)/2 of the vectorized PSD cones, in block order.
  std::vector<Eigen::Index> psd_vec_dims() const;
  Eigen::Index orthant_dim() const;

  /// Values of the named variables for a coordinate vector y.
  std::vector<Mat> back_map(const Vec& y) const;
  /// Largest violation max_j max(0, -lambda_min(S_j(y))), by Jacobi rotations
  /// independent of any solver state.
  double max_violation(const Vec& y) const;
};

struct IterationInfo {
  int iteration;
  double objective;       // b^T y
  double dual_objective;  // sum <C_j, X_j>
  double primal_residual;
  double dual_residual;
  double gap;
  double mu;
};

struct Options {
  double tol = 1e-7;  // relative KKT residual bound
  double gap = 1e-6;  // relative duality gap bound
  int max_iterations = 100;
  double strict_margin = 1e-9;  // scaled by the problem data magnitude
  Execution execution = Execution::Serial;
  std::function<void(const IterationInfo&)> on_iteration;
};

enum class Status { Optimal, Infeasible, NumericalFailure };

const char* to_string(Status s);

struct Residuals {
  double primal = 0.0;  // relative LMI residual of y
  double dual = 0.0;    // relative residual of the multiplier equations
  double gap = 0.0;     // relative duality gap
};

struct ConicResult {
  Status status = Status::NumericalFailure;
  Vec y;
  std::vector<Mat> x;  // dual multipliers per block
  std::vector<Mat> z;  // slacks per block
  double objective = 0.0;       // b^T y
  double dual_objective = 0.0;  // sum <C_j, X_j>
  Residuals residuals;
  int iterations = 0;
  std::string message;
};

struct Solution {
  Status status = Status::NumericalFailure;
  std::vector<Mat> values;
  double objective = 0.0;       // minimized objective at the returned point
  double dual_objective = 0.0;  // lower bound from the dual multipliers
  Residuals residuals;
  int iterations = 0;
  double max_violation = 0.0;
  std::string message;

  const Mat& value(VarId id) const { return values.at(id.index); }
  double scalar(VarId id) const { return values.at(id.index)(0, 0); }
};

ConicProgram scalarize(const Problem& p, double strict_margin = Options{}.strict_margin);

ConicResult solve_conic(const ConicProgram& program, const Options& opts = {});

Solution solve(const Problem& p, const Options& opts = {});

/// Line-oriented text form (see docs/sdp_text_format.md).
void write_text(std::ostream& os, const ConicProgram& program);
ConicProgram read_text(std::istream& is);

namespace detail {

/// Scaled constraint matrices G_j^T A_ji G_j, indexed [block][variable].
using ScaledData = std::vector<std::vector<Mat>>;

ScaledData scale_constraints(const ConicProgram& program, const std::vector<Mat>& g, Execution exec);
/// M_ik = sum_j <A~_ji, A~_jk>.
Mat assemble_schur(const ScaledData& scaled, Eigen::Index m, Execution exec);

}  // namespace detail
}  // namespace smfsync::sdp
