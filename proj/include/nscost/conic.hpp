#pragma once

// SDP intermediate representation.
//
// Problems are stated over Hermitian matrix variables (on a SystemLayout) and
// real scalars. Constraints are affine Hermitian expressions that must be PSD
// or zero. `compile` lowers a problem to the standard conic form
//
//   minimize  c'x + c0   subject to   h_k - G_k x  in PSD (per block k),
//                                      A x = b,
//
// where x collects the real parameters of all variables.

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Sparse>

#include "nscost/tensor.hpp"

namespace nscost {

// Linear map between Hermitian operators, stored as a chain of primitives.
class LinearMap {
 public:
  explicit LinearMap(SystemLayout input);

  const SystemLayout& input_layout() const { return layouts_.front(); }
  const SystemLayout& output_layout() const { return layouts_.back(); }
  bool is_identity() const { return steps_.empty(); }

  LinearMap scaled(double s) const;
  LinearMap partial_traced(const Labels& traced) const;
  LinearMap tensored_left(const HermitianOperator& c) const;   // X -> C (x) X
  LinearMap tensored_right(const HermitianOperator& c) const;  // X -> X (x) C
  LinearMap permuted(const Labels& order) const;
  // X -> L X R; `output` relabels the result (its total dim must match L's rows).
  LinearMap multiplied(const ComplexMatrix& left, const ComplexMatrix& right,
                       SystemLayout output) const;
  // Same entries under new labels (total dims must agree).
  LinearMap relabeled(SystemLayout output) const;
  // Chain `next` after this map; next.input_layout() must equal output_layout().
  LinearMap then(const LinearMap& next) const;

  ComplexMatrix apply(const ComplexMatrix& x) const;
  // Adjoint under <A, B> = tr(A^dagger B).
  ComplexMatrix apply_adjoint(const ComplexMatrix& y) const;

 private:
  struct Scale {
    double s;
  };
  struct Trace {
    Labels traced;
  };
  struct TensorLeft {
    ComplexMatrix c;
    SystemLayout layout;
  };
  struct TensorRight {
    ComplexMatrix c;
    SystemLayout layout;
  };
  struct Permute {
    Labels order;
  };
  struct Multiply {
    ComplexMatrix left, right;
  };
  struct Relabel {};
  using Step = std::variant<Scale, Trace, TensorLeft, TensorRight, Permute, Multiply, Relabel>;

  LinearMap with(Step step, SystemLayout out) const;

  std::vector<Step> steps_;
  std::vector<SystemLayout> layouts_;  // layouts_[i] is the input of steps_[i]
};

// `diagonal` is a Hermitian variable restricted to a real diagonal matrix.
enum class VariableKind { hermitian, diagonal, scalar };

struct Variable {
  int id = -1;
  std::string name;
  VariableKind kind = VariableKind::scalar;
  SystemLayout layout;  // empty for scalars

  int side() const { return layout.total_dim(); }
  // Number of real parameters: side^2 for Hermitian, side for diagonal, 1 for
  // scalars. A diagonal variable uses the leading (diagonal) Hermitian
  // coordinates.
  int num_params() const { return kind == VariableKind::diagonal ? side() : side() * side(); }
};

struct LinearTerm {
  int var = -1;
  LinearMap map;
};

// sum_t map_t(var_t) + constant, all on `layout`.
class AffineExpr {
 public:
  AffineExpr();  // zero scalar
  explicit AffineExpr(const Variable& v);
  explicit AffineExpr(const HermitianOperator& constant);

  const SystemLayout& layout() const { return layout_; }
  const std::vector<LinearTerm>& terms() const { return terms_; }
  const ComplexMatrix& constant() const { return constant_; }

  AffineExpr partial_trace(const Labels& traced) const;
  AffineExpr tensor_left(const HermitianOperator& c) const;
  AffineExpr tensor_right(const HermitianOperator& c) const;
  AffineExpr permute(const Labels& order) const;
  AffineExpr scaled(double s) const;
  AffineExpr multiply(const ComplexMatrix& left, const ComplexMatrix& right,
                      SystemLayout output) const;
  // Same entries, labels replaced (total dims must agree).
  AffineExpr relabeled(SystemLayout layout) const;

  AffineExpr& operator+=(const AffineExpr& o);
  AffineExpr& operator-=(const AffineExpr& o);

 private:
  // Appends `step` (whose input is this expression's layout) to every term.
  AffineExpr chained(const LinearMap& step) const;

  SystemLayout layout_;
  std::vector<LinearTerm> terms_;
  ComplexMatrix constant_;
};

AffineExpr operator+(AffineExpr a, const AffineExpr& b);
AffineExpr operator-(AffineExpr a, const AffineExpr& b);
AffineExpr operator-(AffineExpr a, const HermitianOperator& b);
AffineExpr operator+(AffineExpr a, const HermitianOperator& b);
AffineExpr operator*(double s, const AffineExpr& a);

struct ObjectiveTerm {
  int var = -1;
  ComplexMatrix weight;  // contributes Re tr(weight * var)
};

struct Constraint {
  std::string name;
  AffineExpr expr;
};

class ConicProblem {
 public:
  Variable add_hermitian(std::string name, SystemLayout layout);
  Variable add_diagonal(std::string name, SystemLayout layout);
  Variable add_scalar(std::string name);

  // Adds `coeff * v` (scalar) or `Re tr(weight v)` (matrix) to the minimized objective.
  void add_objective(const Variable& v, double coeff);
  void add_objective(const Variable& v, const HermitianOperator& weight);
  void add_objective_constant(double c) { objective_constant_ += c; }

  int add_psd(std::string name, AffineExpr expr);
  int add_equality(std::string name, AffineExpr expr);

  const std::vector<Variable>& variables() const { return variables_; }
  const Variable& variable(const std::string& name) const;
  const std::vector<ObjectiveTerm>& objective() const { return objective_; }
  double objective_constant() const { return objective_constant_; }
  const std::vector<Constraint>& psd_constraints() const { return psd_; }
  const std::vector<Constraint>& eq_constraints() const { return eq_; }

 private:
  void check_expr(const AffineExpr& e) const;

  std::vector<Variable> variables_;
  std::vector<ObjectiveTerm> objective_;
  double objective_constant_ = 0.0;
  std::vector<Constraint> psd_;
  std::vector<Constraint> eq_;
};

// Adds partial_trace(var, traced) - rhs = 0.
void constrain_marginal_equals(ConicProblem& problem, const Variable& var, const Labels& traced,
                               const AffineExpr& rhs, std::string name = "");

// Real-parameter coordinates of a Hermitian matrix of side n: diagonal entries,
// then Re and Im of each strictly upper entry, visited row-major. Scalars have
// the single parameter 0.
ComplexMatrix hermitian_basis_element(int n, int param);
Eigen::VectorXd hermitian_to_params(const ComplexMatrix& x);
ComplexMatrix params_to_hermitian(const Eigen::VectorXd& p, int n);

// Origin of a row of A: equality constraint index and the parameter (entry
// row/col, real or imaginary part) of its expression.
struct EqRowTag {
  int constraint;
  int row;
  int col;
  bool imag;
};

template <class Scalar>
struct ConicForm {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  // Upper-triangle entry (row <= col); the mirrored entry is its conjugate.
  struct Entry {
    int row;
    int col;
    Scalar value;
  };
  struct Column {
    int x;
    std::vector<Entry> entries;
  };
  struct Block {
    std::string name;
    int side = 0;
    Matrix h;
    std::vector<Column> columns;  // G_k, sorted by x, unique x
  };

  int num_x = 0;
  Eigen::VectorXd c;
  double c0 = 0.0;
  std::vector<Block> blocks;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  std::vector<EqRowTag> eq_rows;
};

using HermitianConicForm = ConicForm<Complex>;
using RealConicForm = ConicForm<double>;

HermitianConicForm compile(const ConicProblem& problem);
// Each Hermitian block H becomes [[Re H, -Im H], [Im H, Re H]]; x, A, b, c unchanged.
RealConicForm embed_real(const HermitianConicForm& form);
RealConicForm hermitian_to_real_embedding(const ConicProblem& problem);
// Dense real-symmetric embedding of a single matrix.
Eigen::MatrixXd real_embedding(const ComplexMatrix& h);

// Offsets of each variable's parameters inside x.
std::vector<int> variable_offsets(const ConicProblem& problem);

// JSON dump of the compiled Hermitian form with dense coefficient matrices.
void dump_problem(const ConicProblem& problem, std::ostream& os);

}  // namespace nscost
