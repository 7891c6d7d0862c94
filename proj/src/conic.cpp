#include "nscost/conic.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace nscost {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_same_layout(const SystemLayout& a, const SystemLayout& b, const char* what) {
  if (!(a == b)) {
    throw std::invalid_argument(std::string(what) + ": layout mismatch " + to_string(a) + " vs " +
                                to_string(b));
  }
}

}  // namespace

// ---------------------------------------------------------------- LinearMap

LinearMap::LinearMap(SystemLayout input) { layouts_.push_back(std::move(input)); }

LinearMap LinearMap::with(Step step, SystemLayout out) const {
  LinearMap m = *this;
  m.steps_.push_back(std::move(step));
  m.layouts_.push_back(std::move(out));
  return m;
}

LinearMap LinearMap::scaled(double s) const { return with(Scale{s}, output_layout()); }

LinearMap LinearMap::partial_traced(const Labels& traced) const {
  if (traced.empty()) return *this;
  return with(Trace{traced}, output_layout().without(traced));
}

LinearMap LinearMap::tensored_left(const HermitianOperator& c) const {
  return with(TensorLeft{c.matrix(), c.layout()}, c.layout().concat(output_layout()));
}

LinearMap LinearMap::tensored_right(const HermitianOperator& c) const {
  return with(TensorRight{c.matrix(), c.layout()}, output_layout().concat(c.layout()));
}

LinearMap LinearMap::permuted(const Labels& order) const {
  SystemLayout out = output_layout().reordered(order);
  if (out == output_layout()) return *this;
  return with(Permute{order}, std::move(out));
}

LinearMap LinearMap::multiplied(const ComplexMatrix& left, const ComplexMatrix& right,
                                SystemLayout output) const {
  const int n = output_layout().total_dim();
  if (left.cols() != n || right.rows() != n || left.rows() != right.cols() ||
      left.rows() != output.total_dim()) {
    throw std::invalid_argument("multiply: factor shapes do not match layouts");
  }
  return with(Multiply{left, right}, std::move(output));
}

LinearMap LinearMap::relabeled(SystemLayout output) const {
  if (output.total_dim() != output_layout().total_dim()) {
    throw std::invalid_argument("relabel: " + to_string(output) + " vs " +
                                to_string(output_layout()));
  }
  return with(Relabel{}, std::move(output));
}

LinearMap LinearMap::then(const LinearMap& next) const {
  require_same_layout(output_layout(), next.input_layout(), "LinearMap::then");
  LinearMap m = *this;
  m.steps_.insert(m.steps_.end(), next.steps_.begin(), next.steps_.end());
  m.layouts_.insert(m.layouts_.end(), next.layouts_.begin() + 1, next.layouts_.end());
  return m;
}

ComplexMatrix LinearMap::apply(const ComplexMatrix& x) const {
  ComplexMatrix cur = x;
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const SystemLayout& in = layouts_[i];
    cur = std::visit(
        Overloaded{
            [&](const Scale& s) -> ComplexMatrix { return s.s * cur; },
            [&](const Trace& t) -> ComplexMatrix {
              return kernels::partial_trace(cur, in, t.traced);
            },
            [&](const TensorLeft& t) -> ComplexMatrix { return kernels::kron(t.c, cur); },
            [&](const TensorRight& t) -> ComplexMatrix { return kernels::kron(cur, t.c); },
            [&](const Permute& p) -> ComplexMatrix {
              return kernels::permute_systems(cur, in, p.order);
            },
            [&](const Multiply& m) -> ComplexMatrix { return m.left * cur * m.right; },
            [&](const Relabel&) -> ComplexMatrix { return cur; },
        },
        steps_[i]);
  }
  return cur;
}

ComplexMatrix LinearMap::apply_adjoint(const ComplexMatrix& y) const {
  ComplexMatrix cur = y;
  for (std::size_t i = steps_.size(); i-- > 0;) {
    const SystemLayout& in = layouts_[i];
    const SystemLayout& out = layouts_[i + 1];
    cur = std::visit(
        Overloaded{
            [&](const Scale& s) -> ComplexMatrix { return s.s * cur; },
            [&](const Trace&) -> ComplexMatrix {
              const SystemLayout traced = in.without(out.labels());
              const int dt = traced.total_dim();
              const ComplexMatrix ext = kernels::kron(cur, ComplexMatrix::Identity(dt, dt));
              return kernels::permute_systems(ext, out.concat(traced), in.labels());
            },
            [&](const TensorLeft& t) -> ComplexMatrix {
              const int n = in.total_dim();
              const ComplexMatrix f = kernels::kron(t.c.adjoint(), ComplexMatrix::Identity(n, n));
              return kernels::partial_trace(f * cur, out, t.layout.labels());
            },
            [&](const TensorRight& t) -> ComplexMatrix {
              const int n = in.total_dim();
              const ComplexMatrix f = kernels::kron(ComplexMatrix::Identity(n, n), t.c.adjoint());
              return kernels::partial_trace(f * cur, out, t.layout.labels());
            },
            [&](const Permute&) -> ComplexMatrix {
              return kernels::permute_systems(cur, out, in.labels());
            },
            [&](const Multiply& m) -> ComplexMatrix {
              return m.left.adjoint() * cur * m.right.adjoint();
            },
            [&](const Relabel&) -> ComplexMatrix { return cur; },
        },
        steps_[i]);
  }
  return cur;
}

// --------------------------------------------------------------- AffineExpr

AffineExpr::AffineExpr() : constant_(ComplexMatrix::Zero(1, 1)) {}

AffineExpr::AffineExpr(const Variable& v)
    : layout_(v.layout), constant_(ComplexMatrix::Zero(v.side(), v.side())) {
  if (v.id < 0) throw std::invalid_argument("AffineExpr: undeclared variable '" + v.name + "'");
  terms_.push_back(LinearTerm{v.id, LinearMap(v.layout)});
}

AffineExpr::AffineExpr(const HermitianOperator& constant)
    : layout_(constant.layout()), constant_(constant.matrix()) {}

AffineExpr AffineExpr::chained(const LinearMap& step) const {
  AffineExpr out;
  out.layout_ = step.output_layout();
  out.constant_ = step.apply(constant_);
  for (const auto& t : terms_) out.terms_.push_back(LinearTerm{t.var, t.map.then(step)});
  return out;
}

AffineExpr AffineExpr::partial_trace(const Labels& traced) const {
  return chained(LinearMap(layout_).partial_traced(traced));
}
AffineExpr AffineExpr::tensor_left(const HermitianOperator& c) const {
  return chained(LinearMap(layout_).tensored_left(c));
}
AffineExpr AffineExpr::tensor_right(const HermitianOperator& c) const {
  return chained(LinearMap(layout_).tensored_right(c));
}
AffineExpr AffineExpr::permute(const Labels& order) const {
  return chained(LinearMap(layout_).permuted(order));
}
AffineExpr AffineExpr::scaled(double s) const { return chained(LinearMap(layout_).scaled(s)); }
AffineExpr AffineExpr::multiply(const ComplexMatrix& left, const ComplexMatrix& right,
                                SystemLayout output) const {
  return chained(LinearMap(layout_).multiplied(left, right, std::move(output)));
}

AffineExpr AffineExpr::relabeled(SystemLayout layout) const {
  return chained(LinearMap(layout_).relabeled(std::move(layout)));
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& o) {
  require_same_layout(layout_, o.layout_, "AffineExpr +");
  constant_ += o.constant_;
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& o) { return *this += o.scaled(-1.0); }

AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
AffineExpr operator+(AffineExpr a, const HermitianOperator& b) { return a += AffineExpr(b); }
AffineExpr operator-(AffineExpr a, const HermitianOperator& b) { return a -= AffineExpr(b); }
AffineExpr operator*(double s, const AffineExpr& a) { return a.scaled(s); }

// ------------------------------------------------------------- ConicProblem

Variable ConicProblem::add_hermitian(std::string name, SystemLayout layout) {
  for (const auto& v : variables_) {
    if (v.name == name) throw std::invalid_argument("duplicate variable name '" + name + "'");
  }
  Variable v{static_cast<int>(variables_.size()), std::move(name), VariableKind::hermitian,
             std::move(layout)};
  variables_.push_back(v);
  return v;
}

Variable ConicProblem::add_diagonal(std::string name, SystemLayout layout) {
  Variable v = add_hermitian(std::move(name), std::move(layout));
  variables_.back().kind = VariableKind::diagonal;
  v.kind = VariableKind::diagonal;
  return v;
}

Variable ConicProblem::add_scalar(std::string name) {
  for (const auto& v : variables_) {
    if (v.name == name) throw std::invalid_argument("duplicate variable name '" + name + "'");
  }
  Variable v{static_cast<int>(variables_.size()), std::move(name), VariableKind::scalar, {}};
  variables_.push_back(v);
  return v;
}

const Variable& ConicProblem::variable(const std::string& name) const {
  for (const auto& v : variables_) {
    if (v.name == name) return v;
  }
  throw std::invalid_argument("unknown variable '" + name + "'");
}

void ConicProblem::add_objective(const Variable& v, double coeff) {
  if (v.kind != VariableKind::scalar) {
    throw std::invalid_argument("objective: '" + v.name + "' is a matrix; pass a weight operator");
  }
  if (v.id < 0 || v.id >= static_cast<int>(variables_.size())) {
    throw std::invalid_argument("objective: undeclared variable '" + v.name + "'");
  }
  objective_.push_back(ObjectiveTerm{v.id, ComplexMatrix::Constant(1, 1, coeff)});
}

void ConicProblem::add_objective(const Variable& v, const HermitianOperator& weight) {
  if (v.id < 0 || v.id >= static_cast<int>(variables_.size())) {
    throw std::invalid_argument("objective: undeclared variable '" + v.name + "'");
  }
  if (weight.dim() != v.side()) {
    throw std::invalid_argument("objective: weight side does not match variable '" + v.name + "'");
  }
  objective_.push_back(ObjectiveTerm{v.id, weight.matrix()});
}

void ConicProblem::check_expr(const AffineExpr& e) const {
  for (const auto& t : e.terms()) {
    if (t.var < 0 || t.var >= static_cast<int>(variables_.size())) {
      throw std::invalid_argument("constraint references an undeclared variable");
    }
    require_same_layout(t.map.input_layout(), variables_[t.var].layout, "constraint term");
  }
}

int ConicProblem::add_psd(std::string name, AffineExpr expr) {
  check_expr(expr);
  psd_.push_back(Constraint{std::move(name), std::move(expr)});
  return static_cast<int>(psd_.size()) - 1;
}

int ConicProblem::add_equality(std::string name, AffineExpr expr) {
  check_expr(expr);
  eq_.push_back(Constraint{std::move(name), std::move(expr)});
  return static_cast<int>(eq_.size()) - 1;
}

void constrain_marginal_equals(ConicProblem& problem, const Variable& var, const Labels& traced,
                               const AffineExpr& rhs, std::string name) {
  AffineExpr lhs = AffineExpr(var).partial_trace(traced);
  require_same_layout(lhs.layout(), rhs.layout(), "constrain_marginal_equals");
  if (name.empty()) name = var.name + " marginal";
  problem.add_equality(std::move(name), lhs - rhs);
}

// ------------------------------------------------------ parameterization

namespace {

// (row, col, imag) of parameter p for side n.
struct ParamCoord {
  int row;
  int col;
  bool imag;
};

ParamCoord param_coord(int n, int p) {
  if (p < n) return {p, p, false};
  int k = (p - n) / 2;
  const bool imag = (p - n) % 2 == 1;
  for (int r = 0; r < n; ++r) {
    const int len = n - 1 - r;
    if (k < len) return {r, r + 1 + k, imag};
    k -= len;
  }
  throw std::out_of_range("parameter index out of range");
}

std::vector<ParamCoord> param_coords(int n) {
  std::vector<ParamCoord> out;
  out.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) out.push_back({i, i, false});
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c) {
      out.push_back({r, c, false});
      out.push_back({r, c, true});
    }
  }
  return out;
}

}  // namespace

ComplexMatrix hermitian_basis_element(int n, int param) {
  const ParamCoord pc = param_coord(n, param);
  ComplexMatrix b = ComplexMatrix::Zero(n, n);
  if (pc.row == pc.col) {
    b(pc.row, pc.row) = 1.0;
  } else if (!pc.imag) {
    b(pc.row, pc.col) = b(pc.col, pc.row) = 1.0;
  } else {
    b(pc.row, pc.col) = Complex(0.0, 1.0);
    b(pc.col, pc.row) = Complex(0.0, -1.0);
  }
  return b;
}

Eigen::VectorXd hermitian_to_params(const ComplexMatrix& x) {
  const int n = static_cast<int>(x.rows());
  const auto coords = param_coords(n);
  Eigen::VectorXd p(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const Complex v = x(coords[i].row, coords[i].col);
    p(i) = coords[i].imag ? v.imag() : v.real();
  }
  return p;
}

ComplexMatrix params_to_hermitian(const Eigen::VectorXd& p, int n) {
  if (p.size() != static_cast<Eigen::Index>(n) * n) {
    throw std::invalid_argument("params_to_hermitian: wrong parameter count");
  }
  const auto coords = param_coords(n);
  ComplexMatrix x = ComplexMatrix::Zero(n, n);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const auto& pc = coords[i];
    if (pc.row == pc.col) {
      x(pc.row, pc.row) = p(i);
    } else if (!pc.imag) {
      x(pc.row, pc.col) += p(i);
      x(pc.col, pc.row) += p(i);
    } else {
      x(pc.row, pc.col) += Complex(0.0, p(i));
      x(pc.col, pc.row) -= Complex(0.0, p(i));
    }
  }
  return x;
}

std::vector<int> variable_offsets(const ConicProblem& problem) {
  std::vector<int> off;
  int acc = 0;
  for (const auto& v : problem.variables()) {
    off.push_back(acc);
    acc += v.num_params();
  }
  off.push_back(acc);
  return off;
}

// --------------------------------------------------------------- compile

namespace {

constexpr double kDropTol = 1e-14;

// Images of every parameter of every variable under an expression's linear
// part: result[x] = dense Hermitian matrix on the expression layout.
std::map<int, ComplexMatrix> expression_columns(const ConicProblem& problem,
                                                const std::vector<int>& offsets,
                                                const AffineExpr& expr,
                                                const std::string& cname) {
  std::map<int, std::vector<const LinearTerm*>> by_var;
  for (const auto& t : expr.terms()) by_var[t.var].push_back(&t);

  std::map<int, ComplexMatrix> cols;
  const int k = expr.layout().total_dim();
  for (const auto& [var, terms] : by_var) {
    const Variable& v = problem.variables()[var];
    const int n = v.side();
    for (int p = 0; p < v.num_params(); ++p) {
      const ComplexMatrix basis = hermitian_basis_element(n, p);
      ComplexMatrix img = ComplexMatrix::Zero(k, k);
      for (const LinearTerm* t : terms) {
        img += t->map.is_identity() ? basis : t->map.apply(basis);
      }
      if (kernels::max_abs(img) <= kDropTol) continue;
      if (kernels::hermiticity_error(img) > 1e-10 * std::max(1.0, kernels::max_abs(img))) {
        throw std::logic_error("constraint '" + cname + "' maps variable '" + v.name +
                               "' to a non-Hermitian matrix");
      }
      cols.emplace(offsets[var] + p, 0.5 * (img + img.adjoint()));
    }
  }
  return cols;
}

}  // namespace

HermitianConicForm compile(const ConicProblem& problem) {
  HermitianConicForm f;
  const auto offsets = variable_offsets(problem);
  f.num_x = offsets.back();
  if (f.num_x == 0) throw std::invalid_argument("compile: problem has no variables");

  f.c = Eigen::VectorXd::Zero(f.num_x);
  f.c0 = problem.objective_constant();
  for (const auto& term : problem.objective()) {
    const Variable& v = problem.variables()[term.var];
    const int n = v.side();
    const auto coords = param_coords(n);
    for (int p = 0; p < v.num_params(); ++p) {
      const auto& pc = coords[p];
      double w;
      if (pc.row == pc.col) {
        w = term.weight(pc.row, pc.row).real();
      } else {
        const Complex wrc = 0.5 * (term.weight(pc.row, pc.col) + std::conj(term.weight(pc.col, pc.row)));
        w = pc.imag ? 2.0 * wrc.imag() : 2.0 * wrc.real();
      }
      f.c(offsets[term.var] + p) += w;
    }
  }

  for (const auto& con : problem.psd_constraints()) {
    HermitianConicForm::Block blk;
    blk.name = con.name;
    blk.side = con.expr.layout().total_dim();
    blk.h = con.expr.constant();
    for (const auto& [x, img] : expression_columns(problem, offsets, con.expr, con.name)) {
      HermitianConicForm::Column col{x, {}};
      for (int c = 0; c < blk.side; ++c) {
        for (int r = 0; r <= c; ++r) {
          if (std::abs(img(r, c)) > kDropTol) col.entries.push_back({r, c, -img(r, c)});
        }
      }
      blk.columns.push_back(std::move(col));
    }
    f.blocks.push_back(std::move(blk));
  }

  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> b;
  for (std::size_t ci = 0; ci < problem.eq_constraints().size(); ++ci) {
    const auto& con = problem.eq_constraints()[ci];
    const int k = con.expr.layout().total_dim();
    const auto coords = param_coords(k);
    const int row0 = static_cast<int>(b.size());
    const Eigen::VectorXd rhs = -hermitian_to_params(con.expr.constant());
    for (std::size_t p = 0; p < coords.size(); ++p) {
      b.push_back(rhs(p));
      f.eq_rows.push_back({static_cast<int>(ci), coords[p].row, coords[p].col, coords[p].imag});
    }
    for (const auto& [x, img] : expression_columns(problem, offsets, con.expr, con.name)) {
      const Eigen::VectorXd vals = hermitian_to_params(img);
      for (Eigen::Index p = 0; p < vals.size(); ++p) {
        if (std::abs(vals(p)) > kDropTol) trip.emplace_back(row0 + static_cast<int>(p), x, vals(p));
      }
    }
  }
  f.A.resize(static_cast<Eigen::Index>(b.size()), f.num_x);
  f.A.setFromTriplets(trip.begin(), trip.end());
  f.A.makeCompressed();
  f.b = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  return f;
}

Eigen::MatrixXd real_embedding(const ComplexMatrix& h) {
  const Eigen::Index k = h.rows();
  Eigen::MatrixXd out(2 * k, 2 * k);
  out.topLeftCorner(k, k) = h.real();
  out.topRightCorner(k, k) = -h.imag();
  out.bottomLeftCorner(k, k) = h.imag();
  out.bottomRightCorner(k, k) = h.real();
  return out;
}

RealConicForm embed_real(const HermitianConicForm& form) {
  RealConicForm r;
  r.num_x = form.num_x;
  r.c = form.c;
  r.c0 = form.c0;
  r.A = form.A;
  r.b = form.b;
  r.eq_rows = form.eq_rows;
  for (const auto& blk : form.blocks) {
    RealConicForm::Block rb;
    rb.name = blk.name;
    rb.side = 2 * blk.side;
    rb.h = real_embedding(blk.h);
    const int k = blk.side;
    for (const auto& col : blk.columns) {
      RealConicForm::Column rc{col.x, {}};
      for (const auto& e : col.entries) {
        const double re = e.value.real();
        const double im = e.value.imag();
        if (std::abs(re) > kDropTol) {
          rc.entries.push_back({e.row, e.col, re});
          rc.entries.push_back({e.row + k, e.col + k, re});
        }
        if (e.row != e.col && std::abs(im) > kDropTol) {
          rc.entries.push_back({e.row, e.col + k, -im});
          rc.entries.push_back({e.col, e.row + k, im});
        }
      }
      if (!rc.entries.empty()) rb.columns.push_back(std::move(rc));
    }
    r.blocks.push_back(std::move(rb));
  }
  return r;
}

RealConicForm hermitian_to_real_embedding(const ConicProblem& problem) {
  return embed_real(compile(problem));
}

void dump_problem(const ConicProblem& problem, std::ostream& os) {
  using nlohmann::json;
  const HermitianConicForm f = compile(problem);
  auto dense = [](const ComplexMatrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
      rows.push_back(row);
    }
    return rows;
  };

  json j;
  const auto offsets = variable_offsets(problem);
  j["variables"] = json::array();
  for (const auto& v : problem.variables()) {
    json layout = json::array();
    for (const auto& s : v.layout.systems()) layout.push_back({s.label, s.dim});
    j["variables"].push_back({{"name", v.name},
                              {"kind", v.kind == VariableKind::scalar     ? "scalar"
                                       : v.kind == VariableKind::diagonal ? "diagonal"
                                                                          : "hermitian"},
                              {"side", v.side()},
                              {"layout", layout},
                              {"offset", offsets[v.id]}});
  }
  j["num_params"] = f.num_x;
  j["objective"] = {{"c", std::vector<double>(f.c.data(), f.c.data() + f.c.size())},
                    {"constant", f.c0}};
  j["psd_blocks"] = json::array();
  for (const auto& blk : f.blocks) {
    json cols = json::array();
    for (const auto& col : blk.columns) {
      ComplexMatrix g = ComplexMatrix::Zero(blk.side, blk.side);
      for (const auto& e : col.entries) {
        g(e.row, e.col) = e.value;
        g(e.col, e.row) = std::conj(e.value);
      }
      cols.push_back({{"param", col.x}, {"G", dense(g)}});
    }
    j["psd_blocks"].push_back(
        {{"name", blk.name}, {"side", blk.side}, {"h", dense(blk.h)}, {"columns", cols}});
  }
  json eq = json::array();
  for (Eigen::Index k = 0; k < f.A.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(f.A, k); it; ++it) {
      eq.push_back({it.row(), it.col(), it.value()});
    }
  }
  j["equalities"] = {{"rows", f.A.rows()},
                     {"A_triplets", eq},
                     {"b", std::vector<double>(f.b.data(), f.b.data() + f.b.size())}};
  json names = json::array();
  for (const auto& c : problem.eq_constraints()) names.push_back(c.name);
  j["equality_names"] = names;
  os << j.dump(1) << '\n';
}

}  // namespace nscost
