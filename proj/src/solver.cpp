#include "nscost/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>

#include <Eigen/SparseQR>

namespace nscost {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::near_optimal: return "near_optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::iteration_limit: return "iteration_limit";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

bool usable(SolveStatus s) { return s == SolveStatus::optimal || s == SolveStatus::near_optimal; }

SolverConfig SolverConfig::from_env() {
  SolverConfig cfg;
  if (const char* v = std::getenv("NSCOST_TOL_GAP")) {
    char* end = nullptr;
    const double t = std::strtod(v, &end);
    if (end != v && t > 0.0) cfg.tol_gap = t;
  }
  if (const char* v = std::getenv("NSCOST_MAX_ITERS")) {
    char* end = nullptr;
    const long it = std::strtol(v, &end, 10);
    if (end != v && it > 0) cfg.max_iters = static_cast<int>(it);
  }
  return cfg;
}

void SolverConfig::validate() const {
  if (!(tol_gap > 0.0) || !(tol_feas > 0.0)) {
    throw std::invalid_argument("solver tolerances must be positive");
  }
  if (!(step_fraction > 0.0 && step_fraction < 1.0)) {
    throw std::invalid_argument("step_fraction must lie in (0, 1)");
  }
  if (max_iters < 1) throw std::invalid_argument("max_iters must be positive");
}

const ComplexMatrix& SolveReport::value(const std::string& var) const {
  auto it = primal_solution.find(var);
  if (it == primal_solution.end()) {
    throw std::invalid_argument("no primal value for variable '" + var + "'");
  }
  return it->second;
}

namespace {

using Eigen::Index;
using SpMat = Eigen::SparseMatrix<double>;

inline double re(double v) { return v; }
inline double re(const Complex& v) { return v.real(); }
inline double conj_(double v) { return v; }
inline Complex conj_(const Complex& v) { return std::conj(v); }

template <class Scalar>
using Mat = typename ConicForm<Scalar>::Matrix;
template <class Scalar>
using Entries = std::vector<typename ConicForm<Scalar>::Entry>;

// Re tr(G Z) for Hermitian G given by its upper entries.
template <class Scalar>
double inner(const Entries<Scalar>& g, const Mat<Scalar>& z) {
  double acc = 0.0;
  for (const auto& e : g) {
    if (e.row == e.col) {
      acc += re(e.value) * re(z(e.row, e.row));
    } else {
      acc += 2.0 * re(e.value * z(e.col, e.row));
    }
  }
  return acc;
}

template <class Scalar>
void add_scaled(const Entries<Scalar>& g, double a, Mat<Scalar>& m) {
  for (const auto& e : g) {
    m(e.row, e.col) += a * e.value;
    if (e.row != e.col) m(e.col, e.row) += a * conj_(e.value);
  }
}

template <class Scalar>
double inner(const Mat<Scalar>& a, const Mat<Scalar>& b) {
  return re((a.adjoint() * b).trace());
}

template <class Scalar>
Mat<Scalar> hermitian_part(const Mat<Scalar>& m) {
  return 0.5 * (m + m.adjoint());
}

double max_abs_entry(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

template <class Scalar>
double max_abs_entry(const Mat<Scalar>& m) {
  return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
}

// Indices of a maximal set of linearly independent columns, in increasing order.
std::vector<int> independent_columns(const SpMat& m) {
  std::vector<int> keep;
  if (m.cols() == 0) return keep;
  if (m.rows() == 0) return keep;
  double maxnorm = 0.0;
  for (Index j = 0; j < m.outerSize(); ++j) maxnorm = std::max(maxnorm, m.col(j).norm());
  if (maxnorm == 0.0) return keep;
  Eigen::SparseQR<SpMat, Eigen::COLAMDOrdering<int>> qr;
  qr.setPivotThreshold(1e-10 * maxnorm);
  qr.compute(m);
  if (qr.info() != Eigen::Success) throw std::runtime_error("rank detection: sparse QR failed");
  const Index rank = qr.rank();
  const auto& perm = qr.colsPermutation().indices();
  for (Index i = 0; i < rank; ++i) keep.push_back(perm(i));
  std::sort(keep.begin(), keep.end());
  return keep;
}

template <class Scalar>
struct Reduction {
  ConicForm<Scalar> form;
  std::vector<int> x_keep;
  std::vector<int> row_keep;
};

// Removes parameters that are linearly dependent in [A; G] (they cannot
// change the slacks or the equality residuals) and redundant equality rows,
// so that the Newton systems below are nonsingular.
template <class Scalar>
Reduction<Scalar> reduce(const ConicForm<Scalar>& f) {
  constexpr bool kComplex = !std::is_same_v<Scalar, double>;
  std::vector<Eigen::Triplet<double>> trip;
  for (Index k = 0; k < f.A.outerSize(); ++k) {
    for (SpMat::InnerIterator it(f.A, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  }
  Index row = f.A.rows();
  for (const auto& blk : f.blocks) {
    const Index n = blk.side;
    for (const auto& col : blk.columns) {
      for (const auto& e : col.entries) {
        const Index base = row + 2 * (static_cast<Index>(e.row) * n + e.col);
        trip.emplace_back(base, col.x, re(e.value));
        if constexpr (kComplex) {
          if (e.value.imag() != 0.0) trip.emplace_back(base + 1, col.x, e.value.imag());
        }
      }
    }
    row += 2 * n * n;
  }
  SpMat stacked(row, f.num_x);
  stacked.setFromTriplets(trip.begin(), trip.end());
  stacked.makeCompressed();

  Reduction<Scalar> r;
  r.x_keep = independent_columns(stacked);
  std::vector<int> new_index(f.num_x, -1);
  for (std::size_t i = 0; i < r.x_keep.size(); ++i) new_index[r.x_keep[i]] = static_cast<int>(i);
  const int n = static_cast<int>(r.x_keep.size());

  ConicForm<Scalar>& g = r.form;
  g.num_x = n;
  g.c0 = f.c0;
  g.c.resize(n);
  for (int i = 0; i < n; ++i) g.c(i) = f.c(r.x_keep[i]);
  for (const auto& blk : f.blocks) {
    typename ConicForm<Scalar>::Block nb;
    nb.name = blk.name;
    nb.side = blk.side;
    nb.h = blk.h;
    for (const auto& col : blk.columns) {
      if (new_index[col.x] >= 0) nb.columns.push_back({new_index[col.x], col.entries});
    }
    g.blocks.push_back(std::move(nb));
  }

  // Rows of A restricted to kept columns; keep an independent subset.
  std::vector<Eigen::Triplet<double>> at;
  for (Index k = 0; k < f.A.outerSize(); ++k) {
    for (SpMat::InnerIterator it(f.A, k); it; ++it) {
      if (new_index[it.col()] >= 0) at.emplace_back(new_index[it.col()], it.row(), it.value());
    }
  }
  SpMat a_t(n, f.A.rows());
  a_t.setFromTriplets(at.begin(), at.end());
  a_t.makeCompressed();
  r.row_keep = independent_columns(a_t);
  std::vector<Eigen::Triplet<double>> ar;
  for (std::size_t i = 0; i < r.row_keep.size(); ++i) {
    for (SpMat::InnerIterator it(a_t, r.row_keep[i]); it; ++it) {
      ar.emplace_back(static_cast<Index>(i), it.row(), it.value());
    }
  }
  g.A.resize(static_cast<Index>(r.row_keep.size()), n);
  g.A.setFromTriplets(ar.begin(), ar.end());
  g.A.makeCompressed();
  g.b.resize(static_cast<Index>(r.row_keep.size()));
  for (std::size_t i = 0; i < r.row_keep.size(); ++i) g.b(i) = f.b(r.row_keep[i]);
  return r;
}

constexpr double kLoose = 1e3;  // near_optimal: tolerances met within this factor

template <class Scalar>
class Ipm {
 public:
  using Matrix = Mat<Scalar>;
  using Form = ConicForm<Scalar>;

  Ipm(const Form& f, const SolverConfig& cfg) : f_(f), cfg_(cfg) {
    n_ = f.num_x;
    m_ = static_cast<int>(f.A.rows());
    At_ = f.A.transpose();
    nu_ = 0;
    for (const auto& blk : f.blocks) nu_ += blk.side;
  }

  ConicSolution<Scalar> run();

 private:
  struct Scaling {
    Matrix r, rinv, p;
    Eigen::VectorXd lambda;
  };
  struct Direction {
    Eigen::VectorXd dx, dy;
    std::vector<Matrix> ds, dz;    // unscaled
    std::vector<Matrix> sds, sdz;  // scaled
  };

  Matrix g_apply(std::size_t k, const Eigen::VectorXd& x) const {
    const auto& blk = f_.blocks[k];
    Matrix out = Matrix::Zero(blk.side, blk.side);
    for (const auto& col : blk.columns) {
      if (x(col.x) != 0.0) add_scaled<Scalar>(col.entries, x(col.x), out);
    }
    return out;
  }

  void gt_add(std::size_t k, const Matrix& z, Eigen::VectorXd& out) const {
    for (const auto& col : f_.blocks[k].columns) out(col.x) += inner<Scalar>(col.entries, z);
  }

  Eigen::VectorXd gt(const std::vector<Matrix>& z) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    for (std::size_t k = 0; k < z.size(); ++k) gt_add(k, z[k], out);
    return out;
  }

  bool compute_scaling(const std::vector<Matrix>& s, const std::vector<Matrix>& z);
  bool factor(const std::vector<Matrix>& p_list);
  void kkt_solve(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2, Eigen::VectorXd& dx,
                 Eigen::VectorXd& dy) const;
  void kkt_solve_raw(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2, Eigen::VectorXd& dx,
                     Eigen::VectorXd& dy) const;
  // sum_k G_k' (P_k (G_k dx) P_k), the operator that the assembled H_ rounds.
  Eigen::VectorXd h_apply(const Eigen::VectorXd& dx) const;
  Matrix sandwich(std::size_t k, const Matrix& x) const;
  Direction newton(const Eigen::VectorXd& bx, const Eigen::VectorXd& by,
                   const std::vector<Matrix>& bz, const std::vector<Matrix>& bs) const;
  double max_step(const std::vector<Matrix>& sds, const std::vector<Matrix>& sdz) const;

  const Form& f_;
  const SolverConfig& cfg_;
  int n_ = 0, m_ = 0, nu_ = 0;
  SpMat At_;

  std::vector<Scaling> sc_;
  std::vector<Matrix> p_;  // scaling blocks behind h_
  Eigen::MatrixXd h_;
  Eigen::LLT<Eigen::MatrixXd> k_llt_, s_llt_;
  Eigen::MatrixXd y_;  // L^{-1} A^T
};

template <class Scalar>
bool Ipm<Scalar>::compute_scaling(const std::vector<Matrix>& s, const std::vector<Matrix>& z) {
  sc_.resize(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    Eigen::LLT<Matrix> ls(s[k]), lz(z[k]);
    if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) {
      if (cfg_.verbose) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(s[k], Eigen::EigenvaluesOnly), ez(z[k], Eigen::EigenvaluesOnly);
        std::fprintf(stderr, "block %zu side %ld: min eig s %.3e z %.3e\n", k, (long)s[k].rows(),
                     es.eigenvalues().minCoeff(), ez.eigenvalues().minCoeff());
      }
      return false;
    }
    const Matrix lsm = ls.matrixL();
    const Matrix lzm = lz.matrixL();
    // JacobiSVD: BDCSVD in Eigen 3.4.0 returned inaccurate factors here.
    Eigen::JacobiSVD<Matrix> svd(lzm.adjoint() * lsm, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd sigma = svd.singularValues();
    if (sigma.minCoeff() <= 0.0 || !std::isfinite(sigma.maxCoeff())) return false;
    const Eigen::VectorXd isq = sigma.cwiseSqrt().cwiseInverse();
    Scaling& w = sc_[k];
    w.lambda = sigma;
    w.r = lsm * svd.matrixV() * isq.asDiagonal();
    // R^{-1} = Sigma^{1/2} V^dagger L_s^{-1}
    const Matrix vt = svd.matrixV().adjoint();
    const Matrix vl = ls.matrixL().template solve<Eigen::OnTheRight>(vt);
    w.rinv = sigma.cwiseSqrt().asDiagonal() * vl;
    w.p = hermitian_part<Scalar>(w.rinv.adjoint() * w.rinv);
  }
  return true;
}

template <class Scalar>
bool Ipm<Scalar>::factor(const std::vector<Matrix>& p_list) {
  p_ = p_list;
  h_ = Eigen::MatrixXd::Zero(n_, n_);
  for (std::size_t k = 0; k < f_.blocks.size(); ++k) {
    const auto& blk = f_.blocks[k];
    const Matrix& p = p_list[k];
    const std::size_t nc = blk.columns.size();
    for (std::size_t j = 0; j < nc; ++j) {
      // T = P G_j P
      Matrix t = Matrix::Zero(blk.side, blk.side);
      for (const auto& e : blk.columns[j].entries) {
        t.noalias() += e.value * p.col(e.row) * p.row(e.col);
        if (e.row != e.col) t.noalias() += conj_(e.value) * p.col(e.col) * p.row(e.row);
      }
      const int xj = blk.columns[j].x;
      for (std::size_t i = 0; i <= j; ++i) {
        const int xi = blk.columns[i].x;
        const double v = inner<Scalar>(blk.columns[i].entries, t);
        h_(xi, xj) += v;
        if (xi != xj) h_(xj, xi) += v;
      }
    }
  }
  Eigen::MatrixXd kmat = h_;
  if (m_ > 0) kmat += Eigen::MatrixXd(At_ * f_.A);
  const double scale = std::max(1.0, kmat.diagonal().cwiseAbs().maxCoeff());
  double delta = 1e-14 * scale;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::MatrixXd kreg = kmat;
    kreg.diagonal().array() += delta;
    k_llt_.compute(kreg);
    if (k_llt_.info() == Eigen::Success) break;
    delta *= 1e3;
  }
  if (k_llt_.info() != Eigen::Success) return false;
  if (m_ > 0) {
    y_ = k_llt_.matrixL().solve(Eigen::MatrixXd(At_));
    Eigen::MatrixXd s = y_.transpose() * y_;
    const double ss = std::max(1.0, s.diagonal().maxCoeff());
    double sd = 1e-14 * ss;
    for (int attempt = 0; attempt < 4; ++attempt) {
      Eigen::MatrixXd sreg = s;
      sreg.diagonal().array() += sd;
      s_llt_.compute(sreg);
      if (s_llt_.info() == Eigen::Success) break;
      sd *= 1e3;
    }
    if (s_llt_.info() != Eigen::Success) return false;
  }
  return true;
}

// Solves [H A'; A 0] [dx; dy] = [r1; r2] through K = H + A'A.
template <class Scalar>
void Ipm<Scalar>::kkt_solve_raw(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2,
                                Eigen::VectorXd& dx, Eigen::VectorXd& dy) const {
  if (m_ == 0) {
    dx = k_llt_.solve(r1);
    dy.resize(0);
    return;
  }
  const Eigen::VectorXd rr = r1 + At_ * r2;
  const Eigen::VectorXd w = k_llt_.matrixL().solve(rr);  // L^{-1} rr
  // A K^{-1} rr = Y' L^{-1} rr
  dy = s_llt_.solve(y_.transpose() * w - r2);
  dx = k_llt_.matrixU().solve(w - y_ * dy);
}

template <class Scalar>
Eigen::VectorXd Ipm<Scalar>::h_apply(const Eigen::VectorXd& dx) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
  for (std::size_t k = 0; k < f_.blocks.size(); ++k) {
    gt_add(k, hermitian_part<Scalar>(p_[k] * g_apply(k, dx) * p_[k]), out);
  }
  return out;
}

// Refinement residuals use the operator form, since dz is recovered through
// it: errors in the assembled H would otherwise show up as dual infeasibility.
template <class Scalar>
void Ipm<Scalar>::kkt_solve(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2,
                            Eigen::VectorXd& dx, Eigen::VectorXd& dy) const {
  kkt_solve_raw(r1, r2, dx, dy);
  for (int it = 0; it < 2; ++it) {
    Eigen::VectorXd e1 = r1 - h_apply(dx);
    Eigen::VectorXd e2 = r2;
    if (m_ > 0) {
      e1 -= At_ * dy;
      e2 -= f_.A * dx;
    }
    Eigen::VectorXd cx, cy;
    kkt_solve_raw(e1, e2, cx, cy);
    dx += cx;
    if (m_ > 0) dy += cy;
  }
}

template <class Scalar>
typename Ipm<Scalar>::Matrix Ipm<Scalar>::sandwich(std::size_t k, const Matrix& x) const {
  const Matrix& ri = sc_[k].rinv;
  return hermitian_part<Scalar>(ri.adjoint() * hermitian_part<Scalar>(ri * x * ri.adjoint()) * ri);
}

// The dz formula goes through R^{-1} twice rather than through P = R^{-dagger}
// R^{-1}: forming P squares the condition number of the scaling and the
// resulting dual residual error grows like 1/mu^2.
template <class Scalar>
typename Ipm<Scalar>::Direction Ipm<Scalar>::newton(const Eigen::VectorXd& bx,
                                                    const Eigen::VectorXd& by,
                                                    const std::vector<Matrix>& bz,
                                                    const std::vector<Matrix>& bs) const {
  const std::size_t nb = f_.blocks.size();
  std::vector<Matrix> u(nb), dz0(nb), sbz(nb);
  Eigen::VectorXd r1 = bx;
  for (std::size_t k = 0; k < nb; ++k) {
    const Eigen::VectorXd& l = sc_[k].lambda;
    const Matrix& ri = sc_[k].rinv;
    const Index n = l.size();
    u[k].resize(n, n);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < n; ++i) u[k](i, j) = bs[k](i, j) * (2.0 / (l(i) + l(j)));
    }
    sbz[k] = hermitian_part<Scalar>(ri * bz[k] * ri.adjoint());
    // dz = dz0 + R^{-dagger} R^{-1} (G dx) R^{-dagger} R^{-1}
    dz0[k] = hermitian_part<Scalar>(ri.adjoint() * Matrix(u[k] - sbz[k]) * ri);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n_);
    gt_add(k, dz0[k], g);
    r1 -= g;
  }
  Direction d;
  kkt_solve(r1, by, d.dx, d.dy);
  d.dz.resize(nb);
  for (std::size_t k = 0; k < nb; ++k) d.dz[k] = dz0[k] + sandwich(k, g_apply(k, d.dx));

  // One refinement pass on the unreduced linearized dual and primal equations.
  {
    Eigen::VectorXd e1 = bx - gt(d.dz);
    Eigen::VectorXd e2 = by;
    if (m_ > 0) {
      e1 -= At_ * d.dy;
      e2 -= f_.A * d.dx;
    }
    Eigen::VectorXd cx, cy;
    kkt_solve(e1, e2, cx, cy);
    d.dx += cx;
    if (m_ > 0) d.dy += cy;
    for (std::size_t k = 0; k < nb; ++k) d.dz[k] += sandwich(k, g_apply(k, cx));
  }

  d.ds.resize(nb);
  d.sdz.resize(nb);
  d.sds.resize(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    const Matrix gdx = g_apply(k, d.dx);
    // ds from the linearized slack equation directly; going through the
    // scaled variables loses accuracy once R is badly conditioned.
    d.ds[k] = hermitian_part<Scalar>(bz[k] - gdx);
    d.sds[k] = hermitian_part<Scalar>(sc_[k].rinv * d.ds[k] * sc_[k].rinv.adjoint());
    d.sdz[k] = hermitian_part<Scalar>(sc_[k].r.adjoint() * d.dz[k] * sc_[k].r);
  }
  return d;
}

template <class Scalar>
double Ipm<Scalar>::max_step(const std::vector<Matrix>& sds,
                             const std::vector<Matrix>& sdz) const {
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < sc_.size(); ++k) {
    const Eigen::VectorXd isq = sc_[k].lambda.cwiseSqrt().cwiseInverse();
    for (const Matrix* d : {&sds[k], &sdz[k]}) {
      const Matrix m = hermitian_part<Scalar>(isq.asDiagonal() * (*d) * isq.asDiagonal());
      Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
      const double e = es.eigenvalues().minCoeff();
      if (e < 0.0) alpha = std::min(alpha, -1.0 / e);
    }
  }
  return alpha;
}

template <class Scalar>
ConicSolution<Scalar> Ipm<Scalar>::run() {
  ConicSolution<Scalar> sol;
  const std::size_t nb = f_.blocks.size();
  const double c_norm = std::max(1.0, max_abs_entry(f_.c));

  // Starting point from two least-squares problems with identity scaling.
  std::vector<Matrix> ident(nb);
  for (std::size_t k = 0; k < nb; ++k) ident[k] = Matrix::Identity(f_.blocks[k].side, f_.blocks[k].side);
  if (!factor(ident)) {
    sol.status = SolveStatus::numerical_failure;
    return sol;
  }
  Eigen::VectorXd x, y, tmp;
  std::vector<Matrix> s(nb), z(nb);
  {
    Eigen::VectorXd r1 = Eigen::VectorXd::Zero(n_);
    for (std::size_t k = 0; k < nb; ++k) gt_add(k, f_.blocks[k].h, r1);
    kkt_solve(r1, f_.b, x, tmp);
    for (std::size_t k = 0; k < nb; ++k) s[k] = f_.blocks[k].h - g_apply(k, x);
    Eigen::VectorXd dx;
    kkt_solve(-f_.c, Eigen::VectorXd::Zero(m_), dx, y);
    for (std::size_t k = 0; k < nb; ++k) z[k] = g_apply(k, dx);
  }
  auto shift = [&](std::vector<Matrix>& v) {
    double t = -std::numeric_limits<double>::infinity();
    double nrm = 0.0;
    for (const auto& m : v) {
      if (m.size() == 0) continue;
      Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
      t = std::max(t, -es.eigenvalues().minCoeff());
      nrm = std::max(nrm, m.norm());
    }
    if (t >= -1e-8 * std::max(nrm, 1.0)) {
      for (auto& m : v) m.diagonal().array() += (1.0 + t);
    }
  };
  shift(s);
  shift(z);

  int stall = 0;
  ConicSolution<Scalar> best;
  double best_merit = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int iter = 0;; ++iter) {
    // Residuals and objective values.
    Eigen::VectorXd rx = gt(z);
    if (m_ > 0) rx += At_ * y;
    rx += f_.c;
    Eigen::VectorXd ry = m_ > 0 ? Eigen::VectorXd(f_.A * x - f_.b) : Eigen::VectorXd();
    std::vector<Matrix> rz(nb);
    double pres = max_abs_entry(ry);
    double gap = 0.0, hz = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      rz[k] = s[k] - f_.blocks[k].h + g_apply(k, x);
      pres = std::max(pres, max_abs_entry<Scalar>(rz[k]));
      gap += inner<Scalar>(s[k], z[k]);
      hz += inner<Scalar>(f_.blocks[k].h, z[k]);
    }
    const double dres = max_abs_entry(rx);
    const double pobj = f_.c.dot(x) + f_.c0;
    const double dobj = -hz - (m_ > 0 ? f_.b.dot(y) : 0.0) + f_.c0;

    sol.x = x;
    sol.y = y;
    sol.s = s;
    sol.z = z;
    sol.primal_value = pobj;
    sol.dual_value = dobj;
    sol.gap = gap;
    sol.primal_residual = pres;
    sol.dual_residual = dres;
    sol.iterations = iter;

    if (cfg_.verbose) {
      std::fprintf(stderr, "%3d  pobj % .10e  dobj % .10e  gap %.2e  pres %.2e  dres %.2e\n", iter,
                   pobj, dobj, gap, pres, dres);
    }
    if (pres <= cfg_.tol_feas && dres <= cfg_.tol_feas && gap <= cfg_.tol_gap) {
      sol.status = SolveStatus::optimal;
      return sol;
    }
    // Near the optimum the Newton systems lose accuracy and later iterates
    // can be worse than earlier ones; keep the best and stop once progress ends.
    const double merit = std::max({pres / cfg_.tol_feas, dres / cfg_.tol_feas, gap / cfg_.tol_gap});
    if (merit < best_merit) {
      best = sol;
      best_merit = merit;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (best_merit <= kLoose && (merit > 1e2 * best_merit || since_best >= 3)) break;
    // Improving rays (heuristic certificates).
    {
      const double t = -(hz + (m_ > 0 ? f_.b.dot(y) : 0.0));
      if (t > 0.0 && max_abs_entry(Eigen::VectorXd(rx - f_.c)) <= cfg_.tol_feas * t &&
          t > 1e6 * c_norm) {
        sol.status = SolveStatus::infeasible;
        return sol;
      }
      const double cx = -f_.c.dot(x);
      if (cx > 0.0 && cx > 1e6) {
        double r = m_ > 0 ? max_abs_entry(Eigen::VectorXd(f_.A * x)) : 0.0;
        for (std::size_t k = 0; k < nb; ++k) {
          r = std::max(r, max_abs_entry<Scalar>(Matrix(g_apply(k, x) + s[k])));
        }
        if (r <= cfg_.tol_feas * cx) {
          sol.status = SolveStatus::infeasible;
          return sol;
        }
      }
    }
    if (iter >= cfg_.max_iters) {
      sol.status = SolveStatus::iteration_limit;
      break;
    }

    if (!compute_scaling(s, z)) {
      sol.status = SolveStatus::numerical_failure;
      if (cfg_.verbose) std::fprintf(stderr, "stop: scaling failed\n");
      break;
    }
    std::vector<Matrix> p_list(nb);
    for (std::size_t k = 0; k < nb; ++k) p_list[k] = sc_[k].p;
    if (!factor(p_list)) {
      sol.status = SolveStatus::numerical_failure;
      if (cfg_.verbose) std::fprintf(stderr, "stop: KKT factorization failed\n");
      break;
    }
    const double mu = gap / nu_;

    // Predictor.
    std::vector<Matrix> bz(nb), bs(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      bz[k] = -rz[k];
      const Eigen::VectorXd l2 = -sc_[k].lambda.array().square().matrix();
      bs[k] = l2.cast<Scalar>().asDiagonal();
    }
    const Eigen::VectorXd by = m_ > 0 ? Eigen::VectorXd(-ry) : Eigen::VectorXd();
    const Direction aff = newton(-rx, by, bz, bs);
    const double a_aff = std::min(1.0, max_step(aff.sds, aff.sdz));
    const double sigma = std::pow(1.0 - a_aff, 3);

    // Combined step with second-order correction.
    for (std::size_t k = 0; k < nb; ++k) {
      const Matrix corr = 0.5 * (aff.sds[k] * aff.sdz[k] + aff.sdz[k] * aff.sds[k]);
      bs[k] -= corr;
      bs[k].diagonal().array() += sigma * mu;
    }
    const Direction d = newton(-rx, by, bz, bs);
    const double a_max = max_step(d.sds, d.sdz);
    const double alpha = std::min(1.0, cfg_.step_fraction * a_max);
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      sol.status = SolveStatus::numerical_failure;
      if (cfg_.verbose) std::fprintf(stderr, "stop: bad step length\n");
      break;
    }
    stall = alpha < 1e-8 ? stall + 1 : 0;
    if (stall >= 3) {
      sol.status = SolveStatus::numerical_failure;
      if (cfg_.verbose) std::fprintf(stderr, "stop: step length stalled\n");
      break;
    }
    x += alpha * d.dx;
    if (m_ > 0) y += alpha * d.dy;
    for (std::size_t k = 0; k < nb; ++k) {
      s[k] = hermitian_part<Scalar>(s[k] + alpha * d.ds[k]);
      z[k] = hermitian_part<Scalar>(z[k] + alpha * d.dz[k]);
    }
  }

  // Stopped without meeting the tolerances: accept the best point if close.
  if (best_merit <= kLoose) {
    best.status = SolveStatus::near_optimal;
    return best;
  }
  // Otherwise report the best iterate under the failure status.
  if (std::isfinite(best_merit)) {
    best.status = sol.status;
    return best;
  }
  return sol;
}

}  // namespace

template <class Scalar>
ConicSolution<Scalar> solve_conic_form(const ConicForm<Scalar>& form, const SolverConfig& config) {
  config.validate();
  if (form.num_x < 1) throw std::invalid_argument("solve: problem has no variables");
  for (const auto& blk : form.blocks) {
    if (blk.side > 512) throw std::invalid_argument("solve: PSD block side exceeds 512");
  }
  Reduction<Scalar> red = reduce(form);
  ConicSolution<Scalar> rs;
  if (red.form.num_x == 0) {
    // Nothing can move: evaluate the constant problem.
    rs.status = SolveStatus::optimal;
    rs.x = Eigen::VectorXd::Zero(0);
    rs.y = Eigen::VectorXd::Zero(red.form.A.rows());
    for (const auto& blk : red.form.blocks) {
      rs.s.push_back(blk.h);
      rs.z.push_back(Mat<Scalar>::Zero(blk.side, blk.side));
    }
    rs.primal_value = rs.dual_value = red.form.c0;
  } else {
    Ipm<Scalar> ipm(red.form, config);
    rs = ipm.run();
  }

  ConicSolution<Scalar> out = rs;
  out.x = Eigen::VectorXd::Zero(form.num_x);
  for (std::size_t i = 0; i < red.x_keep.size(); ++i) out.x(red.x_keep[i]) = rs.x(i);
  out.y = Eigen::VectorXd::Zero(form.A.rows());
  for (std::size_t i = 0; i < red.row_keep.size() && i < static_cast<std::size_t>(rs.y.size()); ++i) {
    out.y(red.row_keep[i]) = rs.y(i);
  }
  // Residual on every original equality row, including the dropped ones.
  if (form.A.rows() > 0) {
    const double eq_res = max_abs_entry(Eigen::VectorXd(form.A * out.x - form.b));
    out.primal_residual = std::max(out.primal_residual, eq_res);
    if (eq_res > 1e3 * config.tol_feas && usable(out.status)) {
      out.status = SolveStatus::infeasible;  // inconsistent redundant rows
    }
  }
  return out;
}

template ConicSolution<double> solve_conic_form(const ConicForm<double>&, const SolverConfig&);
template ConicSolution<Complex> solve_conic_form(const ConicForm<Complex>&, const SolverConfig&);

// ------------------------------------------------------------- reports

namespace {

std::map<std::string, ComplexMatrix> unpack_primal(const ConicProblem& p, const Eigen::VectorXd& x) {
  std::map<std::string, ComplexMatrix> out;
  const auto off = variable_offsets(p);
  for (const auto& v : p.variables()) {
    Eigen::VectorXd seg = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(v.side()) * v.side());
    seg.head(v.num_params()) = x.segment(off[v.id], v.num_params());
    out[v.name] = params_to_hermitian(seg, v.side());
  }
  return out;
}

std::string unique_key(const std::map<std::string, ComplexMatrix>& m, std::string key) {
  if (!m.count(key)) return key;
  for (int i = 2;; ++i) {
    std::string k = key + "#" + std::to_string(i);
    if (!m.count(k)) return k;
  }
}

// Hermitian multiplier Y with sum_rows y_r a_r(X) = Re tr(Y X) for each
// equality constraint.
void unpack_equality_duals(const ConicProblem& p, const std::vector<EqRowTag>& rows,
                           const Eigen::VectorXd& y, std::map<std::string, ComplexMatrix>& out) {
  std::vector<ComplexMatrix> mult;
  for (const auto& c : p.eq_constraints()) {
    const int k = c.expr.layout().total_dim();
    mult.push_back(ComplexMatrix::Zero(k, k));
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& t = rows[r];
    ComplexMatrix& m = mult[t.constraint];
    if (t.row == t.col) {
      m(t.row, t.row) += y(r);
    } else if (!t.imag) {
      m(t.col, t.row) += 0.5 * y(r);
      m(t.row, t.col) += 0.5 * y(r);
    } else {
      m(t.col, t.row) += Complex(0.0, -0.5 * y(r));
      m(t.row, t.col) += Complex(0.0, 0.5 * y(r));
    }
  }
  for (std::size_t i = 0; i < mult.size(); ++i) {
    out[unique_key(out, p.eq_constraints()[i].name)] = mult[i];
  }
}

template <class Scalar>
SolveReport finish(const ConicProblem& problem, const ConicForm<Scalar>& form,
                   const ConicSolution<Scalar>& sol, std::string backend, double ms) {
  SolveReport rep;
  rep.status = sol.status;
  rep.primal_value = sol.primal_value;
  rep.dual_value = sol.dual_value;
  rep.gap = sol.gap;
  rep.primal_residual = sol.primal_residual;
  rep.dual_residual = sol.dual_residual;
  rep.iterations = sol.iterations;
  rep.solve_ms = ms;
  rep.backend = std::move(backend);
  rep.primal_solution = unpack_primal(problem, sol.x);
  for (std::size_t k = 0; k < problem.psd_constraints().size() && k < sol.z.size(); ++k) {
    ComplexMatrix zc;
    if constexpr (std::is_same_v<Scalar, double>) {
      const Index h = sol.z[k].rows() / 2;
      const Eigen::MatrixXd& z = sol.z[k];
      zc = (z.topLeftCorner(h, h) + z.bottomRightCorner(h, h)).template cast<Complex>() +
           Complex(0.0, 1.0) *
               (z.bottomLeftCorner(h, h) - z.topRightCorner(h, h)).template cast<Complex>();
    } else {
      zc = sol.z[k];
    }
    rep.dual_solution[unique_key(rep.dual_solution, problem.psd_constraints()[k].name)] = zc;
  }
  unpack_equality_duals(problem, form.eq_rows, sol.y, rep.dual_solution);
  return rep;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

SolveReport InteriorPointSolver::solve(const ConicProblem& problem, const SolverConfig& config) const {
  const auto t0 = std::chrono::steady_clock::now();
  const RealConicForm form = hermitian_to_real_embedding(problem);
  const auto sol = solve_conic_form(form, config);
  return finish(problem, form, sol, name(), elapsed_ms(t0));
}

SolveReport ComplexInteriorPointSolver::solve(const ConicProblem& problem,
                                              const SolverConfig& config) const {
  const auto t0 = std::chrono::steady_clock::now();
  const HermitianConicForm form = compile(problem);
  const auto sol = solve_conic_form(form, config);
  return finish(problem, form, sol, name(), elapsed_ms(t0));
}

const ConicSolver& default_solver() {
  static const InteriorPointSolver solver;
  return solver;
}

SolveReport solve(const ConicProblem& problem, const SolverConfig& config) {
  return default_solver().solve(problem, config);
}

FeasibilityCheck check_primal(const ConicProblem& problem,
                              const std::map<std::string, ComplexMatrix>& values) {
  auto eval = [&](const AffineExpr& e) {
    ComplexMatrix acc = e.constant();
    for (const auto& t : e.terms()) acc += t.map.apply(values.at(problem.variables()[t.var].name));
    return acc;
  };
  FeasibilityCheck fc;
  fc.min_psd_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& c : problem.eq_constraints()) {
    fc.max_equality_residual = std::max(fc.max_equality_residual, kernels::max_abs(eval(c.expr)));
  }
  for (const auto& c : problem.psd_constraints()) {
    const ComplexMatrix m = eval(c.expr);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    fc.min_psd_eigenvalue = std::min(fc.min_psd_eigenvalue, es.eigenvalues().minCoeff());
  }
  fc.objective = problem.objective_constant();
  for (const auto& t : problem.objective()) {
    fc.objective += (t.weight * values.at(problem.variables()[t.var].name)).trace().real();
  }
  return fc;
}

}  // namespace nscost
