#include "nscost/tensor.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace nscost {

SystemLayout::SystemLayout(std::initializer_list<Subsystem> systems)
    : SystemLayout(std::vector<Subsystem>(systems)) {}

SystemLayout::SystemLayout(std::vector<Subsystem> systems) : systems_(std::move(systems)) {
  std::set<std::string> seen;
  total_dim_ = 1;
  for (const auto& s : systems_) {
    if (s.dim < 1) {
      throw std::invalid_argument("subsystem '" + s.label + "' has non-positive dimension");
    }
    if (!seen.insert(s.label).second) {
      throw std::invalid_argument("duplicate subsystem label '" + s.label + "'");
    }
    total_dim_ *= s.dim;
  }
}

bool SystemLayout::contains(std::string_view label) const {
  return std::any_of(systems_.begin(), systems_.end(),
                     [&](const Subsystem& s) { return s.label == label; });
}

std::size_t SystemLayout::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < systems_.size(); ++i) {
    if (systems_[i].label == label) return i;
  }
  throw std::invalid_argument("unknown subsystem label '" + std::string(label) + "' in layout " +
                              to_string(*this));
}

int SystemLayout::dim(std::string_view label) const { return systems_[index_of(label)].dim; }

Labels SystemLayout::labels() const {
  Labels out;
  out.reserve(systems_.size());
  for (const auto& s : systems_) out.push_back(s.label);
  return out;
}

int SystemLayout::dim_of(const Labels& labels) const {
  int d = 1;
  for (const auto& l : labels) d *= dim(l);
  return d;
}

SystemLayout SystemLayout::concat(const SystemLayout& other) const {
  std::vector<Subsystem> all = systems_;
  all.insert(all.end(), other.systems_.begin(), other.systems_.end());
  return SystemLayout(std::move(all));
}

SystemLayout SystemLayout::without(const Labels& labels) const {
  for (const auto& l : labels) index_of(l);
  std::vector<Subsystem> kept;
  for (const auto& s : systems_) {
    if (std::find(labels.begin(), labels.end(), s.label) == labels.end()) kept.push_back(s);
  }
  return SystemLayout(std::move(kept));
}

SystemLayout SystemLayout::reordered(const Labels& order) const {
  if (order.size() != systems_.size()) {
    throw std::invalid_argument("reorder: " + std::to_string(order.size()) +
                                " labels given for layout " + to_string(*this));
  }
  std::vector<Subsystem> out;
  for (const auto& l : order) out.push_back(systems_[index_of(l)]);
  return SystemLayout(std::move(out));  // rejects repeated labels
}

std::string to_string(const SystemLayout& layout) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (i) os << ", ";
    os << layout.systems()[i].label << ':' << layout.systems()[i].dim;
  }
  os << ')';
  return os.str();
}

namespace kernels {

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

std::vector<Eigen::Index> subsystem_offsets(const SystemLayout& layout, const Labels& labels) {
  const auto& sys = layout.systems();
  std::vector<Eigen::Index> stride(sys.size());
  Eigen::Index s = 1;
  for (std::size_t i = sys.size(); i-- > 0;) {
    stride[i] = s;
    s *= sys[i].dim;
  }
  std::vector<Eigen::Index> offsets{0};
  for (const auto& l : labels) {
    const std::size_t k = layout.index_of(l);
    std::vector<Eigen::Index> next;
    next.reserve(offsets.size() * sys[k].dim);
    for (Eigen::Index base : offsets) {
      for (int d = 0; d < sys[k].dim; ++d) next.push_back(base + d * stride[k]);
    }
    offsets = std::move(next);
  }
  return offsets;
}

ComplexMatrix partial_trace(const ComplexMatrix& m, const SystemLayout& layout,
                            const Labels& traced) {
  if (m.rows() != layout.total_dim() || m.cols() != layout.total_dim()) {
    throw std::invalid_argument("partial_trace: matrix side does not match layout " +
                                to_string(layout));
  }
  const SystemLayout kept = layout.without(traced);
  const auto ko = subsystem_offsets(layout, kept.labels());
  const auto to = subsystem_offsets(layout, traced);
  const auto n = static_cast<Eigen::Index>(ko.size());
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      Complex acc = 0.0;
      for (Eigen::Index t : to) acc += m(ko[i] + t, ko[j] + t);
      out(i, j) = acc;
    }
  }
  return out;
}

ComplexMatrix permute_systems(const ComplexMatrix& m, const SystemLayout& layout,
                              const Labels& order) {
  layout.reordered(order);  // validates
  const auto idx = subsystem_offsets(layout, order);
  const auto n = static_cast<Eigen::Index>(idx.size());
  ComplexMatrix out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) out(i, j) = m(idx[i], idx[j]);
  }
  return out;
}

double hermiticity_error(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double max_abs(const ComplexMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace kernels

HermitianOperator::HermitianOperator(SystemLayout layout, const ComplexMatrix& m, double tol)
    : layout_(std::move(layout)) {
  if (m.rows() != layout_.total_dim() || m.cols() != layout_.total_dim()) {
    throw std::invalid_argument("operator of side " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()) + " does not match layout " +
                                to_string(layout_));
  }
  const double scale = std::max(1.0, kernels::max_abs(m));
  const double err = kernels::hermiticity_error(m);
  if (err > tol * scale) {
    throw std::invalid_argument("operator is not Hermitian (deviation " + std::to_string(err) +
                                ")");
  }
  m_ = 0.5 * (m + m.adjoint());
}

HermitianOperator HermitianOperator::identity(SystemLayout layout) {
  const int d = layout.total_dim();
  return HermitianOperator(std::move(layout), ComplexMatrix::Identity(d, d));
}

HermitianOperator HermitianOperator::maximally_mixed(SystemLayout layout) {
  const int d = layout.total_dim();
  return HermitianOperator(std::move(layout), ComplexMatrix::Identity(d, d) / double(d));
}

HermitianOperator HermitianOperator::zero(SystemLayout layout) {
  const int d = layout.total_dim();
  return HermitianOperator(std::move(layout), ComplexMatrix::Zero(d, d));
}

HermitianOperator HermitianOperator::scalar(double value) {
  return HermitianOperator(SystemLayout{}, ComplexMatrix::Constant(1, 1, value));
}

HermitianOperator HermitianOperator::projector(SystemLayout layout, const ComplexVector& v) {
  return HermitianOperator(std::move(layout), v * v.adjoint());
}

HermitianOperator HermitianOperator::diagonal(SystemLayout layout, const Eigen::VectorXd& d) {
  return HermitianOperator(std::move(layout), d.cast<Complex>().asDiagonal().toDenseMatrix());
}

HermitianOperator HermitianOperator::relabeled(SystemLayout layout) const {
  if (layout.total_dim() != layout_.total_dim()) {
    throw std::invalid_argument("relabel: layout " + to_string(layout) +
                                " has a different total dimension than " + to_string(layout_));
  }
  return HermitianOperator(std::move(layout), m_);
}

HermitianOperator& HermitianOperator::operator+=(const HermitianOperator& o) {
  if (!(o.layout_ == layout_)) {
    throw std::invalid_argument("layout mismatch: " + to_string(layout_) + " vs " +
                                to_string(o.layout_));
  }
  m_ += o.m_;
  return *this;
}

HermitianOperator& HermitianOperator::operator-=(const HermitianOperator& o) {
  if (!(o.layout_ == layout_)) {
    throw std::invalid_argument("layout mismatch: " + to_string(layout_) + " vs " +
                                to_string(o.layout_));
  }
  m_ -= o.m_;
  return *this;
}

HermitianOperator& HermitianOperator::operator*=(double s) {
  m_ *= s;
  return *this;
}

HermitianOperator operator+(HermitianOperator a, const HermitianOperator& b) { return a += b; }
HermitianOperator operator-(HermitianOperator a, const HermitianOperator& b) { return a -= b; }
HermitianOperator operator*(double s, HermitianOperator a) { return a *= s; }

HermitianOperator tensor(const HermitianOperator& a, const HermitianOperator& b) {
  return HermitianOperator(a.layout().concat(b.layout()), kernels::kron(a.matrix(), b.matrix()));
}

HermitianOperator partial_trace(const HermitianOperator& op, const Labels& traced) {
  return HermitianOperator(op.layout().without(traced),
                           kernels::partial_trace(op.matrix(), op.layout(), traced));
}

HermitianOperator permute_systems(const HermitianOperator& op, const Labels& order) {
  return HermitianOperator(op.layout().reordered(order),
                           kernels::permute_systems(op.matrix(), op.layout(), order));
}

Eigen::VectorXd eigenvalues(const HermitianOperator& op) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(op.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double min_eigenvalue(const HermitianOperator& op) { return eigenvalues(op).minCoeff(); }

double min_eigenvalue(const ComplexMatrix& m) {
  const double scale = std::max(1.0, kernels::max_abs(m));
  if (kernels::hermiticity_error(m) > kHermitianTol * scale) {
    throw std::invalid_argument("min_eigenvalue: matrix is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_psd(const HermitianOperator& op, double tol) { return min_eigenvalue(op) >= -tol; }

double max_abs_diff(const HermitianOperator& a, const HermitianOperator& b) {
  if (!(a.layout() == b.layout())) {
    throw std::invalid_argument("max_abs_diff: layout mismatch " + to_string(a.layout()) +
                                " vs " + to_string(b.layout()));
  }
  return kernels::max_abs(a.matrix() - b.matrix());
}

MaxEntangledVector::MaxEntangledVector(std::string first, std::string second, int dim)
    : layout_{{std::move(first), dim}, {std::move(second), dim}},
      v_(ComplexVector::Zero(dim * dim)) {
  for (int i = 0; i < dim; ++i) v_(i * dim + i) = 1.0;
}

HermitianOperator MaxEntangledVector::projector() const {
  return HermitianOperator::projector(layout_, v_);
}

}  // namespace nscost
