#pragma once

// Dense complex operators on labeled tensor-product spaces.
//
// Basis convention: the index of a composite basis state is the mixed-radix
// number of its subsystem digits taken in layout order (first system is the
// most significant digit).

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace nscost {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Labels = std::vector<std::string>;

inline constexpr double kHermitianTol = 1e-10;

struct Subsystem {
  std::string label;
  int dim = 1;

  bool operator==(const Subsystem&) const = default;
};

class SystemLayout {
 public:
  SystemLayout() = default;
  SystemLayout(std::initializer_list<Subsystem> systems);
  explicit SystemLayout(std::vector<Subsystem> systems);

  const std::vector<Subsystem>& systems() const { return systems_; }
  std::size_t size() const { return systems_.size(); }
  bool empty() const { return systems_.empty(); }
  int total_dim() const { return total_dim_; }

  bool contains(std::string_view label) const;
  // Position of `label`; throws std::invalid_argument if absent.
  std::size_t index_of(std::string_view label) const;
  int dim(std::string_view label) const;
  Labels labels() const;
  // Product of the dimensions of `labels` (all must be present).
  int dim_of(const Labels& labels) const;

  // Concatenation; throws on a label collision.
  SystemLayout concat(const SystemLayout& other) const;
  // Remaining systems, original order.
  SystemLayout without(const Labels& labels) const;
  // Same systems in `order`; throws unless `order` is a permutation.
  SystemLayout reordered(const Labels& order) const;

  bool operator==(const SystemLayout& other) const { return systems_ == other.systems_; }

 private:
  std::vector<Subsystem> systems_;
  int total_dim_ = 1;
};

std::string to_string(const SystemLayout& layout);

// Raw kernels. Matrices are indexed by the layout's composite basis.
namespace kernels {

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix partial_trace(const ComplexMatrix& m, const SystemLayout& layout,
                            const Labels& traced);
ComplexMatrix permute_systems(const ComplexMatrix& m, const SystemLayout& layout,
                              const Labels& order);
// Composite indices of the sub-basis spanned by `labels` (in the given order)
// with all other digits zero. Summing an offset from each of two
// complementary label sets enumerates the full basis.
std::vector<Eigen::Index> subsystem_offsets(const SystemLayout& layout, const Labels& labels);

double hermiticity_error(const ComplexMatrix& m);
double max_abs(const ComplexMatrix& m);

}  // namespace kernels

class HermitianOperator {
 public:
  HermitianOperator() : HermitianOperator(SystemLayout{}, ComplexMatrix::Zero(1, 1)) {}
  // Validates Hermiticity within `tol` (scaled by the largest entry when it
  // exceeds 1) and stores (m + m^dagger)/2.
  HermitianOperator(SystemLayout layout, const ComplexMatrix& m, double tol = kHermitianTol);

  static HermitianOperator identity(SystemLayout layout);
  static HermitianOperator maximally_mixed(SystemLayout layout);
  static HermitianOperator zero(SystemLayout layout);
  static HermitianOperator scalar(double value);
  // |v><v|
  static HermitianOperator projector(SystemLayout layout, const ComplexVector& v);
  static HermitianOperator diagonal(SystemLayout layout, const Eigen::VectorXd& d);

  const SystemLayout& layout() const { return layout_; }
  const ComplexMatrix& matrix() const { return m_; }
  int dim() const { return layout_.total_dim(); }
  double trace() const { return m_.trace().real(); }

  // Same matrix, new labels; total dimension must agree.
  HermitianOperator relabeled(SystemLayout layout) const;

  HermitianOperator& operator+=(const HermitianOperator& o);
  HermitianOperator& operator-=(const HermitianOperator& o);
  HermitianOperator& operator*=(double s);

 private:
  SystemLayout layout_;
  ComplexMatrix m_;
};

HermitianOperator operator+(HermitianOperator a, const HermitianOperator& b);
HermitianOperator operator-(HermitianOperator a, const HermitianOperator& b);
HermitianOperator operator*(double s, HermitianOperator a);

HermitianOperator tensor(const HermitianOperator& a, const HermitianOperator& b);
HermitianOperator partial_trace(const HermitianOperator& op, const Labels& traced);
HermitianOperator permute_systems(const HermitianOperator& op, const Labels& order);

double min_eigenvalue(const HermitianOperator& op);
// Throws std::invalid_argument when `m` is not Hermitian within kHermitianTol.
double min_eigenvalue(const ComplexMatrix& m);
Eigen::VectorXd eigenvalues(const HermitianOperator& op);
bool is_psd(const HermitianOperator& op, double tol);
// Entrywise max-norm distance; layouts must match.
double max_abs_diff(const HermitianOperator& a, const HermitianOperator& b);

// Unnormalized sum_i |i>|i> on two systems of equal dimension.
class MaxEntangledVector {
 public:
  MaxEntangledVector(std::string first, std::string second, int dim);

  const SystemLayout& layout() const { return layout_; }
  const ComplexVector& vector() const { return v_; }
  HermitianOperator projector() const;

 private:
  SystemLayout layout_;
  ComplexVector v_;
};

}  // namespace nscost
