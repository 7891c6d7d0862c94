#include <gtest/gtest.h>

#include "nscost/tensor.hpp"
#include "test_util.hpp"

using namespace nscost;
using namespace nscost::testing;

namespace {

SystemLayout qubits(const Labels& labels) {
  std::vector<Subsystem> s;
  for (const auto& l : labels) s.push_back({l, 2});
  return SystemLayout(s);
}

HermitianOperator ket_projector(const SystemLayout& l, int index) {
  ComplexVector v = ComplexVector::Zero(l.total_dim());
  v(index) = 1.0;
  return HermitianOperator::projector(l, v);
}

}  // namespace

TEST(SystemLayout, RejectsDuplicateLabelsAndBadDims) {
  EXPECT_THROW(SystemLayout({{"A", 2}, {"A", 3}}), std::invalid_argument);
  EXPECT_THROW(SystemLayout({{"A", 0}}), std::invalid_argument);
  const SystemLayout l{{"A", 2}, {"B", 3}, {"C", 1}};
  EXPECT_EQ(l.total_dim(), 6);
  EXPECT_EQ(l.dim_of({"B", "C"}), 3);
  EXPECT_EQ(SystemLayout{}.total_dim(), 1);
}

TEST(Tensor, IdentityTimesIdentity) {
  const auto a = HermitianOperator::identity({{"A", 2}});
  const auto b = HermitianOperator::identity({{"B", 2}});
  const auto ab = tensor(a, b);
  EXPECT_EQ(ab.layout(), SystemLayout({{"A", 2}, {"B", 2}}));
  EXPECT_LT(kernels::max_abs(ab.matrix() - ComplexMatrix::Identity(4, 4)), 1e-15);
}

TEST(Tensor, MaximallyMixedProduct) {
  const auto ab = tensor(HermitianOperator::maximally_mixed({{"A", 2}}),
                         HermitianOperator::maximally_mixed({{"B", 2}}));
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(ab.matrix()(i, i).real(), 0.25, 1e-15);
  EXPECT_NEAR(ab.trace(), 1.0, 1e-15);
}

TEST(Tensor, ProductOfKetsIsProjectorOnto01) {
  const auto ab = tensor(ket_projector({{"A", 2}}, 0), ket_projector({{"B", 2}}, 1));
  ComplexMatrix expected = ComplexMatrix::Zero(4, 4);
  expected(1, 1) = 1.0;  // |01> is index 0*2 + 1
  EXPECT_LT(kernels::max_abs(ab.matrix() - expected), 1e-15);
}

TEST(Tensor, LabelCollisionThrows) {
  const auto a = HermitianOperator::identity({{"A", 2}});
  EXPECT_THROW(tensor(a, a), std::invalid_argument);
}

TEST(Tensor, TraceIsMultiplicativeAndAssociative) {
  std::mt19937_64 rng(7);
  const HermitianOperator a({{"A", 2}}, random_hermitian(rng, 2));
  const HermitianOperator b({{"B", 3}}, random_hermitian(rng, 3));
  const HermitianOperator c({{"C", 2}}, random_hermitian(rng, 2));
  EXPECT_NEAR(tensor(a, b).trace(), a.trace() * b.trace(), 1e-12);
  const auto left = tensor(tensor(a, b), c);
  const auto right = tensor(a, tensor(b, c));
  EXPECT_EQ(left.layout(), right.layout());
  EXPECT_LT(kernels::max_abs(left.matrix() - right.matrix()), 1e-14);
}

TEST(PartialTrace, IdentityOnTwoQubits) {
  const auto r = partial_trace(HermitianOperator::identity(qubits({"A", "B"})), {"B"});
  EXPECT_EQ(r.layout(), SystemLayout({{"A", 2}}));
  EXPECT_LT(kernels::max_abs(r.matrix() - 2.0 * ComplexMatrix::Identity(2, 2)), 1e-15);
}

TEST(PartialTrace, MaxEntangledMarginalIsIdentity) {
  const auto gamma = MaxEntangledVector("A", "At", 2).projector();
  const auto r = partial_trace(gamma, {"At"});
  EXPECT_LT(kernels::max_abs(r.matrix() - ComplexMatrix::Identity(2, 2)), 1e-15);
}

TEST(PartialTrace, OverAllLabelsGivesTrace) {
  std::mt19937_64 rng(3);
  const HermitianOperator op(qubits({"A", "B", "C"}), random_hermitian(rng, 8));
  const auto r = partial_trace(op, {"A", "B", "C"});
  ASSERT_EQ(r.dim(), 1);
  EXPECT_NEAR(r.matrix()(0, 0).real(), op.trace(), 1e-12);
}

TEST(PartialTrace, UnknownLabelThrows) {
  const auto op = HermitianOperator::identity(qubits({"A"}));
  EXPECT_THROW(partial_trace(op, {"Z"}), std::invalid_argument);
}

TEST(PartialTrace, MatchesBruteForceOnMixedDims) {
  std::mt19937_64 rng(11);
  const SystemLayout l{{"A", 2}, {"B", 3}, {"C", 2}, {"D", 3}};
  const ComplexMatrix m = random_hermitian(rng, l.total_dim());
  const HermitianOperator op(l, m);
  const std::vector<std::pair<Labels, std::vector<bool>>> cases{
      {{"B"}, {false, true, false, false}},
      {{"A", "C"}, {true, false, true, false}},
      {{"D", "A"}, {true, false, false, true}},
      {{}, {false, false, false, false}},
  };
  for (const auto& [labels, mask] : cases) {
    const auto r = partial_trace(op, labels);
    EXPECT_LT(kernels::max_abs(r.matrix() - naive_partial_trace(m, {2, 3, 2, 3}, mask)), 1e-12);
  }
}

TEST(PartialTrace, OfTensorProductIsScaledFactor) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const HermitianOperator a({{"A", 3}, {"A2", 2}}, random_hermitian(rng, 6));
    const HermitianOperator b({{"B", 2}}, random_hermitian(rng, 2));
    const auto r = partial_trace(tensor(a, b), {"B"});
    EXPECT_LT(kernels::max_abs(r.matrix() - b.trace() * a.matrix()), 1e-12);
  }
}

TEST(Permute, SwapsFactors) {
  std::mt19937_64 rng(13);
  const HermitianOperator x({{"A", 2}}, random_hermitian(rng, 2));
  const HermitianOperator y({{"B", 3}}, random_hermitian(rng, 3));
  const auto p = permute_systems(tensor(x, y), {"B", "A"});
  const auto yx = tensor(y, x);
  EXPECT_EQ(p.layout(), yx.layout());
  EXPECT_LT(kernels::max_abs(p.matrix() - yx.matrix()), 1e-14);
}

TEST(Permute, InverseRestoresAndMatchesBruteForce) {
  std::mt19937_64 rng(17);
  const SystemLayout l{{"A", 2}, {"B", 3}, {"C", 2}};
  const ComplexMatrix m = random_hermitian(rng, 12);
  const HermitianOperator op(l, m);
  const auto p = permute_systems(op, {"C", "A", "B"});
  EXPECT_LT(kernels::max_abs(p.matrix() - naive_permute(m, {2, 3, 2}, {2, 0, 1})), 1e-14);
  const auto back = permute_systems(p, {"A", "B", "C"});
  EXPECT_LT(kernels::max_abs(back.matrix() - m), 1e-14);
  EXPECT_THROW(permute_systems(op, {"A", "B"}), std::invalid_argument);
  EXPECT_THROW(permute_systems(op, {"A", "B", "B"}), std::invalid_argument);
}

TEST(Permute, PreservesSpectrumTraceAndHermiticity) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    const HermitianOperator op(qubits({"A", "B", "C"}), random_hermitian(rng, 8));
    const auto p = permute_systems(op, {"B", "C", "A"});
    // Oracle: Eigen's dense solver on the raw matrices.
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> e0(op.matrix()), e1(p.matrix());
    EXPECT_LT((e0.eigenvalues() - e1.eigenvalues()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(op.trace(), p.trace(), 1e-10);
    EXPECT_LT(kernels::hermiticity_error(p.matrix()), 1e-10);
    EXPECT_NEAR(min_eigenvalue(op), min_eigenvalue(p), 1e-10);
  }
}

TEST(MinEigenvalue, Examples) {
  EXPECT_NEAR(min_eigenvalue(HermitianOperator::identity({{"A", 4}})), 1.0, 1e-14);
  Eigen::VectorXd d(2);
  d << 3.0, -2.0;
  EXPECT_NEAR(min_eigenvalue(HermitianOperator::diagonal({{"A", 2}}, d)), -2.0, 1e-14);
  EXPECT_NEAR(min_eigenvalue(MaxEntangledVector("A", "B", 2).projector()), 0.0, 1e-14);
  ComplexMatrix non_herm = ComplexMatrix::Zero(2, 2);
  non_herm(0, 1) = 1.0;
  EXPECT_THROW(min_eigenvalue(non_herm), std::invalid_argument);
}

TEST(HermitianOperator, ValidatesAndSymmetrizes) {
  ComplexMatrix m = ComplexMatrix::Identity(2, 2);
  m(0, 1) = Complex(0.0, 1e-12);
  const HermitianOperator h({{"A", 2}}, m);  // drift below 1e-10 accepted
  EXPECT_EQ(h.matrix()(0, 1), std::conj(h.matrix()(1, 0)));
  m(0, 1) = 1e-6;
  EXPECT_THROW(HermitianOperator({{"A", 2}}, m), std::invalid_argument);
  EXPECT_THROW(HermitianOperator({{"A", 3}}, ComplexMatrix::Identity(2, 2)), std::invalid_argument);
}

TEST(MaxEntangledVector, NormEqualsDimension) {
  for (int d = 1; d <= 4; ++d) {
    EXPECT_NEAR(MaxEntangledVector("A", "B", d).vector().squaredNorm(), d, 1e-14);
  }
}
