#include <gtest/gtest.h>

#include <sstream>

#include "json.hpp"
#include "nscost/builders.hpp"
#include "nscost/conic.hpp"
#include "test_util.hpp"

using namespace nscost;
using namespace nscost::testing;

namespace {

double conj_entry(double v) { return v; }
Complex conj_entry(const Complex& v) { return std::conj(v); }

// h - sum_j x_j G_j for one compiled block, mirrored from its upper triangle.
template <class Block>
auto evaluate_block(const Block& blk, const Eigen::VectorXd& x) {
  auto s = blk.h;
  for (const auto& col : blk.columns) {
    for (const auto& e : col.entries) {
      s(e.row, e.col) -= x(col.x) * e.value;
      if (e.row != e.col) {
        s(e.col, e.row) -= x(col.x) * conj_entry(e.value);
      }
    }
  }
  return s;
}

}  // namespace

TEST(HermitianParams, RoundTripAndBasisExpansion) {
  std::mt19937_64 rng(1);
  for (int n : {1, 2, 3, 5}) {
    const ComplexMatrix x = random_hermitian(rng, n);
    const Eigen::VectorXd p = hermitian_to_params(x);
    ASSERT_EQ(p.size(), n * n);
    EXPECT_LT(kernels::max_abs(params_to_hermitian(p, n) - x), 1e-14);
    ComplexMatrix sum = ComplexMatrix::Zero(n, n);
    for (int k = 0; k < n * n; ++k) sum += p(k) * hermitian_basis_element(n, k);
    EXPECT_LT(kernels::max_abs(sum - x), 1e-14);
  }
  // Diagonal first, then (Re, Im) of the upper entries row-major.
  EXPECT_EQ(hermitian_basis_element(3, 2)(2, 2), Complex(1.0));
  EXPECT_EQ(hermitian_basis_element(3, 3)(0, 1), Complex(1.0));
  EXPECT_EQ(hermitian_basis_element(3, 4)(0, 1), Complex(0.0, 1.0));
  EXPECT_EQ(hermitian_basis_element(3, 7)(1, 2), Complex(1.0));
  EXPECT_THROW(params_to_hermitian(Eigen::VectorXd::Zero(3), 2), std::invalid_argument);
}

TEST(LinearMap, AdjointIdentityOnRandomChains) {
  std::mt19937_64 rng(2);
  const SystemLayout in{{"A", 2}, {"B", 3}};
  const HermitianOperator c({{"C", 2}}, random_hermitian(rng, 2));
  const ComplexMatrix l = random_matrix(rng, 4, 12), r = random_matrix(rng, 12, 4);
  const LinearMap map = LinearMap(in)
                            .tensored_right(c)
                            .permuted({"C", "A", "B"})
                            .scaled(-1.5)
                            .partial_traced({"B"})
                            .tensored_left(HermitianOperator::identity({{"D", 3}}))
                            .multiplied(l, r, SystemLayout{{"E", 4}});
  EXPECT_EQ(map.output_layout(), SystemLayout({{"E", 4}}));
  for (int trial = 0; trial < 5; ++trial) {
    const ComplexMatrix x = random_matrix(rng, 6, 6), y = random_matrix(rng, 4, 4);
    // <y, L x> = <L* y, x> with <a, b> = tr(a^dagger b), complex-valued in general.
    const Complex lhs = (y.adjoint() * map.apply(x)).trace();
    const Complex rhs = (map.apply_adjoint(y).adjoint() * x).trace();
    EXPECT_LT(std::abs(lhs - rhs), 1e-9 * (1.0 + std::abs(lhs)));
  }
}

TEST(LinearMap, MatchesBruteForcePrimitives) {
  std::mt19937_64 rng(3);
  const SystemLayout in{{"A", 2}, {"B", 3}, {"C", 2}};
  const ComplexMatrix x = random_hermitian(rng, 12);
  const auto traced = LinearMap(in).partial_traced({"B"}).apply(x);
  EXPECT_LT(kernels::max_abs(traced - naive_partial_trace(x, {2, 3, 2}, {false, true, false})), 1e-12);
  const auto perm = LinearMap(in).permuted({"B", "C", "A"}).apply(x);
  EXPECT_LT(kernels::max_abs(perm - naive_permute(x, {2, 3, 2}, {1, 2, 0})), 1e-12);
  EXPECT_THROW(LinearMap(in).relabeled(SystemLayout{{"Z", 5}}), std::invalid_argument);
}

TEST(ConicProblem, RejectsBadDeclarations) {
  ConicProblem p;
  const auto x = p.add_hermitian("X", {{"A", 2}});
  const auto t = p.add_scalar("t");
  EXPECT_THROW(p.add_hermitian("X", {{"B", 2}}), std::invalid_argument);
  EXPECT_THROW(p.add_scalar("t"), std::invalid_argument);
  EXPECT_THROW(p.add_objective(x, 1.0), std::invalid_argument);
  EXPECT_THROW(p.add_objective(x, HermitianOperator::identity({{"A", 3}})), std::invalid_argument);
  Variable ghost;
  ghost.name = "ghost";
  EXPECT_THROW(AffineExpr{ghost}, std::invalid_argument);
  EXPECT_THROW(p.variable("nope"), std::invalid_argument);
  EXPECT_THROW(AffineExpr(x) + AffineExpr(t), std::invalid_argument);
  EXPECT_THROW(constrain_marginal_equals(p, x, {}, AffineExpr(t)), std::invalid_argument);
}

TEST(ConicProblem, CompileEmptyThrows) {
  EXPECT_THROW(compile(ConicProblem{}), std::invalid_argument);
}

TEST(ConstrainMarginal, LambdaIdentityGivesOneBlockOfSideFour) {
  // Y_{A0B0} = lambda I with Y on (A0, A1, B0, B1): one equality of side 4.
  ConicProblem p;
  const auto y = p.add_hermitian("Y", ChannelDims{2, 2, 2, 2}.layout());
  const auto lam = p.add_scalar("lambda");
  const auto rhs = AffineExpr(lam).tensor_right(HermitianOperator::identity({{"A0", 2}, {"B0", 2}}));
  constrain_marginal_equals(p, y, {"A1", "B1"}, rhs, "trace");
  ASSERT_EQ(p.eq_constraints().size(), 1u);
  EXPECT_EQ(p.eq_constraints()[0].expr.layout().total_dim(), 4);
  const auto form = compile(p);
  EXPECT_EQ(form.A.rows(), 16);
  EXPECT_EQ(form.num_x, 256 + 1);

  // Y = 3 * (I (x) pi) with lambda = 3 satisfies it; lambda = 2 does not.
  const auto offsets = variable_offsets(p);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(form.num_x);
  const auto yval = permute_systems(tensor(HermitianOperator::identity({{"A0", 2}, {"B0", 2}}),
                                           HermitianOperator::maximally_mixed({{"A1", 2}, {"B1", 2}})),
                                    {"A0", "A1", "B0", "B1"});
  x.segment(offsets[0], 256) = hermitian_to_params(3.0 * yval.matrix());
  x(offsets[1]) = 3.0;
  EXPECT_LT((form.A * x - form.b).cwiseAbs().maxCoeff(), 1e-12);
  x(offsets[1]) = 2.0;
  EXPECT_NEAR((form.A * x - form.b).cwiseAbs().maxCoeff(), 1.0, 1e-12);
}

TEST(ConstrainMarginal, SelfReferentialNonSignallingEquality) {
  // X_{A0B0B1} = pi_{A0} (x) X_{B0B1}, both sides derived from X.
  ConicProblem p;
  const auto xv = p.add_hermitian("X", {{"A0", 2}, {"B0", 2}, {"B1", 2}});
  const auto rhs = AffineExpr(xv).partial_trace({"A0"}).tensor_left(
      HermitianOperator::maximally_mixed({{"A0", 2}}));
  constrain_marginal_equals(p, xv, {}, rhs);
  const auto form = compile(p);
  EXPECT_EQ(form.num_x, 64);
  EXPECT_EQ(form.A.rows(), 64);
  EXPECT_LT(form.b.cwiseAbs().maxCoeff(), 1e-15);

  std::mt19937_64 rng(4);
  const ComplexMatrix z = random_hermitian(rng, 4);
  const ComplexMatrix product = kernels::kron(ComplexMatrix::Identity(2, 2), z);
  EXPECT_LT((form.A * hermitian_to_params(product)).cwiseAbs().maxCoeff(), 1e-12);
  const ComplexMatrix generic = random_hermitian(rng, 8);
  EXPECT_GT((form.A * hermitian_to_params(generic)).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(ConstrainMarginal, EmptyTracedIsPlainEquality) {
  ConicProblem p;
  const auto xv = p.add_hermitian("X", {{"A", 2}});
  const HermitianOperator target({{"A", 2}}, ComplexMatrix::Identity(2, 2) * 0.5);
  constrain_marginal_equals(p, xv, {}, AffineExpr(target));
  const auto form = compile(p);
  // A is the identity on the 4 parameters and b the parameters of the target.
  EXPECT_LT((Eigen::MatrixXd(form.A) - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((form.b - hermitian_to_params(target.matrix())).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Compile, PsdBlocksEvaluateToTheExpression) {
  // Block: C (x) tr_B X - t I on A (x) C. Oracle: naive partial trace and kron.
  std::mt19937_64 rng(5);
  ConicProblem p;
  const auto xv = p.add_hermitian("X", {{"A", 2}, {"B", 3}});
  const auto t = p.add_scalar("t");
  const HermitianOperator c({{"C", 2}}, random_hermitian(rng, 2));
  const HermitianOperator k({{"A", 2}, {"C", 2}}, random_hermitian(rng, 4));
  p.add_psd("blk", AffineExpr(xv).partial_trace({"B"}).tensor_right(c) -
                       AffineExpr(t).tensor_right(HermitianOperator::identity({{"A", 2}, {"C", 2}})) + k);
  p.add_objective(t, 2.0);
  p.add_objective(xv, HermitianOperator({{"A", 2}, {"B", 3}}, random_hermitian(rng, 6)));
  const auto form = compile(p);
  ASSERT_EQ(form.blocks.size(), 1u);
  EXPECT_EQ(form.blocks[0].side, 4);

  const ComplexMatrix xval = random_hermitian(rng, 6);
  const double tval = 0.7;
  Eigen::VectorXd x(form.num_x);
  x << hermitian_to_params(xval), tval;
  const ComplexMatrix expected =
      kernels::kron(naive_partial_trace(xval, {2, 3}, {false, true}), c.matrix()) -
      tval * ComplexMatrix::Identity(4, 4) + k.matrix();
  // Compiled form is h - G x with h - G x = expression.
  EXPECT_LT(kernels::max_abs(evaluate_block(form.blocks[0], x) - expected), 1e-12);

  // Objective: c'x = 2 t + Re tr(W X).
  const ComplexMatrix w = p.objective()[1].weight;
  EXPECT_NEAR(form.c.dot(x), 2.0 * tval + (w * xval).trace().real(), 1e-12);

  // The real embedding evaluates to the embedding of the same matrix.
  const auto real = embed_real(form);
  EXPECT_LT((evaluate_block(real.blocks[0], x) - real_embedding(expected)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Embedding, Examples) {
  const Eigen::MatrixXd e = real_embedding(ComplexMatrix::Identity(2, 2));
  EXPECT_LT((e - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-15);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e);
  EXPECT_NEAR(es.eigenvalues().minCoeff(), 1.0, 1e-15);

  ComplexMatrix sy(2, 2);
  sy << 0.0, Complex(0, -1), Complex(0, 1), 0.0;
  const Eigen::MatrixXd ey = real_embedding(sy);
  EXPECT_LT((ey - ey.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esy(ey);
  Eigen::Vector4d expected(-1, -1, 1, 1);
  EXPECT_LT((esy.eigenvalues() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Embedding, DuplicatesTheSpectrum) {
  std::mt19937_64 rng(6);
  for (int n : {2, 3, 6}) {
    const ComplexMatrix h = random_hermitian(rng, n);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> ec(h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(real_embedding(h));
    for (int i = 0; i < n; ++i) {
      EXPECT_NEAR(er.eigenvalues()(2 * i), ec.eigenvalues()(i), 1e-10);
      EXPECT_NEAR(er.eigenvalues()(2 * i + 1), ec.eigenvalues()(i), 1e-10);
    }
  }
}

TEST(DiagonalVariable, UsesLeadingParameters) {
  ConicProblem p;
  const auto d = p.add_diagonal("D", {{"A", 3}});
  const auto t = p.add_scalar("t");
  EXPECT_EQ(d.kind, VariableKind::diagonal);
  EXPECT_EQ(d.num_params(), 3);
  p.add_psd("D psd", AffineExpr(d));
  p.add_objective(d, HermitianOperator::identity({{"A", 3}}));
  p.add_objective(t, 1.0);
  const auto offsets = variable_offsets(p);
  EXPECT_EQ(offsets, (std::vector<int>{0, 3, 4}));
  const auto form = compile(p);
  EXPECT_EQ(form.num_x, 4);
  EXPECT_EQ(form.c, (Eigen::VectorXd(4) << 1, 1, 1, 1).finished());
  Eigen::VectorXd x(4);
  x << 1, 2, 3, 0;
  const ComplexMatrix s = evaluate_block(form.blocks[0], x);
  EXPECT_LT(kernels::max_abs(s - ComplexMatrix(Eigen::Vector3cd(1, 2, 3).asDiagonal())), 1e-15);
}

TEST(DumpProblem, IsValidJsonWithVariablesAndBlocks) {
  const auto problem = build_hmin(classical_noiseless_choi(2), HminDirection::a_given_b);
  std::ostringstream os;
  dump_problem(problem, os);
  const auto j = nlohmann::json::parse(os.str());
  ASSERT_TRUE(j.contains("variables"));
  ASSERT_TRUE(j.contains("psd_blocks"));
  bool saw_diagonal = false;
  for (const auto& v : j["variables"]) saw_diagonal |= v["kind"] == "diagonal";
  EXPECT_TRUE(saw_diagonal);
  EXPECT_EQ(j["psd_blocks"].size(), problem.psd_constraints().size());
}

TEST(Builders, ShapesAndClassicalDetection) {
  EXPECT_TRUE(is_classical(classical_noiseless_choi(3)));
  EXPECT_FALSE(is_classical(noisy_swap_alpha(1.0, 0.0)));
  const auto sw = noisy_swap_alpha(1.0, 0.2);
  const auto dmax = build_dmax_bidirectional(sw);
  EXPECT_EQ(dmax.variable("Y").side(), 16);
  EXPECT_EQ(dmax.variable("Y").kind, VariableKind::hermitian);
  EXPECT_EQ(build_min_sim_error(2, sw).variables().size(), 6u);  // mu, Y, Q, V, W, X
  EXPECT_THROW(build_p2p_exact_cost(sw), std::invalid_argument);
  EXPECT_THROW(build_min_sim_error(0, sw), std::invalid_argument);
}
