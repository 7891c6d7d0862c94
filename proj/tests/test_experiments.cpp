#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "nscost/experiments.hpp"

using namespace nscost;

namespace {

CostOptions fast_options() {
  CostOptions o;
  o.solver = SolverConfig{};
  o.cross_check = false;
  return o;
}

SweepOptions sweep_options(int workers) {
  SweepOptions o;
  o.cost = fast_options();
  o.workers = workers;
  return o;
}

// CSV text with the trailing solve_ms column removed from every line.
std::string without_timing(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  write_sweep_csv(rows, os);
  std::istringstream in(os.str());
  std::string out, line;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
  return out;
}

}  // namespace

TEST(Sweep, NamesRoundTrip) {
  for (auto f : {SweepFamily::swap_alpha, SweepFamily::partial_swap}) EXPECT_EQ(parse_family(to_string(f)), f);
  for (auto q : {SweepQuantity::one_shot_cost, SweepQuantity::lower_bound, SweepQuantity::dmax})
    EXPECT_EQ(parse_quantity(to_string(q)), q);
  EXPECT_THROW(parse_family("swap"), std::invalid_argument);
  EXPECT_THROW(parse_quantity("hmin"), std::invalid_argument);
}

TEST(Sweep, SpecValidation) {
  EXPECT_NO_THROW(SweepSpec{}.validate());
  auto bad = [](auto mutate) {
    SweepSpec s;
    mutate(s);
    EXPECT_THROW(s.validate(), std::invalid_argument);
  };
  bad([](SweepSpec& s) { s.count = 1; });
  bad([](SweepSpec& s) { s.stop = NAN; });
  bad([](SweepSpec& s) { s.ps = {}; });
  bad([](SweepSpec& s) { s.ps = {1.2}; });
  bad([](SweepSpec& s) { s.ps = {-0.1}; });
  bad([](SweepSpec& s) { s.quantities = {}; });
  bad([](SweepSpec& s) {
    s.family = SweepFamily::partial_swap;
    s.stop = 1.5;
  });
  SweepSpec alpha;
  alpha.stop = 2.0;  // SWAP^alpha accepts any real exponent
  EXPECT_NO_THROW(alpha.validate());
}

TEST(Sweep, GridEndpointsAreExact) {
  SweepSpec s;
  const auto g = s.grid();
  ASSERT_EQ(g.size(), 21u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_NEAR(g[10], 0.5, 1e-15);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
}

TEST(Sweep, RowOrderAndWorkerIndependence) {
  SweepSpec s;
  s.start = 0.5;
  s.stop = 1.0;
  s.count = 2;
  s.ps = {0.4, 0.2};
  s.quantities = {SweepQuantity::lower_bound, SweepQuantity::dmax};
  const auto one = run_sweep(s, sweep_options(1));
  const auto two = run_sweep(s, sweep_options(2));
  ASSERT_EQ(one.size(), 8u);
  // p in the listed order, then parameter, then quantity.
  EXPECT_EQ(one[0].p, 0.4);
  EXPECT_EQ(one[0].param, 0.5);
  EXPECT_EQ(one[0].quantity, SweepQuantity::lower_bound);
  EXPECT_EQ(one[1].quantity, SweepQuantity::dmax);
  EXPECT_EQ(one[2].param, 1.0);
  EXPECT_EQ(one[4].p, 0.2);
  EXPECT_EQ(without_timing(one), without_timing(two));

  std::ostringstream os;
  write_sweep_csv(one, os);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), kSweepCsvHeader);
  for (const auto& r : one) {
    EXPECT_EQ(r.status, "optimal");
    EXPECT_TRUE(std::isfinite(r.value_bits));
    // Lower bound <= dmax at every grid point.
    if (r.quantity == SweepQuantity::lower_bound) {
      EXPECT_GE(r.value_bits, -1e-9);
    }
  }
  EXPECT_LE(one[0].value_bits, one[1].value_bits + 1e-6);
}

TEST(Sweep, SwapEndpointAndFullyDepolarized) {
  SweepSpec s;
  s.start = 0.0;
  s.stop = 1.0;
  s.count = 2;
  s.ps = {0.0};
  const auto rows = run_sweep(s, sweep_options(1));
  ASSERT_EQ(rows.size(), 4u);
  // alpha = 0 is the identity: no communication needed.
  EXPECT_NEAR(rows[0].value_bits, 0.0, 1e-9);
  EXPECT_NEAR(rows[1].value_bits, 0.0, 1e-6);
  // alpha = 1, p = 0 is SWAP: both one-shot and asymptotic cost are 2 bits.
  EXPECT_EQ(rows[2].value_bits, 2.0);
  EXPECT_NEAR(rows[3].value_bits, 2.0, 1e-5);

  SweepSpec ps;
  ps.family = SweepFamily::partial_swap;
  ps.start = 0.5;
  ps.stop = 1.0;
  ps.count = 2;
  ps.ps = {1.0};
  ps.quantities = {SweepQuantity::one_shot_cost};
  for (const auto& r : run_sweep(ps, sweep_options(1))) EXPECT_EQ(r.value_bits, 0.0);
}

TEST(Sweep, FailedRowsAreRecordedAndSweepContinues) {
  SweepSpec s;
  s.count = 2;
  s.ps = {0.2};
  s.quantities = {SweepQuantity::dmax};
  SweepOptions o = sweep_options(1);
  o.cost.solver.max_iters = 2;
  const auto rows = run_sweep(s, o);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    EXPECT_TRUE(std::isnan(r.value_bits));
    EXPECT_NE(r.status, "optimal");
  }
}

TEST(Sweep, UnwritablePathFailsBeforeSolving) {
  SweepSpec s;
  EXPECT_THROW(run_sweep_to_file(s, "/nonexistent-dir/out.csv", sweep_options(1)), std::runtime_error);
  s.count = 0;
  EXPECT_THROW(run_sweep_to_file(s, "/nonexistent-dir/out.csv", sweep_options(1)), std::invalid_argument);
}

TEST(Verify, CorpusIsDeterministicAndValid) {
  const auto a = make_corpus(5, 8);
  const auto b = make_corpus(5, 8);
  const auto c = make_corpus(6, 8);
  ASSERT_EQ(a.size(), 8u);
  std::vector<HermitianOperator> chois;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].choi().matrix(), b[i].choi().matrix());
    chois.push_back(a[i].choi());
  }
  EXPECT_NE(a[1].choi().matrix(), c[1].choi().matrix());
  // Every fourth entry is a random NS mixture.
  EXPECT_TRUE(is_ns_a_to_b(a[0]) && is_ns_b_to_a(a[0]));
  EXPECT_TRUE(is_ns_a_to_b(a[4]) && is_ns_b_to_a(a[4]));
  EXPECT_TRUE(check_corpus_cptp(chois).passed());
}

TEST(Verify, IndividualChecksOnSmallInstances) {
  const auto o = fast_options();
  const auto corpus = make_corpus(3, 2);
  const CheckResult comp = check_ns_composition(3, 20);
  EXPECT_EQ(comp.cases, 20);
  EXPECT_TRUE(comp.passed()) << format_check(comp);
  for (const CheckResult& c :
       {check_dmax_duality(corpus, o), check_hmin_duality(corpus, o), check_sandwich(corpus, o),
        check_p2p_reduction(3, 1, o), check_classical_calibration({2}, o)}) {
    EXPECT_GT(c.cases, 0) << c.name;
    EXPECT_TRUE(c.passed()) << format_check(c);
  }
}

TEST(Verify, VacuousAndPerturbed) {
  VerifyOptions v;
  v.cases = 0;
  v.cost = fast_options();
  int reported = 0;
  v.on_check = [&](const CheckResult&) { ++reported; };
  const auto empty = run_verify(v);
  EXPECT_TRUE(empty.passed());
  EXPECT_EQ(reported, static_cast<int>(empty.checks.size()));
  for (const auto& c : empty.checks) EXPECT_EQ(c.cases, 0) << c.name;

  v.cases = 2;
  v.perturb = true;
  const auto bad = run_verify(v);
  ASSERT_EQ(bad.checks.size(), 1u);
  EXPECT_FALSE(bad.passed());
  EXPECT_EQ(bad.checks[0].failures, 2);
  EXPECT_EQ(format_check(bad.checks[0]).rfind("FAIL corpus_cptp", 0), 0u);
}

TEST(Verify, FormatCheck) {
  CheckResult c;
  c.name = "x";
  c.cases = 3;
  c.tolerance = 1e-6;
  EXPECT_EQ(format_check(c).rfind("PASS x  cases=3 failures=0", 0), 0u);
  c.failures = 1;
  c.messages = {"pair 0: violation 1"};
  const std::string s = format_check(c);
  EXPECT_EQ(s.rfind("FAIL x", 0), 0u);
  EXPECT_NE(s.find("\n    pair 0: violation 1"), std::string::npos);
}
