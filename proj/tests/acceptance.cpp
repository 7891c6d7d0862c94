// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "nscost/experiments.hpp"

using namespace nscost;

namespace {

constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass = true;
  std::string detail;
};

void note(Outcome& o, bool ok, const std::string& what) {
  if (!ok) o.pass = false;
  o.detail += "\n    " + std::string(ok ? "ok   " : "FAIL ") + what;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void from_check(Outcome& o, const CheckResult& c) {
  note(o, c.passed(), format_check(c));
}

Outcome swap_exact_cost() {
  Outcome o;
  const CostOptions opt;
  const BipartiteChannel swap = noisy_swap_alpha(1.0, 0.0);
  const CostReport r = one_shot_exact_cost(swap, opt);
  note(o, fmt("%.3f", r.value) == "2.000", "one-shot cost " + fmt("%.6f", r.value) + " bits [" + r.status + "]");
  note(o, std::abs(r.raw_value - 4.0) <= 1e-4, "raw m* " + fmt("%.10f", r.raw_value) + " within 1e-4 of 4");
  const CostReport e = min_sim_error(4, swap, opt);
  note(o, e.value <= 1e-6, "min_sim_error(4, SWAP) = " + fmt("%.3e", e.value));
  return o;
}

Outcome high_noise_tightness() {
  Outcome o;
  const CostOptions opt;
  const BipartiteChannel ch = noisy_swap_alpha(1.0, 0.4);
  const CostReport r = one_shot_exact_cost(ch, opt);
  const double raw_bits = std::log2(r.raw_value);
  const double lb = asymptotic_lower_bound(ch, opt).value;
  note(o, raw_bits < std::log2(3.0),
       "raw one-shot " + fmt("%.6f", raw_bits) + " bits < log2 3 = " + fmt("%.6f", std::log2(3.0)));
  note(o, std::abs(raw_bits - lb) < 0.02,
       "|raw - lower bound| = " + fmt("%.3e", std::abs(raw_bits - lb)) + " (lower bound " + fmt("%.6f", lb) + ")");
  return o;
}

Outcome sweep_shape() {
  Outcome o;
  SweepSpec spec;  // 21 points in [0, 1], p in {0, 0.2, 0.4}, one-shot and lower bound
  SweepOptions opt;
  const std::vector<SweepRow> rows = run_sweep(spec, opt);
  constexpr double tol = 1e-6;

  // curve[(p, quantity)] indexed by grid point
  std::map<std::pair<double, SweepQuantity>, std::vector<double>> curve;
  std::map<double, double> raw_one_shot_at_1;
  int failed = 0;
  for (const auto& r : rows) {
    if (!std::isfinite(r.value_bits)) ++failed;
    curve[{r.p, r.quantity}].push_back(r.value_bits);
    if (r.param == 1.0 && r.quantity == SweepQuantity::one_shot_cost) raw_one_shot_at_1[r.p] = std::log2(r.raw_scalar);
  }
  note(o, failed == 0, std::to_string(rows.size()) + " rows, " + std::to_string(failed) + " failed solves");

  bool monotone_alpha = true;
  for (const auto& [key, v] : curve) {
    for (std::size_t i = 1; i < v.size(); ++i) monotone_alpha &= v[i] >= v[i - 1] - tol;
  }
  note(o, monotone_alpha, "both curves nondecreasing in alpha at every p");

  bool monotone_p = true;
  for (SweepQuantity q : spec.quantities) {
    for (std::size_t k = 1; k < spec.ps.size(); ++k) {
      const auto& lo = curve[{spec.ps[k - 1], q}];
      const auto& hi = curve[{spec.ps[k], q}];
      for (std::size_t i = 0; i < lo.size(); ++i) monotone_p &= hi[i] <= lo[i] + tol;
    }
  }
  note(o, monotone_p, "costs nonincreasing in p at every alpha");

  // Gap at alpha = 1, on the continuous log2 m* (decisive) and after the ceiling (reported).
  std::vector<double> raw_gap, ceil_gap;
  for (double p : spec.ps) {
    const double lb = curve[{p, SweepQuantity::lower_bound}].back();
    raw_gap.push_back(std::abs(raw_one_shot_at_1[p] - lb));
    ceil_gap.push_back(std::abs(curve[{p, SweepQuantity::one_shot_cost}].back() - lb));
  }
  bool gap_ok = true;
  std::string raw_list, ceil_list;
  for (std::size_t k = 0; k < raw_gap.size(); ++k) {
    if (k > 0) gap_ok &= raw_gap[k] <= raw_gap[k - 1] + tol;
    raw_list += " " + fmt("%.3e", raw_gap[k]);
    ceil_list += " " + fmt("%.4f", ceil_gap[k]);
  }
  note(o, gap_ok, "raw gap at alpha=1 nonincreasing in p:" + raw_list);
  o.detail += "\n    info ceilinged gap at alpha=1:" + ceil_list;
  return o;
}

Outcome p2p_reduction() {
  Outcome o;
  from_check(o, check_p2p_reduction(kSeed, 10, CostOptions{}));
  return o;
}

Outcome duality(const std::vector<BipartiteChannel>& corpus) {
  Outcome o;
  from_check(o, check_dmax_duality(corpus, CostOptions{}));
  from_check(o, check_hmin_duality(corpus, CostOptions{}));
  return o;
}

Outcome additivity() {
  Outcome o;
  from_check(o, check_hmin_additivity(kSeed, 20, CostOptions{}));
  from_check(o, check_dmax_subadditivity(kSeed, 10, CostOptions{}));
  return o;
}

Outcome ns_closure() {
  Outcome o;
  const CheckResult c = check_ns_composition(kSeed, 200);
  note(o, c.cases == 200, "200 compositions");
  from_check(o, c);
  return o;
}

Outcome sandwich(const std::vector<BipartiteChannel>& corpus) {
  Outcome o;
  from_check(o, check_sandwich(corpus, CostOptions{}));
  return o;
}

Outcome calibration() {
  Outcome o;
  from_check(o, check_classical_calibration({2, 3, 4}, CostOptions{}));
  return o;
}

}  // namespace

int main() {
  const std::vector<BipartiteChannel> corpus = make_corpus(kSeed, 20);
  struct Criterion {
    std::string name;
    double limit_s;  // 0: no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"1 swap_exact_cost", 10, swap_exact_cost},
      {"2 high_noise_tightness", 30, high_noise_tightness},
      {"3 sweep_shape", 600, sweep_shape},
      {"4 p2p_reduction", 120, p2p_reduction},
      {"5 duality", 0, [&] { return duality(corpus); }},
      {"6 additivity", 0, additivity},
      {"7 ns_closure", 0, ns_closure},
      {"8 sandwich", 0, [&] { return sandwich(corpus); }},
      {"9 classical_calibration", 0, calibration},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      note(o, false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0) note(o, secs < c.limit_s, "runtime " + fmt("%.1f", secs) + " s < " + fmt("%.0f", c.limit_s) + " s");
    if (!o.pass) ++failures;
    std::printf("%s criterion %s (%.1f s)%s\n", o.pass ? "PASS" : "FAIL", c.name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
