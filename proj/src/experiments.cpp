#include "nscost/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace nscost {

std::string to_string(SweepFamily f) {
  return f == SweepFamily::swap_alpha ? "swap_alpha" : "partial_swap";
}

std::string to_string(SweepQuantity q) {
  switch (q) {
    case SweepQuantity::one_shot_cost: return "one_shot_cost";
    case SweepQuantity::lower_bound: return "lower_bound";
    case SweepQuantity::dmax: return "dmax";
  }
  return "?";
}

SweepFamily parse_family(const std::string& s) {
  if (s == "swap_alpha") return SweepFamily::swap_alpha;
  if (s == "partial_swap") return SweepFamily::partial_swap;
  throw std::invalid_argument("unknown family '" + s + "' (expected swap_alpha or partial_swap)");
}

SweepQuantity parse_quantity(const std::string& s) {
  if (s == "one_shot_cost") return SweepQuantity::one_shot_cost;
  if (s == "lower_bound") return SweepQuantity::lower_bound;
  if (s == "dmax") return SweepQuantity::dmax;
  throw std::invalid_argument("unknown quantity '" + s +
                              "' (expected one_shot_cost, lower_bound or dmax)");
}

void SweepSpec::validate() const {
  if (count < 2) throw std::invalid_argument("sweep: grid count must be >= 2");
  if (!std::isfinite(start) || !std::isfinite(stop)) {
    throw std::invalid_argument("sweep: grid bounds must be finite");
  }
  if (family == SweepFamily::partial_swap &&
      (std::min(start, stop) < 0.0 || std::max(start, stop) > 1.0)) {
    throw std::invalid_argument("sweep: partial_swap parameter a must lie in [0, 1]");
  }
  if (ps.empty()) throw std::invalid_argument("sweep: need at least one noise level p");
  for (double p : ps) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sweep: noise level p outside [0, 1]");
  }
  if (quantities.empty()) throw std::invalid_argument("sweep: need at least one quantity");
}

std::vector<double> SweepSpec::grid() const {
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    g[i] = i == count - 1 ? stop : start + (stop - start) * i / (count - 1);
  }
  return g;
}

BipartiteChannel family_channel(SweepFamily f, double param, double p) {
  return f == SweepFamily::swap_alpha ? noisy_swap_alpha(param, p) : noisy_partial_swap(param, p);
}

namespace {

void evaluate_row(SweepRow& row, const CostOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  try {
    const BipartiteChannel ch = family_channel(row.family, row.param, row.p);
    CostReport r;
    switch (row.quantity) {
      case SweepQuantity::one_shot_cost: r = one_shot_exact_cost(ch, opt); break;
      case SweepQuantity::lower_bound: r = asymptotic_lower_bound(ch, opt); break;
      case SweepQuantity::dmax: r = dmax_bidirectional(ch, opt); break;
    }
    row.value_bits = r.value;
    row.raw_scalar = r.raw_value;
    row.status = r.status;
  } catch (const SolverError& e) {
    row.value_bits = row.raw_scalar = std::numeric_limits<double>::quiet_NaN();
    row.status = e.report() ? to_string(e.report()->status) : "solver_error";
  } catch (const std::exception&) {
    row.value_bits = row.raw_scalar = std::numeric_limits<double>::quiet_NaN();
    row.status = "error";
  }
  row.solve_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const SweepOptions& opt) {
  spec.validate();
  std::vector<SweepRow> rows;
  for (double p : spec.ps) {
    for (double x : spec.grid()) {
      for (SweepQuantity q : spec.quantities) rows.push_back(SweepRow{spec.family, x, p, q, 0, 0, "", 0});
    }
  }
  int workers = opt.workers > 0 ? opt.workers : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, static_cast<int>(rows.size()));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < rows.size();) evaluate_row(rows[i], opt.cost);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
  os << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    os << to_string(r.family) << ',' << fmt("%.6f", r.param) << ',' << fmt("%.6f", r.p) << ','
       << to_string(r.quantity) << ',' << fmt("%.9f", r.value_bits) << ','
       << fmt("%.9f", r.raw_scalar) << ',' << r.status << ',' << fmt("%.1f", r.solve_ms) << '\n';
  }
}

std::vector<SweepRow> run_sweep_to_file(const SweepSpec& spec, const std::string& path,
                                        const SweepOptions& opt) {
  spec.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  std::vector<SweepRow> rows = run_sweep(spec, opt);
  write_sweep_csv(rows, out);
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
  return rows;
}

// ------------------------------------------------------------ invariants

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed(); });
}

namespace {

const ChannelDims kQubits{2, 2, 2, 2};

// Independent seeds per check so adding instances to one check does not shift another.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

// Records one instance; it holds when `violation` <= tolerance.
void record(CheckResult& c, double violation, const std::string& what) {
  ++c.cases;
  c.worst = std::max(c.worst, violation);
  if (!(violation <= c.tolerance)) {
    ++c.failures;
    std::ostringstream os;
    os << what << ": violation " << violation;
    c.messages.push_back(os.str());
  }
}

void record_error(CheckResult& c, const std::string& what, const std::exception& e) {
  ++c.cases;
  ++c.failures;
  c.messages.push_back(what + ": " + e.what());
}

CheckResult start(std::string name, double tol) {
  CheckResult c;
  c.name = std::move(name);
  c.tolerance = tol;
  return c;
}

std::string label(const char* kind, int i) { return std::string(kind) + " #" + std::to_string(i); }

double bits(double raw) { return std::log2(raw); }

}  // namespace

std::vector<BipartiteChannel> make_corpus(std::uint64_t seed, int n) {
  std::mt19937_64 rng(derive_seed(seed, 1));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<BipartiteChannel> out;
  for (int i = 0; i < n; ++i) {
    switch (i % 4) {
      case 0: out.push_back(random_ns_channel(rng(), kQubits)); break;
      case 1: out.push_back(random_channel(rng(), kQubits)); break;
      case 2: {
        const double alpha = unif(rng);
        out.push_back(noisy_swap_alpha(alpha, 0.1 + 0.5 * unif(rng)));
        break;
      }
      default: {
        const double a = unif(rng);
        out.push_back(noisy_partial_swap(a, 0.1 + 0.5 * unif(rng)));
        break;
      }
    }
  }
  return out;
}

CheckResult check_corpus_cptp(const std::vector<HermitianOperator>& chois) {
  CheckResult c = start("corpus_cptp", 0.0);
  for (std::size_t i = 0; i < chois.size(); ++i) {
    const ChoiCheck cc = check_choi(chois[i]);
    const double v = std::max(std::max(0.0, -cc.min_eigenvalue - cc.psd_tol),
                              std::max(0.0, cc.trace_error - cc.trace_tol));
    ++c.cases;
    c.worst = std::max(c.worst, v);
    if (!cc.ok()) {
      ++c.failures;
      c.messages.push_back(label("channel", static_cast<int>(i)) + ": " + cc.describe());
    }
  }
  return c;
}

CheckResult check_ns_composition(std::uint64_t seed, int n) {
  CheckResult c = start("ns_composition", kNsTol);
  std::mt19937_64 rng(derive_seed(seed, 2));
  for (int i = 0; i < n; ++i) {
    try {
      const BipartiteChannel a = random_ns_channel(rng(), kQubits);
      const BipartiteChannel b = random_ns_channel(rng(), kQubits);
      const BipartiteChannel comp = compose(a, b);
      record(c, std::max(ns_violation_a_to_b(comp), ns_violation_b_to_a(comp)), label("pair", i));
    } catch (const std::exception& e) {
      record_error(c, label("pair", i), e);
    }
  }
  return c;
}

CheckResult check_dmax_duality(const std::vector<BipartiteChannel>& corpus, const CostOptions& opt) {
  CheckResult c = start("dmax_duality", kDualityTol);
  CostOptions o = opt;
  o.cross_check = true;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    try {
      const CostReport r = dmax_bidirectional(corpus[i], o);
      record(c, *r.duality_gap(), label("channel", static_cast<int>(i)));
    } catch (const std::exception& e) {
      record_error(c, label("channel", static_cast<int>(i)), e);
    }
  }
  return c;
}

CheckResult check_hmin_duality(const std::vector<BipartiteChannel>& corpus, const CostOptions& opt) {
  CheckResult c = start("hmin_duality", kDualityTol);
  CostOptions o = opt;
  o.cross_check = true;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (HminDirection dir : {HminDirection::a_given_b, HminDirection::b_given_a}) {
      const std::string what = label("channel", static_cast<int>(i)) +
                               (dir == HminDirection::a_given_b ? " A|B" : " B|A");
      try {
        record(c, *hmin_bipartite(corpus[i], dir, o).duality_gap(), what);
      } catch (const std::exception& e) {
        record_error(c, what, e);
      }
    }
  }
  return c;
}

CheckResult check_hmin_additivity(std::uint64_t seed, int n, const CostOptions& opt) {
  CheckResult c = start("hmin_additivity", kAdditivityTol);
  CostOptions o = opt;
  o.cross_check = false;
  std::mt19937_64 rng(derive_seed(seed, 3));
  for (int i = 0; i < n; ++i) {
    try {
      // Alternate signalling and NS factors so both regimes are covered.
      const BipartiteChannel a = random_channel(rng(), kQubits);
      const BipartiteChannel b =
          i % 2 == 0 ? random_channel(rng(), kQubits) : random_ns_channel(rng(), kQubits);
      const BipartiteChannel ab = tensor_channels(a, b);
      for (HminDirection dir : {HminDirection::a_given_b, HminDirection::b_given_a}) {
        const double joint = hmin_bipartite(ab, dir, o).value;
        const double sum = hmin_bipartite(a, dir, o).value + hmin_bipartite(b, dir, o).value;
        record(c, std::abs(joint - sum),
               label("pair", i) + (dir == HminDirection::a_given_b ? " A|B" : " B|A"));
      }
    } catch (const std::exception& e) {
      record_error(c, label("pair", i), e);
    }
  }
  return c;
}

CheckResult check_dmax_subadditivity(std::uint64_t seed, int n, const CostOptions& opt) {
  CheckResult c = start("dmax_subadditivity", kAdditivityTol);
  CostOptions o = opt;
  o.cross_check = false;
  std::mt19937_64 rng(derive_seed(seed, 4));
  // One-way qubit factors (A -> B and B -> A): the product is a 2x2x2x2 channel.
  const ChannelDims ab_dims{2, 1, 1, 2};
  const ChannelDims ba_dims{1, 2, 2, 1};
  for (int i = 0; i < n; ++i) {
    try {
      const BipartiteChannel a = random_channel(rng(), ab_dims);
      const BipartiteChannel b = random_channel(rng(), ba_dims);
      const double joint = dmax_bidirectional(tensor_channels(a, b), o).value;
      const double sum = dmax_bidirectional(a, o).value + dmax_bidirectional(b, o).value;
      record(c, joint - sum, label("pair", i));
    } catch (const std::exception& e) {
      record_error(c, label("pair", i), e);
    }
  }
  return c;
}

CheckResult check_sandwich(const std::vector<BipartiteChannel>& corpus, const CostOptions& opt) {
  CheckResult c = start("sandwich", kSandwichTol);
  CostOptions o = opt;
  o.cross_check = false;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const std::string what = label("channel", static_cast<int>(i));
    try {
      const CostReport lb = asymptotic_lower_bound(corpus[i], o);
      const double lower = lb.parameters.at("unclamped_bits");
      const double dmax = dmax_bidirectional(corpus[i], o).value;
      const double upper = bits(one_shot_exact_cost(corpus[i], o).raw_value);
      record(c, std::max(lower - dmax, dmax - upper), what);
    } catch (const std::exception& e) {
      record_error(c, what, e);
    }
  }
  return c;
}

CheckResult check_p2p_reduction(std::uint64_t seed, int n, const CostOptions& opt) {
  CheckResult c = start("p2p_reduction", kP2pRawTol);
  CostOptions o = opt;
  o.cross_check = false;
  std::mt19937_64 rng(derive_seed(seed, 5));
  for (int i = 0; i < n; ++i) {
    const std::string what = label("channel", i);
    try {
      const BipartiteChannel ch = embed_point_to_point(random_local_choi(rng(), 2, 2).matrix(), 2, 2);
      const CostReport full = one_shot_exact_cost(ch, o);
      const CostReport p2p = p2p_exact_cost(ch, o);
      double v = std::abs(full.raw_value - p2p.raw_value);
      if (full.value != p2p.value) v = std::max(v, 1.0);  // ceilings must agree exactly
      record(c, v, what);
    } catch (const std::exception& e) {
      record_error(c, what, e);
    }
  }
  return c;
}

namespace {

HermitianOperator diag_on(const SystemLayout& layout, const std::function<double(int)>& entry) {
  Eigen::VectorXd d(layout.total_dim());
  for (int i = 0; i < d.size(); ++i) d(i) = entry(i);
  return HermitianOperator::diagonal(layout, d);
}

// Digits of index i in the mixed radix of `layout` (row-major).
std::vector<int> digits(const SystemLayout& layout, int i) {
  std::vector<int> out(layout.systems().size());
  for (int k = static_cast<int>(out.size()) - 1; k >= 0; --k) {
    const int dk = layout.systems()[k].dim;
    out[k] = i % dk;
    i /= dk;
  }
  return out;
}

// Worst violation of an explicit witness: equality residual, negative PSD
// eigenvalue, and distance of the objective from `target`.
double witness_violation(const ConicProblem& p, const std::map<std::string, ComplexMatrix>& v,
                         double target) {
  const FeasibilityCheck f = check_primal(p, v);
  return std::max({f.max_equality_residual, -f.min_psd_eigenvalue, std::abs(f.objective - target)});
}

}  // namespace

CheckResult check_classical_calibration(const std::vector<int>& ms, const CostOptions& opt) {
  CheckResult c = start("classical_calibration", kCalibrationTol);
  CostOptions o = opt;
  o.cross_check = true;
  for (int m : ms) {
    const std::string what = "Upsilon_" + std::to_string(m);
    try {
      const BipartiteChannel ch = classical_noiseless_choi(m);
      const SystemLayout full = ch.dims().layout();  // (A0, A1, B0, B1)
      const double md = m;

      // Analytic primal witness for dmax: Y = sum over (k, l, a, b) with
      // a - l = b - k (mod m) of |k a l b><k a l b|, lambda = m.
      const HermitianOperator y = diag_on(full, [&](int i) {
        const auto g = digits(full, i);  // k = A0, a = A1, l = B0, b = B1
        return ((g[1] - g[2] - g[3] + g[0]) % m + m) % m == 0 ? 1.0 : 0.0;
      });
      const double primal =
          witness_violation(build_dmax_bidirectional(ch),
                            {{"lambda", ComplexMatrix::Constant(1, 1, md)}, {"Y", y.matrix()}}, md);
      // Dual witness: M = J/m, N = I/m^2, P = ([b = k] - 1/m)/(2m), Q = ([a = l] - 1/m)/(2m).
      const SystemLayout n_layout({{kA0, m}, {kB0, m}});
      const SystemLayout p_layout({{kA0, m}, {kB0, m}, {kB1, m}});
      const SystemLayout q_layout({{kA0, m}, {kA1, m}, {kB0, m}});
      const HermitianOperator pm = diag_on(p_layout, [&](int i) {
        const auto g = digits(p_layout, i);
        return ((g[2] == g[0] ? 1.0 : 0.0) - 1.0 / md) / (2.0 * md);
      });
      const HermitianOperator qm = diag_on(q_layout, [&](int i) {
        const auto g = digits(q_layout, i);
        return ((g[1] == g[2] ? 1.0 : 0.0) - 1.0 / md) / (2.0 * md);
      });
      // The dual program minimizes -tr(M J), so its objective at the witness is -m.
      const double dual = witness_violation(
          build_dmax_bidirectional_dual(ch),
          {{"M", ch.choi().matrix() / md},
           {"N", ComplexMatrix::Identity(m * m, m * m) / (md * md)},
           {"P", pm.matrix()},
           {"Q", qm.matrix()}},
          -md);
      record(c, primal, what + " dmax primal witness");
      record(c, dual, what + " dmax dual witness");

      // hmin(A|B) witnesses: X = I (m* <= m) and M = J_{A0B0B1}/m, N = I/m (m* >= m).
      for (HminDirection dir : {HminDirection::a_given_b, HminDirection::b_given_a}) {
        const bool ab = dir == HminDirection::a_given_b;
        const std::string tag = what + (ab ? " hmin A|B" : " hmin B|A");
        const HermitianOperator marginal = partial_trace(ch.choi(), {ab ? kA1 : kB1});
        record(c,
               witness_violation(build_hmin(ch, dir),
                                 {{"m", ComplexMatrix::Constant(1, 1, md)},
                                  {ab ? "X" : "Y", ComplexMatrix::Identity(m * m, m * m)}},
                                 md),
               tag + " primal witness");
        record(c,
               witness_violation(build_hmin_dual(ch, dir),
                                 {{"M", marginal.matrix() / md},
                                  {"N", ComplexMatrix::Identity(m, m) / md}},
                                 -md),
               tag + " dual witness");
        const CostReport h = hmin_bipartite(ch, dir, o);
        record(c, std::abs(h.value + std::log2(md)), tag + " solved");
        record(c, std::abs(-std::log2(*h.dual_raw) + std::log2(md)), tag + " solved dual");
      }

      const CostReport r = dmax_bidirectional(ch, o);
      record(c, std::abs(r.value - std::log2(md)), what + " dmax solved");
      record(c, std::abs(std::log2(*r.dual_raw) - std::log2(md)), what + " dmax solved dual");
    } catch (const std::exception& e) {
      record_error(c, what, e);
    }
  }
  return c;
}

CheckResult check_sim_error_monotone(const std::vector<BipartiteChannel>& corpus, int max_m,
                                     const CostOptions& opt) {
  CheckResult c = start("sim_error_monotone", kSimErrorMonotoneTol);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const std::string what = label("channel", static_cast<int>(i));
    try {
      double prev = min_sim_error(1, corpus[i], opt).value;
      for (int m = 2; m <= max_m; ++m) {
        const double cur = min_sim_error(m, corpus[i], opt).value;
        record(c, cur - prev, what + " m=" + std::to_string(m));
        prev = cur;
      }
    } catch (const std::exception& e) {
      record_error(c, what, e);
    }
  }
  return c;
}

VerifyReport run_verify(const VerifyOptions& opt) {
  VerifyReport report;
  const int n = std::max(opt.cases, 0);
  auto add = [&](CheckResult c) {
    if (opt.on_check) opt.on_check(c);
    report.checks.push_back(std::move(c));
  };

  std::vector<BipartiteChannel> corpus = make_corpus(opt.seed, n);
  std::vector<HermitianOperator> chois;
  for (const auto& ch : corpus) chois.push_back(ch.choi());
  if (opt.perturb) {
    std::mt19937_64 rng(derive_seed(opt.seed, 6));
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto& j : chois) {
      ComplexMatrix h(j.dim(), j.dim());
      for (Eigen::Index r = 0; r < h.rows(); ++r) {
        for (Eigen::Index col = 0; col < h.cols(); ++col) h(r, col) = Complex(g(rng), g(rng));
      }
      j = HermitianOperator(j.layout(), j.matrix() + 1e-3 * (h + h.adjoint()));
    }
  }
  add(check_corpus_cptp(chois));
  // Perturbed Chois are not channels, so the suite stops here.
  if (opt.perturb) return report;

  add(check_ns_composition(opt.seed, n));
  add(check_dmax_duality(corpus, opt.cost));
  add(check_hmin_duality(corpus, opt.cost));
  add(check_sandwich(corpus, opt.cost));
  add(check_hmin_additivity(opt.seed, n, opt.cost));
  add(check_dmax_subadditivity(opt.seed, n, opt.cost));
  add(check_p2p_reduction(opt.seed, n, opt.cost));
  std::vector<int> ms;
  for (int m = 2; m < 2 + std::min(n, 3); ++m) ms.push_back(m);
  add(check_classical_calibration(ms, opt.cost));
  add(check_sim_error_monotone(std::vector<BipartiteChannel>(corpus.begin(),
                                                             corpus.begin() + std::min(n, 2)),
                               4, opt.cost));
  return report;
}

std::string format_check(const CheckResult& c) {
  std::ostringstream os;
  os << (c.passed() ? "PASS " : "FAIL ") << c.name << "  cases=" << c.cases
     << " failures=" << c.failures << " worst=" << c.worst << " tol=" << c.tolerance;
  for (const auto& m : c.messages) os << "\n    " << m;
  return os.str();
}

}  // namespace nscost
