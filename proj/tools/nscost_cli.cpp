// nscost: communication costs of bipartite channels from the command line.
//
// Exit codes: 0 success, 1 usage or input error, 2 solver failure,
// 3 verification failure.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nscost/channel_io.hpp"
#include "nscost/experiments.hpp"

using namespace nscost;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSolver = 2;
constexpr int kExitVerify = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Channel selection shared by `cost` and `simerr`: a spec file or inline
// family parameters.
struct ChannelArgs {
  std::string file;
  std::string kind;
  double alpha = 1.0;
  double a = 0.0;
  double p = 0.0;
  int m = 2;

  void attach(CLI::App* cmd, const std::string& m_flag = "--m") {
    auto* f = cmd->add_option("--channel", file, "channel spec file (JSON)");
    auto* k = cmd->add_option("--kind", kind, "swap_alpha, partial_swap or classical_noiseless")
                  ->check(CLI::IsMember({"swap_alpha", "partial_swap", "classical_noiseless"}));
    f->excludes(k);
    cmd->add_option("--alpha", alpha, "SWAP^alpha exponent");
    cmd->add_option("--a", a, "partial swap parameter in [0, 1]");
    cmd->add_option("--p", p, "global depolarizing noise in [0, 1]");
    cmd->add_option(m_flag, m, "message count of the classical noiseless channel")
        ->check(CLI::PositiveNumber);
  }

  BipartiteChannel load() const {
    if (!file.empty()) return load_channel_file(file);
    if (kind.empty()) throw UsageError("select a channel with --channel FILE or --kind");
    ChannelSpec spec;
    spec.kind = kind;
    if (kind == "swap_alpha") spec.params = {{"alpha", alpha}, {"p", p}};
    if (kind == "partial_swap") spec.params = {{"a", a}, {"p", p}};
    if (kind == "classical_noiseless") spec.params = {{"m", m}};
    std::ostringstream json;
    json << "{\"kind\": \"" << kind << "\", \"params\": {";
    bool first = true;
    for (const auto& [k, v] : spec.params) {
      json << (first ? "" : ", ") << '"' << k << "\": " << std::setprecision(17) << v;
      first = false;
    }
    json << "}}";
    return build_channel(parse_channel_spec(json.str(), "<command line>"), "<command line>");
  }
};

struct SolverArgs {
  std::optional<double> tol_gap;
  std::optional<int> max_iters;
  bool verbose = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--tol-gap", tol_gap, "duality gap tolerance (default 1e-8 or NSCOST_TOL_GAP)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-iters", max_iters,
                    "iteration limit (default 200 or NSCOST_MAX_ITERS)")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--solver-log", verbose, "print solver iterations to stderr");
  }

  CostOptions options() const {
    CostOptions o;
    if (tol_gap) o.solver.tol_gap = *tol_gap;
    if (max_iters) o.solver.max_iters = *max_iters;
    o.solver.verbose = verbose;
    return o;
  }
};

const std::vector<std::string> kQuantities{
    "one-shot", "lower-bound", "dmax", "dmax-oneway", "robustness",
    "smooth-dmax", "hmin-ab", "hmin-ba", "p2p"};

ConicProblem problem_for(const std::string& q, const BipartiteChannel& ch, double eps) {
  if (q == "one-shot") return build_exact_cost(ch);
  if (q == "lower-bound" || q == "hmin-ab") return build_hmin(ch, HminDirection::a_given_b);
  if (q == "hmin-ba") return build_hmin(ch, HminDirection::b_given_a);
  if (q == "dmax" || q == "robustness") return build_dmax_bidirectional(ch);
  if (q == "dmax-oneway") return build_dmax_oneway(ch);
  if (q == "smooth-dmax") return build_smooth_dmax(ch, eps);
  return build_p2p_exact_cost(ch);
}

CostReport compute(const std::string& q, const BipartiteChannel& ch, double eps,
                   const CostOptions& o) {
  if (q == "one-shot") return one_shot_exact_cost(ch, o);
  if (q == "lower-bound") return asymptotic_lower_bound(ch, o);
  if (q == "dmax") return dmax_bidirectional(ch, o);
  if (q == "dmax-oneway") return dmax_oneway(ch, o);
  if (q == "robustness") return robustness(ch, o);
  if (q == "smooth-dmax") return smooth_dmax(ch, eps, o);
  if (q == "hmin-ab") return hmin_bipartite(ch, HminDirection::a_given_b, o);
  if (q == "hmin-ba") return hmin_bipartite(ch, HminDirection::b_given_a, o);
  return p2p_exact_cost(ch, o);
}

void dump_to(const std::string& path, const ConicProblem& problem) {
  if (path == "-") {
    dump_problem(problem, std::cout);
    std::cout << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write '" + path + "'");
  dump_problem(problem, out);
  out << '\n';
}

void print_report(const CostReport& r, bool json) {
  if (json) {
    std::cout << to_json(r) << '\n';
    return;
  }
  std::printf("%.6f%s%s\n", r.value, r.unit.empty() ? "" : " ", r.unit.c_str());
  std::fprintf(stderr, "%s: raw %.10g, status %s, %.1f ms", r.quantity.c_str(), r.raw_value,
               r.status.c_str(), r.solve_ms);
  if (auto gap = r.duality_gap()) std::fprintf(stderr, ", dual gap %.3g", *gap);
  std::fprintf(stderr, "\n");
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string("bad number '") + item + "' in " + what);
    }
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Communication costs of bipartite quantum channels under non-signalling assistance"};
  app.require_subcommand(1);

  // cost
  auto* cost = app.add_subcommand("cost", "compute one quantity for a channel");
  ChannelArgs cost_ch;
  SolverArgs cost_solver;
  std::string quantity = "one-shot";
  double eps = 0.0;
  bool cost_json = false;
  std::string cost_dump;
  cost_ch.attach(cost);
  cost_solver.attach(cost);
  cost->add_option("--quantity", quantity, "quantity to compute")
      ->check(CLI::IsMember(kQuantities));
  cost->add_option("--eps", eps, "smoothing for smooth-dmax")->check(CLI::Range(0.0, 1.0));
  cost->add_flag("--json", cost_json, "print the full report as JSON");
  cost->add_option("--dump-problem", cost_dump,
                   "write the compiled SDP as JSON to a file ('-' for stdout) and exit");

  // simerr
  auto* simerr = app.add_subcommand("simerr", "minimum simulation error with m messages each way");
  ChannelArgs sim_ch;
  SolverArgs sim_solver;
  int sim_m = 1;
  bool sim_json = false;
  std::string sim_dump;
  // `--m` is the message count here; the classical channel's size moves to --classical-m.
  sim_ch.attach(simerr, "--classical-m");
  sim_solver.attach(simerr);
  simerr->add_option("--m", sim_m, "messages per direction")->required()->check(CLI::PositiveNumber);
  simerr->add_flag("--json", sim_json, "print the full report as JSON");
  simerr->add_option("--dump-problem", sim_dump, "write the compiled SDP as JSON and exit");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "parameter sweep to CSV");
  SolverArgs sweep_solver;
  std::string family, grid = "0,1,21", plist = "0,0.2,0.4", out_path,
                      qlist = "one_shot_cost,lower_bound";
  int workers = 0;
  sweep_solver.attach(sweep);
  sweep->add_option("--family", family, "swap_alpha or partial_swap")->required();
  sweep->add_option("--grid", grid, "start,stop,count of alpha or a");
  sweep->add_option("--p", plist, "comma-separated noise levels");
  sweep->add_option("--quantities", qlist, "comma-separated: one_shot_cost, lower_bound, dmax");
  sweep->add_option("--out", out_path, "CSV output path")->required();
  sweep->add_option("--workers", workers, "worker threads (0: hardware concurrency)")
      ->check(CLI::NonNegativeNumber);

  // verify
  auto* verify = app.add_subcommand("verify", "randomized invariants suite");
  SolverArgs verify_solver;
  std::uint64_t seed = 1;
  int cases = 4;
  bool perturb = false;
  verify_solver.attach(verify);
  verify->add_option("--seed", seed, "corpus seed");
  verify->add_option("--cases", cases, "instances per check (0: vacuous pass)")
      ->check(CLI::NonNegativeNumber);
  verify->add_flag("--perturb", perturb, "perturb every corpus Choi off the CPTP set");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*cost) {
      const BipartiteChannel ch = cost_ch.load();
      if (cost->count("--dump-problem")) {
        dump_to(cost_dump, problem_for(quantity, ch, eps));
        return kExitOk;
      }
      print_report(compute(quantity, ch, eps, cost_solver.options()), cost_json);
      return kExitOk;
    }
    if (*simerr) {
      const BipartiteChannel ch = sim_ch.load();
      if (simerr->count("--dump-problem")) {
        dump_to(sim_dump, build_min_sim_error(sim_m, ch));
        return kExitOk;
      }
      print_report(min_sim_error(sim_m, ch, sim_solver.options()), sim_json);
      return kExitOk;
    }
    if (*sweep) {
      SweepSpec spec;
      spec.family = parse_family(family);
      const std::vector<double> g = parse_list(grid, "--grid");
      if (g.size() != 3 || g[2] != std::floor(g[2])) {
        throw UsageError("--grid expects start,stop,count");
      }
      spec.start = g[0];
      spec.stop = g[1];
      spec.count = static_cast<int>(g[2]);
      spec.ps = parse_list(plist, "--p");
      spec.quantities.clear();
      std::stringstream qs(qlist);
      for (std::string q; std::getline(qs, q, ',');) spec.quantities.push_back(parse_quantity(q));
      SweepOptions so;
      so.cost = sweep_solver.options();
      so.cost.cross_check = false;
      so.workers = workers;
      const auto rows = run_sweep_to_file(spec, out_path, so);
      int failed = 0;
      for (const auto& r : rows) failed += std::isnan(r.value_bits) ? 1 : 0;
      std::fprintf(stderr, "wrote %zu rows to %s (%d failed)\n", rows.size(), out_path.c_str(),
                   failed);
      return failed == 0 ? kExitOk : kExitSolver;
    }
    if (*verify) {
      VerifyOptions vo;
      vo.seed = seed;
      vo.cases = cases;
      vo.perturb = perturb;
      vo.cost = verify_solver.options();
      vo.on_check = [](const CheckResult& c) {
        std::cout << format_check(c) << std::endl;
      };
      const VerifyReport r = run_verify(vo);
      std::cout << (r.passed() ? "verify: all checks passed" : "verify: FAILED") << '\n';
      return r.passed() ? kExitOk : kExitVerify;
    }
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const ChannelSpecError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
