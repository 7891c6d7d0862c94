#pragma once

// Parameter sweeps over the noisy SWAP^alpha and partial-swap families, and
// the randomized invariants suite behind `verify`.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "nscost/costs.hpp"

namespace nscost {

enum class SweepFamily { swap_alpha, partial_swap };
enum class SweepQuantity { one_shot_cost, lower_bound, dmax };

std::string to_string(SweepFamily f);
std::string to_string(SweepQuantity q);
// Throw std::invalid_argument on unknown names.
SweepFamily parse_family(const std::string& s);
SweepQuantity parse_quantity(const std::string& s);

struct SweepSpec {
  SweepFamily family = SweepFamily::swap_alpha;
  double start = 0.0;  // alpha or a
  double stop = 1.0;
  int count = 21;
  std::vector<double> ps{0.0, 0.2, 0.4};
  std::vector<SweepQuantity> quantities{SweepQuantity::one_shot_cost, SweepQuantity::lower_bound};

  // count >= 2, every p in [0, 1], a in [0, 1] for partial_swap, at least one
  // p and one quantity. Throws std::invalid_argument.
  void validate() const;
  std::vector<double> grid() const;
};

BipartiteChannel family_channel(SweepFamily f, double param, double p);

struct SweepRow {
  SweepFamily family;
  double param = 0.0;
  double p = 0.0;
  SweepQuantity quantity;
  double value_bits = 0.0;  // NaN when the solve failed
  double raw_scalar = 0.0;
  std::string status;
  double solve_ms = 0.0;
};

struct SweepOptions {
  CostOptions cost = [] {
    CostOptions c;
    c.cross_check = false;
    return c;
  }();
  int workers = 0;  // 0: hardware concurrency
};

// Rows ordered by p, then parameter, then quantity (as listed in the spec),
// independent of the order in which workers finish.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const SweepOptions& opt = {});

inline const char* kSweepCsvHeader = "family,param,p,quantity,value_bits,raw_scalar,status,solve_ms";
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os);
// Opens `path` before solving so an unwritable path fails fast
// (std::runtime_error); then runs the sweep and writes the CSV.
std::vector<SweepRow> run_sweep_to_file(const SweepSpec& spec, const std::string& path,
                                        const SweepOptions& opt = {});

// ------------------------------------------------------------ invariants

struct CheckResult {
  std::string name;
  int cases = 0;
  int failures = 0;
  double worst = 0.0;  // largest violation seen (check-specific units)
  double tolerance = 0.0;
  std::vector<std::string> messages;  // one per failure

  bool passed() const { return failures == 0; }
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool passed() const;
};

// Seeded corpus of valid channels on qubit dims: random NS mixtures, random
// signalling channels, noisy SWAP^alpha and noisy partial swaps in rotation.
std::vector<BipartiteChannel> make_corpus(std::uint64_t seed, int n);

// Individual checks; `n` scales the number of random instances.
CheckResult check_corpus_cptp(const std::vector<HermitianOperator>& chois);
CheckResult check_ns_composition(std::uint64_t seed, int n);
CheckResult check_dmax_duality(const std::vector<BipartiteChannel>& corpus, const CostOptions& opt);
CheckResult check_hmin_duality(const std::vector<BipartiteChannel>& corpus, const CostOptions& opt);
CheckResult check_hmin_additivity(std::uint64_t seed, int n, const CostOptions& opt);
CheckResult check_dmax_subadditivity(std::uint64_t seed, int n, const CostOptions& opt);
CheckResult check_sandwich(const std::vector<BipartiteChannel>& corpus, const CostOptions& opt);
CheckResult check_p2p_reduction(std::uint64_t seed, int n, const CostOptions& opt);
CheckResult check_classical_calibration(const std::vector<int>& ms, const CostOptions& opt);
CheckResult check_sim_error_monotone(const std::vector<BipartiteChannel>& corpus, int max_m,
                                     const CostOptions& opt);

inline constexpr double kDualityTol = 1e-6;
inline constexpr double kAdditivityTol = 1e-5;
inline constexpr double kSandwichTol = 1e-5;
inline constexpr double kP2pRawTol = 1e-5;
inline constexpr double kCalibrationTol = 1e-5;
inline constexpr double kSimErrorMonotoneTol = 1e-7;

struct VerifyOptions {
  std::uint64_t seed = 1;
  int cases = 4;
  // Adds a seeded non-CPTP perturbation to every corpus Choi; the CPTP check
  // must then report failures.
  bool perturb = false;
  CostOptions cost;
  // Called after each check, for progress output.
  std::function<void(const CheckResult&)> on_check;
};

// The full suite. cases = 0 runs no instances and passes vacuously.
VerifyReport run_verify(const VerifyOptions& opt);

std::string format_check(const CheckResult& c);

}  // namespace nscost
