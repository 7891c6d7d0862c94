#pragma once

// Communication measures of bipartite channels, in bits unless noted.
//
// Every function solves one or more SDPs from builders.hpp and returns a
// CostReport holding the public value, the raw optimal scalar (lambda, m, mu)
// and the solver certificate. An unusable solver status throws SolverError.

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "nscost/builders.hpp"
#include "nscost/solver.hpp"

namespace nscost {

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::shared_ptr<const SolveReport> report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const std::shared_ptr<const SolveReport>& report() const { return report_; }

 private:
  std::shared_ptr<const SolveReport> report_;
};

inline constexpr double kCeilSlack = 1e-6;
inline constexpr double kDualCheckTol = 1e-6;
// Acceptance of a stalled exact-cost solve (see one_shot_exact_cost).
inline constexpr double kBracketFeasTol = 1e-6;
inline constexpr double kBracketGapTol = 1e-3;

struct CostOptions {
  SolverConfig solver = SolverConfig::from_env();
  // Also solve the dual program where one exists (dmax, hmin) and record it.
  bool cross_check = true;
};

struct CostReport {
  std::string quantity;
  double value = 0.0;       // reported value (clamped / ceiled where the quantity says so)
  std::string unit = "bits";
  double raw_value = 0.0;   // optimal SDP scalar before logs and ceilings
  std::optional<double> dual_raw;  // optimum of the explicit dual, same scale as raw_value
  std::string status;       // solver status of the primal solve
  double solve_ms = 0.0;    // total over all solves
  std::string channel;      // descriptor
  std::map<std::string, double> parameters;
  std::shared_ptr<const SolveReport> certificate;

  // |raw - dual| when a dual was solved.
  std::optional<double> duality_gap() const;
};

// Structured JSON text; the certificate is summarized (status, values, gap,
// residuals, iterations), not dumped.
std::string to_json(const CostReport& r, int indent = 2);

std::string describe(const BipartiteChannel& ch);

// log2 of the optimal lambda of the NS-restricted max-relative entropy.
CostReport dmax_bidirectional(const BipartiteChannel& ch, const CostOptions& opt = {});
CostReport dmax_oneway(const BipartiteChannel& ch, const CostOptions& opt = {});
// 2^dmax - 1 (unitless).
CostReport robustness(const BipartiteChannel& ch, const CostOptions& opt = {});
CostReport smooth_dmax(const BipartiteChannel& ch, double eps, const CostOptions& opt = {});

// -log2 m* of the conditional min-entropy program (raw_value = m*).
CostReport hmin_bipartite(const BipartiteChannel& ch, HminDirection dir,
                          const CostOptions& opt = {});
// max(-min(H_min(A|B), H_min(B|A)), 0); the unclamped value is
// parameters["unclamped_bits"], both entropies are recorded too.
CostReport asymptotic_lower_bound(const BipartiteChannel& ch, const CostOptions& opt = {});

// Optimal mu in [0, 1] (unitless; tiny negative round-off is clamped).
CostReport min_sim_error(int m, const BipartiteChannel& ch, const CostOptions& opt = {});
// log2 ceil(m* - kCeilSlack), raw_value = m*. NS channels report 0 bits.
CostReport one_shot_exact_cost(const BipartiteChannel& ch, const CostOptions& opt = {});
// log2 ceil(tr X* - kCeilSlack) for channels with trivial A1 and B0.
CostReport p2p_exact_cost(const BipartiteChannel& ch, const CostOptions& opt = {});
// Half diamond distance (unitless).
CostReport diamond_distance(const BipartiteChannel& ch1, const BipartiteChannel& ch2,
                            const CostOptions& opt = {});

struct GeneralSimResult {
  CostReport report;
  HermitianOperator theta;  // optimal superchannel Choi on superchannel_layout(...)
};
GeneralSimResult general_sim_error(const BipartiteChannel& source, const BipartiteChannel& target,
                                   const CostOptions& opt = {});

}  // namespace nscost
