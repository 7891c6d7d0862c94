#include "nscost/costs.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace nscost {

namespace {

using ReportPtr = std::shared_ptr<const SolveReport>;

ReportPtr solve_checked(const ConicProblem& problem, const CostOptions& opt,
                        const std::string& what) {
  auto report = std::make_shared<const SolveReport>(solve(problem, opt.solver));
  if (!usable(report->status)) {
    throw SolverError(what + ": solver returned " + to_string(report->status), report);
  }
  return report;
}

CostReport base_report(std::string quantity, const BipartiteChannel& ch, const ReportPtr& r) {
  CostReport out;
  out.quantity = std::move(quantity);
  out.channel = describe(ch);
  out.certificate = r;
  out.status = to_string(r->status);
  out.solve_ms = r->solve_ms;
  return out;
}

// Optimum of a dual program stated as a maximization (compiled as min of the negation).
double maximized_value(const SolveReport& r) { return -r.primal_value; }

void attach_dual(CostReport& out, const ConicProblem& dual, const CostOptions& opt,
                 const std::string& what) {
  const ReportPtr d = solve_checked(dual, opt, what + " dual");
  out.dual_raw = maximized_value(*d);
  out.solve_ms += d->solve_ms;
}

CostReport dmax_impl(const BipartiteChannel& ch, const CostOptions& opt, bool two_way) {
  const std::string name = two_way ? "dmax_bidirectional" : "dmax_oneway";
  const ReportPtr r = solve_checked(two_way ? build_dmax_bidirectional(ch) : build_dmax_oneway(ch),
                                    opt, name);
  CostReport out = base_report(name, ch, r);
  out.raw_value = r->scalar("lambda");
  out.value = std::log2(out.raw_value);
  if (two_way && opt.cross_check) attach_dual(out, build_dmax_bidirectional_dual(ch), opt, name);
  return out;
}

const char* direction_name(HminDirection dir) {
  return dir == HminDirection::a_given_b ? "A|B" : "B|A";
}

}  // namespace

std::optional<double> CostReport::duality_gap() const {
  if (!dual_raw) return std::nullopt;
  return std::abs(raw_value - *dual_raw);
}

std::string describe(const BipartiteChannel& ch) { return "choi" + to_string(ch.dims()); }

std::string to_json(const CostReport& r, int indent) {
  nlohmann::ordered_json j;
  j["quantity"] = r.quantity;
  j["value"] = r.value;
  j["unit"] = r.unit;
  j["raw_value"] = r.raw_value;
  j["dual_raw"] = r.dual_raw ? nlohmann::ordered_json(*r.dual_raw) : nlohmann::ordered_json();
  j["status"] = r.status;
  j["solve_ms"] = r.solve_ms;
  j["channel"] = r.channel;
  j["parameters"] = r.parameters;
  if (r.certificate) {
    const SolveReport& c = *r.certificate;
    j["certificate"] = {{"backend", c.backend},
                        {"status", to_string(c.status)},
                        {"primal_value", c.primal_value},
                        {"dual_value", c.dual_value},
                        {"gap", c.gap},
                        {"primal_residual", c.primal_residual},
                        {"dual_residual", c.dual_residual},
                        {"iterations", c.iterations}};
  }
  return j.dump(indent);
}

CostReport dmax_bidirectional(const BipartiteChannel& ch, const CostOptions& opt) {
  return dmax_impl(ch, opt, true);
}

CostReport dmax_oneway(const BipartiteChannel& ch, const CostOptions& opt) {
  return dmax_impl(ch, opt, false);
}

CostReport robustness(const BipartiteChannel& ch, const CostOptions& opt) {
  CostReport out = dmax_impl(ch, opt, true);
  out.quantity = "robustness";
  out.unit = "";
  out.parameters["dmax_bits"] = out.value;
  out.value = out.raw_value - 1.0;
  return out;
}

CostReport smooth_dmax(const BipartiteChannel& ch, double eps, const CostOptions& opt) {
  const ReportPtr r = solve_checked(build_smooth_dmax(ch, eps), opt, "smooth_dmax");
  CostReport out = base_report("smooth_dmax", ch, r);
  out.raw_value = r->scalar("lambda");
  out.value = std::log2(out.raw_value);
  out.parameters["eps"] = eps;
  return out;
}

CostReport hmin_bipartite(const BipartiteChannel& ch, HminDirection dir, const CostOptions& opt) {
  const std::string name = std::string("hmin(") + direction_name(dir) + ")";
  const ReportPtr r = solve_checked(build_hmin(ch, dir), opt, name);
  CostReport out = base_report(name, ch, r);
  out.raw_value = r->scalar("m");
  out.value = -std::log2(out.raw_value);
  if (opt.cross_check) attach_dual(out, build_hmin_dual(ch, dir), opt, name);
  return out;
}

CostReport asymptotic_lower_bound(const BipartiteChannel& ch, const CostOptions& opt) {
  CostOptions inner = opt;
  inner.cross_check = false;
  const CostReport ab = hmin_bipartite(ch, HminDirection::a_given_b, inner);
  const CostReport ba = hmin_bipartite(ch, HminDirection::b_given_a, inner);
  const CostReport& worst = ab.value <= ba.value ? ab : ba;
  CostReport out = worst;
  out.quantity = "asymptotic_lower_bound";
  out.solve_ms = ab.solve_ms + ba.solve_ms;
  out.status = ab.status == ba.status ? ab.status : to_string(SolveStatus::near_optimal);
  const double unclamped = -worst.value;
  out.value = std::max(unclamped, 0.0);
  out.parameters["unclamped_bits"] = unclamped;
  out.parameters["hmin_a_given_b_bits"] = ab.value;
  out.parameters["hmin_b_given_a_bits"] = ba.value;
  return out;
}

CostReport min_sim_error(int m, const BipartiteChannel& ch, const CostOptions& opt) {
  const ReportPtr r = solve_checked(build_min_sim_error(m, ch), opt, "min_sim_error");
  CostReport out = base_report("min_sim_error", ch, r);
  out.unit = "";
  out.raw_value = r->scalar("mu");
  out.value = std::clamp(out.raw_value, 0.0, 1.0);
  out.parameters["m"] = m;
  return out;
}

namespace {

// The exact-cost program for some unitaries (SWAP^alpha at p = 0, 0 < alpha < 1)
// has an unattained dual optimum: the multipliers grow without bound and the
// IPM stalls short of the tolerances. Such a stall is accepted when the primal
// point is feasible (so m is an upper bound) and the dual side is close.
bool bracketed(const SolveReport& r) {
  const double scale = std::max(1.0, std::abs(r.primal_value));
  return r.primal_residual <= kBracketFeasTol && r.dual_residual <= kBracketGapTol * scale &&
         std::abs(r.primal_value - r.dual_value) <= kBracketGapTol * scale;
}

}  // namespace

CostReport one_shot_exact_cost(const BipartiteChannel& ch, const CostOptions& opt) {
  auto r = std::make_shared<const SolveReport>(solve(build_exact_cost(ch), opt.solver));
  const bool stalled = !usable(r->status);
  if (stalled && !bracketed(*r)) {
    throw SolverError("one_shot_exact_cost: solver returned " + to_string(r->status), r);
  }
  CostReport out = base_report("one_shot_exact_cost", ch, r);
  out.raw_value = r->scalar("m");
  const double messages = std::max(1.0, std::ceil(out.raw_value - kCeilSlack));
  if (stalled) {
    out.status = to_string(SolveStatus::near_optimal);
    out.parameters["stalled_bracket"] = std::abs(r->primal_value - r->dual_value);
  }
  out.parameters["messages"] = messages;
  out.parameters["raw_bits"] = std::log2(std::max(out.raw_value, 1e-300));
  if (ns_flags(ch).non_signalling()) {
    // Exact analytic value: an NS channel is simulated without communication.
    out.value = 0.0;
    out.parameters["messages"] = 1.0;
    out.parameters["ns_shortcut"] = 1.0;
  } else {
    out.value = std::log2(messages);
  }
  return out;
}

CostReport p2p_exact_cost(const BipartiteChannel& ch, const CostOptions& opt) {
  const ReportPtr r = solve_checked(build_p2p_exact_cost(ch), opt, "p2p_exact_cost");
  CostReport out = base_report("p2p_exact_cost", ch, r);
  out.raw_value = r->value("X").trace().real();
  const double messages = std::max(1.0, std::ceil(out.raw_value - kCeilSlack));
  out.parameters["messages"] = messages;
  out.parameters["raw_bits"] = std::log2(std::max(out.raw_value, 1e-300));
  out.value = std::log2(messages);
  return out;
}

CostReport diamond_distance(const BipartiteChannel& ch1, const BipartiteChannel& ch2,
                            const CostOptions& opt) {
  const ReportPtr r = solve_checked(build_diamond_distance(ch1, ch2), opt, "diamond_distance");
  CostReport out = base_report("half_diamond_distance", ch1, r);
  out.channel += " vs " + describe(ch2);
  out.unit = "";
  out.raw_value = r->scalar("mu");
  out.value = std::max(out.raw_value, 0.0);
  return out;
}

GeneralSimResult general_sim_error(const BipartiteChannel& source, const BipartiteChannel& target,
                                   const CostOptions& opt) {
  const ReportPtr r =
      solve_checked(build_ns_superchannel_sim(source, target), opt, "general_sim_error");
  CostReport out = base_report("general_sim_error", target, r);
  out.channel = describe(source) + " -> " + describe(target);
  out.unit = "";
  out.raw_value = r->scalar("mu");
  out.value = std::clamp(out.raw_value, 0.0, 1.0);
  HermitianOperator theta(superchannel_layout(source.dims(), target.dims()), r->value("Theta"),
                          1e-8);
  return GeneralSimResult{std::move(out), std::move(theta)};
}

}  // namespace nscost
