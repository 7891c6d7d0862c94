#pragma once

// Compilers from channels to ConicProblem instances. Every problem is a
// minimization; maximization programs (the duals) minimize the negated
// objective, so their optimal value is minus the reported primal_value.

#include "nscost/channel.hpp"
#include "nscost/conic.hpp"

namespace nscost {

enum class HminDirection { a_given_b, b_given_a };

// True when the Choi operator is exactly diagonal in the product basis. For
// such channels every program below except the diamond-type ones is invariant
// under local diagonal phase twirls, so the builders declare the matrix
// variables diagonal; the optimum is unchanged.
bool is_classical(const BipartiteChannel& ch);

// Adds  tr_{traced} X = pi_{source} (x) tr_{traced + source} X  in the layout
// order of tr_{traced} X.
void constrain_non_signalling(ConicProblem& problem, const Variable& var, const Labels& traced,
                              const std::string& source, std::string name = "");

// min lambda  s.t.  Y >= J,  tr_{A1B1} Y = lambda I,  Y two-way NS.
ConicProblem build_dmax_bidirectional(const BipartiteChannel& ch);
// max tr(M J)  s.t.  tr N = 1, tr_{A0} P = 0, tr_{B0} Q = 0, M >= 0,
//                     N (x) I_{A1B1} + P (x) I_{A1} + Q (x) I_{B1} - M >= 0.
ConicProblem build_dmax_bidirectional_dual(const BipartiteChannel& ch);
// As the primal with only the A -> B condition on Y.
ConicProblem build_dmax_oneway(const BipartiteChannel& ch);

// min m  s.t.  I_{A0} (x) X_{B0B1} >= J_{A0B0B1},  tr_{B1} X = m I_{B0}   (A|B)
ConicProblem build_hmin(const BipartiteChannel& ch, HminDirection dir);
// max tr(M J_{A0B0B1})  s.t.  tr N = 1,  M >= 0,  N (x) I_{B1} >= tr_{A0} M  (A|B)
ConicProblem build_hmin_dual(const BipartiteChannel& ch, HminDirection dir);

// Minimum simulation error with m messages each way (variables mu, Y, Q, V, W, X).
ConicProblem build_min_sim_error(int m, const BipartiteChannel& ch);
// One-shot exact cost with a continuous message count m.
ConicProblem build_exact_cost(const BipartiteChannel& ch);
// min tr X  s.t.  J_{A0B1} <= I_{A0} (x) X; requires trivial A1 and B0.
ConicProblem build_p2p_exact_cost(const BipartiteChannel& ch);

// Half diamond distance: min mu  s.t.  mu I >= tr_{A1B1} Y,  Y >= 0,  Y >= J1 - J2.
ConicProblem build_diamond_distance(const BipartiteChannel& ch1, const BipartiteChannel& ch2);

// min lambda over channels M within half-diamond distance eps of ch and
// NS operators Y with Y >= J^M, tr_{A1B1} Y = lambda I.
ConicProblem build_smooth_dmax(const BipartiteChannel& ch, double eps);

// Labels of the source channel systems inside the superchannel Choi.
inline const std::string kSrcA0 = "sA0";
inline const std::string kSrcA1 = "sA1";
inline const std::string kSrcB0 = "sB0";
inline const std::string kSrcB1 = "sB1";

// Layout (sA0, sA1, sB0, sB1, A0, A1, B0, B1) of the superchannel Choi for the
// given source and target dims.
SystemLayout superchannel_layout(const ChannelDims& source, const ChannelDims& target);

// Largest supported superchannel Choi side.
inline constexpr int kMaxSuperchannelSide = 64;

// min half-diamond distance between target and Theta(source) over NS
// superchannels Theta (variable "Theta"). Throws when the Choi side exceeds
// kMaxSuperchannelSide or a subsystem has dimension above 2.
ConicProblem build_ns_superchannel_sim(const BipartiteChannel& source,
                                       const BipartiteChannel& target);

// Output Choi of a superchannel applied to a channel:
// tr_{source}[Theta (J^T (x) I)], evaluated as a Hermitian sandwich.
HermitianOperator apply_superchannel(const HermitianOperator& theta, const BipartiteChannel& source);

}  // namespace nscost
