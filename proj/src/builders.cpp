#include "nscost/builders.hpp"

#include <stdexcept>

namespace nscost {

namespace {

const Labels kOutputs{kA1, kB1};
const Labels kInputs{kA0, kB0};

SystemLayout sub_layout(const ChannelDims& d, const Labels& labels) {
  const SystemLayout full = d.layout();
  std::vector<Subsystem> systems;
  for (const auto& l : labels) systems.push_back({l, full.dim(l)});
  return SystemLayout(std::move(systems));
}

HermitianOperator identity_on(const ChannelDims& d, const Labels& labels) {
  return HermitianOperator::identity(sub_layout(d, labels));
}

AffineExpr scalar_times(const Variable& s, const HermitianOperator& op) {
  return AffineExpr(s).tensor_right(op);
}

Variable matrix_var(ConicProblem& p, std::string name, SystemLayout layout, bool diagonal) {
  return diagonal ? p.add_diagonal(std::move(name), std::move(layout))
                  : p.add_hermitian(std::move(name), std::move(layout));
}

// Y >= J,  tr_{A1B1} Y = lambda I,  with the requested NS conditions on Y.
ConicProblem dmax_primal(const BipartiteChannel& ch, bool two_way) {
  const ChannelDims& d = ch.dims();
  ConicProblem p;
  auto lambda = p.add_scalar("lambda");
  auto y = matrix_var(p, "Y", d.layout(), is_classical(ch));
  p.add_objective(lambda, 1.0);
  p.add_psd("Y >= J", AffineExpr(y) - ch.choi());
  constrain_marginal_equals(p, y, kOutputs, scalar_times(lambda, identity_on(d, kInputs)),
                            "tr_{A1B1} Y = lambda I");
  constrain_non_signalling(p, y, {kA1}, kA0, "Y no-signalling A->B");
  if (two_way) constrain_non_signalling(p, y, {kB1}, kB0, "Y no-signalling B->A");
  return p;
}

void require_same_dims(const BipartiteChannel& a, const BipartiteChannel& b, const char* what) {
  if (!(a.dims() == b.dims())) {
    throw std::invalid_argument(std::string(what) + ": channel dims differ (" +
                                to_string(a.dims()) + " vs " + to_string(b.dims()) + ")");
  }
}

// mu I >= tr_{A1B1} Y,  Y >= 0,  Y >= diff.
void add_half_diamond_blocks(ConicProblem& p, const Variable& mu, const Variable& y,
                             const AffineExpr& diff, const ChannelDims& d) {
  p.add_psd("mu I >= tr_{A1B1} Y",
            scalar_times(mu, identity_on(d, kInputs)) - AffineExpr(y).partial_trace(kOutputs));
  p.add_psd("Y >= 0", AffineExpr(y));
  p.add_psd("Y >= diff", AffineExpr(y) - diff);
}

// Square root factor L with K = L L^dagger for a PSD matrix K.
ComplexMatrix psd_factor(const ComplexMatrix& k) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(k);
  Eigen::VectorXd w = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * w.asDiagonal();
}

Labels source_labels() { return {kSrcA0, kSrcA1, kSrcB0, kSrcB1}; }

HermitianOperator source_choi_transposed(const BipartiteChannel& source) {
  const SystemLayout src({{kSrcA0, source.dims().a0},
                          {kSrcA1, source.dims().a1},
                          {kSrcB0, source.dims().b0},
                          {kSrcB1, source.dims().b1}});
  return HermitianOperator(src, source.choi().matrix().transpose());
}

// (L^dagger (x) I) X (L (x) I) for L on the leading source systems.
std::pair<ComplexMatrix, ComplexMatrix> link_factors(const BipartiteChannel& source,
                                                     int target_side) {
  const ComplexMatrix l = psd_factor(source_choi_transposed(source).matrix());
  const ComplexMatrix id = ComplexMatrix::Identity(target_side, target_side);
  return {kernels::kron(l.adjoint(), id), kernels::kron(l, id)};
}

}  // namespace

bool is_classical(const BipartiteChannel& ch) {
  const ComplexMatrix& j = ch.choi().matrix();
  return (j - ComplexMatrix(j.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
}

void constrain_non_signalling(ConicProblem& problem, const Variable& var, const Labels& traced,
                              const std::string& source, std::string name) {
  const SystemLayout marginal = var.layout.without(traced);
  Labels wider = traced;
  wider.push_back(source);
  const SystemLayout src_layout({{source, var.layout.dim(source)}});
  AffineExpr rhs = AffineExpr(var)
                       .partial_trace(wider)
                       .tensor_left(HermitianOperator::maximally_mixed(src_layout))
                       .permute(marginal.labels());
  if (name.empty()) name = var.name + " no-signalling from " + source;
  constrain_marginal_equals(problem, var, traced, rhs, std::move(name));
}

ConicProblem build_dmax_bidirectional(const BipartiteChannel& ch) { return dmax_primal(ch, true); }

ConicProblem build_dmax_oneway(const BipartiteChannel& ch) { return dmax_primal(ch, false); }

ConicProblem build_dmax_bidirectional_dual(const BipartiteChannel& ch) {
  const ChannelDims& d = ch.dims();
  const SystemLayout full = d.layout();
  const bool diag = is_classical(ch);
  ConicProblem p;
  auto m = matrix_var(p, "M", full, diag);
  auto n = matrix_var(p, "N", sub_layout(d, {kA0, kB0}), diag);
  auto pv = matrix_var(p, "P", sub_layout(d, {kA0, kB0, kB1}), diag);
  auto q = matrix_var(p, "Q", sub_layout(d, {kA0, kA1, kB0}), diag);
  p.add_objective(m, -1.0 * ch.choi());

  p.add_equality("tr N = 1",
                 AffineExpr(n).partial_trace({kA0, kB0}) - HermitianOperator::scalar(1.0));
  p.add_equality("tr_{A0} P = 0", AffineExpr(pv).partial_trace({kA0}));
  p.add_equality("tr_{B0} Q = 0", AffineExpr(q).partial_trace({kB0}));
  p.add_psd("M >= 0", AffineExpr(m));

  const Labels order = full.labels();
  AffineExpr rhs = AffineExpr(n).tensor_right(identity_on(d, kOutputs)).permute(order);
  rhs += AffineExpr(pv).tensor_right(identity_on(d, {kA1})).permute(order);
  rhs += AffineExpr(q).tensor_right(identity_on(d, {kB1})).permute(order);
  p.add_psd("N + P + Q >= M", rhs - AffineExpr(m));
  return p;
}

ConicProblem build_hmin(const BipartiteChannel& ch, HminDirection dir) {
  const ChannelDims& d = ch.dims();
  const bool ab = dir == HminDirection::a_given_b;
  // A|B: X on (B0, B1) against J_{A0B0B1}; B|A mirrors with Y on (A0, A1).
  const std::string cond_in = ab ? kA0 : kB0;
  const std::string cond_out = ab ? kA1 : kB1;
  const Labels var_systems = ab ? Labels{kB0, kB1} : Labels{kA0, kA1};
  const std::string var_in = var_systems[0];
  const std::string var_out = var_systems[1];

  const HermitianOperator marginal = partial_trace(ch.choi(), {cond_out});
  ConicProblem p;
  auto m = p.add_scalar("m");
  auto x = matrix_var(p, ab ? "X" : "Y", sub_layout(d, var_systems), is_classical(ch));
  p.add_objective(m, 1.0);
  p.add_psd("I (x) X >= J",
            AffineExpr(x).tensor_left(identity_on(d, {cond_in})).permute(marginal.layout().labels()) -
                marginal);
  constrain_marginal_equals(p, x, {var_out}, scalar_times(m, identity_on(d, {var_in})),
                            "marginal = m I");
  return p;
}

ConicProblem build_hmin_dual(const BipartiteChannel& ch, HminDirection dir) {
  const ChannelDims& d = ch.dims();
  const bool ab = dir == HminDirection::a_given_b;
  const std::string cond_in = ab ? kA0 : kB0;
  const std::string cond_out = ab ? kA1 : kB1;
  const std::string var_in = ab ? kB0 : kA0;
  const std::string var_out = ab ? kB1 : kA1;

  const HermitianOperator marginal = partial_trace(ch.choi(), {cond_out});
  const bool diag = is_classical(ch);
  ConicProblem p;
  auto m = matrix_var(p, "M", marginal.layout(), diag);
  auto n = matrix_var(p, "N", sub_layout(d, {var_in}), diag);
  p.add_objective(m, -1.0 * marginal);
  p.add_equality("tr N = 1", AffineExpr(n).partial_trace({var_in}) - HermitianOperator::scalar(1.0));
  p.add_psd("M >= 0", AffineExpr(m));
  const SystemLayout reduced = marginal.layout().without({cond_in});
  p.add_psd("N (x) I >= tr M",
            AffineExpr(n).tensor_right(identity_on(d, {var_out})).permute(reduced.labels()) -
                AffineExpr(m).partial_trace({cond_in}));
  return p;
}

ConicProblem build_min_sim_error(int m, const BipartiteChannel& ch) {
  if (m < 1) throw std::invalid_argument("build_min_sim_error: m must be >= 1");
  const ChannelDims& d = ch.dims();
  const SystemLayout full = d.layout();
  ConicProblem p;
  auto mu = p.add_scalar("mu");
  const bool diag = is_classical(ch);
  auto y = matrix_var(p, "Y", full, diag);
  auto q = matrix_var(p, "Q", full, diag);
  auto v = matrix_var(p, "V", full, diag);
  auto w = matrix_var(p, "W", full, diag);
  auto x = matrix_var(p, "X", full, diag);
  p.add_objective(mu, 1.0);

  add_half_diamond_blocks(p, mu, y, AffineExpr(q) - ch.choi(), d);
  p.add_psd("Q >= 0", AffineExpr(q));
  p.add_psd("V >= Q", AffineExpr(v) - AffineExpr(q));
  p.add_psd("W >= Q", AffineExpr(w) - AffineExpr(q));
  p.add_psd("X >= Q", AffineExpr(x) - AffineExpr(q));

  constrain_marginal_equals(p, q, kOutputs, AffineExpr(identity_on(d, kInputs)), "Q_{A0B0} = I");
  constrain_non_signalling(p, x, {kA1}, kA0, "X no-signalling A->B");
  constrain_non_signalling(p, x, {kB1}, kB0, "X no-signalling B->A");
  const double md = static_cast<double>(m);
  constrain_marginal_equals(p, w, {kA1}, AffineExpr(q).partial_trace({kA1}).scaled(md),
                            "m Q_{A0B0B1} = W_{A0B0B1}");
  constrain_marginal_equals(p, v, {kA1}, AffineExpr(x).partial_trace({kA1}),
                            "X_{A0B0B1} = V_{A0B0B1}");
  constrain_marginal_equals(p, v, {kB1}, AffineExpr(q).partial_trace({kB1}).scaled(md),
                            "m Q_{A0A1B0} = V_{A0A1B0}");
  constrain_marginal_equals(p, w, {kB1}, AffineExpr(x).partial_trace({kB1}),
                            "X_{A0A1B0} = W_{A0A1B0}");
  return p;
}

ConicProblem build_exact_cost(const BipartiteChannel& ch) {
  const ChannelDims& d = ch.dims();
  const SystemLayout full = d.layout();
  const HermitianOperator& j = ch.choi();
  ConicProblem p;
  auto m = p.add_scalar("m");
  const bool diag = is_classical(ch);
  auto v = matrix_var(p, "V", full, diag);
  auto w = matrix_var(p, "W", full, diag);
  auto x = matrix_var(p, "X", full, diag);
  p.add_objective(m, 1.0);

  p.add_psd("V >= J", AffineExpr(v) - j);
  p.add_psd("W >= J", AffineExpr(w) - j);
  p.add_psd("X >= J", AffineExpr(x) - j);
  constrain_non_signalling(p, x, {kA1}, kA0, "X no-signalling A->B");
  constrain_non_signalling(p, x, {kB1}, kB0, "X no-signalling B->A");
  constrain_marginal_equals(p, w, {kA1}, scalar_times(m, partial_trace(j, {kA1})),
                            "m J_{A0B0B1} = W_{A0B0B1}");
  constrain_marginal_equals(p, v, {kA1}, AffineExpr(x).partial_trace({kA1}),
                            "X_{A0B0B1} = V_{A0B0B1}");
  constrain_marginal_equals(p, v, {kB1}, scalar_times(m, partial_trace(j, {kB1})),
                            "m J_{A0A1B0} = V_{A0A1B0}");
  constrain_marginal_equals(p, w, {kB1}, AffineExpr(x).partial_trace({kB1}),
                            "X_{A0A1B0} = W_{A0A1B0}");
  return p;
}

ConicProblem build_p2p_exact_cost(const BipartiteChannel& ch) {
  const ChannelDims& d = ch.dims();
  if (d.a1 != 1 || d.b0 != 1) {
    throw std::invalid_argument("build_p2p_exact_cost: needs trivial A1 and B0, got " +
                                to_string(d));
  }
  const HermitianOperator j = partial_trace(ch.choi(), {kA1, kB0});
  ConicProblem p;
  auto x = p.add_hermitian("X", sub_layout(d, {kB1}));
  p.add_objective(x, identity_on(d, {kB1}));
  p.add_psd("I (x) X >= J", AffineExpr(x).tensor_left(identity_on(d, {kA0})) - j);
  return p;
}

ConicProblem build_diamond_distance(const BipartiteChannel& ch1, const BipartiteChannel& ch2) {
  require_same_dims(ch1, ch2, "build_diamond_distance");
  ConicProblem p;
  auto mu = p.add_scalar("mu");
  auto y = p.add_hermitian("Y", ch1.dims().layout());
  p.add_objective(mu, 1.0);
  add_half_diamond_blocks(p, mu, y, AffineExpr(ch1.choi() - ch2.choi()), ch1.dims());
  return p;
}

ConicProblem build_smooth_dmax(const BipartiteChannel& ch, double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw std::invalid_argument("build_smooth_dmax: eps must lie in [0, 1]");
  }
  const ChannelDims& d = ch.dims();
  const SystemLayout full = d.layout();
  ConicProblem p;
  auto lambda = p.add_scalar("lambda");
  auto y = p.add_hermitian("Y", full);
  auto jm = p.add_hermitian("JM", full);
  auto z = p.add_hermitian("Z", full);
  p.add_objective(lambda, 1.0);

  p.add_psd("Y >= JM", AffineExpr(y) - AffineExpr(jm));
  constrain_marginal_equals(p, y, kOutputs, scalar_times(lambda, identity_on(d, kInputs)),
                            "tr_{A1B1} Y = lambda I");
  constrain_non_signalling(p, y, {kA1}, kA0, "Y no-signalling A->B");
  constrain_non_signalling(p, y, {kB1}, kB0, "Y no-signalling B->A");

  p.add_psd("JM >= 0", AffineExpr(jm));
  constrain_marginal_equals(p, jm, kOutputs, AffineExpr(identity_on(d, kInputs)),
                            "tr_{A1B1} JM = I");
  p.add_psd("Z >= 0", AffineExpr(z));
  p.add_psd("Z >= JM - J", AffineExpr(z) - AffineExpr(jm) + ch.choi());
  p.add_psd("eps I >= tr_{A1B1} Z",
            AffineExpr(eps * identity_on(d, kInputs)) - AffineExpr(z).partial_trace(kOutputs));
  return p;
}

SystemLayout superchannel_layout(const ChannelDims& s, const ChannelDims& t) {
  return SystemLayout({{kSrcA0, s.a0},
                       {kSrcA1, s.a1},
                       {kSrcB0, s.b0},
                       {kSrcB1, s.b1},
                       {kA0, t.a0},
                       {kA1, t.a1},
                       {kB0, t.b0},
                       {kB1, t.b1}});
}

ConicProblem build_ns_superchannel_sim(const BipartiteChannel& source,
                                       const BipartiteChannel& target) {
  const SystemLayout layout = superchannel_layout(source.dims(), target.dims());
  for (const auto& sys : layout.systems()) {
    if (sys.dim > 2) {
      throw std::invalid_argument("build_ns_superchannel_sim: subsystem " + sys.label +
                                  " has dimension " + std::to_string(sys.dim) + " > 2");
    }
  }
  if (layout.total_dim() > kMaxSuperchannelSide) {
    throw std::invalid_argument("build_ns_superchannel_sim: superchannel Choi side " +
                                std::to_string(layout.total_dim()) + " exceeds " +
                                std::to_string(kMaxSuperchannelSide));
  }
  const ChannelDims& td = target.dims();

  ConicProblem p;
  auto mu = p.add_scalar("mu");
  auto theta = p.add_hermitian("Theta", layout);
  auto y = p.add_hermitian("Y", td.layout());
  p.add_objective(mu, 1.0);

  p.add_psd("Theta >= 0", AffineExpr(theta));
  const Labels tp_traced{kSrcA0, kA1, kSrcB0, kB1};
  constrain_marginal_equals(p, theta, tp_traced,
                            AffineExpr(HermitianOperator::identity(layout.without(tp_traced))),
                            "Theta trace preserving");
  constrain_non_signalling(p, theta, {kSrcA0, kA1}, kA0, "Theta no-signalling A0");
  constrain_non_signalling(p, theta, {kA1}, kSrcA1, "Theta no-signalling sA1");
  constrain_non_signalling(p, theta, {kSrcB0, kB1}, kB0, "Theta no-signalling B0");
  constrain_non_signalling(p, theta, {kB1}, kSrcB1, "Theta no-signalling sB1");

  const auto [left, right] = link_factors(source, td.layout().total_dim());
  AffineExpr output = AffineExpr(theta).multiply(left, right, layout).partial_trace(source_labels());
  add_half_diamond_blocks(p, mu, y, output - target.choi(), td);
  return p;
}

HermitianOperator apply_superchannel(const HermitianOperator& theta,
                                     const BipartiteChannel& source) {
  const SystemLayout& layout = theta.layout();
  for (const auto& label : source_labels()) {
    if (!layout.contains(label)) {
      throw std::invalid_argument("apply_superchannel: Choi lacks system " + label);
    }
  }
  const ChannelDims& sd = source.dims();
  if (layout.dim(kSrcA0) != sd.a0 || layout.dim(kSrcA1) != sd.a1 || layout.dim(kSrcB0) != sd.b0 ||
      layout.dim(kSrcB1) != sd.b1) {
    throw std::invalid_argument("apply_superchannel: source dims " + to_string(sd) +
                                " do not match the superchannel");
  }
  const HermitianOperator ordered = permute_systems(
      theta, superchannel_layout(source.dims(), ChannelDims{layout.dim(kA0), layout.dim(kA1),
                                                            layout.dim(kB0), layout.dim(kB1)})
                 .labels());
  const int target_side = ordered.dim() / source.choi().dim();
  const auto [left, right] = link_factors(source, target_side);
  HermitianOperator sandwiched(ordered.layout(), left * ordered.matrix() * right, 1e-8);
  return partial_trace(sandwiched, source_labels());
}

}  // namespace nscost
