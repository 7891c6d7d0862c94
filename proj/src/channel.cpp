#include "nscost/channel.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace nscost {

SystemLayout ChannelDims::layout() const { return {{kA0, a0}, {kA1, a1}, {kB0, b0}, {kB1, b1}}; }

std::string to_string(const ChannelDims& d) {
  std::ostringstream os;
  os << '[' << d.a0 << ',' << d.a1 << ',' << d.b0 << ',' << d.b1 << ']';
  return os.str();
}

std::string ChoiCheck::describe() const {
  std::ostringstream os;
  os << "min eigenvalue " << min_eigenvalue << (psd() ? " (ok)" : " (not PSD)")
     << ", trace-preservation error " << trace_error
     << (trace_preserving() ? " (ok)" : " (not trace preserving)");
  return os.str();
}

ChoiCheck check_choi(const HermitianOperator& choi, double psd_tol, double trace_tol) {
  ChoiCheck c;
  c.psd_tol = psd_tol;
  c.trace_tol = trace_tol;
  c.min_eigenvalue = min_eigenvalue(choi);
  const HermitianOperator marginal = partial_trace(choi, {kA1, kB1});
  c.trace_error = max_abs_diff(marginal, HermitianOperator::identity(marginal.layout()));
  return c;
}

BipartiteChannel BipartiteChannel::from_choi(const HermitianOperator& choi, double psd_tol,
                                             double trace_tol) {
  const SystemLayout& l = choi.layout();
  if (l.size() != 4 || !l.contains(kA0) || !l.contains(kA1) || !l.contains(kB0) ||
      !l.contains(kB1)) {
    throw std::invalid_argument("channel Choi must be labeled A0, A1, B0, B1; got " +
                                to_string(l));
  }
  HermitianOperator canonical = permute_systems(choi, {kA0, kA1, kB0, kB1});
  const ChoiCheck check = check_choi(canonical, psd_tol, trace_tol);
  if (!check.ok()) throw std::invalid_argument("invalid channel Choi: " + check.describe());
  const auto& s = canonical.layout().systems();
  ChannelDims dims{s[0].dim, s[1].dim, s[2].dim, s[3].dim};
  return BipartiteChannel(std::move(canonical), dims);
}

BipartiteChannel BipartiteChannel::from_matrix(const ChannelDims& dims, const ComplexMatrix& choi,
                                               double psd_tol, double trace_tol) {
  return from_choi(HermitianOperator(dims.layout(), choi), psd_tol, trace_tol);
}

ComplexMatrix BipartiteChannel::io_matrix() const {
  return kernels::permute_systems(choi_.matrix(), choi_.layout(), {kA0, kB0, kA1, kB1});
}

double ns_violation_a_to_b(const BipartiteChannel& ch) {
  const HermitianOperator& j = ch.choi();
  const HermitianOperator lhs = partial_trace(j, {kA1});
  const HermitianOperator rhs =
      tensor(HermitianOperator::maximally_mixed({{kA0, ch.dims().a0}}), partial_trace(j, {kA0, kA1}));
  return max_abs_diff(lhs, rhs);
}

double ns_violation_b_to_a(const BipartiteChannel& ch) {
  const HermitianOperator& j = ch.choi();
  const HermitianOperator lhs = partial_trace(j, {kB1});
  const HermitianOperator rhs = permute_systems(
      tensor(HermitianOperator::maximally_mixed({{kB0, ch.dims().b0}}), partial_trace(j, {kB0, kB1})),
      {kA0, kA1, kB0});
  return max_abs_diff(lhs, rhs);
}

bool is_ns_a_to_b(const BipartiteChannel& ch, double tol) { return ns_violation_a_to_b(ch) <= tol; }
bool is_ns_b_to_a(const BipartiteChannel& ch, double tol) { return ns_violation_b_to_a(ch) <= tol; }

NsFlags ns_flags(const BipartiteChannel& ch, double tol) {
  return NsFlags{is_ns_a_to_b(ch, tol), is_ns_b_to_a(ch, tol), tol};
}

Eigen::Matrix4cd swap_alpha_unitary(double alpha) {
  const Complex phase = std::exp(Complex(0.0, std::numbers::pi * alpha));
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Zero();
  u(0, 0) = 1.0;
  u(3, 3) = 1.0;
  u(1, 1) = u(2, 2) = (1.0 + phase) / 2.0;
  u(1, 2) = u(2, 1) = (1.0 - phase) / 2.0;
  return u;
}

Eigen::Matrix4cd partial_swap_unitary(double a) {
  if (!(a >= 0.0 && a <= 1.0)) {
    throw std::invalid_argument("partial swap parameter a must lie in [0, 1]");
  }
  return std::sqrt(a) * Eigen::Matrix4cd::Identity() +
         Complex(0.0, std::sqrt(1.0 - a)) * swap_alpha_unitary(1.0);
}

BipartiteChannel choi_from_unitary(const ComplexMatrix& u, const ChannelDims& dims) {
  const int din = dims.input_dim();
  const int dout = dims.output_dim();
  if (din != dout || u.rows() != dout || u.cols() != din) {
    throw std::invalid_argument("unitary of shape " + std::to_string(u.rows()) + "x" +
                                std::to_string(u.cols()) + " does not match dims " +
                                to_string(dims));
  }
  const double err = kernels::max_abs(u.adjoint() * u - ComplexMatrix::Identity(din, din));
  if (err > 1e-10) throw std::invalid_argument("matrix is not unitary");

  ComplexVector v(din * dout);
  for (int i = 0; i < din; ++i) {
    for (int o = 0; o < dout; ++o) v(i * dout + o) = u(o, i);
  }
  const SystemLayout io{{kA0, dims.a0}, {kB0, dims.b0}, {kA1, dims.a1}, {kB1, dims.b1}};
  return BipartiteChannel::from_choi(HermitianOperator::projector(io, v));
}

BipartiteChannel depolarize_global(const BipartiteChannel& ch, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("noise level p must lie in [0, 1]");
  const ChannelDims& d = ch.dims();
  ComplexMatrix j = (1.0 - p) * ch.choi().matrix();
  j.diagonal().array() += p / double(d.output_dim());
  return BipartiteChannel::from_matrix(d, j);
}

BipartiteChannel classical_noiseless_choi(int m) {
  if (m < 1) throw std::invalid_argument("classical channel needs m >= 1");
  const int n = m * m * m * m;
  ComplexMatrix j = ComplexMatrix::Zero(n, n);
  for (int k = 0; k < m; ++k) {
    for (int l = 0; l < m; ++l) {
      // A0 = k, A1 = l, B0 = l, B1 = k
      const int idx = ((k * m + l) * m + l) * m + k;
      j(idx, idx) = 1.0;
    }
  }
  return BipartiteChannel::from_matrix({m, m, m, m}, j);
}

BipartiteChannel identity_channel(int d_a, int d_b) {
  return choi_from_unitary(ComplexMatrix::Identity(d_a * d_b, d_a * d_b), {d_a, d_a, d_b, d_b});
}

BipartiteChannel noisy_swap_alpha(double alpha, double p) {
  return depolarize_global(choi_from_unitary(swap_alpha_unitary(alpha), {2, 2, 2, 2}), p);
}

BipartiteChannel noisy_partial_swap(double a, double p) {
  return depolarize_global(choi_from_unitary(partial_swap_unitary(a), {2, 2, 2, 2}), p);
}

BipartiteChannel compose(const BipartiteChannel& ch1, const BipartiteChannel& ch2) {
  const ChannelDims& d1 = ch1.dims();
  const ChannelDims& d2 = ch2.dims();
  if (d1.a1 != d2.a0 || d1.b1 != d2.b0) {
    throw std::invalid_argument("compose: outputs " + to_string(d1) + " do not feed inputs " +
                                to_string(d2));
  }
  const int din = d1.input_dim();
  const int dm = d1.output_dim();
  const int dout = d2.output_dim();
  const ComplexMatrix j1 = ch1.io_matrix();
  const ComplexMatrix j2 = ch2.io_matrix();

  // P[(i,k),(i',k')] = sum_{j,j'} J1[(i,j),(i',j')] J2[(j,k),(j',k')]
  ComplexMatrix p = ComplexMatrix::Zero(din * dout, din * dout);
  for (int i = 0; i < din; ++i) {
    for (int ip = 0; ip < din; ++ip) {
      for (int j = 0; j < dm; ++j) {
        for (int jp = 0; jp < dm; ++jp) {
          const Complex a = j1(i * dm + j, ip * dm + jp);
          if (a == Complex(0.0)) continue;
          p.block(i * dout, ip * dout, dout, dout) += a * j2.block(j * dout, jp * dout, dout, dout);
        }
      }
    }
  }
  const SystemLayout io{{kA0, d1.a0}, {kB0, d1.b0}, {kA1, d2.a1}, {kB1, d2.b1}};
  return BipartiteChannel::from_choi(HermitianOperator(io, p));
}

BipartiteChannel tensor_channels(const BipartiteChannel& ch1, const BipartiteChannel& ch2) {
  const ChannelDims& d1 = ch1.dims();
  const ChannelDims& d2 = ch2.dims();
  const SystemLayout primed{{"A0'", d2.a0}, {"A1'", d2.a1}, {"B0'", d2.b0}, {"B1'", d2.b1}};
  const HermitianOperator joint = tensor(ch1.choi(), ch2.choi().relabeled(primed));
  const HermitianOperator ordered =
      permute_systems(joint, {kA0, "A0'", kA1, "A1'", kB0, "B0'", kB1, "B1'"});
  const ChannelDims merged{d1.a0 * d2.a0, d1.a1 * d2.a1, d1.b0 * d2.b0, d1.b1 * d2.b1};
  return BipartiteChannel::from_matrix(merged, ordered.matrix());
}

BipartiteChannel product_channel(const HermitianOperator& choi_a, const HermitianOperator& choi_b) {
  if (choi_a.layout().size() != 2 || choi_b.layout().size() != 2) {
    throw std::invalid_argument("product_channel: local Choi operators need (in, out) layouts");
  }
  const auto& la = choi_a.layout().systems();
  const auto& lb = choi_b.layout().systems();
  const ChannelDims dims{la[0].dim, la[1].dim, lb[0].dim, lb[1].dim};
  return BipartiteChannel::from_matrix(dims, kernels::kron(choi_a.matrix(), choi_b.matrix()));
}

namespace {

ComplexMatrix random_isometry(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  ComplexMatrix g(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) g(r, c) = Complex(gauss(rng), gauss(rng));
  }
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(rows, cols);
  // Fix the phase freedom of QR so the distribution is unitarily invariant.
  const ComplexMatrix& r = qr.matrixQR();
  for (int c = 0; c < cols; ++c) {
    const double mag = std::abs(r(c, c));
    if (mag > 0.0) q.col(c) *= r(c, c) / mag;
  }
  return q;
}

// Choi on (in, out) of rho -> tr_env V rho V^dagger with V : in -> out (x) env.
ComplexMatrix stinespring_choi(const ComplexMatrix& v, int d_in, int d_out, int d_env) {
  ComplexMatrix j = ComplexMatrix::Zero(d_in * d_out, d_in * d_out);
  for (int e = 0; e < d_env; ++e) {
    ComplexVector w(d_in * d_out);
    for (int i = 0; i < d_in; ++i) {
      for (int k = 0; k < d_out; ++k) w(i * d_out + k) = v(k * d_env + e, i);
    }
    j += w * w.adjoint();
  }
  return j;
}

}  // namespace

HermitianOperator random_local_choi(std::uint64_t seed, int d_in, int d_out) {
  if (d_in < 1 || d_out < 1) throw std::invalid_argument("random_local_choi: dims must be >= 1");
  std::mt19937_64 rng(seed);
  const int d_env = d_in * d_out;
  const ComplexMatrix v = random_isometry(rng, d_out * d_env, d_in);
  return HermitianOperator({{"in", d_in}, {"out", d_out}}, stinespring_choi(v, d_in, d_out, d_env));
}

BipartiteChannel random_ns_channel(std::uint64_t seed, const ChannelDims& dims, int terms) {
  if (terms < 1) throw std::invalid_argument("random_ns_channel: need at least one term");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  std::vector<double> w(terms);
  double total = 0.0;
  for (auto& x : w) total += (x = unif(rng));

  const int n = dims.layout().total_dim();
  ComplexMatrix j = ComplexMatrix::Zero(n, n);
  for (int t = 0; t < terms; ++t) {
    const HermitianOperator ja = random_local_choi(rng(), dims.a0, dims.a1);
    const HermitianOperator jb = random_local_choi(rng(), dims.b0, dims.b1);
    j += (w[t] / total) * kernels::kron(ja.matrix(), jb.matrix());
  }
  return BipartiteChannel::from_matrix(dims, j);
}

BipartiteChannel random_channel(std::uint64_t seed, const ChannelDims& dims) {
  std::mt19937_64 rng(seed);
  const int din = dims.input_dim();
  const int dout = dims.output_dim();
  const int d_env = din * dout;
  const ComplexMatrix v = random_isometry(rng, dout * d_env, din);
  const SystemLayout io{{kA0, dims.a0}, {kB0, dims.b0}, {kA1, dims.a1}, {kB1, dims.b1}};
  return BipartiteChannel::from_choi(HermitianOperator(io, stinespring_choi(v, din, dout, d_env)));
}

BipartiteChannel embed_point_to_point(const ComplexMatrix& choi, int d_in, int d_out) {
  // Trivial A1 and B0 leave the composite indexing of (A0, B1) unchanged.
  return BipartiteChannel::from_matrix({d_in, 1, 1, d_out}, choi);
}

}  // namespace nscost
