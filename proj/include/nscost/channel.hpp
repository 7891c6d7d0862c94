#pragma once

// Bipartite channels A0 B0 -> A1 B1 in Choi form.
//
// The Choi operator is stored on (A0, A1, B0, B1): input of Alice, output of
// Alice, input of Bob, output of Bob, each row-major as in tensor.hpp.

#include <cstdint>
#include <string>

#include "nscost/tensor.hpp"

namespace nscost {

inline constexpr double kPsdTol = 1e-9;
inline constexpr double kTraceTol = 1e-9;
inline constexpr double kNsTol = 1e-8;

inline const std::string kA0 = "A0";
inline const std::string kA1 = "A1";
inline const std::string kB0 = "B0";
inline const std::string kB1 = "B1";

struct ChannelDims {
  int a0 = 1;
  int a1 = 1;
  int b0 = 1;
  int b1 = 1;

  bool operator==(const ChannelDims&) const = default;
  SystemLayout layout() const;
  int input_dim() const { return a0 * b0; }
  int output_dim() const { return a1 * b1; }
};

std::string to_string(const ChannelDims& d);

// Outcome of CPTP validation; `ok()` is false when either check fails.
struct ChoiCheck {
  double min_eigenvalue = 0.0;
  double trace_error = 0.0;  // max-norm of tr_{A1B1} J - I
  double psd_tol = kPsdTol;
  double trace_tol = kTraceTol;

  bool psd() const { return min_eigenvalue >= -psd_tol; }
  bool trace_preserving() const { return trace_error <= trace_tol; }
  bool ok() const { return psd() && trace_preserving(); }
  std::string describe() const;
};

ChoiCheck check_choi(const HermitianOperator& choi, double psd_tol = kPsdTol,
                     double trace_tol = kTraceTol);

class BipartiteChannel {
 public:
  // `choi` must carry the labels A0, A1, B0, B1 in any order; it is reordered
  // to the canonical order. Throws std::invalid_argument on CPTP violation.
  static BipartiteChannel from_choi(const HermitianOperator& choi, double psd_tol = kPsdTol,
                                    double trace_tol = kTraceTol);
  static BipartiteChannel from_matrix(const ChannelDims& dims, const ComplexMatrix& choi,
                                      double psd_tol = kPsdTol, double trace_tol = kTraceTol);

  const HermitianOperator& choi() const { return choi_; }
  const ChannelDims& dims() const { return dims_; }

  // Choi reordered to (A0, B0, A1, B1): rows/columns split as input x output.
  ComplexMatrix io_matrix() const;

 private:
  BipartiteChannel(HermitianOperator choi, ChannelDims dims)
      : choi_(std::move(choi)), dims_(dims) {}

  HermitianOperator choi_;
  ChannelDims dims_;
};

struct NsFlags {
  bool a_to_b = false;
  bool b_to_a = false;
  double tolerance_used = kNsTol;

  bool non_signalling() const { return a_to_b && b_to_a; }
};

// Max-norm violation of tr_{A1} J = pi_{A0} (x) tr_{A0 A1} J.
double ns_violation_a_to_b(const BipartiteChannel& ch);
// Max-norm violation of tr_{B1} J = pi_{B0} (x) tr_{B0 B1} J.
double ns_violation_b_to_a(const BipartiteChannel& ch);
bool is_ns_a_to_b(const BipartiteChannel& ch, double tol = kNsTol);
bool is_ns_b_to_a(const BipartiteChannel& ch, double tol = kNsTol);
NsFlags ns_flags(const BipartiteChannel& ch, double tol = kNsTol);

Eigen::Matrix4cd swap_alpha_unitary(double alpha);
Eigen::Matrix4cd partial_swap_unitary(double a);

// Choi of X -> U X U^dagger for U : A0 B0 -> A1 B1 (input index a0-major).
BipartiteChannel choi_from_unitary(const ComplexMatrix& u, const ChannelDims& dims);
// (1 - p) J + p I_{A0 B0} (x) pi_{A1 B1}
BipartiteChannel depolarize_global(const BipartiteChannel& ch, double p);
// Two-way noiseless classical channel of m symbols per direction.
BipartiteChannel classical_noiseless_choi(int m);
BipartiteChannel identity_channel(int d_a, int d_b);

// SWAP^alpha or partial swap U_a followed by global depolarizing noise.
BipartiteChannel noisy_swap_alpha(double alpha, double p);
BipartiteChannel noisy_partial_swap(double a, double p);

// ch2 after ch1 via the link product.
BipartiteChannel compose(const BipartiteChannel& ch1, const BipartiteChannel& ch2);
// Parallel use; systems merged as A0 = A0 A0', etc.
BipartiteChannel tensor_channels(const BipartiteChannel& ch1, const BipartiteChannel& ch2);
// J_A (x) J_B from local Choi operators on (in, out); labels are ignored.
BipartiteChannel product_channel(const HermitianOperator& choi_a, const HermitianOperator& choi_b);

// Seeded generators. Local Choi operators come from Haar-random isometries
// (QR of a complex Gaussian matrix) into output (x) environment.
HermitianOperator random_local_choi(std::uint64_t seed, int d_in, int d_out);
BipartiteChannel random_ns_channel(std::uint64_t seed, const ChannelDims& dims, int terms = 3);
// A general (typically signalling) channel from a random Stinespring isometry.
BipartiteChannel random_channel(std::uint64_t seed, const ChannelDims& dims);

// Point-to-point channel A0 -> B1 with trivial A1 and B0; `choi` on (A0, B1).
BipartiteChannel embed_point_to_point(const ComplexMatrix& choi, int d_in, int d_out);

}  // namespace nscost
