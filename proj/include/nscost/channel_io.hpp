#pragma once

// Channel spec files (JSON, UTF-8):
//
//   {"kind": "swap_alpha", "params": {"alpha": 0.5, "p": 0.2}, "dims": [2, 2, 2, 2]}
//   {"kind": "partial_swap", "params": {"a": 0.3, "p": 0}}
//   {"kind": "classical_noiseless", "params": {"m": 2}}
//   {"kind": "dense", "dims": [2, 1, 1, 2], "choi": [[re, im], ...]}
//
// dims are (A0, A1, B0, B1); the dense Choi is row-major on that order.
// dims are optional for the parametric kinds but must match when given.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "nscost/channel.hpp"

namespace nscost {

class ChannelSpecError : public std::runtime_error {
 public:
  // line 0 means the position is unknown.
  ChannelSpecError(const std::string& source, int line, const std::string& field,
                   const std::string& message);
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

struct ChannelSpec {
  std::string kind;
  std::map<std::string, double> params;
  ChannelDims dims;
  bool has_dims = false;
  std::vector<Complex> choi;  // dense only, row-major
};

// `source` names the input in diagnostics (a path or "<string>").
ChannelSpec parse_channel_spec(const std::string& text, const std::string& source = "<string>");
// Builds and validates (CPTP) the channel; failures become ChannelSpecError.
BipartiteChannel build_channel(const ChannelSpec& spec, const std::string& source = "<string>");
BipartiteChannel load_channel_file(const std::string& path);

// Dense spec of an arbitrary channel; parses back to an equal Choi.
std::string channel_to_spec_json(const BipartiteChannel& ch, int indent = 2);

}  // namespace nscost
