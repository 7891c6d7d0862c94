#include "nscost/channel_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace nscost {

namespace {

using nlohmann::json;

std::string format_message(const std::string& source, int line, const std::string& field,
                           const std::string& message) {
  std::string out = source;
  if (line > 0) out += ":" + std::to_string(line);
  out += ": ";
  if (!field.empty()) out += "field '" + field + "': ";
  return out + message;
}

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

// Line of the first occurrence of "key" used as an object key; 0 if absent.
int line_of_key(const std::string& text, const std::string& key) {
  const std::string quoted = "\"" + key + "\"";
  std::size_t pos = 0;
  while ((pos = text.find(quoted, pos)) != std::string::npos) {
    std::size_t after = pos + quoted.size();
    while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
    if (after < text.size() && text[after] == ':') return line_of_offset(text, pos);
    pos = after;
  }
  return 0;
}

class Diagnostics {
 public:
  Diagnostics(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& field, const std::string& message) const {
    // The innermost key of a dotted path locates the line.
    const std::string key = field.substr(field.rfind('.') + 1);
    const std::string bare = key.substr(0, key.find('['));
    throw ChannelSpecError(source_, bare.empty() ? 0 : line_of_key(text_, bare), field, message);
  }

 private:
  const std::string& text_;
  std::string source_;
};

const std::map<std::string, std::set<std::string>> kAllowedParams{
    {"swap_alpha", {"alpha", "p"}},
    {"partial_swap", {"a", "p"}},
    {"classical_noiseless", {"m"}},
    {"dense", {}},
};

double read_number(const json& v, const Diagnostics& diag, const std::string& field) {
  if (!v.is_number()) diag.fail(field, "expected a number, got " + std::string(v.type_name()));
  const double x = v.get<double>();
  if (!std::isfinite(x)) diag.fail(field, "not finite");
  return x;
}

ChannelDims expected_dims(const ChannelSpec& spec) {
  if (spec.kind == "classical_noiseless") {
    const int m = static_cast<int>(spec.params.at("m"));
    return {m, m, m, m};
  }
  return {2, 2, 2, 2};
}

}  // namespace

ChannelSpecError::ChannelSpecError(const std::string& source, int line, const std::string& field,
                                   const std::string& message)
    : std::runtime_error(format_message(source, line, field, message)), line_(line), field_(field) {}

ChannelSpec parse_channel_spec(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ChannelSpecError(source, line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1), "",
                           "malformed JSON (" + std::string(e.what()) + ")");
  }
  const Diagnostics diag(text, source);
  if (!j.is_object()) diag.fail("", "top level must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "kind" && key != "params" && key != "dims" && key != "choi") {
      diag.fail(key, "unknown field");
    }
  }

  ChannelSpec spec;
  if (!j.contains("kind")) diag.fail("kind", "missing");
  if (!j["kind"].is_string()) diag.fail("kind", "expected a string");
  spec.kind = j["kind"].get<std::string>();
  const auto allowed = kAllowedParams.find(spec.kind);
  if (allowed == kAllowedParams.end()) {
    diag.fail("kind", "unknown kind '" + spec.kind +
                          "' (expected swap_alpha, partial_swap, classical_noiseless or dense)");
  }

  if (j.contains("params")) {
    if (!j["params"].is_object()) diag.fail("params", "expected an object");
    for (const auto& [key, value] : j["params"].items()) {
      const std::string field = "params." + key;
      if (!allowed->second.count(key)) {
        diag.fail(field, "not a parameter of kind '" + spec.kind + "'");
      }
      spec.params[key] = read_number(value, diag, field);
    }
  }
  auto require = [&](const std::string& key) {
    if (!spec.params.count(key)) diag.fail("params." + key, "missing");
  };
  auto probability = [&](const std::string& key) {
    const double v = spec.params[key];
    if (v < 0.0 || v > 1.0) diag.fail("params." + key, "must lie in [0, 1]");
  };
  if (spec.kind == "swap_alpha") {
    require("alpha");
    spec.params.try_emplace("p", 0.0);
    probability("p");
  } else if (spec.kind == "partial_swap") {
    require("a");
    spec.params.try_emplace("p", 0.0);
    probability("a");
    probability("p");
  } else if (spec.kind == "classical_noiseless") {
    require("m");
    const double m = spec.params["m"];
    if (m < 1.0 || m != std::floor(m)) diag.fail("params.m", "must be a positive integer");
  }

  if (j.contains("dims")) {
    const json& d = j["dims"];
    if (!d.is_array() || d.size() != 4) diag.fail("dims", "expected four positive integers");
    int v[4];
    for (int i = 0; i < 4; ++i) {
      const std::string field = "dims[" + std::to_string(i) + "]";
      if (!d[i].is_number_integer() || d[i].get<long long>() < 1) {
        diag.fail(field, "expected a positive integer");
      }
      v[i] = static_cast<int>(d[i].get<long long>());
    }
    spec.dims = {v[0], v[1], v[2], v[3]};
    spec.has_dims = true;
  }

  if (spec.kind == "dense") {
    if (!spec.has_dims) diag.fail("dims", "required for kind 'dense'");
    if (!j.contains("choi")) diag.fail("choi", "required for kind 'dense'");
    const json& c = j["choi"];
    const long long side = 1LL * spec.dims.a0 * spec.dims.a1 * spec.dims.b0 * spec.dims.b1;
    if (!c.is_array()) diag.fail("choi", "expected a list of [re, im] pairs");
    if (static_cast<long long>(c.size()) != side * side) {
      diag.fail("choi", "expected " + std::to_string(side * side) + " entries for dims " +
                            to_string(spec.dims) + ", got " + std::to_string(c.size()));
    }
    spec.choi.reserve(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      const std::string field = "choi[" + std::to_string(i) + "]";
      if (!c[i].is_array() || c[i].size() != 2) diag.fail(field, "expected [re, im]");
      spec.choi.emplace_back(read_number(c[i][0], diag, field), read_number(c[i][1], diag, field));
    }
  } else {
    if (j.contains("choi")) diag.fail("choi", "only allowed for kind 'dense'");
    if (spec.has_dims && !(spec.dims == expected_dims(spec))) {
      diag.fail("dims", "kind '" + spec.kind + "' has dims " + to_string(expected_dims(spec)) +
                            ", got " + to_string(spec.dims));
    }
    spec.dims = expected_dims(spec);
  }
  return spec;
}

BipartiteChannel build_channel(const ChannelSpec& spec, const std::string& source) {
  try {
    if (spec.kind == "swap_alpha") return noisy_swap_alpha(spec.params.at("alpha"), spec.params.at("p"));
    if (spec.kind == "partial_swap") return noisy_partial_swap(spec.params.at("a"), spec.params.at("p"));
    if (spec.kind == "classical_noiseless") {
      return classical_noiseless_choi(static_cast<int>(spec.params.at("m")));
    }
    if (spec.kind == "dense") {
      const int side = spec.dims.layout().total_dim();
      if (static_cast<long long>(spec.choi.size()) != 1LL * side * side) {
        throw ChannelSpecError(source, 0, "choi", "entry count does not match dims");
      }
      ComplexMatrix m(side, side);
      for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) m(r, c) = spec.choi[static_cast<std::size_t>(r) * side + c];
      }
      const double herm = kernels::hermiticity_error(m);
      if (herm > kPsdTol * std::max(1.0, kernels::max_abs(m))) {
        std::ostringstream os;
        os << "Choi is not Hermitian (max |J - J^dagger| = " << herm << ")";
        throw ChannelSpecError(source, 0, "choi", os.str());
      }
      return BipartiteChannel::from_matrix(spec.dims, m);
    }
  } catch (const ChannelSpecError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ChannelSpecError(source, 0, spec.kind == "dense" ? "choi" : "params", e.what());
  }
  throw ChannelSpecError(source, 0, "kind", "unknown kind '" + spec.kind + "'");
}

BipartiteChannel load_channel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ChannelSpecError(path, 0, "", "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return build_channel(parse_channel_spec(buf.str(), path), path);
}

std::string channel_to_spec_json(const BipartiteChannel& ch, int indent) {
  nlohmann::ordered_json j;
  const ChannelDims& d = ch.dims();
  j["kind"] = "dense";
  j["dims"] = {d.a0, d.a1, d.b0, d.b1};
  json entries = json::array();
  const ComplexMatrix& m = ch.choi().matrix();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) entries.push_back({m(r, c).real(), m(r, c).imag()});
  }
  j["choi"] = entries;
  return j.dump(indent);
}

}  // namespace nscost
