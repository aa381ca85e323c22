#include "specvla/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace specvla {

namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "vocab_size",      "dimension_bounds",  "seed",           "agreement_p",
      "noise_sigma",     "verifier_sharpness", "top_k",         "tree_depth",
      "max_nodes",       "relaxation_thresholds", "per_dimension_r", "episodes",
      "target_length",   "success_tolerance", "report_positions", "threads",
      "verify_latency_ms", "draft_latency_ms", "measure_speedup", "measure_episodes",
      "format",          "output",
  };
  return keys;
}

[[noreturn]] void invalid(const std::string& what) { throw ConfigError(ExitCode::kInvalidValue, what); }

template <typename T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    invalid(std::string("config key '") + key + "' has the wrong type");
  }
}

int get_int(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) invalid(std::string("config key '") + key + "' must be an integer");
  return v.get<int>();
}

double get_real(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) invalid(std::string("config key '") + key + "' must be a number");
  return v.get<double>();
}

std::uint64_t parse_seed_text(const std::string& text, const char* origin) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos, 0);
  } catch (const std::exception&) {
    invalid(std::string(origin) + " is not an unsigned integer: '" + text + "'");
  }
  if (pos != text.size() || text.find('-') != std::string::npos) {
    invalid(std::string(origin) + " is not an unsigned integer: '" + text + "'");
  }
  return static_cast<std::uint64_t>(v);
}

}  // namespace

std::vector<AcceptancePolicy> RunConfig::policies() const {
  std::vector<AcceptancePolicy> out;
  out.reserve(relaxation_thresholds.size());
  for (int r : relaxation_thresholds) {
    out.push_back(r == 0 && !per_dimension_r ? AcceptancePolicy::strict()
                                             : AcceptancePolicy::relaxed(r, per_dimension_r));
  }
  return out;
}

void RunConfig::validate() const {
  if (vocab_size < 2) invalid("vocab_size must be >= 2");
  if (seed > static_cast<std::uint64_t>(INT64_MAX)) {
    // JSON integers above int64 range do not round-trip through every reader
    invalid("seed must fit in a signed 64-bit integer");
  }
  if (!(agreement_p >= 0.0 && agreement_p <= 1.0)) invalid("agreement_p must lie in [0, 1]");
  if (!(noise_sigma > 0.0)) invalid("noise_sigma must be > 0");
  if (!(verifier_sharpness > 0.0)) invalid("verifier_sharpness must be > 0");
  if (tree.top_k < 1 || tree.top_k > vocab_size) invalid("top_k must lie in [1, vocab_size]");
  if (tree.max_depth < 1) invalid("tree_depth must be >= 1");
  if (tree.max_nodes < 1) invalid("max_nodes must be >= 1");
  if (relaxation_thresholds.empty()) invalid("relaxation_thresholds must not be empty");
  std::set<int> seen;
  for (int r : relaxation_thresholds) {
    if (r < 0) invalid("relaxation thresholds must be >= 0");
    if (!seen.insert(r).second) invalid("relaxation thresholds must be distinct");
  }
  if (per_dimension_r) {
    for (int v : *per_dimension_r) {
      if (v < 0 && v != kInheritR) invalid("per_dimension_r entries must be >= 0 or -1");
    }
  }
  if (episodes < 1) invalid("episodes must be >= 1");
  if (target_length < 7 || target_length % 7 != 0) invalid("target_length must be a positive multiple of 7");
  if (success_tolerance < 0) invalid("success_tolerance must be >= 0");
  if (report_positions != 6 && report_positions != 7) invalid("report_positions must be 6 or 7");
  if (threads < 1) invalid("threads must be >= 1");
  if (!(verify_latency_ms >= 0.0) || !(draft_latency_ms >= 0.0)) invalid("latencies must be >= 0");
  if (measure_episodes < 1) invalid("measure_episodes must be >= 1");
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError(ExitCode::kMalformedJson, "config root must be a JSON object");
  for (const auto& item : j.items()) {
    if (!known_keys().count(item.key())) invalid("unknown config key '" + item.key() + "'");
  }

  RunConfig c;
  if (j.contains("vocab_size")) c.vocab_size = get_int(j, "vocab_size");
  if (j.contains("dimension_bounds")) {
    const auto& b = j.at("dimension_bounds");
    if (!b.is_array() || b.size() != kActionDims) invalid("dimension_bounds must list 7 [low, high] pairs");
    std::array<Interval, kActionDims> dims{};
    for (std::size_t d = 0; d < kActionDims; ++d) {
      if (!b[d].is_array() || b[d].size() != 2 || !b[d][0].is_number() || !b[d][1].is_number()) {
        invalid("dimension_bounds entries must be [low, high] number pairs");
      }
      dims[d] = Interval{b[d][0].get<double>(), b[d][1].get<double>()};
    }
    try {
      c.bounds = DimensionBounds(dims);
    } catch (const ActionSpaceError& e) {
      invalid(e.what());
    }
  }
  if (j.contains("seed")) {
    const auto& v = j.at("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      invalid("seed must be a non-negative integer");
    }
    c.seed = v.get<std::uint64_t>();
  }
  if (j.contains("agreement_p")) c.agreement_p = get_real(j, "agreement_p");
  if (j.contains("noise_sigma")) c.noise_sigma = get_real(j, "noise_sigma");
  if (j.contains("verifier_sharpness")) c.verifier_sharpness = get_real(j, "verifier_sharpness");
  if (j.contains("top_k")) c.tree.top_k = get_int(j, "top_k");
  if (j.contains("tree_depth")) c.tree.max_depth = get_int(j, "tree_depth");
  if (j.contains("max_nodes")) c.tree.max_nodes = get_int(j, "max_nodes");
  if (j.contains("relaxation_thresholds")) {
    const auto& v = j.at("relaxation_thresholds");
    if (!v.is_array()) invalid("relaxation_thresholds must be an array of integers");
    c.relaxation_thresholds.clear();
    for (const auto& r : v) {
      if (!r.is_number_integer()) invalid("relaxation_thresholds must be an array of integers");
      c.relaxation_thresholds.push_back(r.get<int>());
    }
  }
  if (j.contains("per_dimension_r")) {
    const auto& v = j.at("per_dimension_r");
    if (!v.is_null()) {
      if (!v.is_array() || v.size() != kActionDims) invalid("per_dimension_r must list 7 integers");
      std::array<int, kActionDims> arr{};
      for (std::size_t d = 0; d < kActionDims; ++d) {
        if (!v[d].is_number_integer()) invalid("per_dimension_r must list 7 integers");
        arr[d] = v[d].get<int>();
      }
      c.per_dimension_r = arr;
    }
  }
  if (j.contains("episodes")) c.episodes = get_int(j, "episodes");
  if (j.contains("target_length")) c.target_length = get_int(j, "target_length");
  if (j.contains("success_tolerance")) c.success_tolerance = get_int(j, "success_tolerance");
  if (j.contains("report_positions")) c.report_positions = get_int(j, "report_positions");
  if (j.contains("threads")) c.threads = get_int(j, "threads");
  if (j.contains("verify_latency_ms")) c.verify_latency_ms = get_real(j, "verify_latency_ms");
  if (j.contains("draft_latency_ms")) c.draft_latency_ms = get_real(j, "draft_latency_ms");
  if (j.contains("measure_speedup")) c.measure_speedup = get_as<bool>(j, "measure_speedup");
  if (j.contains("measure_episodes")) c.measure_episodes = get_int(j, "measure_episodes");
  if (j.contains("format")) c.format = parse_format(get_as<std::string>(j, "format"));
  if (j.contains("output")) c.output = get_as<std::string>(j, "output");
  return c;
}

json config_to_json(const RunConfig& c) {
  json bounds = json::array();
  for (const auto& d : c.bounds.dims()) bounds.push_back({d.low, d.high});
  json j;
  j["vocab_size"] = c.vocab_size;
  j["dimension_bounds"] = bounds;
  j["seed"] = c.seed;
  j["agreement_p"] = c.agreement_p;
  j["noise_sigma"] = c.noise_sigma;
  j["verifier_sharpness"] = c.verifier_sharpness;
  j["top_k"] = c.tree.top_k;
  j["tree_depth"] = c.tree.max_depth;
  j["max_nodes"] = c.tree.max_nodes;
  j["relaxation_thresholds"] = c.relaxation_thresholds;
  j["per_dimension_r"] = c.per_dimension_r ? json(*c.per_dimension_r) : json(nullptr);
  j["episodes"] = c.episodes;
  j["target_length"] = c.target_length;
  j["success_tolerance"] = c.success_tolerance;
  j["report_positions"] = c.report_positions;
  j["threads"] = c.threads;
  j["verify_latency_ms"] = c.verify_latency_ms;
  j["draft_latency_ms"] = c.draft_latency_ms;
  j["measure_speedup"] = c.measure_speedup;
  j["measure_episodes"] = c.measure_episodes;
  j["format"] = to_string(c.format);
  j["output"] = c.output;
  return j;
}

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(ExitCode::kMissingFile, "cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(ExitCode::kMalformedJson, "malformed JSON in '" + path + "': " + e.what());
  }
}

}  // namespace

RunConfig load_config_file(const std::string& path) { return config_from_json(read_json_file(path)); }

RunConfig parse_config(const std::optional<std::string>& path, const ConfigOverrides& o) {
  RunConfig c;
  bool seed_from_file = false;
  if (path) {
    const json j = read_json_file(*path);
    c = config_from_json(j);
    seed_from_file = j.is_object() && j.contains("seed");
  }
  if (!seed_from_file) {
    if (const char* env = std::getenv("SPECDEC_SEED"); env != nullptr && *env != '\0') {
      c.seed = parse_seed_text(env, "SPECDEC_SEED");
    }
  }
  if (o.seed) c.seed = *o.seed;
  if (!o.thresholds.empty()) c.relaxation_thresholds = o.thresholds;
  if (o.top_k) c.tree.top_k = *o.top_k;
  if (o.depth) c.tree.max_depth = *o.depth;
  if (o.max_nodes) c.tree.max_nodes = *o.max_nodes;
  if (o.episodes) c.episodes = *o.episodes;
  if (o.length) c.target_length = *o.length;
  if (o.format) c.format = *o.format;
  if (o.output) c.output = *o.output;
  c.validate();
  return c;
}

ReportFormat parse_format(const std::string& name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "table") return ReportFormat::kTable;
  invalid("unknown report format '" + name + "' (expected json, csv or table)");
}

std::string to_string(ReportFormat format) {
  switch (format) {
    case ReportFormat::kJson: return "json";
    case ReportFormat::kCsv: return "csv";
    case ReportFormat::kTable: return "table";
  }
  return "table";
}

}  // namespace specvla
