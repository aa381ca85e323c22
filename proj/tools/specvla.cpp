// specvla: speculative action-token decoding simulator.
//
//   specvla decode [--replay NAME] [--episode N] ...   token trace per pass
//   specvla bench  ...                                  batch statistics
//   specvla ablate ...                                  relaxation sweep

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "specvla/case_study.hpp"
#include "specvla/config.hpp"
#include "specvla/harness.hpp"

namespace {

using specvla::ExitCode;

struct CommonFlags {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::vector<int> thresholds;
  std::optional<int> top_k;
  std::optional<int> depth;
  std::optional<int> max_nodes;
  std::optional<int> episodes;
  std::optional<int> length;
  std::optional<std::string> format;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file");
  cmd->add_option("--seed", f.seed, "master seed (falls back to SPECDEC_SEED)");
  cmd->add_option("--r", f.thresholds, "relaxation threshold, repeatable; 0 is strict");
  cmd->add_option("--top-k", f.top_k, "draft candidates per expanded node");
  cmd->add_option("--depth", f.depth, "draft tree depth");
  cmd->add_option("--max-nodes", f.max_nodes, "draft tree node budget");
  cmd->add_option("--episodes", f.episodes, "episodes per policy");
  cmd->add_option("--length", f.length, "tokens per episode (multiple of 7)");
  cmd->add_option("--format", f.format, "json, csv or table")->check(CLI::IsMember({"json", "csv", "table"}));
  cmd->add_option("--out", f.out, "output path (default stdout)");
}

specvla::RunConfig resolve(const CommonFlags& f) {
  specvla::ConfigOverrides o;
  o.seed = f.seed;
  o.thresholds = f.thresholds;
  o.top_k = f.top_k;
  o.depth = f.depth;
  o.max_nodes = f.max_nodes;
  o.episodes = f.episodes;
  o.length = f.length;
  if (f.format) o.format = specvla::parse_format(*f.format);
  o.output = f.out;
  return specvla::parse_config(f.config_path, o);
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

int run_decode(const CommonFlags& f, const std::optional<std::string>& replay_name, int episode) {
  const auto config = resolve(f);
  std::string text;
  if (replay_name) {
    const auto& scenario = specvla::case_study(*replay_name);
    specvla::PrefixState start;
    start.emitted = scenario.context;
    text += "case study " + scenario.name + ": " + scenario.description + "\n";
    for (const auto& policy : config.policies()) {
      const auto trace = specvla::replay(scenario, policy);
      text += "\n" + specvla::policy_label(policy) + "\n" + specvla::format_trace(start, trace);
    }
  } else {
    const auto setup = specvla::make_episode(config, episode);
    for (const auto& policy : config.policies()) {
      const auto trace = specvla::decode_episode(setup.prefix, *setup.verifier, *setup.draft, config.tree, policy,
                                                 static_cast<std::size_t>(config.target_length));
      text += specvla::policy_label(policy) + "\n" + specvla::format_trace(setup.prefix, trace) + "\n";
    }
  }
  emit(text, config.output);
  return static_cast<int>(ExitCode::kOk);
}

int run_bench(const CommonFlags& f) {
  const auto config = resolve(f);
  const auto report = specvla::aggregate(specvla::run_batch(config), config);
  emit(specvla::render(report, config.format), config.output);
  if (!report.identities_ok()) {
    std::cerr << "error: report identities do not hold\n";
    return static_cast<int>(ExitCode::kIdentityViolation);
  }
  return static_cast<int>(ExitCode::kOk);
}

int run_ablate(const CommonFlags& f) {
  const auto config = resolve(f);
  const auto report = specvla::run_ablation(config);
  emit(specvla::render(report, config.format), config.output);
  if (!report.identities_ok) {
    std::cerr << "error: report identities do not hold\n";
    return static_cast<int>(ExitCode::kIdentityViolation);
  }
  return static_cast<int>(ExitCode::kOk);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speculative decoding with distance-relaxed acceptance for action tokens"};
  app.require_subcommand(1);

  CommonFlags decode_flags, bench_flags, ablate_flags;
  std::optional<std::string> replay_name;
  int episode = 0;

  auto* decode = app.add_subcommand("decode", "decode one episode and print the per-pass token trace");
  add_common(decode, decode_flags);
  decode->add_option("--replay", replay_name, "replay a scripted case study (action1, action3, action1-style3)");
  decode->add_option("--episode", episode, "episode index under the master seed")->check(CLI::NonNegativeNumber);

  auto* bench = app.add_subcommand("bench", "run every policy over the episode batch and report statistics");
  add_common(bench, bench_flags);

  auto* ablate = app.add_subcommand("ablate", "sweep relaxation thresholds");
  add_common(ablate, ablate_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  try {
    if (decode->parsed()) return run_decode(decode_flags, replay_name, episode);
    if (bench->parsed()) return run_bench(bench_flags);
    return run_ablate(ablate_flags);
  } catch (const specvla::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kRunFailed);
  }
}
