// Command-line entry point: train, eval, compare, make-synthetic.

#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "l2t/commands.hpp"
#include "l2t/config.hpp"

namespace {

using namespace l2t::cli;

struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  bool deterministic = false;
};

// One `--<key> <value>` option per config key; `--deterministic` is a bare flag.
void add_config_flags(CLI::App* cmd, ConfigFlags& flags, bool require_config) {
  auto* opt = cmd->add_option("--config", flags.config_path, "run configuration file (key: value lines)");
  if (require_config) opt->required();
  for (const auto& key : config_keys()) {
    if (key == "deterministic") {
      cmd->add_flag("--deterministic", flags.deterministic, "single-threaded, bit-reproducible kernels");
    } else {
      cmd->add_option("--" + key, flags.values[key], "override " + key);
    }
  }
}

RunConfig resolve(const ConfigFlags& flags, CLI::App* cmd) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& key : config_keys()) {
    if (key == "deterministic") continue;
    if (cmd->count("--" + key) > 0) overrides.emplace_back(key, flags.values.at(key));
  }
  if (flags.deterministic) overrides.emplace_back("deterministic", "true");
  const std::filesystem::path path(flags.config_path);
  return resolve_config(flags.config_path.empty() ? nullptr : &path, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyena language-model trainer with a learned loss schedule"};
  app.require_subcommand(1);

  ConfigFlags train_flags;
  auto* train = app.add_subcommand("train", "train a model and export metrics");
  add_config_flags(train, train_flags, false);

  ConfigFlags eval_flags;
  std::string checkpoint;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the validation file");
  eval->add_option("--checkpoint", checkpoint, "checkpoint archive (.l2th)")->required();
  add_config_flags(eval, eval_flags, true);

  std::string dir_a, dir_b, compare_out;
  auto* compare = app.add_subcommand("compare", "compare a baseline run against a second run");
  compare->add_option("baseline_dir", dir_a, "baseline run directory")->required();
  compare->add_option("candidate_dir", dir_b, "run directory to compare")->required();
  compare->add_option("--out", compare_out, "where to write compare.json");

  std::string synth_dir;
  std::size_t synth_train = 50000, synth_valid = 5000, synth_words = 200;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("make-synthetic", "write a synthetic Markov-chain corpus");
  synth->add_option("--out", synth_dir, "output directory")->required();
  synth->add_option("--train-tokens", synth_train, "training tokens (including line ends)");
  synth->add_option("--valid-tokens", synth_valid, "validation tokens (including line ends)");
  synth->add_option("--words", synth_words, "vocabulary size of the source");
  synth->add_option("--seed", synth_seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  return run_guarded(
      [&] {
        if (*train) return cmd_train(resolve(train_flags, train), std::cout);
        if (*eval) return cmd_eval(checkpoint, resolve(eval_flags, eval), std::cout);
        if (*compare) return cmd_compare(dir_a, dir_b, compare_out, std::cout);
        return cmd_make_synthetic(synth_dir, synth_train, synth_valid, synth_words, synth_seed, std::cout);
      },
      std::cerr);
}
