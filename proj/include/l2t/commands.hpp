#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

#include "l2t/config.hpp"
#include "l2t/trainer.hpp"

namespace l2t::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumerical = 4,
  kExitCheckpoint = 5,
};

/// Runs fn, mapping library errors to exit codes and printing a one-line
/// diagnostic to err.
int run_guarded(const std::function<int()>& fn, std::ostream& err);

/// Trains, then writes metrics, checkpoints and the resolved config
/// (config.txt) into cfg.output_dir.
int cmd_train(const RunConfig& cfg, std::ostream& out);

struct EvalReport {
  double val_loss = 0;
  double perplexity = 0;
  std::size_t tokens = 0;
};

/// Loads the student from a checkpoint and evaluates it on cfg.valid_path.
/// The vocabulary comes from vocab.txt beside the checkpoint, else from
/// cfg.train_path. Writes eval.json beside the checkpoint.
EvalReport evaluate_checkpoint(const std::filesystem::path& checkpoint, const RunConfig& cfg);
int cmd_eval(const std::filesystem::path& checkpoint, const RunConfig& cfg, std::ostream& out);

/// Writes compare.json into the current directory or `out_path` when given.
int cmd_compare(const std::filesystem::path& baseline_dir, const std::filesystem::path& candidate_dir,
                const std::filesystem::path& out_path, std::ostream& out);

/// Writes train.txt and valid.txt generated from one Markov source.
int cmd_make_synthetic(const std::filesystem::path& dir, std::size_t train_tokens, std::size_t valid_tokens,
                       std::size_t words, std::uint64_t seed, std::ostream& out);

}  // namespace l2t::cli
