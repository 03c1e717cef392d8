// Shared setup: a synthetic corpus on disk and the small configuration that
// trains on it in seconds.
#pragma once

#include <filesystem>
#include <sstream>
#include <string>

#include "l2t/commands.hpp"
#include "l2t/config.hpp"

namespace fixture {

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("l2t_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// The acceptance smoke setting: 50k-token synthetic corpus, D=64, 2 blocks,
/// 2 epochs, deterministic.
inline l2t::cli::RunConfig smoke_config(const std::filesystem::path& dir, std::size_t train_tokens = 50000,
                                        std::size_t valid_tokens = 5000) {
  std::ostringstream sink;
  l2t::cli::cmd_make_synthetic(dir / "data", train_tokens, valid_tokens, 200, 0, sink);
  l2t::cli::RunConfig c;
  c.mode = l2t::cli::Mode::kL2T;
  c.train_path = (dir / "data" / "train.txt").string();
  c.valid_path = (dir / "data" / "valid.txt").string();
  c.output_dir = (dir / "run").string();
  c.model.dim = 64;
  c.model.n_blocks = 2;
  c.model.filter_hidden = 32;
  c.seq_len = 32;
  c.model.max_seq_len = 32;
  c.batch_size = 8;
  c.epochs = 2;
  c.student_opt.learning_rate = 3e-3;
  c.warmup_epochs = 0.25;
  c.deterministic = true;
  return c;
}

/// A much smaller variant for tests that only need a few steps.
inline l2t::cli::RunConfig micro_config(const std::filesystem::path& dir) {
  auto c = smoke_config(dir, 3000, 800);
  c.model.dim = 8;
  c.model.n_blocks = 1;
  c.model.filter_hidden = 8;
  c.model.filter_pos_dim = 5;
  c.seq_len = 8;
  c.model.max_seq_len = 8;
  c.batch_size = 4;
  c.dln.hidden = 8;
  c.teacher.summary_dim = 8;
  c.teacher.widths = {16, 16};
  c.activation_threshold = 4;
  c.teacher_batch = 4;
  return c;
}

}  // namespace fixture
