#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "l2t/dln.hpp"
#include "l2t/hyena.hpp"
#include "l2t/optim.hpp"
#include "l2t/teacher.hpp"

namespace l2t::cli {

enum class Mode { kBaseline, kL2T };

std::string to_string(Mode m);

/// Everything a run needs. Defaults are the full-size PTB settings where they
/// exist; the rest are documented choices.
struct RunConfig {
  Mode mode = Mode::kL2T;
  std::string train_path = "data/ptb.train.txt";
  std::string valid_path = "data/ptb.valid.txt";
  std::string output_dir = "runs/l2t";

  hyena::HyenaConfig model;  // model.vocab_size is the vocabulary cap
  dln::DlnConfig dln;
  teacher::TeacherConfig teacher;  // summary_dim follows dln.hidden

  optim::OptimizerConfig student_opt = optim::student_defaults();
  optim::OptimizerConfig teacher_opt = optim::teacher_defaults();
  optim::OptimizerConfig dln_opt = optim::dln_defaults();
  double lr_min_ratio = 0.01;
  double warmup_epochs = 2.0;
  bool schedule_teacher = true;
  bool schedule_dln = true;

  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  std::size_t seq_len = 64;
  std::size_t eval_batch_size = 0;  // 0: same as batch_size
  double beta = 0.01;
  double huber_delta = 1.0;
  double clip_norm = 1.0;
  std::size_t buffer_capacity = teacher::MemoryBuffer::kDefaultCapacity;
  std::size_t teacher_batch = 32;
  std::size_t activation_threshold = 64;
  double norm_momentum = 0.99;
  double priority_exponent = 1.0;
  std::size_t max_steps = 0;  // 0: no cap
  std::uint64_t seed = 0;
  bool deterministic = false;
  std::size_t threads = 0;  // 0: hardware concurrency

  std::size_t effective_eval_batch() const { return eval_batch_size ? eval_batch_size : batch_size; }
};

bool operator==(const RunConfig& a, const RunConfig& b);

/// Every accepted key, in echo order.
const std::vector<std::string>& config_keys();
bool is_bool_key(const std::string& key);

/// Sets one key from its text value. Throws ConfigError naming the key on an
/// unknown key or unparsable value.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);

/// `key: value` per line; '#' starts a comment; blank lines ignored.
RunConfig parse_config_text(const std::string& text, RunConfig base = {});
RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {});

/// Applies file values then flag overrides, then validates.
RunConfig resolve_config(const std::filesystem::path* file,
                         const std::vector<std::pair<std::string, std::string>>& overrides);

/// Range checks. Throws ConfigError naming the key.
void validate(const RunConfig& cfg);

/// Text that parse_config_text maps back to an identical RunConfig.
std::string echo_config(const RunConfig& cfg);

}  // namespace l2t::cli
