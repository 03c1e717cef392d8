#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <vector>

#include "l2t/checkpoint.hpp"
#include "l2t/config.hpp"
#include "l2t/corpus.hpp"
#include "l2t/dln.hpp"
#include "l2t/hyena.hpp"
#include "l2t/optim.hpp"
#include "l2t/teacher.hpp"

namespace l2t::train {

struct StepMetrics {
  std::uint64_t step = 0;  // 1-based
  double loss = 0;
  double ce = 0;
  double l2 = 0;
  double lambda = 0;  // 0 in baseline mode
  double lr_student = 0;
  double lr_teacher = 0;
  double lr_dln = 0;
  double grad_norm_student = 0;
  double grad_norm_teacher = 0;
  double grad_norm_dln = 0;
  double teacher_huber = 0;
  bool teacher_active = false;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;
  double val_loss = 0;
  double val_ppl = 0;
  double mean_lambda = 0;
  double teacher_huber = 0;  // mean over active steps, 0 if none
  double lr_student = 0;     // at the epoch's last step
  double seconds = 0;
};

struct TrainingHistory {
  std::vector<StepMetrics> steps;
  std::vector<EpochMetrics> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0;
  double best_val_ppl = 0;
  double total_seconds = 0;
};

struct EvalResult {
  double val_loss = 0;
  double perplexity = 0;
  std::size_t tokens = 0;
};

/// Token-weighted mean cross-entropy over every batch, and its exponential.
/// Throws DataError when there is nothing to evaluate.
template <class T>
EvalResult evaluate(const hyena::HyenaParams<T>& params, const std::vector<corpus::TokenBatch>& batches);

struct Schedule {
  std::uint64_t total_steps = 0;
  std::uint64_t warmup_steps = 0;
  double lr_min_ratio = 0.01;

  double lr(std::uint64_t step, double lr_max) const {
    return optim::cosine_warmup_lr(step, total_steps, warmup_steps, lr_max, lr_max * lr_min_ratio);
  }
};

/// total = epochs × batches_per_epoch; warmup = round(warmup_epochs × batches_per_epoch).
/// Throws ConfigError when warmup does not leave any annealing steps.
Schedule make_schedule(const cli::RunConfig& cfg, std::size_t batches_per_epoch);

/// Student, DLN, teacher, their optimizer states, the feature-normalization
/// state, the replay buffer and the sampling generator of one run.
class Session {
 public:
  Session(const cli::RunConfig& cfg, std::size_t vocab_size, Schedule schedule);

  /// One optimizer step. Baseline mode trains the student on plain CE and
  /// leaves every other component untouched. A NumericalError names the step.
  StepMetrics train_step(const corpus::TokenBatch& batch);

  EvalResult evaluate(const std::vector<corpus::TokenBatch>& batches) const;

  /// student.*, dln.*, dln_norm.*, teacher.* arrays.
  checkpoint::Archive to_archive() const;
  /// Throws CheckpointError on missing arrays or shape mismatch.
  void load_archive(const checkpoint::Archive& archive);

  const cli::RunConfig& config() const { return cfg_; }
  const hyena::HyenaParams<float>& student() const { return student_; }
  hyena::HyenaParams<float>& student() { return student_; }
  const dln::DlnParams<float>& dln() const { return dln_; }
  const teacher::TeacherParams<float>& teacher() const { return teacher_; }
  const teacher::MemoryBuffer& buffer() const { return buffer_; }
  const dln::FeatureNormState& norm_state() const { return norm_; }
  std::uint64_t steps_taken() const { return step_; }
  const Schedule& schedule() const { return schedule_; }

 private:
  StepMetrics step_impl(const corpus::TokenBatch& batch);

  cli::RunConfig cfg_;
  Schedule schedule_;
  hyena::HyenaParams<float> student_;
  dln::DlnParams<float> dln_;
  teacher::TeacherParams<float> teacher_;
  optim::AdamWState<float> student_state_, dln_state_, teacher_state_;
  dln::FeatureNormState norm_;
  teacher::MemoryBuffer buffer_;
  std::mt19937_64 rng_;
  std::uint64_t step_ = 0;
};

/// Corpora prepared from the configured paths.
struct PreparedData {
  corpus::Vocab vocab;
  std::vector<corpus::TokenBatch> train_batches;
  std::vector<corpus::TokenBatch> valid_batches;
  double valid_oov_rate = 0;
};

/// Reads, builds the vocabulary from the training file, and batches both files.
PreparedData prepare_data(const cli::RunConfig& cfg);
/// Same, with an existing vocabulary and only the validation file.
std::vector<corpus::TokenBatch> prepare_valid(const cli::RunConfig& cfg, const corpus::Vocab& vocab);

using EpochCallback = std::function<void(const EpochMetrics&)>;

struct TrainResult {
  TrainingHistory history;
  corpus::Vocab vocab;
  std::size_t batches_per_epoch = 0;
  Schedule schedule;
  std::size_t parameter_count = 0;
};

/// Full run. Writes best.l2th, last.l2th and vocab.txt into cfg.output_dir.
TrainResult train(const cli::RunConfig& cfg, const EpochCallback& on_epoch = {});

/// Applies the threads/deterministic settings to the numeric kernels.
void configure_threads(const cli::RunConfig& cfg);

/// Stable per-component seed derived from the run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace l2t::train
