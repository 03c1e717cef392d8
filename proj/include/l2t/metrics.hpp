#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "l2t/config.hpp"
#include "l2t/trainer.hpp"

namespace l2t::cli {

/// 9 significant digits, the representation every metrics file uses.
std::string format_metric(double v);
/// The double a formatted metric reads back as.
double printed_value(double v);

inline const std::vector<std::string> kEpochColumns = {"epoch", "train_loss", "val_loss", "val_ppl",
                                                       "mean_lambda", "teacher_huber", "lr_student"};
inline const std::vector<std::string> kStepColumns = {"step", "loss", "ce", "l2", "lambda", "grad_norm_student"};
inline const std::vector<std::string> kTimingColumns = {"epoch", "seconds"};

std::string epoch_csv(const train::TrainingHistory& h);
std::string step_csv(const train::TrainingHistory& h);
std::string timing_csv(const train::TrainingHistory& h);
nlohmann::json metrics_json(const train::TrainResult& result, const RunConfig& cfg);

/// metrics_epoch.csv, metrics_step.csv, metrics_timing.csv and metrics.json.
void write_metrics(const std::filesystem::path& dir, const train::TrainResult& result, const RunConfig& cfg);

struct RunSummary {
  std::string label;
  double best_val_ppl = 0;
  double best_val_loss = 0;
  std::size_t best_epoch = 0;
  double final_train_loss = 0;
  double total_seconds = 0;
};

struct ComparisonReport {
  RunSummary baseline;
  RunSummary candidate;
  double ppl_reduction_abs = 0;       // base − candidate
  double ppl_reduction_rel = 0;       // (base − candidate) / base
  double val_loss_reduction_abs = 0;
  double train_loss_reduction_rel = 0;
  double time_ratio = 0;              // candidate / base
};

/// Reads <dir>/metrics.json. Throws ReportError when absent or malformed.
RunSummary load_run_summary(const std::filesystem::path& dir);
ComparisonReport compare_runs(const RunSummary& baseline, const RunSummary& candidate);
std::string format_report(const ComparisonReport& r);
nlohmann::json report_json(const ComparisonReport& r);

}  // namespace l2t::cli
