#include "l2t/metrics.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "l2t/error.hpp"

namespace l2t::cli {
namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

std::string join_header(const std::vector<std::string>& cols) {
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
  return s + "\n";
}

template <class... Vals>
std::string csv_row(std::size_t first, Vals... vals) {
  std::string s = std::to_string(first);
  ((s += "," + format_metric(vals)), ...);
  return s + "\n";
}

double number_field(const nlohmann::json& j, const char* key, const std::filesystem::path& file) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw ReportError(file.string() + ": missing numeric field '" + key + "'");
  }
  return j[key].get<double>();
}

}  // namespace

std::string format_metric(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double printed_value(double v) { return std::strtod(format_metric(v).c_str(), nullptr); }

std::string epoch_csv(const train::TrainingHistory& h) {
  std::string s = join_header(kEpochColumns);
  for (const auto& e : h.epochs) {
    s += csv_row(e.epoch, e.train_loss, e.val_loss, e.val_ppl, e.mean_lambda, e.teacher_huber, e.lr_student);
  }
  return s;
}

std::string step_csv(const train::TrainingHistory& h) {
  std::string s = join_header(kStepColumns);
  for (const auto& m : h.steps) s += csv_row(m.step, m.loss, m.ce, m.l2, m.lambda, m.grad_norm_student);
  return s;
}

std::string timing_csv(const train::TrainingHistory& h) {
  std::string s = join_header(kTimingColumns);
  for (const auto& e : h.epochs) s += csv_row(e.epoch, e.seconds);
  return s;
}

nlohmann::json metrics_json(const train::TrainResult& result, const RunConfig& cfg) {
  using nlohmann::json;
  const auto& h = result.history;
  auto p = printed_value;
  json j;
  j["mode"] = to_string(cfg.mode);
  j["seed"] = cfg.seed;
  j["vocab_size"] = result.vocab.size();
  j["parameter_count"] = result.parameter_count;
  j["batches_per_epoch"] = result.batches_per_epoch;
  j["total_steps"] = result.schedule.total_steps;
  j["warmup_steps"] = result.schedule.warmup_steps;
  json epochs = json::array();
  for (const auto& e : h.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", p(e.train_loss)},
                      {"val_loss", p(e.val_loss)},
                      {"val_ppl", p(e.val_ppl)},
                      {"mean_lambda", p(e.mean_lambda)},
                      {"teacher_huber", p(e.teacher_huber)},
                      {"lr_student", p(e.lr_student)},
                      {"seconds", p(e.seconds)}});
  }
  j["epochs"] = epochs;
  json steps = json::array();
  for (const auto& m : h.steps) {
    steps.push_back({{"step", m.step},
                     {"loss", p(m.loss)},
                     {"ce", p(m.ce)},
                     {"l2", p(m.l2)},
                     {"lambda", p(m.lambda)},
                     {"grad_norm_student", p(m.grad_norm_student)}});
  }
  j["steps"] = steps;
  j["best_epoch"] = h.best_epoch;
  j["best_val_ppl"] = p(h.best_val_ppl);
  j["best_val_loss"] = p(h.best_val_loss);
  j["final_train_loss"] = h.epochs.empty() ? 0.0 : p(h.epochs.back().train_loss);
  j["total_seconds"] = p(h.total_seconds);
  return j;
}

void write_metrics(const std::filesystem::path& dir, const train::TrainResult& result, const RunConfig& cfg) {
  std::filesystem::create_directories(dir);
  write_text(dir / "metrics_epoch.csv", epoch_csv(result.history));
  write_text(dir / "metrics_step.csv", step_csv(result.history));
  write_text(dir / "metrics_timing.csv", timing_csv(result.history));
  write_text(dir / "metrics.json", metrics_json(result, cfg).dump(2) + "\n");
}

RunSummary load_run_summary(const std::filesystem::path& dir) {
  const auto file = dir / "metrics.json";
  std::ifstream in(file);
  if (!in) throw ReportError("no metrics.json in " + dir.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ReportError(file.string() + ": " + e.what());
  }
  RunSummary s;
  s.label = j.value("mode", std::string("run")) + " (" + dir.filename().string() + ")";
  s.best_val_ppl = number_field(j, "best_val_ppl", file);
  s.best_val_loss = number_field(j, "best_val_loss", file);
  s.best_epoch = static_cast<std::size_t>(number_field(j, "best_epoch", file));
  s.final_train_loss = number_field(j, "final_train_loss", file);
  s.total_seconds = number_field(j, "total_seconds", file);
  return s;
}

ComparisonReport compare_runs(const RunSummary& base, const RunSummary& cand) {
  if (!(base.best_val_ppl > 0)) throw ReportError("baseline perplexity must be positive");
  ComparisonReport r;
  r.baseline = base;
  r.candidate = cand;
  r.ppl_reduction_abs = base.best_val_ppl - cand.best_val_ppl;
  r.ppl_reduction_rel = r.ppl_reduction_abs / base.best_val_ppl;
  r.val_loss_reduction_abs = base.best_val_loss - cand.best_val_loss;
  r.train_loss_reduction_rel =
      base.final_train_loss != 0 ? (base.final_train_loss - cand.final_train_loss) / base.final_train_loss : 0.0;
  r.time_ratio = base.total_seconds > 0 ? cand.total_seconds / base.total_seconds : 0.0;
  return r;
}

std::string format_report(const ComparisonReport& r) {
  char line[256];
  std::ostringstream out;
  auto row = [&](const char* name, const std::string& a, const std::string& b, const std::string& delta) {
    std::snprintf(line, sizeof line, "%-22s %14s %14s %22s\n", name, a.c_str(), b.c_str(), delta.c_str());
    out << line;
  };
  auto num = [](double v, int prec) {
    char b[48];
    std::snprintf(b, sizeof b, "%.*f", prec, v);
    return std::string(b);
  };
  auto pct = [&](double v) { return num(100.0 * v, 1) + "% reduction"; };
  row("metric", "baseline", "candidate", "change");
  row("best val perplexity", num(r.baseline.best_val_ppl, 1), num(r.candidate.best_val_ppl, 1),
      pct(r.ppl_reduction_rel));
  row("best val loss", num(r.baseline.best_val_loss, 3), num(r.candidate.best_val_loss, 3),
      num(r.val_loss_reduction_abs, 3) + " lower");
  row("best epoch", std::to_string(r.baseline.best_epoch), std::to_string(r.candidate.best_epoch), "");
  row("final train loss", num(r.baseline.final_train_loss, 3), num(r.candidate.final_train_loss, 3),
      pct(r.train_loss_reduction_rel));
  row("total seconds", num(r.baseline.total_seconds, 1), num(r.candidate.total_seconds, 1),
      num(r.time_ratio, 3) + "x time");
  return out.str();
}

nlohmann::json report_json(const ComparisonReport& r) {
  auto run = [](const RunSummary& s) {
    return nlohmann::json{{"label", s.label},
                          {"best_val_ppl", s.best_val_ppl},
                          {"best_val_loss", s.best_val_loss},
                          {"best_epoch", s.best_epoch},
                          {"final_train_loss", s.final_train_loss},
                          {"total_seconds", s.total_seconds}};
  };
  return {{"baseline", run(r.baseline)},
          {"candidate", run(r.candidate)},
          {"ppl_reduction_abs", r.ppl_reduction_abs},
          {"ppl_reduction_rel", r.ppl_reduction_rel},
          {"val_loss_reduction_abs", r.val_loss_reduction_abs},
          {"train_loss_reduction_rel", r.train_loss_reduction_rel},
          {"time_ratio", r.time_ratio}};
}

}  // namespace l2t::cli
