#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "l2t/error.hpp"
#include "l2t/metrics.hpp"

using namespace l2t;
using namespace l2t::cli;

namespace {

train::TrainResult fake_result() {
  train::TrainResult r;
  for (std::size_t e = 1; e <= 3; ++e) {
    train::EpochMetrics m;
    m.epoch = e;
    m.train_loss = 5.0 / static_cast<double>(e) + 1.0 / 3.0;
    m.val_loss = 4.7 + 0.01 * static_cast<double>(e);
    m.val_ppl = std::exp(m.val_loss);
    m.mean_lambda = 0.123456789123;
    m.teacher_huber = 1e-7 / 3.0;
    m.lr_student = 2e-4 / 3.0;
    m.seconds = 1.25 * static_cast<double>(e);
    r.history.epochs.push_back(m);
  }
  for (std::uint64_t s = 1; s <= 4; ++s) {
    train::StepMetrics m;
    m.step = s;
    m.loss = 1.0 / 7.0 * static_cast<double>(s);
    m.ce = m.loss - 1e-3;
    m.l2 = 2.0 / 3.0;
    m.lambda = 0.5;
    m.grad_norm_student = 12345.6789012;
    r.history.steps.push_back(m);
  }
  r.history.best_epoch = 1;
  r.history.best_val_loss = r.history.epochs[0].val_loss;
  r.history.best_val_ppl = r.history.epochs[0].val_ppl;
  r.history.total_seconds = 7.5;
  return r;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("nine significant digits") {
  CHECK(format_metric(1.0 / 3.0) == "0.333333333");
  CHECK(format_metric(109.94717245) == "109.947172");
  CHECK(format_metric(2e-4 / 3) == "6.66666667e-05");
  CHECK(printed_value(1.0 / 3.0) == 0.333333333);
}

TEST_CASE("csv layout") {
  const auto r = fake_result();
  const auto epoch = epoch_csv(r.history);
  const auto step = step_csv(r.history);
  CHECK(epoch.rfind("epoch,train_loss,val_loss,val_ppl,mean_lambda,teacher_huber,lr_student\n", 0) == 0);
  CHECK(step.rfind("step,loss,ce,l2,lambda,grad_norm_student\n", 0) == 0);
  CHECK(timing_csv(r.history).rfind("epoch,seconds\n", 0) == 0);
  CHECK(epoch.back() == '\n');
  CHECK(step.back() == '\n');
  CHECK(parse_csv(epoch).size() == 4);
  CHECK(parse_csv(step).size() == 5);
}

TEST_CASE("json values equal the printed csv values") {
  const auto r = fake_result();
  const RunConfig cfg;
  const auto j = metrics_json(r, cfg);
  const auto rows = parse_csv(epoch_csv(r.history));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& e = j["epochs"][i - 1];
    for (std::size_t c = 1; c < kEpochColumns.size(); ++c) {
      CHECK(e[kEpochColumns[c]].get<double>() == std::strtod(rows[i][c].c_str(), nullptr));
    }
  }
  const auto srows = parse_csv(step_csv(r.history));
  for (std::size_t i = 1; i < srows.size(); ++i)
    for (std::size_t c = 1; c < kStepColumns.size(); ++c)
      CHECK(j["steps"][i - 1][kStepColumns[c]].get<double>() == std::strtod(srows[i][c].c_str(), nullptr));
  // the json text itself re-parses to the same doubles
  const auto back = nlohmann::json::parse(j.dump());
  CHECK(back == j);
}

TEST_CASE("comparison arithmetic") {
  RunSummary base{"baseline", 110.4, 4.7, 3, 3.1, 100.0};
  RunSummary l2t{"l2t", 102.6, 4.6, 5, 1.91, 131.0};
  const auto r = compare_runs(base, l2t);
  CHECK(r.ppl_reduction_abs == doctest::Approx(7.8));
  CHECK(std::round(r.ppl_reduction_rel * 1000) / 10 == 7.1);
  CHECK(r.train_loss_reduction_rel == doctest::Approx(0.3839).epsilon(1e-3));
  CHECK(std::round(r.train_loss_reduction_rel * 1000) / 10 == 38.4);
  CHECK(r.time_ratio == doctest::Approx(1.31));
  const auto table = format_report(r);
  CHECK(table.find("7.1% reduction") != std::string::npos);
  CHECK(table.find("38.4% reduction") != std::string::npos);

  const auto same = compare_runs(base, base);
  CHECK(same.ppl_reduction_abs == 0);
  CHECK(same.ppl_reduction_rel == 0);
  CHECK(same.val_loss_reduction_abs == 0);
  CHECK(same.train_loss_reduction_rel == 0);
  CHECK(same.time_ratio == 1);
}

TEST_CASE("run summaries") {
  const auto dir = std::filesystem::temp_directory_path() / "l2t_metrics_test";
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(load_run_summary(dir), ReportError);
  const auto r = fake_result();
  write_metrics(dir, r, RunConfig{});
  const auto s = load_run_summary(dir);
  CHECK(s.best_epoch == 1);
  CHECK(s.best_val_ppl == printed_value(r.history.best_val_ppl));
  CHECK(s.final_train_loss == printed_value(r.history.epochs.back().train_loss));
  CHECK(s.total_seconds == 7.5);
  std::ofstream(dir / "metrics.json") << "{\"best_val_ppl\": 3}";
  CHECK_THROWS_AS(load_run_summary(dir), ReportError);
  std::ofstream(dir / "metrics.json") << "not json";
  CHECK_THROWS_AS(load_run_summary(dir), ReportError);
  std::filesystem::remove_all(dir);
}
