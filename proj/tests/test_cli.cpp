#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "l2t/commands.hpp"
#include "l2t/error.hpp"
#include "l2t/metrics.hpp"

using namespace l2t;
using namespace l2t::cli;

namespace {

struct Proc {
  int code;
  std::string output;
};

Proc run_cli(const std::string& args, const std::filesystem::path& cwd) {
  const auto log = cwd / "cli_output.txt";
  const std::string cmd = "cd '" + cwd.string() + "' && '" L2T_CLI_PATH "' " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WEXITSTATUS(status), ss.str()};
}

std::size_t line_count(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

void write_config(const std::filesystem::path& path, const RunConfig& cfg) { std::ofstream(path) << echo_config(cfg); }

}  // namespace

TEST_CASE("train, eval and compare through the binary") {
  const auto dir = fixture::scratch_dir("cli");
  auto cfg = fixture::micro_config(dir);
  cfg.output_dir = (dir / "l2t").string();
  write_config(dir / "micro.conf", cfg);

  auto r = run_cli("train --config micro.conf --epochs 2", dir);
  INFO(r.output);
  REQUIRE(r.code == 0);
  CHECK(r.output.find("epoch 1") != std::string::npos);
  CHECK(r.output.find("val_ppl") != std::string::npos);
  CHECK(r.output.find("mean_lambda") != std::string::npos);
  const std::filesystem::path run(cfg.output_dir);
  CHECK(line_count(run / "metrics_epoch.csv") == 3);
  for (const char* f : {"metrics_step.csv", "metrics_timing.csv", "metrics.json", "config.txt", "best.l2th",
                        "last.l2th", "vocab.txt"}) {
    CHECK(std::filesystem::exists(run / f));
  }
  // the echoed config reproduces the resolved one
  auto expect = cfg;
  expect.epochs = 2;
  CHECK(load_config_file(run / "config.txt") == expect);

  r = run_cli("train --config micro.conf --mode baseline --output_dir base", dir);
  REQUIRE(r.code == 0);

  // eval in a fresh process vs in this process
  r = run_cli("eval --checkpoint l2t/best.l2th --config micro.conf", dir);
  REQUIRE(r.code == 0);
  std::ifstream eval_json(run / "eval.json");
  const auto j = nlohmann::json::parse(eval_json);
  const auto in_process = evaluate_checkpoint(run / "best.l2th", cfg);
  CHECK(std::abs(j["val_ppl"].get<double>() / in_process.perplexity - 1) <= 1e-6);

  r = run_cli("compare base l2t --out cmp.json", dir);
  REQUIRE(r.code == 0);
  CHECK(r.output.find("best val perplexity") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "cmp.json"));

  r = run_cli("compare l2t l2t --out same.json", dir);
  REQUIRE(r.code == 0);
  std::ifstream same_file(dir / "same.json");
  const auto same = nlohmann::json::parse(same_file);
  CHECK(same["ppl_reduction_abs"].get<double>() == 0);
  CHECK(same["ppl_reduction_rel"].get<double>() == 0);
  CHECK(same["train_loss_reduction_rel"].get<double>() == 0);
}

TEST_CASE("exit codes") {
  const auto dir = fixture::scratch_dir("cli_errors");
  auto cfg = fixture::micro_config(dir);
  write_config(dir / "micro.conf", cfg);

  auto r = run_cli("train --config micro.conf --train_path /nonexistent/ptb.train.txt", dir);
  CHECK(r.code == kExitData);
  CHECK(r.output.find("/nonexistent/ptb.train.txt") != std::string::npos);

  r = run_cli("train --config micro.conf --student_weight_decay -1", dir);
  CHECK(r.code == kExitConfig);
  CHECK(r.output.find("student_weight_decay") != std::string::npos);

  r = run_cli("train --config missing.conf", dir);
  CHECK(r.code == kExitConfig);

  r = run_cli("train --bogus 1", dir);
  CHECK(r.code == kExitConfig);

  r = run_cli("compare nowhere alsonowhere", dir);
  CHECK(r.code == kExitData);

  // numerical failure: an enormous learning rate blows the student up
  r = run_cli("train --config micro.conf --student_lr 1e30 --warmup_epochs 0 --clip_norm 1e30", dir);
  CHECK(r.code == kExitNumerical);
  CHECK(r.output.find("step") != std::string::npos);

  r = run_cli("train --config micro.conf --max_steps 3", dir);
  REQUIRE(r.code == 0);
  const std::filesystem::path ckpt = std::filesystem::path(cfg.output_dir) / "last.l2th";
  const auto size = std::filesystem::file_size(ckpt);
  std::filesystem::resize_file(ckpt, size / 2);
  r = run_cli("eval --checkpoint " + ckpt.string() + " --config micro.conf", dir);
  CHECK(r.code == kExitCheckpoint);
}

TEST_CASE("make-synthetic") {
  const auto dir = fixture::scratch_dir("cli_synth");
  const auto r = run_cli("make-synthetic --out data --train-tokens 2000 --valid-tokens 300 --words 30 --seed 4", dir);
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(dir / "data" / "train.txt"));
  CHECK(std::filesystem::exists(dir / "data" / "valid.txt"));
}

// Runs only when a PTB directory is supplied: the full-size configuration
// in baseline mode yields one epoch row per epoch.
TEST_CASE("full-size config baseline on PTB") {
  const char* ptb = std::getenv("L2T_PTB_DIR");
  if (!ptb) {
    MESSAGE("L2T_PTB_DIR not set; skipping");
    return;
  }
  const auto dir = fixture::scratch_dir("cli_ptb");
  const std::string p(ptb);
  const auto r = run_cli("train --config '" L2T_SOURCE_DIR "/configs/ptb.conf' --mode baseline --train_path '" + p +
                             "/ptb.train.txt' --valid_path '" + p + "/ptb.valid.txt' --output_dir run",
                         dir);
  REQUIRE(r.code == 0);
  CHECK(line_count(dir / "run" / "metrics_epoch.csv") == 11);
}
