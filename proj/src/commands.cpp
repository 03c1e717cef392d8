#include "l2t/commands.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include "l2t/checkpoint.hpp"
#include "l2t/error.hpp"
#include "l2t/metrics.hpp"

namespace l2t::cli {

int run_guarded(const std::function<int()>& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOther;
  }
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  validate(cfg);
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  {
    std::ofstream echo(dir / "config.txt");
    echo << echo_config(cfg);
  }
  out << "training " << to_string(cfg.mode) << " -> " << dir.string() << "\n";
  const auto result = train::train(cfg, [&](const train::EpochMetrics& e) {
    char line[256];
    std::snprintf(line, sizeof line,
                  "epoch %zu  train_loss %.4f  val_loss %.4f  val_ppl %.2f  mean_lambda %.4f  (%.1fs)\n",
                  e.epoch, e.train_loss, e.val_loss, e.val_ppl, e.mean_lambda, e.seconds);
    out << line << std::flush;
  });
  write_metrics(dir, result, cfg);
  out << "best epoch " << result.history.best_epoch << "  val_ppl " << format_metric(result.history.best_val_ppl)
      << "\n";
  return kExitOk;
}

EvalReport evaluate_checkpoint(const std::filesystem::path& checkpoint, const RunConfig& cfg) {
  const auto archive = checkpoint::Archive::load(checkpoint);
  const auto& token = archive.get("student.embed.token");
  if (token.dims.size() != 2) throw CheckpointError("student.embed.token must be a matrix");

  corpus::Vocab vocab;
  const auto vocab_file = checkpoint.parent_path() / "vocab.txt";
  if (std::filesystem::exists(vocab_file)) {
    vocab = corpus::Vocab::from_tokens(corpus::read_lines(vocab_file));
  } else {
    vocab = corpus::build_vocab(corpus::read_lines(cfg.train_path), cfg.model.vocab_size);
  }
  if (vocab.size() != token.dims[0]) {
    throw CheckpointError("checkpoint vocabulary has " + std::to_string(token.dims[0]) + " rows but the vocabulary has " +
                          std::to_string(vocab.size()) + " tokens");
  }

  hyena::HyenaConfig mc = cfg.model;
  mc.vocab_size = vocab.size();
  mc.max_seq_len = cfg.seq_len;
  auto params = hyena::init_model<float>(mc, 0);
  archive.read_params("student.", params);

  const auto batches = train::prepare_valid(cfg, vocab);
  const auto r = train::evaluate(params, batches);
  EvalReport rep{r.val_loss, r.perplexity, r.tokens};

  nlohmann::json j{{"checkpoint", checkpoint.string()},
                   {"valid_path", cfg.valid_path},
                   {"val_loss", rep.val_loss},
                   {"val_ppl", rep.perplexity},
                   {"tokens", rep.tokens}};
  std::ofstream(checkpoint.parent_path() / "eval.json") << j.dump(2) << "\n";
  return rep;
}

int cmd_eval(const std::filesystem::path& checkpoint, const RunConfig& cfg, std::ostream& out) {
  train::configure_threads(cfg);
  const auto rep = evaluate_checkpoint(checkpoint, cfg);
  out << "val_loss " << format_metric(rep.val_loss) << "\nval_ppl " << format_metric(rep.perplexity) << "\n";
  return kExitOk;
}

int cmd_compare(const std::filesystem::path& baseline_dir, const std::filesystem::path& candidate_dir,
                const std::filesystem::path& out_path, std::ostream& out) {
  const auto report = compare_runs(load_run_summary(baseline_dir), load_run_summary(candidate_dir));
  out << format_report(report);
  const auto path = out_path.empty() ? std::filesystem::path("compare.json") : out_path;
  std::ofstream f(path);
  f << report_json(report).dump(2) << "\n";
  if (!f) throw ReportError("cannot write " + path.string());
  return kExitOk;
}

int cmd_make_synthetic(const std::filesystem::path& dir, std::size_t train_tokens, std::size_t valid_tokens,
                       std::size_t words, std::uint64_t seed, std::ostream& out) {
  if (words == 0) throw ConfigError("words: must be positive");
  if (train_tokens == 0 || valid_tokens == 0) throw ConfigError("tokens: must be positive");
  const auto lines = corpus::synthetic_corpus(train_tokens + valid_tokens, words, seed);
  std::vector<std::string> train_lines, valid_lines;
  std::size_t count = 0;
  for (const auto& line : lines) {
    auto& dst = count < train_tokens ? train_lines : valid_lines;
    dst.push_back(line);
    count += corpus::split_whitespace(line).size() + 1;
  }
  if (valid_lines.empty()) throw ConfigError("valid tokens: too few to form a line");
  std::filesystem::create_directories(dir);
  corpus::write_lines(dir / "train.txt", train_lines);
  corpus::write_lines(dir / "valid.txt", valid_lines);
  out << "wrote " << train_lines.size() << " training and " << valid_lines.size() << " validation lines to "
      << dir.string() << "\n";
  return kExitOk;
}

}  // namespace l2t::cli
