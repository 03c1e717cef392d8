#include "l2t/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <thread>

#include "l2t/error.hpp"
#include "l2t/linalg.hpp"
#include "l2t/nn.hpp"
#include "l2t/param_utils.hpp"

namespace l2t::train {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

void configure_threads(const cli::RunConfig& cfg) {
  int n = static_cast<int>(cfg.threads);
  if (cfg.deterministic) {
    n = 1;
  } else if (n == 0) {
    n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  linalg::set_num_threads(n);
}

template <class T>
EvalResult evaluate(const hyena::HyenaParams<T>& params, const std::vector<corpus::TokenBatch>& batches) {
  if (batches.empty()) throw DataError("evaluate: no validation batches");
  double total = 0;
  std::size_t tokens = 0;
  for (const auto& b : batches) {
    const Tensor<T> logits = hyena::forward(params, b.inputs);
    const std::size_t n = b.targets.rows * b.targets.cols;
    total += nn::cross_entropy(logits, b.targets) * static_cast<double>(n);
    tokens += n;
  }
  EvalResult r;
  r.tokens = tokens;
  r.val_loss = total / static_cast<double>(tokens);
  r.perplexity = std::exp(r.val_loss);
  return r;
}

Schedule make_schedule(const cli::RunConfig& cfg, std::size_t batches_per_epoch) {
  Schedule s;
  s.total_steps = static_cast<std::uint64_t>(cfg.epochs) * batches_per_epoch;
  s.warmup_steps = static_cast<std::uint64_t>(std::llround(cfg.warmup_epochs * static_cast<double>(batches_per_epoch)));
  s.lr_min_ratio = cfg.lr_min_ratio;
  if (s.warmup_steps >= s.total_steps) {
    throw ConfigError("warmup_epochs: warmup of " + std::to_string(s.warmup_steps) +
                      " steps leaves no annealing phase in " + std::to_string(s.total_steps) + " total steps");
  }
  return s;
}

Session::Session(const cli::RunConfig& cfg, std::size_t vocab_size, Schedule schedule)
    : cfg_(cfg), schedule_(schedule), buffer_(cfg.buffer_capacity), rng_(derive_seed(cfg.seed, 3)) {
  hyena::HyenaConfig mc = cfg.model;
  mc.vocab_size = vocab_size;
  mc.max_seq_len = cfg.seq_len;
  mc.validate();
  student_ = hyena::init_model<float>(mc, derive_seed(cfg.seed, 0));
  dln_ = dln::init_dln<float>(cfg.dln, derive_seed(cfg.seed, 1));
  teacher::TeacherConfig tc = cfg.teacher;
  tc.summary_dim = cfg.dln.hidden;
  teacher_ = teacher::init_teacher<float>(tc, derive_seed(cfg.seed, 2));
  student_state_ = optim::make_adamw_state(student_);
  dln_state_ = optim::make_adamw_state(dln_);
  teacher_state_ = optim::make_adamw_state(teacher_);
  norm_.momentum = cfg.norm_momentum;
}

StepMetrics Session::train_step(const corpus::TokenBatch& batch) {
  try {
    return step_impl(batch);
  } catch (const NumericalError& e) {
    throw NumericalError("step " + std::to_string(step_ + 1) + ": " + e.what());
  }
}

StepMetrics Session::step_impl(const corpus::TokenBatch& batch) {
  const bool l2t = cfg_.mode == cli::Mode::kL2T;
  StepMetrics m;
  m.step = step_ + 1;
  m.lr_student = schedule_.lr(step_, cfg_.student_opt.learning_rate);
  m.lr_teacher = cfg_.schedule_teacher ? schedule_.lr(step_, cfg_.teacher_opt.learning_rate)
                                       : cfg_.teacher_opt.learning_rate;
  m.lr_dln = cfg_.schedule_dln ? schedule_.lr(step_, cfg_.dln_opt.learning_rate) : cfg_.dln_opt.learning_rate;

  // (1) student forward
  hyena::ForwardCache<float> cache;
  const Tensor<float> logits = hyena::forward(student_, batch.inputs, &cache);

  // (2) loss weight from the DLN
  dln::FeatureSequence<float> f_norm;
  dln::DlnOutput<float> out;
  if (l2t) {
    const auto features = dln::extract_features(logits, batch.targets);
    f_norm = dln::normalize_features(features, norm_, /*training=*/true);
    out = dln::dln_forward(f_norm, dln_);
    m.lambda = out.lambda;
  }

  // (3) student update
  Tensor<float> dlogits;
  const auto terms = nn::weighted_loss(logits, batch.targets, l2t ? m.lambda * cfg_.beta : 0.0, &dlogits);
  if (!std::isfinite(terms.loss)) throw NumericalError("student loss is not finite");
  m.loss = terms.loss;
  m.ce = terms.ce;
  m.l2 = terms.l2;
  hyena::HyenaParams<float> grads;
  hyena::backward(student_, cache, dlogits, grads);
  m.grad_norm_student = optim::clip_grad_norm(grads, cfg_.clip_norm);
  optim::adamw_step(student_, grads, student_state_, cfg_.student_opt, m.lr_student);
  hyena::clamp_decay(student_);

  if (l2t) {
    // (4) record the experience
    teacher::Experience exp;
    exp.summary.assign(out.summary.begin(), out.summary.end());
    exp.lambda = m.lambda;
    exp.student_loss = m.loss;
    exp.step = m.step;
    buffer_.push(std::move(exp));

    if (buffer_.size() >= cfg_.activation_threshold) {
      m.teacher_active = true;
      // (5) teacher regression on replayed experiences
      auto ts = teacher::teacher_step(buffer_, teacher_, cfg_.teacher_batch, rng_, cfg_.huber_delta,
                                      cfg_.priority_exponent);
      m.teacher_huber = ts.loss;
      m.grad_norm_teacher = optim::clip_grad_norm(ts.grads, cfg_.clip_norm);
      optim::adamw_step(teacher_, ts.grads, teacher_state_, cfg_.teacher_opt, m.lr_teacher);

      // (6) DLN follows the teacher's predicted loss slope in λ
      const float feedback = teacher::dln_feedback<float>(out.summary, out.lambda, teacher_);
      auto dg = dln::dln_grads(f_norm, dln_, feedback);
      m.grad_norm_dln = optim::clip_grad_norm(dg, cfg_.clip_norm);
      optim::adamw_step(dln_, dg, dln_state_, cfg_.dln_opt, m.lr_dln);
    }
  }
  ++step_;
  return m;
}

EvalResult Session::evaluate(const std::vector<corpus::TokenBatch>& batches) const {
  return train::evaluate(student_, batches);
}

checkpoint::Archive Session::to_archive() const {
  checkpoint::Archive a;
  a.add_params("student.", student_);
  a.add_params("dln.", dln_);
  Tensor<double> mean({dln::kFeatureCount}), var({dln::kFeatureCount}), count({1});
  for (std::size_t i = 0; i < dln::kFeatureCount; ++i) {
    mean[i] = norm_.mean[i];
    var[i] = norm_.var[i];
  }
  count[0] = static_cast<double>(norm_.count);
  a.add("dln_norm.mean", mean);
  a.add("dln_norm.var", var);
  a.add("dln_norm.count", count);
  a.add_params("teacher.", teacher_);
  return a;
}

void Session::load_archive(const checkpoint::Archive& a) {
  a.read_params("student.", student_);
  a.read_params("dln.", dln_);
  Tensor<double> mean({dln::kFeatureCount}), var({dln::kFeatureCount}), count({1});
  a.read_into("dln_norm.mean", mean);
  a.read_into("dln_norm.var", var);
  a.read_into("dln_norm.count", count);
  for (std::size_t i = 0; i < dln::kFeatureCount; ++i) {
    norm_.mean[i] = mean[i];
    norm_.var[i] = var[i];
  }
  norm_.count = static_cast<std::uint64_t>(count[0]);
  a.read_params("teacher.", teacher_);
}

namespace {

std::vector<corpus::TokenBatch> batches_for(const std::vector<std::string>& lines, const corpus::Vocab& vocab,
                                            std::size_t batch_size, std::size_t seq_len, const std::string& what) {
  try {
    return corpus::make_batches(corpus::encode(lines, vocab), batch_size, seq_len);
  } catch (const CorpusTooSmall& e) {
    throw CorpusTooSmall(what + ": " + e.what());
  }
}

}  // namespace

PreparedData prepare_data(const cli::RunConfig& cfg) {
  PreparedData d;
  const auto train_lines = corpus::read_lines(cfg.train_path);
  d.vocab = corpus::build_vocab(train_lines, cfg.model.vocab_size);
  d.train_batches = batches_for(train_lines, d.vocab, cfg.batch_size, cfg.seq_len, cfg.train_path);
  const auto valid_lines = corpus::read_lines(cfg.valid_path);
  d.valid_oov_rate = corpus::oov_rate(valid_lines, d.vocab);
  d.valid_batches = batches_for(valid_lines, d.vocab, cfg.effective_eval_batch(), cfg.seq_len, cfg.valid_path);
  return d;
}

std::vector<corpus::TokenBatch> prepare_valid(const cli::RunConfig& cfg, const corpus::Vocab& vocab) {
  return batches_for(corpus::read_lines(cfg.valid_path), vocab, cfg.effective_eval_batch(), cfg.seq_len,
                     cfg.valid_path);
}

TrainResult train(const cli::RunConfig& cfg, const EpochCallback& on_epoch) {
  using clock = std::chrono::steady_clock;
  cli::validate(cfg);
  configure_threads(cfg);
  const auto run_start = clock::now();

  PreparedData data = prepare_data(cfg);
  TrainResult result;
  result.vocab = data.vocab;
  result.batches_per_epoch = data.train_batches.size();
  result.schedule = make_schedule(cfg, result.batches_per_epoch);

  Session session(cfg, data.vocab.size(), result.schedule);
  result.parameter_count = parameter_count(session.student());

  const std::filesystem::path out_dir(cfg.output_dir);
  std::filesystem::create_directories(out_dir);
  data.vocab.save(out_dir / "vocab.txt");

  auto& h = result.history;
  const std::size_t step_cap = cfg.max_steps ? cfg.max_steps : static_cast<std::size_t>(-1);
  for (std::size_t epoch = 1; epoch <= cfg.epochs && h.steps.size() < step_cap; ++epoch) {
    const auto epoch_start = clock::now();
    EpochMetrics em;
    em.epoch = epoch;
    double loss_sum = 0, lambda_sum = 0, huber_sum = 0;
    std::size_t n = 0, n_active = 0;
    for (const auto& batch : data.train_batches) {
      if (h.steps.size() >= step_cap) break;
      const StepMetrics sm = session.train_step(batch);
      h.steps.push_back(sm);
      loss_sum += sm.loss;
      lambda_sum += sm.lambda;
      if (sm.teacher_active) {
        huber_sum += sm.teacher_huber;
        ++n_active;
      }
      em.lr_student = sm.lr_student;
      ++n;
    }
    em.train_loss = n ? loss_sum / static_cast<double>(n) : 0.0;
    em.mean_lambda = n ? lambda_sum / static_cast<double>(n) : 0.0;
    em.teacher_huber = n_active ? huber_sum / static_cast<double>(n_active) : 0.0;
    const EvalResult ev = session.evaluate(data.valid_batches);
    em.val_loss = ev.val_loss;
    em.val_ppl = ev.perplexity;
    em.seconds = std::chrono::duration<double>(clock::now() - epoch_start).count();
    h.epochs.push_back(em);

    const auto archive = session.to_archive();
    archive.save(out_dir / "last.l2th");
    if (h.best_epoch == 0 || em.val_ppl < h.best_val_ppl) {
      h.best_epoch = epoch;
      h.best_val_ppl = em.val_ppl;
      h.best_val_loss = em.val_loss;
      archive.save(out_dir / "best.l2th");
    }
    if (on_epoch) on_epoch(em);
  }
  h.total_seconds = std::chrono::duration<double>(clock::now() - run_start).count();
  return result;
}

template EvalResult evaluate<float>(const hyena::HyenaParams<float>&, const std::vector<corpus::TokenBatch>&);
template EvalResult evaluate<double>(const hyena::HyenaParams<double>&, const std::vector<corpus::TokenBatch>&);

}  // namespace l2t::train
