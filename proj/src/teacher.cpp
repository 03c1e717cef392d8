#include "l2t/teacher.hpp"

#include <algorithm>
#include <cmath>

#include "l2t/error.hpp"
#include "l2t/param_utils.hpp"

namespace l2t::teacher {

MemoryBuffer::MemoryBuffer(std::size_t capacity) : ring_(capacity) {
  if (capacity == 0) throw InvalidExperience("memory buffer capacity must be positive");
}

void MemoryBuffer::push(Experience exp) {
  bool finite = std::isfinite(exp.lambda) && std::isfinite(exp.student_loss);
  for (double v : exp.summary) finite = finite && std::isfinite(v);
  if (!finite) throw InvalidExperience("experience contains non-finite values");
  if (exp.student_loss < 0) throw InvalidExperience("experience has negative student loss");
  if (size_ < ring_.size()) {
    ring_[(head_ + size_) % ring_.size()] = std::move(exp);
    ++size_;
  } else {
    ring_[head_] = std::move(exp);
    head_ = (head_ + 1) % ring_.size();
  }
}

const Experience& MemoryBuffer::operator[](std::size_t i) const {
  if (i >= size_) throw EmptyBuffer("memory buffer index out of range");
  return ring_[(head_ + i) % ring_.size()];
}

void MemoryBuffer::clear() {
  head_ = 0;
  size_ = 0;
}

std::vector<std::size_t> sample_prioritized_indices(const MemoryBuffer& buffer, std::size_t k,
                                                    std::mt19937_64& rng, double exponent) {
  if (buffer.empty()) throw EmptyBuffer("cannot sample from an empty memory buffer");
  std::vector<double> cumulative(buffer.size());
  double total = 0;
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    total += std::pow(std::max(buffer[i].student_loss, kPriorityFloor), exponent);
    cumulative[i] = total;
  }
  std::uniform_real_distribution<double> unit(0.0, total);
  std::vector<std::size_t> out(k);
  for (auto& idx : out) {
    const double u = unit(rng);
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), buffer.size() - 1);
  }
  return out;
}

std::vector<Experience> sample_prioritized(const MemoryBuffer& buffer, std::size_t k,
                                           std::mt19937_64& rng, double exponent) {
  std::vector<Experience> out;
  for (auto i : sample_prioritized_indices(buffer, k, rng, exponent)) out.push_back(buffer[i]);
  return out;
}

template <class T>
TeacherParams<T> init_teacher(const TeacherConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<std::size_t> widths{cfg.summary_dim + 1};
  widths.insert(widths.end(), cfg.widths.begin(), cfg.widths.end());
  widths.push_back(1);
  return {init_mlp<T>(widths, gen)};
}

namespace {

template <class T>
std::vector<T> teacher_input(std::span<const T> summary, T lambda, const TeacherParams<T>& p) {
  if (summary.size() + 1 != p.mlp.input_dim()) {
    throw ShapeError("teacher input: summary width " + std::to_string(summary.size()) +
                     " does not match teacher input " + std::to_string(p.mlp.input_dim() - 1));
  }
  std::vector<T> x(summary.begin(), summary.end());
  x.push_back(lambda);
  return x;
}

}  // namespace

template <class T>
T teacher_predict(std::span<const T> summary, T lambda, const TeacherParams<T>& params) {
  const auto x = teacher_input(summary, lambda, params);
  return mlp_forward<T>(params.mlp, x).front();
}

double huber(double pred, double target, double delta) {
  const double d = std::abs(pred - target);
  return d <= delta ? 0.5 * d * d : delta * (d - 0.5 * delta);
}

double huber_grad(double pred, double target, double delta) {
  const double d = pred - target;
  if (std::abs(d) <= delta) return d;
  return d > 0 ? delta : -delta;
}

template <class T>
TeacherStepResult<T> teacher_step(const MemoryBuffer& buffer, const TeacherParams<T>& params,
                                  std::size_t k, std::mt19937_64& rng, double delta,
                                  double exponent) {
  const auto picks = sample_prioritized_indices(buffer, k, rng, exponent);
  TeacherStepResult<T> out{zeros_like(params), 0.0};
  MlpTrace<T> trace;
  const double inv_k = 1.0 / static_cast<double>(picks.size());
  for (auto i : picks) {
    const Experience& e = buffer[i];
    std::vector<T> summary(e.summary.begin(), e.summary.end());
    const auto x = teacher_input<T>(summary, static_cast<T>(e.lambda), params);
    const T pred = mlp_forward<T>(params.mlp, x, &trace).front();
    out.loss += huber(pred, e.student_loss, delta) * inv_k;
    const T g = static_cast<T>(huber_grad(pred, e.student_loss, delta) * inv_k);
    mlp_backward<T>(params.mlp, trace, std::span<const T>(&g, 1), &out.grads.mlp);
  }
  return out;
}

template <class T>
T dln_feedback(std::span<const T> summary, T lambda, const TeacherParams<T>& params) {
  const auto x = teacher_input(summary, lambda, params);
  MlpTrace<T> trace;
  mlp_forward<T>(params.mlp, x, &trace);
  const T one(1);
  const auto dx = mlp_backward<T>(params.mlp, trace, std::span<const T>(&one, 1), nullptr);
  return dx.back();
}

#define L2T_INSTANTIATE(T)                                                                     \
  template TeacherParams<T> init_teacher<T>(const TeacherConfig&, std::uint64_t);              \
  template T teacher_predict<T>(std::span<const T>, T, const TeacherParams<T>&);               \
  template TeacherStepResult<T> teacher_step<T>(const MemoryBuffer&, const TeacherParams<T>&,  \
                                                std::size_t, std::mt19937_64&, double, double); \
  template T dln_feedback<T>(std::span<const T>, T, const TeacherParams<T>&);

L2T_INSTANTIATE(float)
L2T_INSTANTIATE(double)
#undef L2T_INSTANTIATE

}  // namespace l2t::teacher
