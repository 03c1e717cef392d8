#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "l2t/mlp.hpp"

namespace l2t::teacher {

/// One replay record: the DLN summary vector (detached), the λ it produced,
/// and the student loss realized with that λ.
struct Experience {
  std::vector<double> summary;
  double lambda = 0;
  double student_loss = 0;
  std::uint64_t step = 0;
};

/// Fixed-capacity FIFO ring of experiences. Index 0 is the oldest entry.
class MemoryBuffer {
 public:
  static constexpr std::size_t kDefaultCapacity = 500;

  explicit MemoryBuffer(std::size_t capacity = kDefaultCapacity);

  /// Throws InvalidExperience (buffer unchanged) on non-finite fields or a
  /// negative loss.
  void push(Experience exp);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return ring_.size(); }
  bool empty() const { return size_ == 0; }
  const Experience& operator[](std::size_t i) const;
  void clear();

 private:
  std::vector<Experience> ring_;
  std::size_t head_ = 0;  // slot of the oldest entry
  std::size_t size_ = 0;
};

inline constexpr double kPriorityFloor = 1e-6;

/// k draws with replacement, P(i) ∝ max(loss_i, 1e-6)^exponent.
/// Throws EmptyBuffer when there is nothing to draw.
std::vector<std::size_t> sample_prioritized_indices(const MemoryBuffer& buffer, std::size_t k,
                                                    std::mt19937_64& rng, double exponent = 1.0);

std::vector<Experience> sample_prioritized(const MemoryBuffer& buffer, std::size_t k,
                                           std::mt19937_64& rng, double exponent = 1.0);

struct TeacherConfig {
  std::size_t summary_dim = 32;
  std::vector<std::size_t> widths = {128, 128};
};

/// Loss predictor over [summary, λ].
template <class T>
struct TeacherParams {
  using value_type = T;
  MlpParams<T> mlp;

  template <class F>
  void visit(F&& f) { mlp.visit(f); }
  template <class F>
  void visit(F&& f) const { mlp.visit(f); }
};

template <class T>
TeacherParams<T> init_teacher(const TeacherConfig& cfg, std::uint64_t seed);

template <class T>
T teacher_predict(std::span<const T> summary, T lambda, const TeacherParams<T>& params);

double huber(double pred, double target, double delta);
/// ∂huber/∂pred.
double huber_grad(double pred, double target, double delta);

template <class T>
struct TeacherStepResult {
  TeacherParams<T> grads;
  double loss = 0;  // mean Huber loss over the drawn samples
};

template <class T>
TeacherStepResult<T> teacher_step(const MemoryBuffer& buffer, const TeacherParams<T>& params,
                                  std::size_t k, std::mt19937_64& rng, double delta,
                                  double exponent = 1.0);

/// ∂ teacher_predict(summary, λ) / ∂λ with the teacher held fixed.
template <class T>
T dln_feedback(std::span<const T> summary, T lambda, const TeacherParams<T>& params);

}  // namespace l2t::teacher
