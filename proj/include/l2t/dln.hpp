#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "l2t/corpus.hpp"
#include "l2t/mlp.hpp"
#include "l2t/tensor.hpp"

namespace l2t::dln {

inline constexpr std::size_t kFeatureCount = 5;

/// Column indices of a feature row.
enum Feature : std::size_t {
  kConfidence = 0,    // max softmax probability
  kTargetProb = 1,    // probability of the target token
  kMargin = 2,        // confidence − target probability
  kEntropy = 3,       // entropy / ln V
  kCrossEntropy = 4,  // −log p(target)
};

/// (L × 5) per-position statistics, averaged over the batch.
template <class T>
using FeatureSequence = Tensor<T>;

struct DlnConfig {
  std::size_t hidden = 32;
  std::vector<std::size_t> mlp_widths = {64, 64, 32};
};

/// Running per-feature z-score statistics.
struct FeatureNormState {
  std::array<double, kFeatureCount> mean{};
  std::array<double, kFeatureCount> var{1, 1, 1, 1, 1};
  double momentum = 0.99;
  std::uint64_t count = 0;
  friend bool operator==(const FeatureNormState&, const FeatureNormState&) = default;
};

inline constexpr double kNormEps = 1e-5;

template <class T>
struct DlnParams {
  using value_type = T;

  Tensor<T> gru_w_ih;  // 3H × 5, gate rows ordered reset, update, candidate
  Tensor<T> gru_w_hh;  // 3H × H
  Tensor<T> gru_b_ih;  // 3H
  Tensor<T> gru_b_hh;  // 3H
  MlpParams<T> mlp;    // H → ... → 1

  std::size_t hidden() const { return gru_w_hh.dim(1); }

  template <class F>
  void visit(F&& f) { visit_impl(*this, f); }
  template <class F>
  void visit(F&& f) const { visit_impl(*this, f); }

 private:
  template <class Self, class F>
  static void visit_impl(Self& s, F& f) {
    f("gru.w_ih", s.gru_w_ih);
    f("gru.w_hh", s.gru_w_hh);
    f("gru.b_ih", s.gru_b_ih);
    f("gru.b_hh", s.gru_b_hh);
    s.mlp.visit([&](const std::string& name, auto& t) { f("mlp." + name, t); });
  }
};

template <class T>
DlnParams<T> init_dln(const DlnConfig& cfg, std::uint64_t seed);

/// Softmax statistics of logits (B × L × V) against targets, averaged over B.
template <class T>
FeatureSequence<T> extract_features(const Tensor<T>& logits, const corpus::TokenMatrix& targets);

/// Normalizes with the state as it stands, then (training only) folds the
/// sequence's per-feature mean and variance into the running statistics.
/// The first training call seeds the state from the sequence itself.
template <class T>
FeatureSequence<T> normalize_features(const FeatureSequence<T>& f, FeatureNormState& state,
                                      bool training);

template <class T>
struct DlnOutput {
  T lambda{};
  T raw{};
  std::vector<T> summary;  // final GRU hidden state
};

template <class T>
DlnOutput<T> dln_forward(const FeatureSequence<T>& f_norm, const DlnParams<T>& params);

/// upstream·∂λ/∂θ for every DLN array, by backpropagation through time.
template <class T>
DlnParams<T> dln_grads(const FeatureSequence<T>& f_norm, const DlnParams<T>& params, T upstream);

}  // namespace l2t::dln
