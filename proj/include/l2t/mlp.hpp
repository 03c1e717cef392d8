#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "l2t/tensor.hpp"

namespace l2t {

/// Fully connected stack with ReLU between layers and a linear output.
/// weights[l] is (out × in).
template <class T>
struct MlpParams {
  using value_type = T;

  std::vector<Tensor<T>> weights;
  std::vector<Tensor<T>> biases;

  std::size_t layers() const { return weights.size(); }
  std::size_t input_dim() const { return weights.front().dim(1); }
  std::size_t output_dim() const { return weights.back().dim(0); }

  template <class F>
  void visit(F&& f) { visit_impl(*this, f); }
  template <class F>
  void visit(F&& f) const { visit_impl(*this, f); }

 private:
  template <class Self, class F>
  static void visit_impl(Self& s, F& f) {
    for (std::size_t i = 0; i < s.weights.size(); ++i) {
      f("fc" + std::to_string(i) + ".weight", s.weights[i]);
      f("fc" + std::to_string(i) + ".bias", s.biases[i]);
    }
  }
};

template <class T>
struct MlpTrace {
  std::vector<std::vector<T>> pre;  // per layer, before activation
  std::vector<std::vector<T>> act;  // act[0] is the input, act[l+1] the layer output
};

/// widths = {in, hidden..., out}. Glorot-uniform weights, zero biases.
template <class T>
MlpParams<T> init_mlp(const std::vector<std::size_t>& widths, std::mt19937_64& gen);

template <class T>
std::vector<T> mlp_forward(const MlpParams<T>& p, std::span<const T> x, MlpTrace<T>* trace = nullptr);

/// Accumulates parameter gradients into grads (when non-null) and returns ∂/∂input.
template <class T>
std::vector<T> mlp_backward(const MlpParams<T>& p, const MlpTrace<T>& trace, std::span<const T> dout,
                            MlpParams<T>* grads);

}  // namespace l2t
