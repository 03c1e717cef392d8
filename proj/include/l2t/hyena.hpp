#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "l2t/corpus.hpp"
#include "l2t/nn.hpp"
#include "l2t/tensor.hpp"

namespace l2t::hyena {

struct HyenaConfig {
  std::size_t vocab_size = 10000;
  std::size_t dim = 256;
  std::size_t n_blocks = 6;
  std::size_t order = 2;
  std::size_t short_kernel = 3;
  std::size_t max_seq_len = 64;
  std::size_t filter_pos_dim = 17;
  std::size_t filter_hidden = 64;
  std::size_t mlp_expansion = 4;
  double decay_min = 0.3;
  double decay_max = 30.0;
  double embedding_std = 0.01;
  double positional_std = 0.02;

  std::size_t streams() const { return order + 1; }
  /// Throws ConfigError on inconsistent sizes.
  void validate() const;
};

/// Closed-form number of trainable scalars for a config.
std::size_t parameter_count(const HyenaConfig& cfg);

template <class T>
struct HyenaBlockParams {
  using value_type = T;

  Tensor<T> norm1_gain, norm1_bias;   // D
  Tensor<T> in_proj_weight;           // D × (N+1)·D
  Tensor<T> in_proj_bias;             // (N+1)·D
  Tensor<T> short_kernel;             // (N+1)·D × k
  Tensor<T> filter_w1, filter_b1;     // P × F, F
  Tensor<T> filter_w2, filter_b2;     // F × N·D, N·D
  Tensor<T> decay;                    // N × D
  Tensor<T> out_proj_weight;          // D × D
  Tensor<T> out_proj_bias;            // D
  Tensor<T> norm2_gain, norm2_bias;   // D
  Tensor<T> mlp_w1, mlp_b1;           // D × eD, eD
  Tensor<T> mlp_w2, mlp_b2;           // eD × D, D

  template <class F>
  void visit(F&& f) { visit_impl(*this, f); }
  template <class F>
  void visit(F&& f) const { visit_impl(*this, f); }

 private:
  template <class Self, class F>
  static void visit_impl(Self& s, F& f) {
    f("norm1.gain", s.norm1_gain);
    f("norm1.bias", s.norm1_bias);
    f("in_proj.weight", s.in_proj_weight);
    f("in_proj.bias", s.in_proj_bias);
    f("short_conv.kernel", s.short_kernel);
    f("filter.w1", s.filter_w1);
    f("filter.b1", s.filter_b1);
    f("filter.w2", s.filter_w2);
    f("filter.b2", s.filter_b2);
    f("filter.decay", s.decay);
    f("out_proj.weight", s.out_proj_weight);
    f("out_proj.bias", s.out_proj_bias);
    f("norm2.gain", s.norm2_gain);
    f("norm2.bias", s.norm2_bias);
    f("mlp.w1", s.mlp_w1);
    f("mlp.b1", s.mlp_b1);
    f("mlp.w2", s.mlp_w2);
    f("mlp.b2", s.mlp_b2);
  }
};

/// Student parameters. The output projection to the vocabulary is
/// token_embedding itself; there is no separate output matrix.
template <class T>
struct HyenaParams {
  using value_type = T;

  Tensor<T> token_embedding;       // V × D
  Tensor<T> positional_embedding;  // L × D
  std::vector<HyenaBlockParams<T>> blocks;
  Tensor<T> final_norm_gain, final_norm_bias;

  const Tensor<T>& output_weight() const { return token_embedding; }

  template <class F>
  void visit(F&& f) { visit_impl(*this, f); }
  template <class F>
  void visit(F&& f) const { visit_impl(*this, f); }

 private:
  template <class Self, class F>
  static void visit_impl(Self& s, F& f) {
    f("embed.token", s.token_embedding);
    f("embed.position", s.positional_embedding);
    for (std::size_t i = 0; i < s.blocks.size(); ++i) {
      const std::string prefix = "blocks." + std::to_string(i) + ".";
      s.blocks[i].visit([&](const std::string& name, auto& t) { f(prefix + name, t); });
    }
    f("final_norm.gain", s.final_norm_gain);
    f("final_norm.bias", s.final_norm_bias);
  }
};

template <class T>
HyenaParams<T> init_model(const HyenaConfig& cfg, std::uint64_t seed);

/// Column 0 is t/L; the remaining columns are (sin, cos) pairs of
/// 2π·f_k·t/L for K = (pos_dim − 1)/2 frequencies geometric from 1 to L/2.
template <class T>
Tensor<T> positional_filter_features(std::size_t length, std::size_t pos_dim);

/// Intermediate values of the implicit filter network, kept for the backward pass.
template <class T>
struct FilterCache {
  Tensor<T> features;  // L × P
  Tensor<T> pre;       // L × F
  Tensor<T> hidden;    // L × F
  Tensor<T> raw;       // L × N·D
  Tensor<T> window;    // N × L × D
};

/// Causal filter taps h (order × L × D): a two-layer sine network over
/// positional features, modulated by exp(−α·t/L).
template <class T>
Tensor<T> generate_filters(const HyenaBlockParams<T>& block, std::size_t length,
                           FilterCache<T>* cache = nullptr);

/// Activations of the long-convolution mixer for one block.
template <class T>
struct OperatorCache {
  Tensor<T> input;                 // B·L × D
  Tensor<T> projected;             // B·L × (N+1)·D, before the short conv
  std::vector<Tensor<T>> streams;  // N+1 × (B·L × D): v, x¹..xᴺ
  std::vector<Tensor<T>> z;        // z¹..z^{N+1}; z[0] duplicates streams[0]
  std::vector<Tensor<T>> conv;     // N × (B·L × D): h^i * z^i
  Tensor<T> filters;               // N × L × D
  FilterCache<T> filter_cache;
};

/// Order-N Hyena operator on u (B × L × D): input projection to N+1 streams,
/// short causal conv, then z^{i+1} = x^i ⊙ (h^i * z^i), output projection.
template <class T>
Tensor<T> hyena_operator(const Tensor<T>& u, const HyenaBlockParams<T>& block,
                         OperatorCache<T>* cache = nullptr);

template <class T>
struct BlockCache {
  Tensor<T> xhat1, rstd1;
  OperatorCache<T> mixer;
  Tensor<T> xhat2, rstd2, normed2;
  Tensor<T> mlp_pre, mlp_act;
};

template <class T>
struct ForwardCache {
  corpus::TokenMatrix tokens;
  std::vector<BlockCache<T>> blocks;
  Tensor<T> final_xhat, final_rstd, final_out;  // B·L × D
};

/// Logits (B × L × V). Pre-norm residual blocks: e += mixer(norm(e));
/// e += MLP(norm(e)); logits = norm(e)·Eᵀ with the tied embedding E.
template <class T>
Tensor<T> forward(const HyenaParams<T>& params, const corpus::TokenMatrix& tokens,
                  ForwardCache<T>* cache = nullptr);

/// Exact gradients of a scalar objective given ∂objective/∂logits.
/// grads is overwritten and shaped like params.
template <class T>
void backward(const HyenaParams<T>& params, const ForwardCache<T>& cache,
              const Tensor<T>& dlogits, HyenaParams<T>& grads);

template <class T>
struct StudentLoss {
  double loss = 0;
  double ce = 0;
  double l2 = 0;
  HyenaParams<T> grads;
};

/// loss = ce + λ·β·l2 and its gradient with respect to every parameter array.
/// Throws NumericalError when the loss is not finite.
template <class T>
StudentLoss<T> student_loss_and_grads(const corpus::TokenMatrix& tokens,
                                      const corpus::TokenMatrix& targets,
                                      const HyenaParams<T>& params, double lambda, double beta);

/// Re-imposes the strictly positive decay-rate constraint after an update.
template <class T>
void clamp_decay(HyenaParams<T>& params, double floor = 1e-4);

template <class T>
HyenaConfig config_of(const HyenaParams<T>& params);

}  // namespace l2t::hyena
