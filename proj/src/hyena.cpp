#include "l2t/hyena.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "l2t/conv.hpp"
#include "l2t/error.hpp"
#include "l2t/linalg.hpp"
#include "l2t/param_utils.hpp"

namespace l2t::hyena {

using corpus::TokenMatrix;
using linalg::add_row_bias;
using linalg::column_sums;
using linalg::gemm;
using linalg::gemm_nt;
using linalg::gemm_tn;

void HyenaConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid model config: " + what); };
  if (vocab_size < 2) fail("vocab_size must be at least 2");
  if (dim == 0) fail("dim must be positive");
  if (n_blocks == 0) fail("n_blocks must be positive");
  if (order == 0) fail("order must be at least 1");
  if (short_kernel == 0 || short_kernel % 2 == 0) fail("short_kernel must be odd and ≥ 1");
  if (max_seq_len == 0) fail("max_seq_len must be positive");
  if (filter_pos_dim == 0 || filter_pos_dim % 2 == 0) fail("filter_pos_dim must be odd");
  if (filter_hidden == 0) fail("filter_hidden must be positive");
  if (mlp_expansion == 0) fail("mlp_expansion must be positive");
  if (!(decay_min > 0) || !(decay_max >= decay_min)) fail("decay range must satisfy 0 < min ≤ max");
  if (!(embedding_std > 0) || !(positional_std > 0)) fail("embedding std must be positive");
}

std::size_t parameter_count(const HyenaConfig& c) {
  const std::size_t D = c.dim, S = c.streams(), N = c.order, P = c.filter_pos_dim,
                    F = c.filter_hidden, E = c.mlp_expansion * c.dim;
  const std::size_t block = 2 * D               // norm1
                            + D * S * D + S * D  // in_proj
                            + S * D * c.short_kernel
                            + P * F + F          // filter layer 1
                            + F * N * D + N * D  // filter layer 2
                            + N * D              // decay
                            + D * D + D          // out_proj
                            + 2 * D              // norm2
                            + D * E + E + E * D + D;
  return c.vocab_size * D + c.max_seq_len * D + c.n_blocks * block + 2 * D;
}

template <class T>
HyenaConfig config_of(const HyenaParams<T>& p) {
  HyenaConfig c;
  c.vocab_size = p.token_embedding.dim(0);
  c.dim = p.token_embedding.dim(1);
  c.max_seq_len = p.positional_embedding.dim(0);
  c.n_blocks = p.blocks.size();
  if (!p.blocks.empty()) {
    const auto& b = p.blocks.front();
    c.order = b.decay.dim(0);
    c.short_kernel = b.short_kernel.dim(1);
    c.filter_pos_dim = b.filter_w1.dim(0);
    c.filter_hidden = b.filter_w1.dim(1);
    c.mlp_expansion = b.mlp_w1.dim(1) / c.dim;
  }
  return c;
}

template <class T>
HyenaParams<T> init_model(const HyenaConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 gen(seed);
  const std::size_t D = cfg.dim, S = cfg.streams(), N = cfg.order, P = cfg.filter_pos_dim,
                    F = cfg.filter_hidden, E = cfg.mlp_expansion * cfg.dim, k = cfg.short_kernel;

  auto normal = [&](std::vector<std::size_t> shape, double std) {
    Tensor<T> t(std::move(shape));
    std::normal_distribution<double> dist(0.0, std);
    for (auto& v : t.values()) v = static_cast<T>(dist(gen));
    return t;
  };
  auto uniform = [&](std::vector<std::size_t> shape, double bound) {
    Tensor<T> t(std::move(shape));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : t.values()) v = static_cast<T>(dist(gen));
    return t;
  };
  auto glorot = [&](std::size_t fan_in, std::size_t fan_out) {
    return uniform({fan_in, fan_out}, std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)));
  };

  HyenaParams<T> p;
  p.token_embedding = normal({cfg.vocab_size, D}, cfg.embedding_std);
  p.positional_embedding = normal({cfg.max_seq_len, D}, cfg.positional_std);
  p.blocks.resize(cfg.n_blocks);
  for (auto& b : p.blocks) {
    b.norm1_gain = Tensor<T>({D}, T(1));
    b.norm1_bias = Tensor<T>({D});
    b.in_proj_weight = glorot(D, S * D);
    b.in_proj_bias = Tensor<T>({S * D});
    b.short_kernel = uniform({S * D, k}, 1.0 / std::sqrt(static_cast<double>(k)));
    b.filter_w1 = uniform({P, F}, 1.0 / static_cast<double>(P));
    b.filter_b1 = uniform({F}, 1.0 / static_cast<double>(P));
    b.filter_w2 = glorot(F, N * D);
    b.filter_b2 = Tensor<T>({N * D});
    b.decay = Tensor<T>({N, D});
    const double lo = std::log(cfg.decay_min), hi = std::log(cfg.decay_max);
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t d = 0; d < D; ++d) {
        const double frac = D > 1 ? static_cast<double>(d) / static_cast<double>(D - 1) : 0.0;
        b.decay(n, d) = static_cast<T>(std::exp(lo + (hi - lo) * frac));
      }
    }
    b.out_proj_weight = glorot(D, D);
    b.out_proj_bias = Tensor<T>({D});
    b.norm2_gain = Tensor<T>({D}, T(1));
    b.norm2_bias = Tensor<T>({D});
    b.mlp_w1 = glorot(D, E);
    b.mlp_b1 = Tensor<T>({E});
    b.mlp_w2 = glorot(E, D);
    b.mlp_b2 = Tensor<T>({D});
  }
  p.final_norm_gain = Tensor<T>({D}, T(1));
  p.final_norm_bias = Tensor<T>({D});
  return p;
}

template <class T>
Tensor<T> positional_filter_features(std::size_t length, std::size_t pos_dim) {
  if (pos_dim == 0 || pos_dim % 2 == 0) {
    throw ShapeError("positional_filter_features: pos_dim must be odd, got " + std::to_string(pos_dim));
  }
  const std::size_t K = (pos_dim - 1) / 2;
  const double L = static_cast<double>(length);
  std::vector<double> freqs(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double frac = K > 1 ? static_cast<double>(k) / static_cast<double>(K - 1) : 0.0;
    freqs[k] = std::pow(L / 2.0, frac);
  }
  Tensor<T> f({length, pos_dim});
  for (std::size_t t = 0; t < length; ++t) {
    const double x = static_cast<double>(t) / L;
    f(t, 0) = static_cast<T>(x);
    for (std::size_t k = 0; k < K; ++k) {
      const double angle = 2.0 * std::numbers::pi * freqs[k] * x;
      f(t, 1 + 2 * k) = static_cast<T>(std::sin(angle));
      f(t, 2 + 2 * k) = static_cast<T>(std::cos(angle));
    }
  }
  return f;
}

template <class T>
Tensor<T> generate_filters(const HyenaBlockParams<T>& block, std::size_t L, FilterCache<T>* cache) {
  const std::size_t P = block.filter_w1.dim(0), F = block.filter_w1.dim(1);
  const std::size_t N = block.decay.dim(0), D = block.decay.dim(1);
  FilterCache<T> local;
  FilterCache<T>& c = cache ? *cache : local;

  c.features = positional_filter_features<T>(L, P);
  c.pre = Tensor<T>({L, F});
  gemm(c.features.data(), block.filter_w1.data(), c.pre.data(), L, P, F);
  add_row_bias(c.pre.data(), block.filter_b1.data(), L, F);
  c.hidden = Tensor<T>({L, F});
  for (std::size_t i = 0; i < c.pre.size(); ++i) c.hidden[i] = std::sin(c.pre[i]);
  c.raw = Tensor<T>({L, N * D});
  gemm(c.hidden.data(), block.filter_w2.data(), c.raw.data(), L, F, N * D);
  add_row_bias(c.raw.data(), block.filter_b2.data(), L, N * D);

  c.window = Tensor<T>({N, L, D});
  Tensor<T> h({N, L, D});
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t t = 0; t < L; ++t) {
      const T pos = static_cast<T>(static_cast<double>(t) / static_cast<double>(L));
      for (std::size_t d = 0; d < D; ++d) {
        const T w = std::exp(-block.decay(n, d) * pos);
        c.window(n, t, d) = w;
        h(n, t, d) = c.raw(t, n * D + d) * w;
      }
    }
  }
  return h;
}

namespace {

template <class T>
void filter_backward(const HyenaBlockParams<T>& block, const FilterCache<T>& c,
                     const Tensor<T>& dh, HyenaBlockParams<T>& g) {
  const std::size_t P = block.filter_w1.dim(0), F = block.filter_w1.dim(1);
  const std::size_t N = block.decay.dim(0), D = block.decay.dim(1);
  const std::size_t L = c.features.dim(0);
  Tensor<T> draw({L, N * D});
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t t = 0; t < L; ++t) {
      const T pos = static_cast<T>(static_cast<double>(t) / static_cast<double>(L));
      for (std::size_t d = 0; d < D; ++d) {
        const T w = c.window(n, t, d);
        const T gh = dh(n, t, d);
        draw(t, n * D + d) = gh * w;
        g.decay(n, d) -= gh * c.raw(t, n * D + d) * w * pos;
      }
    }
  }
  gemm_tn(c.hidden.data(), draw.data(), g.filter_w2.data(), L, F, N * D, true);
  column_sums(draw.data(), g.filter_b2.data(), L, N * D, true);
  Tensor<T> dpre({L, F});
  gemm_nt(draw.data(), block.filter_w2.data(), dpre.data(), L, N * D, F);
  for (std::size_t i = 0; i < dpre.size(); ++i) dpre[i] *= std::cos(c.pre[i]);
  gemm_tn(c.features.data(), dpre.data(), g.filter_w1.data(), L, P, F, true);
  column_sums(dpre.data(), g.filter_b1.data(), L, F, true);
}

// Mixer on a flattened (B·L × D) input.
template <class T>
Tensor<T> operator_forward(const HyenaBlockParams<T>& block, const Tensor<T>& input,
                           std::size_t B, std::size_t L, OperatorCache<T>& c) {
  const std::size_t D = block.out_proj_weight.dim(0);
  const std::size_t SD = block.in_proj_weight.dim(1);
  const std::size_t S = SD / D, N = S - 1, k = block.short_kernel.dim(1);
  const std::size_t rows = B * L;

  c.input = input;
  c.projected = Tensor<T>({rows, SD});
  gemm(input.data(), block.in_proj_weight.data(), c.projected.data(), rows, D, SD);
  add_row_bias(c.projected.data(), block.in_proj_bias.data(), rows, SD);
  Tensor<T> shorted({rows, SD});
  short_conv<T>(c.projected.span(), block.short_kernel.span(), k, {B, L, SD}, shorted.span());

  c.streams.assign(S, Tensor<T>({rows, D}));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t s = 0; s < S; ++s) {
      std::copy_n(shorted.data() + r * SD + s * D, D, c.streams[s].data() + r * D);
    }
  }

  c.filters = generate_filters(block, L, &c.filter_cache);
  c.z.assign(N + 1, Tensor<T>());
  c.conv.assign(N, Tensor<T>({rows, D}));
  c.z[0] = c.streams[0];
  for (std::size_t i = 0; i < N; ++i) {
    std::span<const T> h(c.filters.data() + i * L * D, L * D);
    causal_conv_fft<T>(c.z[i].span(), h, {B, L, D}, c.conv[i].span());
    c.z[i + 1] = Tensor<T>({rows, D});
    const Tensor<T>& gate = c.streams[i + 1];
    for (std::size_t j = 0; j < rows * D; ++j) c.z[i + 1][j] = gate[j] * c.conv[i][j];
  }

  Tensor<T> out({rows, D});
  gemm(c.z[N].data(), block.out_proj_weight.data(), out.data(), rows, D, D);
  add_row_bias(out.data(), block.out_proj_bias.data(), rows, D);
  return out;
}

// Returns ∂/∂input; accumulates parameter gradients into g.
template <class T>
Tensor<T> operator_backward(const HyenaBlockParams<T>& block, const OperatorCache<T>& c,
                            const Tensor<T>& dout, std::size_t B, std::size_t L,
                            HyenaBlockParams<T>& g) {
  const std::size_t D = block.out_proj_weight.dim(0);
  const std::size_t SD = block.in_proj_weight.dim(1);
  const std::size_t S = SD / D, N = S - 1, k = block.short_kernel.dim(1);
  const std::size_t rows = B * L;

  gemm_tn(c.z[N].data(), dout.data(), g.out_proj_weight.data(), rows, D, D, true);
  column_sums(dout.data(), g.out_proj_bias.data(), rows, D, true);
  Tensor<T> dz({rows, D});
  gemm_nt(dout.data(), block.out_proj_weight.data(), dz.data(), rows, D, D);

  std::vector<Tensor<T>> dstreams(S, Tensor<T>({rows, D}));
  Tensor<T> dfilters({N, L, D});
  Tensor<T> dconv({rows, D});
  Tensor<T> dz_prev({rows, D});
  for (std::size_t ii = N; ii-- > 0;) {
    const Tensor<T>& gate = c.streams[ii + 1];
    for (std::size_t j = 0; j < rows * D; ++j) {
      dstreams[ii + 1][j] = dz[j] * c.conv[ii][j];
      dconv[j] = dz[j] * gate[j];
    }
    std::span<const T> h(c.filters.data() + ii * L * D, L * D);
    std::span<T> dh(dfilters.data() + ii * L * D, L * D);
    causal_conv_fft_backward<T>(c.z[ii].span(), h, dconv.span(), {B, L, D}, dz_prev.span(), dh);
    std::swap(dz, dz_prev);
  }
  dstreams[0] = dz;

  Tensor<T> dshorted({rows, SD});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t s = 0; s < S; ++s) {
      std::copy_n(dstreams[s].data() + r * D, D, dshorted.data() + r * SD + s * D);
    }
  }
  Tensor<T> dprojected({rows, SD});
  Tensor<T> dkernel(block.short_kernel.shape());
  short_conv_backward<T>(c.projected.span(), block.short_kernel.span(), dshorted.span(), k,
                         {B, L, SD}, dprojected.span(), dkernel.span());
  for (std::size_t i = 0; i < dkernel.size(); ++i) g.short_kernel[i] += dkernel[i];

  gemm_tn(c.input.data(), dprojected.data(), g.in_proj_weight.data(), rows, D, SD, true);
  column_sums(dprojected.data(), g.in_proj_bias.data(), rows, SD, true);
  Tensor<T> dinput({rows, D});
  gemm_nt(dprojected.data(), block.in_proj_weight.data(), dinput.data(), rows, SD, D);

  filter_backward(block, c.filter_cache, dfilters, g);
  return dinput;
}

template <class T>
void check_tokens(const HyenaParams<T>& params, const TokenMatrix& tokens) {
  const std::size_t V = params.token_embedding.dim(0);
  if (tokens.ids.size() != tokens.rows * tokens.cols) throw ShapeError("token matrix size mismatch");
  if (tokens.cols > params.positional_embedding.dim(0)) {
    throw ShapeError("sequence length " + std::to_string(tokens.cols) + " exceeds max_seq_len " +
                     std::to_string(params.positional_embedding.dim(0)));
  }
  for (auto id : tokens.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= V) {
      throw VocabError("token id " + std::to_string(id) + " outside vocabulary of size " +
                       std::to_string(V));
    }
  }
}

}  // namespace

template <class T>
Tensor<T> hyena_operator(const Tensor<T>& u, const HyenaBlockParams<T>& block,
                         OperatorCache<T>* cache) {
  const std::size_t D = block.out_proj_weight.dim(0);
  if (u.rank() != 3 || u.dim(2) != D) {
    throw ShapeError("hyena_operator: expected (B×L×" + std::to_string(D) + "), got " +
                     shape_string(u.shape()));
  }
  const std::size_t B = u.dim(0), L = u.dim(1);
  OperatorCache<T> local;
  Tensor<T> flat = u;
  flat.reshape({B * L, D});
  Tensor<T> out = operator_forward(block, flat, B, L, cache ? *cache : local);
  out.reshape({B, L, D});
  return out;
}

template <class T>
Tensor<T> forward(const HyenaParams<T>& params, const TokenMatrix& tokens, ForwardCache<T>* cache) {
  check_tokens(params, tokens);
  const std::size_t B = tokens.rows, L = tokens.cols, rows = B * L;
  const std::size_t V = params.token_embedding.dim(0), D = params.token_embedding.dim(1);
  ForwardCache<T> local;
  ForwardCache<T>& c = cache ? *cache : local;
  c.tokens = tokens;
  c.blocks.resize(params.blocks.size());

  Tensor<T> e({rows, D});
  for (std::size_t r = 0; r < rows; ++r) {
    const T* tok = params.token_embedding.data() + static_cast<std::size_t>(tokens.ids[r]) * D;
    const T* pos = params.positional_embedding.data() + (r % L) * D;
    for (std::size_t d = 0; d < D; ++d) e[r * D + d] = tok[d] + pos[d];
  }

  for (std::size_t bi = 0; bi < params.blocks.size(); ++bi) {
    const auto& blk = params.blocks[bi];
    auto& bc = c.blocks[bi];
    const std::size_t E = blk.mlp_w1.dim(1);

    Tensor<T> normed1({rows, D});
    bc.xhat1 = Tensor<T>({rows, D});
    bc.rstd1 = Tensor<T>({rows});
    nn::layer_norm_forward(e.data(), blk.norm1_gain.data(), blk.norm1_bias.data(), rows, D,
                           normed1.data(), bc.xhat1.data(), bc.rstd1.data());
    const Tensor<T> mixed = operator_forward(blk, normed1, B, L, bc.mixer);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] += mixed[i];

    bc.normed2 = Tensor<T>({rows, D});
    bc.xhat2 = Tensor<T>({rows, D});
    bc.rstd2 = Tensor<T>({rows});
    nn::layer_norm_forward(e.data(), blk.norm2_gain.data(), blk.norm2_bias.data(), rows, D,
                           bc.normed2.data(), bc.xhat2.data(), bc.rstd2.data());
    bc.mlp_pre = Tensor<T>({rows, E});
    gemm(bc.normed2.data(), blk.mlp_w1.data(), bc.mlp_pre.data(), rows, D, E);
    add_row_bias(bc.mlp_pre.data(), blk.mlp_b1.data(), rows, E);
    bc.mlp_act = Tensor<T>({rows, E});
    for (std::size_t i = 0; i < bc.mlp_pre.size(); ++i) bc.mlp_act[i] = nn::gelu(bc.mlp_pre[i]);
    gemm(bc.mlp_act.data(), blk.mlp_w2.data(), e.data(), rows, E, D, true);
    add_row_bias(e.data(), blk.mlp_b2.data(), rows, D);
  }

  c.final_out = Tensor<T>({rows, D});
  c.final_xhat = Tensor<T>({rows, D});
  c.final_rstd = Tensor<T>({rows});
  nn::layer_norm_forward(e.data(), params.final_norm_gain.data(), params.final_norm_bias.data(),
                         rows, D, c.final_out.data(), c.final_xhat.data(), c.final_rstd.data());
  Tensor<T> logits({B, L, V});
  gemm_nt(c.final_out.data(), params.token_embedding.data(), logits.data(), rows, D, V);
  return logits;
}

template <class T>
void backward(const HyenaParams<T>& params, const ForwardCache<T>& c, const Tensor<T>& dlogits,
              HyenaParams<T>& g) {
  const std::size_t B = c.tokens.rows, L = c.tokens.cols, rows = B * L;
  const std::size_t V = params.token_embedding.dim(0), D = params.token_embedding.dim(1);
  if (dlogits.size() != rows * V) throw ShapeError("backward: logit gradient shape mismatch");
  g = zeros_like(params);

  // Output side of the tied embedding.
  gemm_tn(dlogits.data(), c.final_out.data(), g.token_embedding.data(), rows, V, D);
  Tensor<T> dfinal({rows, D});
  gemm(dlogits.data(), params.token_embedding.data(), dfinal.data(), rows, V, D);
  Tensor<T> de({rows, D});
  nn::layer_norm_backward(dfinal.data(), c.final_xhat.data(), c.final_rstd.data(),
                          params.final_norm_gain.data(), rows, D, de.data(),
                          g.final_norm_gain.data(), g.final_norm_bias.data(), false);

  for (std::size_t bi = params.blocks.size(); bi-- > 0;) {
    const auto& blk = params.blocks[bi];
    const auto& bc = c.blocks[bi];
    auto& gb = g.blocks[bi];
    const std::size_t E = blk.mlp_w1.dim(1);

    gemm_tn(bc.mlp_act.data(), de.data(), gb.mlp_w2.data(), rows, E, D, true);
    column_sums(de.data(), gb.mlp_b2.data(), rows, D, true);
    Tensor<T> dpre({rows, E});
    gemm_nt(de.data(), blk.mlp_w2.data(), dpre.data(), rows, D, E);
    for (std::size_t i = 0; i < dpre.size(); ++i) dpre[i] *= nn::gelu_grad(bc.mlp_pre[i]);
    gemm_tn(bc.normed2.data(), dpre.data(), gb.mlp_w1.data(), rows, D, E, true);
    column_sums(dpre.data(), gb.mlp_b1.data(), rows, E, true);
    Tensor<T> dnormed({rows, D});
    gemm_nt(dpre.data(), blk.mlp_w1.data(), dnormed.data(), rows, E, D);
    nn::layer_norm_backward(dnormed.data(), bc.xhat2.data(), bc.rstd2.data(), blk.norm2_gain.data(),
                            rows, D, de.data(), gb.norm2_gain.data(), gb.norm2_bias.data(), true);

    const Tensor<T> dmix = operator_backward(blk, bc.mixer, de, B, L, gb);
    nn::layer_norm_backward(dmix.data(), bc.xhat1.data(), bc.rstd1.data(), blk.norm1_gain.data(),
                            rows, D, de.data(), gb.norm1_gain.data(), gb.norm1_bias.data(), true);
  }

  // Input side of the tied embedding plus positions.
  for (std::size_t r = 0; r < rows; ++r) {
    T* tok = g.token_embedding.data() + static_cast<std::size_t>(c.tokens.ids[r]) * D;
    T* pos = g.positional_embedding.data() + (r % L) * D;
    const T* dr = de.data() + r * D;
    for (std::size_t d = 0; d < D; ++d) {
      tok[d] += dr[d];
      pos[d] += dr[d];
    }
  }
}

template <class T>
StudentLoss<T> student_loss_and_grads(const TokenMatrix& tokens, const TokenMatrix& targets,
                                      const HyenaParams<T>& params, double lambda, double beta) {
  ForwardCache<T> cache;
  const Tensor<T> logits = forward(params, tokens, &cache);
  Tensor<T> dlogits;
  const nn::LossTerms terms = nn::weighted_loss(logits, targets, lambda * beta, &dlogits);
  if (!std::isfinite(terms.loss)) {
    throw NumericalError("student loss is not finite (ce=" + std::to_string(terms.ce) +
                         ", l2=" + std::to_string(terms.l2) + ")");
  }
  StudentLoss<T> out;
  out.loss = terms.loss;
  out.ce = terms.ce;
  out.l2 = terms.l2;
  backward(params, cache, dlogits, out.grads);
  return out;
}

template <class T>
void clamp_decay(HyenaParams<T>& params, double floor) {
  for (auto& b : params.blocks) {
    for (auto& a : b.decay.values()) a = std::max(a, static_cast<T>(floor));
  }
}

#define L2T_INSTANTIATE(T)                                                                        \
  template HyenaConfig config_of<T>(const HyenaParams<T>&);                                       \
  template HyenaParams<T> init_model<T>(const HyenaConfig&, std::uint64_t);                       \
  template Tensor<T> positional_filter_features<T>(std::size_t, std::size_t);                     \
  template Tensor<T> generate_filters<T>(const HyenaBlockParams<T>&, std::size_t, FilterCache<T>*); \
  template Tensor<T> hyena_operator<T>(const Tensor<T>&, const HyenaBlockParams<T>&,              \
                                       OperatorCache<T>*);                                        \
  template Tensor<T> forward<T>(const HyenaParams<T>&, const TokenMatrix&, ForwardCache<T>*);     \
  template void backward<T>(const HyenaParams<T>&, const ForwardCache<T>&, const Tensor<T>&,      \
                            HyenaParams<T>&);                                                     \
  template StudentLoss<T> student_loss_and_grads<T>(const TokenMatrix&, const TokenMatrix&,       \
                                                    const HyenaParams<T>&, double, double);       \
  template void clamp_decay<T>(HyenaParams<T>&, double);

L2T_INSTANTIATE(float)
L2T_INSTANTIATE(double)
#undef L2T_INSTANTIATE

}  // namespace l2t::hyena
