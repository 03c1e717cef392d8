#include "l2t/dln.hpp"

#include <algorithm>
#include <cmath>

#include "l2t/error.hpp"
#include "l2t/param_utils.hpp"

namespace l2t::dln {
namespace {

template <class T>
T sigmoid(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

template <class T>
struct GruTrace {
  std::vector<std::vector<T>> h;  // h[0] = zeros, h[t+1] after step t
  std::vector<std::vector<T>> r, z, n, hn;
};

template <class T>
void gru_run(const FeatureSequence<T>& x, const DlnParams<T>& p, GruTrace<T>& tr) {
  const std::size_t H = p.hidden(), L = x.dim(0), I = kFeatureCount;
  tr.h.assign(1, std::vector<T>(H, T(0)));
  tr.r.clear();
  tr.z.clear();
  tr.n.clear();
  tr.hn.clear();
  for (std::size_t t = 0; t < L; ++t) {
    const T* xt = x.data() + t * I;
    const auto& hp = tr.h.back();
    std::vector<T> gi(3 * H), gh(3 * H);
    for (std::size_t j = 0; j < 3 * H; ++j) {
      T si = p.gru_b_ih[j], sh = p.gru_b_hh[j];
      for (std::size_t i = 0; i < I; ++i) si += p.gru_w_ih(j, i) * xt[i];
      for (std::size_t i = 0; i < H; ++i) sh += p.gru_w_hh(j, i) * hp[i];
      gi[j] = si;
      gh[j] = sh;
    }
    std::vector<T> r(H), z(H), n(H), hn(H), h(H);
    for (std::size_t j = 0; j < H; ++j) {
      r[j] = sigmoid(gi[j] + gh[j]);
      z[j] = sigmoid(gi[H + j] + gh[H + j]);
      hn[j] = gh[2 * H + j];
      n[j] = std::tanh(gi[2 * H + j] + r[j] * hn[j]);
      h[j] = (T(1) - z[j]) * n[j] + z[j] * hp[j];
    }
    tr.r.push_back(std::move(r));
    tr.z.push_back(std::move(z));
    tr.n.push_back(std::move(n));
    tr.hn.push_back(std::move(hn));
    tr.h.push_back(std::move(h));
  }
}

template <class T>
void check_features(const FeatureSequence<T>& f) {
  if (f.rank() != 2 || f.dim(1) != kFeatureCount) {
    throw ShapeError("feature sequence must be (L × 5), got " + shape_string(f.shape()));
  }
  if (f.dim(0) == 0) throw ShapeError("feature sequence must have at least one row");
}

}  // namespace

template <class T>
DlnParams<T> init_dln(const DlnConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  const std::size_t H = cfg.hidden;
  const double bound = 1.0 / std::sqrt(static_cast<double>(H));
  std::uniform_real_distribution<double> dist(-bound, bound);
  auto fill = [&](std::vector<std::size_t> shape) {
    Tensor<T> t(std::move(shape));
    for (auto& v : t.values()) v = static_cast<T>(dist(gen));
    return t;
  };
  DlnParams<T> p;
  p.gru_w_ih = fill({3 * H, kFeatureCount});
  p.gru_w_hh = fill({3 * H, H});
  p.gru_b_ih = fill({3 * H});
  p.gru_b_hh = fill({3 * H});
  std::vector<std::size_t> widths{H};
  widths.insert(widths.end(), cfg.mlp_widths.begin(), cfg.mlp_widths.end());
  widths.push_back(1);
  p.mlp = init_mlp<T>(widths, gen);
  return p;
}

template <class T>
FeatureSequence<T> extract_features(const Tensor<T>& logits, const corpus::TokenMatrix& targets) {
  if (logits.rank() != 3 || logits.dim(0) != targets.rows || logits.dim(1) != targets.cols) {
    throw ShapeError("extract_features: logits " + shape_string(logits.shape()) +
                     " do not match targets");
  }
  const std::size_t B = logits.dim(0), L = logits.dim(1), V = logits.dim(2);
  const double log_v = std::log(static_cast<double>(V));
  std::vector<double> acc(L * kFeatureCount, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < L; ++t) {
      const T* z = logits.data() + (b * L + t) * V;
      const auto y = static_cast<std::size_t>(targets(b, t));
      if (y >= V) throw VocabError("extract_features: target id out of range");
      const double zmax = *std::max_element(z, z + V);
      double sum = 0;
      for (std::size_t v = 0; v < V; ++v) sum += std::exp(z[v] - zmax);
      const double lse = zmax + std::log(sum);
      double entropy = 0;
      for (std::size_t v = 0; v < V; ++v) {
        const double lp = z[v] - lse;
        entropy -= std::exp(lp) * lp;
      }
      const double conf = std::min(1.0, std::exp(zmax - lse));
      const double target_lp = z[y] - lse;
      const double target_p = std::min(1.0, std::exp(target_lp));
      double* row = acc.data() + t * kFeatureCount;
      row[kConfidence] += conf;
      row[kTargetProb] += target_p;
      row[kMargin] += std::max(0.0, conf - target_p);
      row[kEntropy] += V > 1 ? std::clamp(entropy / log_v, 0.0, 1.0) : 0.0;
      row[kCrossEntropy] += std::max(0.0, -target_lp);
    }
  }
  FeatureSequence<T> f({L, kFeatureCount});
  for (std::size_t i = 0; i < acc.size(); ++i) f[i] = static_cast<T>(acc[i] / static_cast<double>(B));
  return f;
}

template <class T>
FeatureSequence<T> normalize_features(const FeatureSequence<T>& f, FeatureNormState& state,
                                      bool training) {
  check_features(f);
  const std::size_t L = f.dim(0);
  std::array<double, kFeatureCount> mean{}, var{};
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t k = 0; k < kFeatureCount; ++k) mean[k] += f(t, k);
  }
  for (auto& m : mean) m /= static_cast<double>(L);
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      const double d = f(t, k) - mean[k];
      var[k] += d * d;
    }
  }
  for (auto& v : var) v /= static_cast<double>(L);

  if (training && state.count == 0) {
    state.mean = mean;
    state.var = var;
  }
  FeatureSequence<T> out(f.shape());
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      out(t, k) = static_cast<T>((f(t, k) - state.mean[k]) / std::sqrt(state.var[k] + kNormEps));
    }
  }
  if (training) {
    if (state.count > 0) {
      const double m = state.momentum;
      for (std::size_t k = 0; k < kFeatureCount; ++k) {
        state.mean[k] = m * state.mean[k] + (1 - m) * mean[k];
        state.var[k] = m * state.var[k] + (1 - m) * var[k];
      }
    }
    ++state.count;
  }
  return out;
}

template <class T>
DlnOutput<T> dln_forward(const FeatureSequence<T>& f_norm, const DlnParams<T>& params) {
  check_features(f_norm);
  GruTrace<T> tr;
  gru_run(f_norm, params, tr);
  DlnOutput<T> out;
  out.summary = tr.h.back();
  out.raw = mlp_forward<T>(params.mlp, out.summary).front();
  out.lambda = sigmoid(out.raw);
  return out;
}

template <class T>
DlnParams<T> dln_grads(const FeatureSequence<T>& f_norm, const DlnParams<T>& params, T upstream) {
  check_features(f_norm);
  const std::size_t H = params.hidden(), L = f_norm.dim(0), I = kFeatureCount;
  GruTrace<T> tr;
  gru_run(f_norm, params, tr);
  MlpTrace<T> mt;
  const T raw = mlp_forward<T>(params.mlp, tr.h.back(), &mt).front();
  const T lambda = sigmoid(raw);

  DlnParams<T> g = zeros_like(params);
  const T draw = upstream * lambda * (T(1) - lambda);
  std::vector<T> dh = mlp_backward<T>(params.mlp, mt, std::span<const T>(&draw, 1), &g.mlp);

  for (std::size_t t = L; t-- > 0;) {
    const auto& r = tr.r[t];
    const auto& z = tr.z[t];
    const auto& n = tr.n[t];
    const auto& hn = tr.hn[t];
    const auto& hp = tr.h[t];
    const T* xt = f_norm.data() + t * I;
    std::vector<T> dgi(3 * H), dgh(3 * H), dprev(H);
    for (std::size_t j = 0; j < H; ++j) {
      const T dn = dh[j] * (T(1) - z[j]);
      const T dz = dh[j] * (hp[j] - n[j]);
      dprev[j] = dh[j] * z[j];
      const T dan = dn * (T(1) - n[j] * n[j]);
      const T dr = dan * hn[j];
      const T dar = dr * r[j] * (T(1) - r[j]);
      const T daz = dz * z[j] * (T(1) - z[j]);
      dgi[j] = dar;
      dgi[H + j] = daz;
      dgi[2 * H + j] = dan;
      dgh[j] = dar;
      dgh[H + j] = daz;
      dgh[2 * H + j] = dan * r[j];
    }
    for (std::size_t j = 0; j < 3 * H; ++j) {
      g.gru_b_ih[j] += dgi[j];
      g.gru_b_hh[j] += dgh[j];
      for (std::size_t i = 0; i < I; ++i) g.gru_w_ih(j, i) += dgi[j] * xt[i];
      for (std::size_t i = 0; i < H; ++i) {
        g.gru_w_hh(j, i) += dgh[j] * hp[i];
        dprev[i] += params.gru_w_hh(j, i) * dgh[j];
      }
    }
    dh = std::move(dprev);
  }
  return g;
}

#define L2T_INSTANTIATE(T)                                                                       \
  template DlnParams<T> init_dln<T>(const DlnConfig&, std::uint64_t);                            \
  template FeatureSequence<T> extract_features<T>(const Tensor<T>&, const corpus::TokenMatrix&); \
  template FeatureSequence<T> normalize_features<T>(const FeatureSequence<T>&, FeatureNormState&, \
                                                    bool);                                       \
  template DlnOutput<T> dln_forward<T>(const FeatureSequence<T>&, const DlnParams<T>&);          \
  template DlnParams<T> dln_grads<T>(const FeatureSequence<T>&, const DlnParams<T>&, T);

L2T_INSTANTIATE(float)
L2T_INSTANTIATE(double)
#undef L2T_INSTANTIATE

}  // namespace l2t::dln
