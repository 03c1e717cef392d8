#include "l2t/mlp.hpp"

#include <cmath>

#include "l2t/error.hpp"

namespace l2t {

template <class T>
MlpParams<T> init_mlp(const std::vector<std::size_t>& widths, std::mt19937_64& gen) {
  if (widths.size() < 2) throw ShapeError("init_mlp: need at least input and output widths");
  MlpParams<T> p;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l], out = widths[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor<T> w({out, in});
    for (auto& v : w.values()) v = static_cast<T>(dist(gen));
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(std::vector<std::size_t>{out});
  }
  return p;
}

template <class T>
std::vector<T> mlp_forward(const MlpParams<T>& p, std::span<const T> x, MlpTrace<T>* trace) {
  if (x.size() != p.input_dim()) throw ShapeError("mlp_forward: input width mismatch");
  std::vector<T> a(x.begin(), x.end());
  if (trace) {
    trace->pre.clear();
    trace->act.assign(1, a);
  }
  for (std::size_t l = 0; l < p.layers(); ++l) {
    const auto& w = p.weights[l];
    const std::size_t out = w.dim(0), in = w.dim(1);
    std::vector<T> z(out);
    for (std::size_t o = 0; o < out; ++o) {
      T s = p.biases[l][o];
      const T* row = w.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) s += row[i] * a[i];
      z[o] = s;
    }
    std::vector<T> next = z;
    if (l + 1 < p.layers()) {
      for (auto& v : next) v = v > T(0) ? v : T(0);
    }
    if (trace) {
      trace->pre.push_back(std::move(z));
      trace->act.push_back(next);
    }
    a = std::move(next);
  }
  return a;
}

template <class T>
std::vector<T> mlp_backward(const MlpParams<T>& p, const MlpTrace<T>& trace, std::span<const T> dout,
                            MlpParams<T>* grads) {
  std::vector<T> g(dout.begin(), dout.end());
  for (std::size_t l = p.layers(); l-- > 0;) {
    const auto& w = p.weights[l];
    const std::size_t out = w.dim(0), in = w.dim(1);
    if (l + 1 < p.layers()) {
      for (std::size_t o = 0; o < out; ++o) {
        if (!(trace.pre[l][o] > T(0))) g[o] = T(0);
      }
    }
    const auto& a = trace.act[l];
    if (grads) {
      T* gw = grads->weights[l].data();
      for (std::size_t o = 0; o < out; ++o) {
        grads->biases[l][o] += g[o];
        for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += g[o] * a[i];
      }
    }
    std::vector<T> prev(in, T(0));
    for (std::size_t o = 0; o < out; ++o) {
      const T* row = w.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) prev[i] += row[i] * g[o];
    }
    g = std::move(prev);
  }
  return g;
}

#define L2T_INSTANTIATE(T)                                                                      \
  template MlpParams<T> init_mlp<T>(const std::vector<std::size_t>&, std::mt19937_64&);         \
  template std::vector<T> mlp_forward<T>(const MlpParams<T>&, std::span<const T>, MlpTrace<T>*); \
  template std::vector<T> mlp_backward<T>(const MlpParams<T>&, const MlpTrace<T>&,              \
                                          std::span<const T>, MlpParams<T>*);

L2T_INSTANTIATE(float)
L2T_INSTANTIATE(double)
#undef L2T_INSTANTIATE

}  // namespace l2t
