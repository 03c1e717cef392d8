#include "l2t/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "l2t/error.hpp"

namespace l2t::nn {

template <class T>
void layer_norm_forward(const T* x, const T* gain, const T* bias, std::size_t rows,
                        std::size_t dim, T* y, T* xhat, T* rstd) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x + r * dim;
    double mean = 0;
    for (std::size_t j = 0; j < dim; ++j) mean += xr[j];
    mean /= static_cast<double>(dim);
    double var = 0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = xr[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(dim);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    rstd[r] = static_cast<T>(inv);
    T* hr = xhat + r * dim;
    T* yr = y + r * dim;
    for (std::size_t j = 0; j < dim; ++j) {
      hr[j] = static_cast<T>((xr[j] - mean) * inv);
      yr[j] = hr[j] * gain[j] + bias[j];
    }
  }
}

template <class T>
void layer_norm_backward(const T* dy, const T* xhat, const T* rstd, const T* gain,
                         std::size_t rows, std::size_t dim, T* dx, T* dgain, T* dbias,
                         bool accumulate_dx) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T* g = dy + r * dim;
    const T* h = xhat + r * dim;
    T* out = dx + r * dim;
    double mean_dh = 0, mean_dh_h = 0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double dh = static_cast<double>(g[j]) * gain[j];
      mean_dh += dh;
      mean_dh_h += dh * h[j];
      dgain[j] += g[j] * h[j];
      dbias[j] += g[j];
    }
    mean_dh /= static_cast<double>(dim);
    mean_dh_h /= static_cast<double>(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      const double dh = static_cast<double>(g[j]) * gain[j];
      const T v = static_cast<T>(rstd[r] * (dh - mean_dh - h[j] * mean_dh_h));
      out[j] = accumulate_dx ? out[j] + v : v;
    }
  }
}

template <class T>
T gelu(T x) {
  return static_cast<T>(0.5) * x * (T(1) + std::erf(x * static_cast<T>(std::numbers::sqrt2 / 2)));
}

template <class T>
T gelu_grad(T x) {
  const T cdf = static_cast<T>(0.5) * (T(1) + std::erf(x * static_cast<T>(std::numbers::sqrt2 / 2)));
  const T pdf = std::exp(-static_cast<T>(0.5) * x * x) *
                static_cast<T>(std::numbers::inv_sqrtpi / std::numbers::sqrt2);
  return cdf + x * pdf;
}

namespace {

template <class T>
void check_logits(const Tensor<T>& logits, const corpus::TokenMatrix& targets) {
  if (logits.rank() != 3 || logits.dim(0) != targets.rows || logits.dim(1) != targets.cols) {
    throw ShapeError("logits " + shape_string(logits.shape()) + " do not match targets (" +
                     std::to_string(targets.rows) + "×" + std::to_string(targets.cols) + ")");
  }
}

}  // namespace

template <class T>
double cross_entropy(const Tensor<T>& logits, const corpus::TokenMatrix& targets) {
  return weighted_loss<T>(logits, targets, 0.0, nullptr).ce;
}

template <class T>
double logit_l2(const Tensor<T>& logits) {
  double s = 0;
  for (T v : logits.values()) s += static_cast<double>(v) * v;
  return logits.empty() ? 0.0 : s / static_cast<double>(logits.size());
}

template <class T>
LossTerms weighted_loss(const Tensor<T>& logits, const corpus::TokenMatrix& targets,
                        double l2_weight, Tensor<T>* dlogits) {
  check_logits(logits, targets);
  const std::size_t V = logits.dim(2);
  const std::size_t rows = targets.rows * targets.cols;
  if (dlogits && dlogits->shape() != logits.shape()) *dlogits = Tensor<T>(logits.shape());
  double ce_sum = 0, sq_sum = 0;
  const double inv_rows = 1.0 / static_cast<double>(rows);
  const double l2_scale = 2.0 * l2_weight / static_cast<double>(rows * V);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* z = logits.data() + r * V;
    const auto target = static_cast<std::size_t>(targets.ids[r]);
    if (target >= V) throw VocabError("target id out of range");
    const T zmax = *std::max_element(z, z + V);
    double sum = 0;
    for (std::size_t v = 0; v < V; ++v) {
      sum += std::exp(static_cast<double>(z[v]) - zmax);
      sq_sum += static_cast<double>(z[v]) * z[v];
    }
    const double lse = zmax + std::log(sum);
    ce_sum += lse - z[target];
    if (dlogits) {
      T* g = dlogits->data() + r * V;
      for (std::size_t v = 0; v < V; ++v) {
        const double p = std::exp(static_cast<double>(z[v]) - lse);
        g[v] = static_cast<T>((p - (v == target ? 1.0 : 0.0)) * inv_rows + l2_scale * z[v]);
      }
    }
  }
  LossTerms out;
  out.ce = ce_sum * inv_rows;
  out.l2 = sq_sum / static_cast<double>(rows * V);
  out.loss = out.ce + l2_weight * out.l2;
  return out;
}

#define L2T_INSTANTIATE(T)                                                                     \
  template void layer_norm_forward<T>(const T*, const T*, const T*, std::size_t, std::size_t,  \
                                      T*, T*, T*);                                             \
  template void layer_norm_backward<T>(const T*, const T*, const T*, const T*, std::size_t,    \
                                       std::size_t, T*, T*, T*, bool);                         \
  template T gelu<T>(T);                                                                       \
  template T gelu_grad<T>(T);                                                                  \
  template double cross_entropy<T>(const Tensor<T>&, const corpus::TokenMatrix&);              \
  template double logit_l2<T>(const Tensor<T>&);                                               \
  template LossTerms weighted_loss<T>(const Tensor<T>&, const corpus::TokenMatrix&, double,    \
                                      Tensor<T>*);

L2T_INSTANTIATE(float)
L2T_INSTANTIATE(double)
#undef L2T_INSTANTIATE

}  // namespace l2t::nn
