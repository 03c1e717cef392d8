#include "l2t/conv.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <vector>

namespace l2t {
namespace {

// FFTW planning is not thread safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <class T>
struct Fftw;

template <>
struct Fftw<double> {
  using Plan = fftw_plan;
  using Complex = fftw_complex;
  static double* alloc_real(std::size_t n) { return fftw_alloc_real(n); }
  static Complex* alloc_complex(std::size_t n) { return fftw_alloc_complex(n); }
  static void free(void* p) { fftw_free(p); }
  static Plan r2c(int n, double* in, Complex* out) {
    return fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  static Plan c2r(int n, Complex* in, double* out) {
    return fftw_plan_dft_c2r_1d(n, in, out, FFTW_ESTIMATE);
  }
  static void execute(Plan p) { fftw_execute(p); }
  static void destroy(Plan p) { fftw_destroy_plan(p); }
};

template <>
struct Fftw<float> {
  using Plan = fftwf_plan;
  using Complex = fftwf_complex;
  static float* alloc_real(std::size_t n) { return fftwf_alloc_real(n); }
  static Complex* alloc_complex(std::size_t n) { return fftwf_alloc_complex(n); }
  static void free(void* p) { fftwf_free(p); }
  static Plan r2c(int n, float* in, Complex* out) {
    return fftwf_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  static Plan c2r(int n, Complex* in, float* out) {
    return fftwf_plan_dft_c2r_1d(n, in, out, FFTW_ESTIMATE);
  }
  static void execute(Plan p) { fftwf_execute(p); }
  static void destroy(Plan p) { fftwf_destroy_plan(p); }
};

void check_spans(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(want) + " elements, got " +
                     std::to_string(got));
  }
}

}  // namespace

std::size_t conv_fft_size(std::size_t length) {
  std::size_t n = 1;
  while (n < 2 * length) n <<= 1;
  return n;
}

template <class T>
struct RealFft<T>::Impl {
  using Api = Fftw<T>;
  T* real = nullptr;
  typename Api::Complex* spectrum = nullptr;
  typename Api::Plan forward_plan{};
  typename Api::Plan inverse_plan{};
};

template <class T>
RealFft<T>::RealFft(std::size_t n) : n_(n), impl_(std::make_unique<Impl>()) {
  using Api = Fftw<T>;
  impl_->real = Api::alloc_real(n);
  impl_->spectrum = Api::alloc_complex(n / 2 + 1);
  std::lock_guard<std::mutex> lock(planner_mutex());
  impl_->forward_plan = Api::r2c(static_cast<int>(n), impl_->real, impl_->spectrum);
  impl_->inverse_plan = Api::c2r(static_cast<int>(n), impl_->spectrum, impl_->real);
}

template <class T>
RealFft<T>::~RealFft() {
  using Api = Fftw<T>;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    Api::destroy(impl_->forward_plan);
    Api::destroy(impl_->inverse_plan);
  }
  Api::free(impl_->real);
  Api::free(impl_->spectrum);
}

template <class T>
void RealFft<T>::forward(std::span<const T> in, std::complex<T>* out) {
  const std::size_t m = std::min(in.size(), n_);
  std::copy_n(in.begin(), m, impl_->real);
  std::fill(impl_->real + m, impl_->real + n_, T(0));
  Fftw<T>::execute(impl_->forward_plan);
  const auto* spec = reinterpret_cast<const std::complex<T>*>(impl_->spectrum);
  std::copy_n(spec, bins(), out);
}

template <class T>
void RealFft<T>::inverse(const std::complex<T>* in, std::span<T> out) {
  std::copy_n(in, bins(), reinterpret_cast<std::complex<T>*>(impl_->spectrum));
  Fftw<T>::execute(impl_->inverse_plan);
  std::copy_n(impl_->real, std::min(out.size(), n_), out.begin());
}

template <class T>
RealFft<T>& RealFft<T>::cached(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<RealFft<T>>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<RealFft<T>>(n);
  return *slot;
}

template <class T>
void causal_conv_fft(std::span<const T> u, std::span<const T> h, SeqShape shape, std::span<T> y) {
  check_spans(u.size(), shape.size(), "causal_conv_fft input");
  check_spans(h.size(), shape.length * shape.channels, "causal_conv_fft filter");
  check_spans(y.size(), shape.size(), "causal_conv_fft output");
  const std::size_t L = shape.length, C = shape.channels, B = shape.batch;
  if (L == 0 || C == 0 || B == 0) return;
  const std::size_t n = conv_fft_size(L);
  const T scale = T(1) / static_cast<T>(n);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t cc = 0; cc < static_cast<std::ptrdiff_t>(C); ++cc) {
    const auto c = static_cast<std::size_t>(cc);
    auto& fft = RealFft<T>::cached(n);
    std::vector<T> seq(L);
    std::vector<std::complex<T>> hf(fft.bins()), uf(fft.bins());
    for (std::size_t t = 0; t < L; ++t) seq[t] = h[t * C + c];
    fft.forward(seq, hf.data());
    for (std::size_t b = 0; b < B; ++b) {
      const T* ub = u.data() + b * L * C;
      for (std::size_t t = 0; t < L; ++t) seq[t] = ub[t * C + c];
      fft.forward(seq, uf.data());
      for (std::size_t k = 0; k < uf.size(); ++k) uf[k] *= hf[k];
      fft.inverse(uf.data(), seq);
      T* yb = y.data() + b * L * C;
      for (std::size_t t = 0; t < L; ++t) yb[t * C + c] = seq[t] * scale;
    }
  }
}

template <class T>
void causal_conv_fft_backward(std::span<const T> u, std::span<const T> h, std::span<const T> dy,
                              SeqShape shape, std::span<T> du, std::span<T> dh,
                              bool accumulate_dh) {
  check_spans(u.size(), shape.size(), "causal_conv_fft_backward input");
  check_spans(h.size(), shape.length * shape.channels, "causal_conv_fft_backward filter");
  check_spans(dy.size(), shape.size(), "causal_conv_fft_backward upstream");
  check_spans(du.size(), shape.size(), "causal_conv_fft_backward input grad");
  check_spans(dh.size(), shape.length * shape.channels, "causal_conv_fft_backward filter grad");
  const std::size_t L = shape.length, C = shape.channels, B = shape.batch;
  if (L == 0 || C == 0) return;
  const std::size_t n = conv_fft_size(L);
  const T scale = T(1) / static_cast<T>(n);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t cc = 0; cc < static_cast<std::ptrdiff_t>(C); ++cc) {
    const auto c = static_cast<std::size_t>(cc);
    auto& fft = RealFft<T>::cached(n);
    const std::size_t nb = fft.bins();
    std::vector<T> seq(L);
    std::vector<std::complex<T>> hf(nb), gf(nb), uf(nb), prod(nb), hacc(nb, std::complex<T>(0));
    for (std::size_t t = 0; t < L; ++t) seq[t] = h[t * C + c];
    fft.forward(seq, hf.data());
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t off = b * L * C;
      for (std::size_t t = 0; t < L; ++t) seq[t] = dy[off + t * C + c];
      fft.forward(seq, gf.data());
      for (std::size_t t = 0; t < L; ++t) seq[t] = u[off + t * C + c];
      fft.forward(seq, uf.data());
      // Cross-correlations: conj(H)·G gives du, conj(U)·G summed over batch gives dh.
      for (std::size_t k = 0; k < nb; ++k) {
        prod[k] = std::conj(hf[k]) * gf[k];
        hacc[k] += std::conj(uf[k]) * gf[k];
      }
      fft.inverse(prod.data(), seq);
      for (std::size_t t = 0; t < L; ++t) du[off + t * C + c] = seq[t] * scale;
    }
    fft.inverse(hacc.data(), seq);
    for (std::size_t t = 0; t < L; ++t) {
      const T v = seq[t] * scale;
      if (accumulate_dh) {
        dh[t * C + c] += v;
      } else {
        dh[t * C + c] = v;
      }
    }
  }
}

template <class T>
Tensor<T> fft_causal_conv(const Tensor<T>& u, const Tensor<T>& h) {
  if (u.rank() != 3 || h.rank() != 2 || h.dim(0) != u.dim(1) || h.dim(1) != u.dim(2)) {
    throw ShapeError("fft_causal_conv: expected u (B×L×D) and h (L×D), got u " +
                     shape_string(u.shape()) + " and h " + shape_string(h.shape()));
  }
  Tensor<T> y(u.shape());
  causal_conv_fft<T>(u.span(), h.span(), {u.dim(0), u.dim(1), u.dim(2)}, y.span());
  return y;
}

template <class T>
void short_conv(std::span<const T> u, std::span<const T> kernels, std::size_t k, SeqShape shape,
                std::span<T> y) {
  check_spans(u.size(), shape.size(), "short_conv input");
  check_spans(kernels.size(), shape.channels * k, "short_conv kernels");
  check_spans(y.size(), shape.size(), "short_conv output");
  const std::size_t L = shape.length, C = shape.channels;
  for (std::size_t b = 0; b < shape.batch; ++b) {
    const T* ub = u.data() + b * L * C;
    T* yb = y.data() + b * L * C;
    for (std::size_t t = 0; t < L; ++t) {
      T* yrow = yb + t * C;
      for (std::size_t c = 0; c < C; ++c) yrow[c] = T(0);
      for (std::size_t s = 0; s < k && s <= t; ++s) {
        const T* urow = ub + (t - s) * C;
        for (std::size_t c = 0; c < C; ++c) yrow[c] += kernels[c * k + s] * urow[c];
      }
    }
  }
}

template <class T>
void short_conv_backward(std::span<const T> u, std::span<const T> kernels, std::span<const T> dy,
                         std::size_t k, SeqShape shape, std::span<T> du, std::span<T> dkernels) {
  check_spans(u.size(), shape.size(), "short_conv_backward input");
  check_spans(kernels.size(), shape.channels * k, "short_conv_backward kernels");
  check_spans(dy.size(), shape.size(), "short_conv_backward upstream");
  check_spans(du.size(), shape.size(), "short_conv_backward input grad");
  check_spans(dkernels.size(), shape.channels * k, "short_conv_backward kernel grad");
  const std::size_t L = shape.length, C = shape.channels;
  std::fill(du.begin(), du.end(), T(0));
  std::fill(dkernels.begin(), dkernels.end(), T(0));
  for (std::size_t b = 0; b < shape.batch; ++b) {
    const T* ub = u.data() + b * L * C;
    const T* gb = dy.data() + b * L * C;
    T* dub = du.data() + b * L * C;
    for (std::size_t t = 0; t < L; ++t) {
      const T* grow = gb + t * C;
      for (std::size_t s = 0; s < k && s <= t; ++s) {
        const T* urow = ub + (t - s) * C;
        T* durow = dub + (t - s) * C;
        for (std::size_t c = 0; c < C; ++c) {
          durow[c] += kernels[c * k + s] * grow[c];
          dkernels[c * k + s] += grow[c] * urow[c];
        }
      }
    }
  }
}

template <class T>
Tensor<T> short_conv(const Tensor<T>& u, const Tensor<T>& kernels) {
  if (u.rank() != 3 || kernels.rank() != 2 || kernels.dim(0) != u.dim(2)) {
    throw ShapeError("short_conv: expected u (B×L×C) and kernels (C×k), got u " +
                     shape_string(u.shape()) + " and kernels " + shape_string(kernels.shape()));
  }
  if (kernels.dim(1) % 2 == 0) throw ShapeError("short_conv: kernel size must be odd");
  Tensor<T> y(u.shape());
  short_conv<T>(u.span(), kernels.span(), kernels.dim(1), {u.dim(0), u.dim(1), u.dim(2)}, y.span());
  return y;
}

#define L2T_INSTANTIATE(T)                                                                       \
  template class RealFft<T>;                                                                     \
  template void causal_conv_fft<T>(std::span<const T>, std::span<const T>, SeqShape, std::span<T>); \
  template void causal_conv_fft_backward<T>(std::span<const T>, std::span<const T>,              \
                                            std::span<const T>, SeqShape, std::span<T>,          \
                                            std::span<T>, bool);                                 \
  template Tensor<T> fft_causal_conv<T>(const Tensor<T>&, const Tensor<T>&);                     \
  template void short_conv<T>(std::span<const T>, std::span<const T>, std::size_t, SeqShape,     \
                              std::span<T>);                                                     \
  template void short_conv_backward<T>(std::span<const T>, std::span<const T>,                   \
                                       std::span<const T>, std::size_t, SeqShape, std::span<T>,  \
                                       std::span<T>);                                            \
  template Tensor<T> short_conv<T>(const Tensor<T>&, const Tensor<T>&);

L2T_INSTANTIATE(float)
L2T_INSTANTIATE(double)
#undef L2T_INSTANTIATE

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "×";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

}  // namespace l2t
