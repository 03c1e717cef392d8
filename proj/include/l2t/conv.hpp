#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

#include "l2t/tensor.hpp"

namespace l2t {

/// Shape of a (batch × length × channels) activation, channels contiguous.
struct SeqShape {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::size_t channels = 0;
  std::size_t size() const { return batch * length * channels; }
};

/// Smallest power of two ≥ 2·length; padding to it turns circular convolution
/// into linear convolution.
std::size_t conv_fft_size(std::size_t length);

/// Real-to-complex transform of a fixed power-of-two size. One instance per
/// thread; `RealFft::cached(n)` hands out a thread-local instance.
template <class T>
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  /// in: n reals (shorter input is zero padded). out: n/2+1 bins.
  void forward(std::span<const T> in, std::complex<T>* out);
  /// Unnormalized inverse: out[i] = Σ_k in[k]·e^{+2πik/n}. Writes the first
  /// out.size() samples.
  void inverse(const std::complex<T>* in, std::span<T> out);

  static RealFft& cached(std::size_t n);

 private:
  struct Impl;
  std::size_t n_;
  std::unique_ptr<Impl> impl_;
};

/// y[b][t][c] = Σ_{s≤t} h[s][c]·u[b][t−s][c], computed with zero-padded FFTs.
template <class T>
void causal_conv_fft(std::span<const T> u, std::span<const T> h, SeqShape shape, std::span<T> y);

/// Adjoint of causal_conv_fft. du[b][t][c] = Σ_s h[s][c]·dy[b][t+s][c];
/// dh[s][c] (+)= Σ_b Σ_t dy[b][t][c]·u[b][t−s][c].
template <class T>
void causal_conv_fft_backward(std::span<const T> u, std::span<const T> h, std::span<const T> dy,
                              SeqShape shape, std::span<T> du, std::span<T> dh,
                              bool accumulate_dh = false);

template <class T>
Tensor<T> fft_causal_conv(const Tensor<T>& u, const Tensor<T>& h);

/// Depthwise causal convolution with a short kernel: y[b][t][c] = Σ_s k[c][s]·u[b][t−s][c].
template <class T>
void short_conv(std::span<const T> u, std::span<const T> kernels, std::size_t kernel_size,
                SeqShape shape, std::span<T> y);

template <class T>
void short_conv_backward(std::span<const T> u, std::span<const T> kernels, std::span<const T> dy,
                         std::size_t kernel_size, SeqShape shape, std::span<T> du,
                         std::span<T> dkernels);

template <class T>
Tensor<T> short_conv(const Tensor<T>& u, const Tensor<T>& kernels);

}  // namespace l2t
