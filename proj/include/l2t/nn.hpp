#pragma once

#include <cstddef>

#include "l2t/corpus.hpp"
#include "l2t/tensor.hpp"

namespace l2t::nn {

inline constexpr double kLayerNormEps = 1e-5;

/// Row-wise layer normalization of x(rows×dim). Stores the normalized rows
/// (before gain/bias) and 1/σ per row for the backward pass.
template <class T>
void layer_norm_forward(const T* x, const T* gain, const T* bias, std::size_t rows,
                        std::size_t dim, T* y, T* xhat, T* rstd);

/// dx (+)= ∂/∂x; dgain and dbias are accumulated.
template <class T>
void layer_norm_backward(const T* dy, const T* xhat, const T* rstd, const T* gain,
                         std::size_t rows, std::size_t dim, T* dx, T* dgain, T* dbias,
                         bool accumulate_dx);

template <class T>
T gelu(T x);
template <class T>
T gelu_grad(T x);

/// Mean token cross-entropy of logits (B×L×V) against targets (B×L), using
/// max-subtracted log-sum-exp.
template <class T>
double cross_entropy(const Tensor<T>& logits, const corpus::TokenMatrix& targets);

/// Mean of squared logits over every (b, t, v).
template <class T>
double logit_l2(const Tensor<T>& logits);

struct LossTerms {
  double loss = 0;
  double ce = 0;
  double l2 = 0;
};

/// loss = ce + weight·l2 where weight = λ·β. When dlogits is given it
/// receives ∂loss/∂logits.
template <class T>
LossTerms weighted_loss(const Tensor<T>& logits, const corpus::TokenMatrix& targets,
                        double l2_weight, Tensor<T>* dlogits);

}  // namespace l2t::nn
