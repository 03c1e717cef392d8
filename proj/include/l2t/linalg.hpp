#pragma once

#include <cstddef>

namespace l2t::linalg {

// Row-major dense products backed by Eigen. `accumulate` adds into c instead
// of overwriting it.

/// c(n×m) = a(n×k) · b(k×m)
template <class T>
void gemm(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m,
          bool accumulate = false);

/// c(k×m) = a(n×k)ᵀ · b(n×m)
template <class T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m,
             bool accumulate = false);

/// c(n×m) = a(n×k) · b(m×k)ᵀ
template <class T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m,
             bool accumulate = false);

/// Adds bias(m) to every row of x(n×m).
template <class T>
void add_row_bias(T* x, const T* bias, std::size_t n, std::size_t m);

/// out(m) (+)= column sums of x(n×m).
template <class T>
void column_sums(const T* x, T* out, std::size_t n, std::size_t m, bool accumulate = false);

/// Thread count used by Eigen and OpenMP regions. 1 gives a fixed reduction order.
void set_num_threads(int n);
int num_threads();

}  // namespace l2t::linalg
