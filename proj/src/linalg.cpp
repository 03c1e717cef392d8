#include "l2t/linalg.hpp"

#include <Eigen/Core>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace l2t::linalg {
namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using CMap = Eigen::Map<const RowMat<T>>;
template <class T>
using Map = Eigen::Map<RowMat<T>>;

}  // namespace

template <class T>
void gemm(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m,
          bool accumulate) {
  CMap<T> A(a, n, k);
  CMap<T> B(b, k, m);
  Map<T> C(c, n, m);
  if (accumulate) {
    C.noalias() += A * B;
  } else {
    C.noalias() = A * B;
  }
}

template <class T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m,
             bool accumulate) {
  CMap<T> A(a, n, k);
  CMap<T> B(b, n, m);
  Map<T> C(c, k, m);
  if (accumulate) {
    C.noalias() += A.transpose() * B;
  } else {
    C.noalias() = A.transpose() * B;
  }
}

template <class T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m,
             bool accumulate) {
  CMap<T> A(a, n, k);
  CMap<T> B(b, m, k);
  Map<T> C(c, n, m);
  if (accumulate) {
    C.noalias() += A * B.transpose();
  } else {
    C.noalias() = A * B.transpose();
  }
}

template <class T>
void add_row_bias(T* x, const T* bias, std::size_t n, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    T* row = x + i * m;
    for (std::size_t j = 0; j < m; ++j) row[j] += bias[j];
  }
}

template <class T>
void column_sums(const T* x, T* out, std::size_t n, std::size_t m, bool accumulate) {
  if (!accumulate) {
    for (std::size_t j = 0; j < m; ++j) out[j] = T(0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = x + i * m;
    for (std::size_t j = 0; j < m; ++j) out[j] += row[j];
  }
}

void set_num_threads(int n) {
  if (n < 1) n = 1;
  Eigen::setNbThreads(n);
#ifdef _OPENMP
  omp_set_num_threads(n);
#endif
}

int num_threads() { return Eigen::nbThreads(); }

#define L2T_INSTANTIATE(T)                                                                  \
  template void gemm<T>(const T*, const T*, T*, std::size_t, std::size_t, std::size_t, bool);    \
  template void gemm_tn<T>(const T*, const T*, T*, std::size_t, std::size_t, std::size_t, bool); \
  template void gemm_nt<T>(const T*, const T*, T*, std::size_t, std::size_t, std::size_t, bool); \
  template void add_row_bias<T>(T*, const T*, std::size_t, std::size_t);                         \
  template void column_sums<T>(const T*, T*, std::size_t, std::size_t, bool);

L2T_INSTANTIATE(float)
L2T_INSTANTIATE(double)
#undef L2T_INSTANTIATE

}  // namespace l2t::linalg
