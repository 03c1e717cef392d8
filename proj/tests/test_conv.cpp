#include <cmath>
#include <random>

#include "doctest.h"
#include "l2t/conv.hpp"
#include "l2t/error.hpp"
#include "oracles.hpp"

using namespace l2t;

namespace {

template <class T>
double max_rel_error_vs_direct(std::size_t B, std::size_t L, std::size_t D, std::mt19937_64& rng) {
  auto u = oracle::random_tensor<T>({B, L, D}, rng);
  auto h = oracle::random_tensor<T>({L, D}, rng);
  const auto y = fft_causal_conv(u, h);
  std::vector<double> ud(u.values().begin(), u.values().end()), hd(h.values().begin(), h.values().end());
  const auto ref = oracle::direct_causal_conv(ud, hd, B, L, D);
  double scale = 0, err = 0;
  for (double v : ref) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < ref.size(); ++i) err = std::max(err, std::abs(y[i] - ref[i]));
  return scale > 0 ? err / scale : err;
}

}  // namespace

TEST_CASE("fft size is the next power of two at least 2L") {
  CHECK(conv_fft_size(1) == 2);
  CHECK(conv_fft_size(2) == 4);
  CHECK(conv_fft_size(3) == 8);
  CHECK(conv_fft_size(64) == 128);
  CHECK(conv_fft_size(257) == 1024);
}

TEST_CASE("fft convolution matches the direct sum") {
  std::mt19937_64 rng(11);
  const std::size_t lengths[] = {1, 2, 3, 16, 33, 64, 257};
  double worst_f = 0, worst_d = 0;
  for (int c = 0; c < 200; ++c) {
    const std::size_t L = lengths[c % 7], B = 1 + rng() % 3, D = 1 + rng() % 4;
    worst_f = std::max(worst_f, max_rel_error_vs_direct<float>(B, L, D, rng));
    worst_d = std::max(worst_d, max_rel_error_vs_direct<double>(B, L, D, rng));
  }
  CHECK(worst_f <= 1e-5);
  CHECK(worst_d <= 1e-10);
}

TEST_CASE("impulse filters") {
  std::mt19937_64 rng(2);
  auto u = oracle::random_tensor<double>({2, 9, 3}, rng);
  Tensor<double> h({9, 3});
  for (std::size_t c = 0; c < 3; ++c) h(0, c) = 1;
  auto y = fft_causal_conv(u, h);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(y[i] == doctest::Approx(u[i]).epsilon(1e-12));

  h.fill(0);
  for (std::size_t c = 0; c < 3; ++c) h(1, c) = 1;
  y = fft_causal_conv(u, h);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(std::abs(y(b, 0, c)) < 1e-12);
      for (std::size_t t = 1; t < 9; ++t) CHECK(y(b, t, c) == doctest::Approx(u(b, t - 1, c)).epsilon(1e-12));
    }
}

TEST_CASE("fft convolution shape errors") {
  CHECK_THROWS_AS(fft_causal_conv(Tensor<float>({1, 4, 2}), Tensor<float>({4, 3})), ShapeError);
  CHECK_THROWS_AS(fft_causal_conv(Tensor<float>({1, 4, 2}), Tensor<float>({3, 2})), ShapeError);
  CHECK_THROWS_AS(fft_causal_conv(Tensor<float>({4, 2}), Tensor<float>({4, 2})), ShapeError);
}

TEST_CASE("fft convolution backward is the adjoint") {
  std::mt19937_64 rng(4);
  for (std::size_t L : {1, 5, 16, 33}) {
    const SeqShape s{2, L, 3};
    auto u = oracle::random_tensor<double>({2, L, 3}, rng);
    auto h = oracle::random_tensor<double>({L, 3}, rng);
    auto dy = oracle::random_tensor<double>({2, L, 3}, rng);
    std::vector<double> du(s.size()), dh(L * 3);
    causal_conv_fft_backward<double>(u.span(), h.span(), dy.span(), s, du, dh);
    // <dy, conv(u, h)> is bilinear: its gradient in u is du and in h is dh.
    std::vector<double> ud(u.values().begin(), u.values().end()), hd(h.values().begin(), h.values().end());
    auto objective = [&](const std::vector<double>& uu, const std::vector<double>& hh) {
      const auto y = oracle::direct_causal_conv(uu, hh, 2, L, 3);
      double acc = 0;
      for (std::size_t i = 0; i < y.size(); ++i) acc += y[i] * dy[i];
      return acc;
    };
    const double eps = 1e-6;
    for (std::size_t i = 0; i < ud.size(); ++i) {
      auto up = ud, dn = ud;
      up[i] += eps;
      dn[i] -= eps;
      CHECK(du[i] == doctest::Approx((objective(up, hd) - objective(dn, hd)) / (2 * eps)).epsilon(1e-6));
    }
    for (std::size_t i = 0; i < hd.size(); ++i) {
      auto up = hd, dn = hd;
      up[i] += eps;
      dn[i] -= eps;
      CHECK(dh[i] == doctest::Approx((objective(ud, up) - objective(ud, dn)) / (2 * eps)).epsilon(1e-6));
    }
  }
}

TEST_CASE("short convolution") {
  std::mt19937_64 rng(8);
  auto u = oracle::random_tensor<double>({1, 7, 3}, rng);
  Tensor<double> k({3, 3});
  for (std::size_t c = 0; c < 3; ++c) k(c, 0) = 1;
  auto y = short_conv(u, k);
  CHECK(y == u);

  k.fill(0);
  for (std::size_t c = 0; c < 3; ++c) k(c, 1) = 1;
  y = short_conv(u, k);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(y(0, 0, c) == 0);
    for (std::size_t t = 1; t < 7; ++t) CHECK(y(0, t, c) == u(0, t - 1, c));
  }

  k = oracle::random_tensor<double>({3, 3}, rng);
  y = short_conv(u, k);
  for (std::size_t t = 0; t < 7; ++t)
    for (std::size_t c = 0; c < 3; ++c) {
      double ref = 0;
      for (std::size_t s = 0; s < 3 && s <= t; ++s) ref += k(c, s) * u(0, t - s, c);
      CHECK(y(0, t, c) == doctest::Approx(ref).epsilon(1e-14));
    }
}

TEST_CASE("short convolution backward") {
  std::mt19937_64 rng(9);
  const SeqShape s{2, 6, 4};
  auto u = oracle::random_tensor<double>({2, 6, 4}, rng);
  auto k = oracle::random_tensor<double>({4, 3}, rng);
  auto dy = oracle::random_tensor<double>({2, 6, 4}, rng);
  std::vector<double> du(s.size()), dk(12);
  short_conv_backward<double>(u.span(), k.span(), dy.span(), 3, s, du, dk);
  auto objective = [&] {
    const auto y = short_conv(u, k);
    double acc = 0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += y[i] * dy[i];
    return acc;
  };
  const double eps = 1e-6;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double v = u[i];
    u[i] = v + eps;
    const double a = objective();
    u[i] = v - eps;
    const double b = objective();
    u[i] = v;
    CHECK(du[i] == doctest::Approx((a - b) / (2 * eps)).epsilon(1e-7));
  }
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double v = k[i];
    k[i] = v + eps;
    const double a = objective();
    k[i] = v - eps;
    const double b = objective();
    k[i] = v;
    CHECK(dk[i] == doctest::Approx((a - b) / (2 * eps)).epsilon(1e-7));
  }
}

TEST_CASE("short convolution rejects even kernels and mismatched channels") {
  CHECK_THROWS_AS(short_conv(Tensor<float>({1, 4, 2}), Tensor<float>({2, 2})), ShapeError);
  CHECK_THROWS_AS(short_conv(Tensor<float>({1, 4, 2}), Tensor<float>({3, 3})), ShapeError);
}
