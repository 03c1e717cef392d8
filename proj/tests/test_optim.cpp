#include <cmath>
#include <random>

#include "doctest.h"
#include "l2t/error.hpp"
#include "l2t/optim.hpp"

using namespace l2t;
using namespace l2t::optim;

namespace {

ArrayList<double> scalars(std::initializer_list<double> v) {
  ArrayList<double> a;
  for (double x : v) {
    Tensor<double> t({1});
    t[0] = x;
    a.arrays.push_back(t);
  }
  return a;
}

}  // namespace

TEST_CASE("component defaults") {
  CHECK(student_defaults().learning_rate == 2e-4);
  CHECK(student_defaults().weight_decay == 0.15);
  CHECK(teacher_defaults().learning_rate == 2e-6);
  CHECK(teacher_defaults().weight_decay == 0.01);
  CHECK(dln_defaults().learning_rate == 5e-7);
  CHECK(dln_defaults().weight_decay == 0.01);
  for (const auto& c : {student_defaults(), teacher_defaults(), dln_defaults()}) {
    CHECK(c.beta1 == 0.9);
    CHECK(c.beta2 == 0.999);
    CHECK(c.epsilon == 1e-8);
  }
}

TEST_CASE("optimizer config validation") {
  OptimizerConfig c;
  c.learning_rate = 0;
  CHECK_THROWS_AS(c.validate("student"), ConfigError);
  c.learning_rate = 1e-3;
  c.weight_decay = -1;
  CHECK_THROWS_AS(c.validate("student"), ConfigError);
}

TEST_CASE("zero gradient decays geometrically") {
  auto p = scalars({1.0, -2.0});
  const auto g = scalars({0.0, 0.0});
  auto state = make_adamw_state(p);
  auto cfg = student_defaults();
  const double lr = 2e-4;
  double w0 = 1.0, w1 = -2.0;
  for (int s = 0; s < 100; ++s) {
    adamw_step(p, g, state, cfg, lr);
    w0 *= 1 - lr * 0.15;
    w1 *= 1 - lr * 0.15;
    CHECK(std::abs(p.arrays[0][0] - w0) <= 1e-12);
    CHECK(std::abs(p.arrays[1][0] - w1) <= 1e-12);
  }
  CHECK(state.step == 100);
}

TEST_CASE("first step moves by the learning rate") {
  auto p = scalars({0.5});
  auto state = make_adamw_state(p);
  OptimizerConfig cfg;
  adamw_step(p, scalars({1.0}), state, cfg, 1e-3);
  CHECK(p.arrays[0][0] == doctest::Approx(0.5 - 1e-3 / (1 + 1e-8)).epsilon(1e-14));
}

TEST_CASE("constant gradient approaches sign descent") {
  auto p = scalars({0.0, 0.0});
  auto state = make_adamw_state(p);
  OptimizerConfig cfg;
  const auto g = scalars({0.3, -5.0});
  const double lr = 1e-3;
  for (int s = 0; s < 10000; ++s) {
    const double a = p.arrays[0][0], b = p.arrays[1][0];
    adamw_step(p, g, state, cfg, lr);
    if (s == 9999) {
      CHECK(std::abs((p.arrays[0][0] - a) / lr + 1.0) <= 1e-3);
      CHECK(std::abs((p.arrays[1][0] - b) / lr - 1.0) <= 1e-3);
    }
  }
  for (const auto& m : state.v) CHECK(m[0] >= 0);
}

TEST_CASE("non-finite gradients leave parameters untouched") {
  auto p = scalars({1.0, 2.0});
  auto state = make_adamw_state(p);
  OptimizerConfig cfg;
  CHECK_THROWS_AS(adamw_step(p, scalars({0.1, std::nan("")}), state, cfg, 1e-3), NumericalError);
  CHECK(p.arrays[0][0] == 1.0);
  CHECK(p.arrays[1][0] == 2.0);
  CHECK(state.step == 0);
}

TEST_CASE("cosine schedule boundary values") {
  struct Case {
    std::uint64_t total, warmup;
    double hi, lo;
  };
  for (const auto& c : {Case{1130, 226, 2e-4, 2e-6}, Case{100, 10, 1.0, 0.0}, Case{7, 1, 3.0, 0.5},
                        Case{400, 0, 1e-3, 1e-5}, Case{51, 20, 0.7, 0.1}}) {
    if (c.warmup > 0) {
      CHECK(std::abs(cosine_warmup_lr(c.warmup - 1, c.total, c.warmup, c.hi, c.lo) - c.hi) <= 1e-12);
      CHECK(cosine_warmup_lr(0, c.total, c.warmup, c.hi, c.lo) == doctest::Approx(c.hi / c.warmup));
    }
    CHECK(std::abs(cosine_warmup_lr(c.warmup, c.total, c.warmup, c.hi, c.lo) - c.hi) <= 1e-12);
    CHECK(std::abs(cosine_warmup_lr(c.total, c.total, c.warmup, c.hi, c.lo) - c.lo) <= 1e-12);
    if ((c.total - c.warmup) % 2 == 0) {
      const auto mid = c.warmup + (c.total - c.warmup) / 2;
      CHECK(std::abs(cosine_warmup_lr(mid, c.total, c.warmup, c.hi, c.lo) - (c.hi + c.lo) / 2) <= 1e-12);
    }
    double prev = c.hi;
    for (std::uint64_t s = c.warmup; s <= c.total; ++s) {
      const double lr = cosine_warmup_lr(s, c.total, c.warmup, c.hi, c.lo);
      CHECK(lr <= prev + 1e-15);
      prev = lr;
    }
  }
}

TEST_CASE("clipping") {
  auto a = scalars({3.0, 4.0});
  ArrayList<double> single;
  Tensor<double> v({2});
  v[0] = 3;
  v[1] = 4;
  single.arrays.push_back(v);

  auto s1 = single;
  CHECK(clip_grad_norm(s1, 10.0) == 5.0);
  CHECK(s1.arrays[0] == v);

  auto s2 = single;
  CHECK(clip_grad_norm(s2, 1.0) == 5.0);
  CHECK(s2.arrays[0][0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(s2.arrays[0][1] == doctest::Approx(0.8).epsilon(1e-15));

  CHECK(clip_grad_norm(a, 1.0) == 5.0);
  CHECK(a.arrays[0][0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(a.arrays[1][0] == doctest::Approx(0.8).epsilon(1e-15));

  CHECK_THROWS_AS(clip_grad_norm(a, 0.0), ConfigError);
}

TEST_CASE("clipping law on random gradients") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 2);
  for (int trial = 0; trial < 100; ++trial) {
    ArrayList<double> g;
    for (int k = 0; k < 1 + trial % 4; ++k) {
      Tensor<double> t({1 + rng() % 9});
      for (auto& x : t.values()) x = n(rng);
      g.arrays.push_back(t);
    }
    const double max_norm = std::uniform_real_distribution<double>(0.1, 10)(rng);
    const double before = clip_grad_norm(g, max_norm);
    double sq = 0;
    for (const auto& t : g.arrays)
      for (double x : t.values()) sq += x * x;
    const double after = std::sqrt(sq);
    CHECK(after <= before * (1 + 1e-12));
    CHECK(std::abs(after - std::min(before, max_norm)) <= 1e-6 * std::min(before, max_norm));
  }
}
