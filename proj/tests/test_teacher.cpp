#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "l2t/dln.hpp"
#include "l2t/error.hpp"
#include "l2t/optim.hpp"
#include "l2t/param_utils.hpp"
#include "l2t/teacher.hpp"
#include "oracles.hpp"

using namespace l2t;
using namespace l2t::teacher;

namespace {

Experience make_exp(double loss, std::uint64_t step = 0, std::size_t dim = 4) {
  Experience e;
  e.summary.assign(dim, 0.1 * static_cast<double>(step % 7));
  e.lambda = 0.5;
  e.student_loss = loss;
  e.step = step;
  return e;
}

// Largest singular value of a (rows × cols) matrix by power iteration on AᵀA.
double spectral_norm(const Tensor<double>& a) {
  const std::size_t R = a.dim(0), C = a.dim(1);
  std::vector<double> v(C, 1.0), w(R);
  double sigma = 0;
  for (int it = 0; it < 500; ++it) {
    for (std::size_t r = 0; r < R; ++r) {
      w[r] = 0;
      for (std::size_t c = 0; c < C; ++c) w[r] += a(r, c) * v[c];
    }
    double norm = 0;
    for (std::size_t c = 0; c < C; ++c) {
      v[c] = 0;
      for (std::size_t r = 0; r < R; ++r) v[c] += a(r, c) * w[r];
      norm += v[c] * v[c];
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    sigma = std::sqrt(norm);
  }
  return sigma;
}

}  // namespace

TEST_CASE("buffer evicts oldest at capacity 500") {
  MemoryBuffer buf;
  CHECK(buf.capacity() == 500);
  buf.push(make_exp(1.0, 1));
  CHECK(buf.size() == 1);
  for (std::uint64_t s = 2; s <= 501; ++s) buf.push(make_exp(1.0, s));
  CHECK(buf.size() == 500);
  for (std::size_t i = 0; i < 500; ++i) CHECK(buf[i].step == i + 2);
}

TEST_CASE("buffer FIFO order at capacity 3, exhaustively") {
  MemoryBuffer buf(3);
  for (std::uint64_t s = 1; s <= 10; ++s) {
    buf.push(make_exp(1.0, s));
    const std::size_t expected = std::min<std::uint64_t>(s, 3);
    REQUIRE(buf.size() == expected);
    for (std::size_t i = 0; i < expected; ++i) CHECK(buf[i].step == s - expected + 1 + i);
  }
  buf.clear();
  CHECK(buf.empty());
}

TEST_CASE("invalid experiences are rejected without side effects") {
  MemoryBuffer buf(3);
  buf.push(make_exp(1.0, 1));
  CHECK_THROWS_AS(buf.push(make_exp(std::nan(""), 2)), InvalidExperience);
  CHECK_THROWS_AS(buf.push(make_exp(-1.0, 3)), InvalidExperience);
  auto e = make_exp(1.0, 4);
  e.summary[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(buf.push(e), InvalidExperience);
  e = make_exp(1.0, 5);
  e.lambda = std::nan("");
  CHECK_THROWS_AS(buf.push(e), InvalidExperience);
  CHECK(buf.size() == 1);
  CHECK(buf[0].step == 1);
}

TEST_CASE("prioritized sampling follows loss proportions") {
  MemoryBuffer buf;
  buf.push(make_exp(1.0));
  buf.push(make_exp(3.0));
  std::mt19937_64 rng(42);
  const auto picks = sample_prioritized_indices(buf, 100000, rng);
  double second = 0;
  for (auto i : picks) second += (i == 1);
  CHECK(std::abs(second / 100000 - 0.75) <= 0.01);
}

TEST_CASE("equal losses sample uniformly") {
  MemoryBuffer buf;
  for (int i = 0; i < 10; ++i) buf.push(make_exp(2.0));
  std::mt19937_64 rng(7);
  std::vector<double> counts(10, 0);
  for (auto i : sample_prioritized_indices(buf, 100000, rng)) counts[i] += 1;
  double chi2 = 0;
  for (double c : counts) chi2 += (c - 10000) * (c - 10000) / 10000;
  CHECK(oracle::chi_square_sf(chi2, 9) > 0.001);
}

TEST_CASE("sampling edge cases") {
  MemoryBuffer buf;
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(sample_prioritized(buf, 3, rng), EmptyBuffer);
  buf.push(make_exp(0.0, 9));
  for (const auto& e : sample_prioritized(buf, 50, rng)) CHECK(e.step == 9);
  buf.push(make_exp(0.0, 10));  // both floored at 1e-6: still samplable
  const auto picks = sample_prioritized_indices(buf, 1000, rng);
  CHECK(std::count(picks.begin(), picks.end(), 0) > 0);
  CHECK(std::count(picks.begin(), picks.end(), 1) > 0);

  std::mt19937_64 a(5), b(5);
  CHECK(sample_prioritized_indices(buf, 20, a) == sample_prioritized_indices(buf, 20, b));
}

TEST_CASE("chi-square tail oracle sanity") {
  CHECK(oracle::chi_square_sf(0.0, 9) == 1.0);
  CHECK(oracle::chi_square_sf(27.877, 9) == doctest::Approx(0.001).epsilon(1e-2));
  CHECK(oracle::chi_square_sf(3.841, 1) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(oracle::chi_square_sf(2.0, 2) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("huber branches") {
  CHECK(huber(1.5, 1.0, 1.0) == 0.125);
  CHECK(huber(3.0, 1.0, 1.0) == 1.5);
  CHECK(huber(2.0, 2.0, 1.0) == 0.0);
  CHECK(huber_grad(2.0, 2.0, 1.0) == 0.0);
  for (double delta : {0.5, 1.0, 2.0}) {
    const double lo = delta - 1e-8, hi = delta + 1e-8;
    CHECK(huber(lo, 0, delta) == doctest::Approx(huber(hi, 0, delta)).epsilon(1e-7));
    CHECK(huber_grad(lo, 0, delta) == doctest::Approx(huber_grad(hi, 0, delta)).epsilon(1e-7));
    CHECK(huber_grad(-hi, 0, delta) == -delta);
  }
}

TEST_CASE("teacher prediction basics") {
  TeacherConfig cfg;
  CHECK(init_teacher<float>(cfg, 1).mlp.layers() == 3);
  auto p = init_teacher<double>(cfg, 1);
  std::vector<double> s(32, 0.3);
  const double a = teacher_predict<double>(s, 0.4, p);
  CHECK(a == teacher_predict<double>(s, 0.4, p));
  auto zero = zeros_like(p);
  CHECK(teacher_predict<double>(s, 0.4, zero) == 0.0);
  CHECK(dln_feedback<double>(s, 0.4, zero) == 0.0);
  CHECK_THROWS_AS(teacher_predict<double>(std::vector<double>(5), 0.4, p), ShapeError);
}

TEST_CASE("teacher output is Lipschitz in lambda") {
  const auto p = init_teacher<double>(TeacherConfig{}, 3);
  double lip = 1;
  for (const auto& w : p.mlp.weights) lip *= spectral_norm(w);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(32);
    for (auto& x : s) x = n(rng);
    const double lam = std::uniform_real_distribution<double>(0, 1)(rng), eps = 1e-3;
    const double slope = std::abs(teacher_predict<double>(s, lam + eps, p) - teacher_predict<double>(s, lam, p));
    CHECK(slope <= lip * eps * (1 + 1e-9));
  }
}

TEST_CASE("teacher step on a single experience") {
  MemoryBuffer buf;
  buf.push(make_exp(2.0, 1, 32));
  const auto zero = zeros_like(init_teacher<double>(TeacherConfig{}, 1));
  std::mt19937_64 rng(1);
  CHECK(teacher_step(buf, zero, 1, rng, 1.0).loss == 1.5);

  MemoryBuffer same;
  for (int i = 0; i < 5; ++i) same.push(make_exp(1.0, 3, 32));
  const auto p = init_teacher<double>(TeacherConfig{}, 2);
  std::mt19937_64 a(9), b(9);
  CHECK(teacher_step(same, p, 8, a, 1.0).loss == teacher_step(same, p, 8, b, 1.0).loss);
  CHECK_THROWS_AS(teacher_step(MemoryBuffer(2), p, 1, a, 1.0), EmptyBuffer);
}

TEST_CASE("teacher gradients match finite differences") {
  TeacherConfig cfg{4, {8, 8}};
  auto p = init_teacher<double>(cfg, 5);
  MemoryBuffer buf;
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n;
  for (int i = 0; i < 6; ++i) {
    Experience e;
    e.summary = {n(gen), n(gen), n(gen), n(gen)};
    e.lambda = 0.1 + 0.15 * i;
    e.student_loss = 0.5 + 0.8 * i;  // spans both Huber branches
    buf.push(e);
  }
  auto run = [&] {
    std::mt19937_64 rng(11);
    return teacher_step(buf, p, 16, rng, 1.0);
  };
  const auto analytic = run();
  const auto r = oracle::check_gradients<TeacherParams<double>>(p, analytic.grads, [&] { return run().loss; });
  INFO("worst " << r.worst_name << " abs err " << r.worst_abs);
  CHECK(r.ok());

  // ∂prediction/∂λ
  std::vector<double> s = {0.3, -0.2, 0.5, 1.0};
  for (double lam : {0.1, 0.5, 0.9}) {
    const double eps = 1e-6;
    const double fd = (teacher_predict<double>(s, lam + eps, p) - teacher_predict<double>(s, lam - eps, p)) / (2 * eps);
    CHECK(std::abs(dln_feedback<double>(s, lam, p) - fd) <= 1e-6);
    CHECK(dln_feedback<double>(s, lam, p) == dln_feedback<double>(s, lam, p));
  }
}

TEST_CASE("a teacher that predicts rising loss in lambda pushes the DLN toward smaller lambda") {
  dln::DlnConfig dcfg;
  dcfg.hidden = 4;
  dcfg.mlp_widths = {6, 6, 5};
  TeacherConfig tcfg{4, {16, 16}};
  auto t = init_teacher<double>(tcfg, 1);
  auto tstate = optim::make_adamw_state(t);
  optim::OptimizerConfig topt;
  topt.learning_rate = 1e-2;

  // Experiences whose loss rises linearly with λ.
  MemoryBuffer buf;
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> n(0, 0.3);
  for (int i = 0; i < 200; ++i) {
    Experience e;
    e.summary = {n(gen), n(gen), n(gen), n(gen)};
    e.lambda = u(gen);
    e.student_loss = 1.0 + 2.0 * e.lambda;
    buf.push(e);
  }
  std::mt19937_64 rng(4);
  for (int it = 0; it < 1500; ++it) {
    auto step = teacher_step(buf, t, 32, rng, 1.0);
    optim::adamw_step(t, step.grads, tstate, topt, topt.learning_rate);
  }

  auto d = dln::init_dln<double>(dcfg, 6);
  std::mt19937_64 frng(8);
  const auto f = oracle::random_tensor<double>({5, 5}, frng);
  const auto before = dln::dln_forward(f, d);
  const double feedback = dln_feedback<double>(before.summary, before.lambda, t);
  REQUIRE(feedback > 0);
  auto g = dln::dln_grads(f, d, feedback);
  auto dstate = optim::make_adamw_state(d);
  optim::OptimizerConfig dopt;
  dopt.learning_rate = 1e-4;
  optim::adamw_step(d, g, dstate, dopt, dopt.learning_rate);
  CHECK(dln::dln_forward(f, d).lambda < before.lambda);
}
