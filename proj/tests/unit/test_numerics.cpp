#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "entroclip/error.hpp"
#include "entroclip/numerics.hpp"

using namespace entroclip;

namespace {

std::vector<double> random_logits(std::mt19937_64& rng, std::size_t v, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> z(v);
  for (auto& x : z) x = n(rng);
  return z;
}

// Straight summation over a plain vector, no shared helpers.
double entropy_oracle(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log(x);
  return h;
}

std::vector<double> naive_softmax(const std::vector<double>& z) {
  std::vector<double> e(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += (e[i] = std::exp(z[i]));
  for (auto& x : e) x /= s;
  return e;
}

// Independent central difference; deliberately not fd_gradient.
template <class F>
std::vector<double> central_diff(F f, std::vector<double> z, double h) {
  std::vector<double> g(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double z0 = z[i];
    z[i] = z0 + h;
    const double up = f(z);
    z[i] = z0 - h;
    const double dn = f(z);
    z[i] = z0;
    g[i] = (up - dn) / (2 * h);
  }
  return g;
}

} // namespace

TEST_CASE("softmax of equal logits is uniform") {
  for (double c : {0.0, -3.5, 40.0, 700.0}) {
    const ProbVector p = softmax(LogitVector({c, c, c, c}));
    for (std::size_t i = 0; i < 4; ++i) CHECK(p[i] == doctest::Approx(0.25).epsilon(1e-15));
  }
}

TEST_CASE("softmax sums to one and is shift invariant") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const std::size_t v = 2 + rng() % 31;
    auto z = random_logits(rng, v, 5.0);
    const ProbVector p = softmax(LogitVector(z));
    const double sum = std::accumulate(p.values().begin(), p.values().end(), 0.0);
    CHECK(std::abs(sum - 1.0) < 1e-12);

    const double shift = std::uniform_real_distribution<double>(-50, 50)(rng);
    for (auto& x : z) x += shift;
    const ProbVector q = softmax(LogitVector(z));
    for (std::size_t i = 0; i < v; ++i) CHECK(std::abs(p[i] - q[i]) < 1e-12);
  }
}

TEST_CASE("softmax survives extreme logits") {
  const ProbVector p = softmax(LogitVector({1000.0, 0.0, -1000.0}));
  CHECK(p[0] == 1.0);
  CHECK(p[2] == 0.0);
  const auto lp = log_softmax(std::vector<double>{1000.0, 0.0, -1000.0});
  for (double x : lp) CHECK(std::isfinite(x));
  CHECK(lp[2] == doctest::Approx(-2000.0));
}

TEST_CASE("log_softmax matches log of a naive softmax") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 100; ++t) {
    const auto z = random_logits(rng, 2 + rng() % 10, 2.0);
    const auto lp = log_softmax(z);
    const auto p = naive_softmax(z);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(lp[i] == doctest::Approx(std::log(p[i])));
  }
}

TEST_CASE("type invariants reject bad input") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(LogitVector({1.0}), InvalidInput);
  CHECK_THROWS_AS(LogitVector({0.0, nan}), InvalidInput);
  CHECK_THROWS_AS(LogitVector({inf, 0.0}), InvalidInput);
  CHECK_THROWS_AS(ProbVector({0.5, 0.6}), InvalidInput);
  CHECK_THROWS_AS(ProbVector({1.2, -0.2}), InvalidInput);
  CHECK_THROWS_AS(ProbVector({1.0}), InvalidInput);
  CHECK_NOTHROW(ProbVector({1.0, 0.0}));
  CHECK_THROWS_AS(surrogate_grad_logits(ProbVector({0.5, 0.5}), 2, 1.0), InvalidInput);
  CHECK_THROWS_AS(dot(std::vector<double>{1, 2}, std::vector<double>{1}), InvalidInput);
}

TEST_CASE("entropy: frozen values") {
  CHECK(entropy(ProbVector({0.25, 0.25, 0.25, 0.25})) == doctest::Approx(1.386294361119891));
  CHECK(entropy(ProbVector({1.0, 0.0, 0.0, 0.0})) == 0.0);
  const std::vector<double> p{0.7, 0.2, 0.1};
  CHECK(entropy(ProbVector(p)) == doctest::Approx(entropy_oracle(p)).epsilon(1e-14));
  CHECK(entropy(ProbVector(p)) == doctest::Approx(0.8018185525433372));
}

TEST_CASE("entropy lies in [0, ln V]") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 300; ++t) {
    const std::size_t v = 2 + rng() % 31;
    const ProbVector p = softmax(LogitVector(random_logits(rng, v, 4.0)));
    const double h = entropy(p);
    CHECK(h >= 0.0);
    CHECK(h <= std::log(double(v)) + 1e-12);
  }
}

TEST_CASE("entropy gradient: uniform is zero, random matches differences") {
  for (double x : entropy_grad_logits(ProbVector({0.2, 0.2, 0.2, 0.2, 0.2})))
    CHECK(std::abs(x) < 1e-15);

  std::mt19937_64 rng(14);
  const auto h_of = [](const std::vector<double>& z) {
    return entropy_oracle(naive_softmax(z));
  };
  for (int t = 0; t < 200; ++t) {
    const auto z = random_logits(rng, 2 + rng() % 15, 2.0);
    const auto g = entropy_grad_logits(softmax(LogitVector(z)));
    const auto fd = central_diff(h_of, z, 1e-6);
    CHECK(relative_gradient_error(g, fd) < 1e-5);
    // Softmax gauge: every logit gradient sums to zero.
    CHECK(std::abs(std::accumulate(g.begin(), g.end(), 0.0)) < 1e-12);
  }
}

TEST_CASE("surrogate gradient: frozen values and differences") {
  const auto g = surrogate_grad_logits(ProbVector({0.25, 0.25, 0.25, 0.25}), 0, 1.0);
  CHECK(g == std::vector<double>{0.75, -0.25, -0.25, -0.25});
  for (double x : surrogate_grad_logits(ProbVector({0.3, 0.7}), 1, 0.0)) CHECK(x == 0.0);

  std::mt19937_64 rng(15);
  for (int t = 0; t < 200; ++t) {
    const auto z = random_logits(rng, 2 + rng() % 15, 2.0);
    const std::size_t a = rng() % z.size();
    const double adv = std::normal_distribution<double>(0, 1)(rng);
    const auto f = [&](const std::vector<double>& x) {
      return adv * std::log(naive_softmax(x)[a]);
    };
    const auto sg = surrogate_grad_logits(softmax(LogitVector(z)), a, adv);
    CHECK(relative_gradient_error(sg, central_diff(f, z, 1e-6)) < 1e-5);
  }
}

TEST_CASE("alignment: uniform and zero advantage") {
  const auto r = entropy_alignment(ProbVector({0.25, 0.25, 0.25, 0.25}), 2, 1.7);
  CHECK(std::abs(r.inner_product) < 1e-15);
  CHECK(std::abs(r.token_term) < 1e-15);
  CHECK(std::abs(r.baseline_term) < 1e-15);

  const auto z = entropy_alignment(ProbVector({0.6, 0.3, 0.1}), 1, 0.0);
  CHECK(z.inner_product == 0.0);
  CHECK(z.approx_sign == 0);
}

TEST_CASE("alignment inner product equals the dot of both gradients") {
  std::mt19937_64 rng(16);
  for (int t = 0; t < 300; ++t) {
    const auto zl = random_logits(rng, 2 + rng() % 31, 3.0);
    const ProbVector p = softmax(LogitVector(zl));
    const std::size_t a = rng() % p.size();
    const double adv = std::normal_distribution<double>(0, 1)(rng);
    const auto rep = entropy_alignment(p, a, adv);
    const double direct = dot(surrogate_grad_logits(p, a, adv), entropy_grad_logits(p));
    CHECK(std::abs(rep.inner_product - direct) < 1e-10);
  }
}

TEST_CASE("alignment: a confident positive token lowers entropy") {
  // p_a well above exp(-H): sharpening.
  const auto r = entropy_alignment(ProbVector({0.8, 0.1, 0.1}), 0, 1.0);
  CHECK(r.inner_product < 0.0);
  CHECK(r.approx_sign == -1);
  // A rare token rewarded flattens.
  const auto s = entropy_alignment(ProbVector({0.8, 0.1, 0.1}), 1, 1.0);
  CHECK(s.inner_product > 0.0);
  CHECK(s.approx_sign == 1);
}

TEST_CASE("fd_gradient: constant, linear and entropy") {
  const std::vector<double> z{0.3, -1.0, 2.0};
  for (double g : fd_gradient([](std::span<const double>) { return 4.2; }, z)) CHECK(g == 0.0);

  const std::vector<double> c{1.5, -2.0, 0.25};
  const auto lin = fd_gradient([&](std::span<const double> x) { return dot(c, x); }, z);
  for (std::size_t i = 0; i < 3; ++i) CHECK(lin[i] == doctest::Approx(c[i]).epsilon(1e-8));

  const auto fd = fd_gradient(
      [](std::span<const double> x) {
        return entropy(softmax(LogitVector(std::vector<double>(x.begin(), x.end()))));
      },
      z);
  CHECK(relative_gradient_error(entropy_grad_logits(softmax(LogitVector(z))), fd) < 1e-5);

  CHECK_THROWS_AS(fd_gradient([](std::span<const double>) { return 0.0; }, z, 0.0), InvalidInput);
  CHECK_THROWS_AS(fd_gradient([](std::span<const double>) { return std::nan(""); }, z),
                  InvalidInput);
}

TEST_CASE("relative_gradient_error normalizes by max(1, |b|)") {
  CHECK(relative_gradient_error(std::vector<double>{1.0, 0.0}, std::vector<double>{0.5, 0.0}) ==
        doctest::Approx(0.5));
  CHECK(relative_gradient_error(std::vector<double>{3.0, 4.0}, std::vector<double>{0.0, 10.0}) ==
        doctest::Approx(0.6));
}
