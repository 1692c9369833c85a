#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "entroclip/advantage.hpp"
#include "entroclip/error.hpp"

using namespace entroclip;

TEST_CASE("advantages: worked groups") {
  const auto a = group_advantages(std::vector<double>{1, 1, 0, 0});
  const double expect = 0.5 / 0.5001;
  CHECK(a[0] == doctest::Approx(expect).epsilon(1e-14));
  CHECK(a[1] == doctest::Approx(expect).epsilon(1e-14));
  CHECK(a[2] == doctest::Approx(-expect).epsilon(1e-14));
  CHECK(a[3] == doctest::Approx(-expect).epsilon(1e-14));
  CHECK(a[0] == doctest::Approx(0.99980004));

  const auto b = group_advantages(std::vector<double>{1, 0});
  CHECK(b[0] == doctest::Approx(expect));
  CHECK(b[1] == doctest::Approx(-expect));

  for (double x : group_advantages(std::vector<double>(8, 0.7))) CHECK(x == 0.0);
}

TEST_CASE("advantages match a long-double oracle") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> r(2 + rng() % 15);
    for (auto& x : r) x = (rng() % 4 == 0) ? 1.0 : std::round(u(rng) * 4) / 4;
    long double s = 0, s2 = 0;
    for (double x : r) s += x, s2 += (long double)x * x;
    const long double n = r.size();
    const long double m = s / n;
    const long double var = std::max<long double>(0, s2 / n - m * m);
    const auto a = group_advantages(r, 1e-4);
    const bool constant = std::all_of(r.begin(), r.end(), [&](double x) { return x == r[0]; });
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double want = constant ? 0.0 : double((r[i] - m) / (std::sqrt(var) + 1e-4L));
      CHECK(a[i] == doctest::Approx(want).epsilon(1e-9));
    }
  }
}

TEST_CASE("advantages: zero mean and permutation equivariance") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> r(2 + rng() % 31);
    for (auto& x : r) x = n(rng);
    const auto a = group_advantages(r);
    CHECK(std::abs(std::accumulate(a.begin(), a.end(), 0.0)) < 1e-12 * r.size());

    std::vector<std::size_t> perm(r.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> rp(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) rp[i] = r[perm[i]];
    const auto ap = group_advantages(rp);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::abs(ap[i] - a[perm[i]]) < 1e-12);
  }
}

TEST_CASE("advantages: standardized magnitude") {
  // With delta -> 0 the population second moment of A approaches one.
  std::mt19937_64 rng(43);
  std::normal_distribution<double> n(5.0, 2.0);
  std::vector<double> r(64);
  for (auto& x : r) x = n(rng);
  const auto a = group_advantages(r, 1e-12);
  double m2 = 0;
  for (double x : a) m2 += x * x;
  CHECK(m2 / a.size() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("advantages: errors") {
  CHECK_THROWS_AS(group_advantages(std::vector<double>{1.0}), InvalidInput);
  CHECK_THROWS_AS(group_advantages(std::vector<double>{1.0, 0.0}, 0.0), InvalidInput);
  CHECK_THROWS_AS(group_advantages(std::vector<double>{1.0, std::nan("")}), InvalidInput);
}
