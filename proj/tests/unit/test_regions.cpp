#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "entroclip/error.hpp"
#include "entroclip/regions.hpp"
#include "entroclip/token_record.hpp"

using namespace entroclip;

TEST_CASE("rule classifier: worked cases") {
  CHECK(classify_rule(0.9, 0.8, 1.0) == RegionLabel::E1);
  CHECK(classify_rule(0.05, 1.0, 1.0) == RegionLabel::E2);
  CHECK(classify_rule(0.9, 0.8, 0.0) == RegionLabel::Neutral);
  CHECK(classify_rule(0.9, 0.8, -1.0) == RegionLabel::E3);
  CHECK(classify_rule(0.05, 1.0, -0.3) == RegionLabel::E4);
  // Surprisal exactly equal to the entropy.
  CHECK(classify_rule(1.0, 0.0, 1.0) == RegionLabel::Neutral);
}

TEST_CASE("rule classifier agrees with the sign of the surprisal gap") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  for (int t = 0; t < 2000; ++t) {
    const double p = u(rng), h = 3.0 * u(rng);
    const double a = u(rng) - 0.5;
    const RegionLabel l = classify_rule(p, h, a);
    const bool rare = -std::log(p) > h;
    if (a > 0) CHECK(l == (rare ? RegionLabel::E2 : RegionLabel::E1));
    else CHECK(l == (rare ? RegionLabel::E4 : RegionLabel::E3));
  }
}

TEST_CASE("band classifier: worked cases") {
  CHECK(classify_band(0.8, 0.75, 1.0) == RegionLabel::E1);
  CHECK(classify_band(0.2, 0.18, -1.0) == RegionLabel::E4);
  CHECK(classify_band(0.5, 0.5, 1.0) == RegionLabel::Neutral);
  CHECK(classify_band(0.9, 0.8, -1.0) == RegionLabel::E3);
  CHECK(classify_band(0.3, 0.3, 2.0) == RegionLabel::E2); // p_low is inclusive
  CHECK(classify_band(0.8, 0.75, 0.0) == RegionLabel::Neutral);
}

TEST_CASE("band classifier ignores tokens outside the ratio band") {
  CHECK(classify_band(0.9, 0.6, 1.0) == RegionLabel::Neutral);  // r = 1.5
  CHECK(classify_band(0.1, 0.2, -1.0) == RegionLabel::Neutral); // r = 0.5
  CHECK(classify_band(0.13, 0.1, 1.0) == RegionLabel::Neutral); // r = 1.3, open bound
  CHECK(classify_band(0.71, 1.0, -1.0) == RegionLabel::E3);     // r = 0.71
}

TEST_CASE("band validation") {
  RegionBands b;
  CHECK_NOTHROW(b.validate());
  b.p_low = 0.8;
  CHECK_THROWS_AS(b.validate(), InvalidInput);
  b = RegionBands{};
  b.ratio_hi = 0.9;
  CHECK_THROWS_AS(b.validate(), InvalidInput);
}

TEST_CASE("region names parse back") {
  for (RegionLabel l : kAllRegions) CHECK(parse_region(to_string(l)) == l);
  CHECK(parse_region("E2") == RegionLabel::E2);
  CHECK_FALSE(parse_region("e5").has_value());
}

TEST_CASE("region histogram") {
  CHECK(region_histogram({}).total() == 0);

  TokenRecord one;
  one.p_theta = 0.2;
  one.p_old = 0.2;
  one.advantage = 1.0;
  const RegionCounts single = region_histogram(std::vector<TokenRecord>{one});
  CHECK(single[RegionLabel::E2] == 1);
  CHECK(single.total() == 1);

  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::vector<TokenRecord> recs(500);
  for (auto& r : recs) {
    r.p_old = u(rng);
    r.p_theta = std::min(0.999, r.p_old * (0.6 + 0.8 * u(rng)));
    r.advantage = (rng() % 3 == 0) ? 0.0 : u(rng) - 0.5;
  }
  // Recount with the band rule written out inline.
  std::array<std::size_t, 5> expect{};
  for (const auto& r : recs) {
    const double ratio = r.p_theta / r.p_old;
    std::size_t idx = 4;
    if (ratio > 0.7 && ratio < 1.3 && r.advantage != 0.0) {
      const bool hi = r.p_theta > 0.7, lo = r.p_theta <= 0.3;
      if (r.advantage > 0 && hi) idx = 0;
      else if (r.advantage > 0 && lo) idx = 1;
      else if (r.advantage < 0 && hi) idx = 2;
      else if (r.advantage < 0 && lo) idx = 3;
    }
    ++expect[idx];
  }
  const RegionCounts got = region_histogram(recs);
  CHECK(got.counts == expect);
  CHECK(got.total() == recs.size());
}
