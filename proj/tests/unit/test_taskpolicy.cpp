#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "entroclip/error.hpp"
#include "entroclip/taskpolicy.hpp"

using namespace entroclip;

namespace {

TaskSpec tiny_task(RewardMode mode) {
  TaskSpec t;
  t.n_contexts = 2;
  t.vocab = 4;
  t.horizon = 4;
  t.reward_mode = mode;
  t.targets = {{{0, 1, 2, 3}, {3, 3, 3, 3}}, {{1, 1, 1, 1}}};
  return t;
}

} // namespace

TEST_CASE("presets have the documented shapes") {
  const TaskSpec d = make_task_preset("default");
  CHECK(d.n_contexts == 32);
  CHECK(d.vocab == 16);
  CHECK(d.horizon == 4);
  CHECK(d.reward_mode == RewardMode::FractionMatch);
  CHECK_NOTHROW(d.validate());
  for (const auto& ts : d.targets) CHECK(ts.size() == 1);

  const TaskSpec m = make_task_preset("multi2", 3);
  CHECK(m.reward_mode == RewardMode::AnyExact);
  CHECK_NOTHROW(m.validate());
  for (const auto& ts : m.targets) {
    REQUIRE(ts.size() == 2);
    CHECK(ts[0] != ts[1]);
  }
  CHECK(make_task_preset("multi2", 3) == m);
  CHECK(make_task_preset("multi2", 4).targets != m.targets);
  CHECK_THROWS_AS(make_task_preset("nope"), InvalidInput);
}

TEST_CASE("task validation") {
  TaskSpec t = tiny_task(RewardMode::FractionMatch);
  CHECK_NOTHROW(t.validate());
  t.targets[1][0][2] = 4;
  CHECK_THROWS_AS(t.validate(), InvalidInput);
  t = tiny_task(RewardMode::FractionMatch);
  t.targets[0][1].pop_back();
  CHECK_THROWS_AS(t.validate(), InvalidInput);
  t = tiny_task(RewardMode::FractionMatch);
  t.targets.pop_back();
  CHECK_THROWS_AS(t.validate(), InvalidInput);
  t = tiny_task(RewardMode::FractionMatch);
  t.reward_noise = 1.5;
  CHECK_THROWS_AS(t.validate(), InvalidInput);
}

TEST_CASE("verifier scores") {
  const TaskSpec f = tiny_task(RewardMode::FractionMatch);
  CHECK(verify_reward(std::vector<std::size_t>{0, 1, 2, 3}, 0, f) == 1.0);
  CHECK(verify_reward(std::vector<std::size_t>{0, 1, 0, 0}, 0, f) == 0.5);
  // Best over targets: three positions agree with the second target.
  CHECK(verify_reward(std::vector<std::size_t>{3, 3, 3, 0}, 0, f) == 0.75);
  CHECK(verify_reward(std::vector<std::size_t>{0, 0, 0, 0}, 1, f) == 0.0);

  const TaskSpec e = tiny_task(RewardMode::AnyExact);
  CHECK(verify_reward(std::vector<std::size_t>{3, 3, 3, 3}, 0, e) == 1.0);
  CHECK(verify_reward(std::vector<std::size_t>{3, 3, 3, 0}, 0, e) == 0.0);

  CHECK_THROWS_AS(verify_reward(std::vector<std::size_t>{0, 1}, 0, f), InvalidInput);
  CHECK_THROWS_AS(verify_reward(std::vector<std::size_t>{0, 1, 2, 3}, 2, f), InvalidInput);
  CHECK_THROWS_AS(match_fraction(std::vector<std::size_t>{}, TokenSeq{}), InvalidInput);
}

TEST_CASE("reward mode names") {
  for (RewardMode m : {RewardMode::FractionMatch, RewardMode::AnyExact})
    CHECK(parse_reward_mode(to_string(m)) == m);
  CHECK_FALSE(parse_reward_mode("partial").has_value());
}

TEST_CASE("policy table layout and updates") {
  TabularPolicy p(3, 2, 5);
  CHECK(p.n_cells() == 6);
  CHECK(p.table().size() == 30);
  CHECK(p.cell_index(2, 1) == 5);
  CHECK_THROWS_AS(p.cell_index(3, 0), InvalidInput);
  CHECK_THROWS_AS(p.prob(0, 0, 5), InvalidInput);

  p.logits(1, 0)[2] = 3.0;
  CHECK(p.table()[(1 * 2 + 0) * 5 + 2] == 3.0);
  std::vector<double> dir(30, 1.0);
  p.add_scaled(dir, 0.5);
  CHECK(p.logits(1, 0)[2] == 3.5);
  CHECK_THROWS_AS(p.add_scaled(std::vector<double>(29), 1.0), InvalidInput);
}

TEST_CASE("mean policy entropy") {
  TabularPolicy zero(4, 3, 16);
  CHECK(mean_policy_entropy(zero) == doctest::Approx(std::log(16.0)).epsilon(1e-15));

  TabularPolicy two(2, 1, 4);
  two.logits(0, 0)[0] = 800.0;
  CHECK(mean_policy_entropy(two) == doctest::Approx(std::log(4.0) / 2));

  TabularPolicy r(5, 3, 7);
  r.randomize(2.0, 9);
  // Recompute looping steps outer, contexts inner.
  double sum = 0.0;
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t c = 0; c < 5; ++c) {
      auto z = r.logits(c, s);
      double mx = z[0];
      for (double x : z) mx = std::max(mx, x);
      double norm = 0.0;
      for (double x : z) norm += std::exp(x - mx);
      double h = 0.0;
      for (double x : z) {
        const double q = std::exp(x - mx) / norm;
        h -= q * std::log(q);
      }
      sum += h;
    }
  CHECK(mean_policy_entropy(r) == doctest::Approx(sum / 15).epsilon(1e-13));
}

TEST_CASE("randomize is seeded") {
  TabularPolicy a(2, 2, 4), b(2, 2, 4), c(2, 2, 4);
  a.randomize(1.0, 5);
  b.randomize(1.0, 5);
  c.randomize(1.0, 6);
  CHECK(a == b);
  CHECK_FALSE(a == c);
}

TEST_CASE("rng helpers") {
  CHECK(stream_seed(1, 2, 3) == stream_seed(1, 2, 3));
  CHECK(stream_seed(1, 2, 3) != stream_seed(1, 3, 2));
  CHECK(uniform01(0) == 0.0);
  CHECK(uniform01(~0ULL) < 1.0);
  const ProbVector p({0.2, 0.0, 0.8});
  CHECK(sample_categorical(p, 0.0) == 0);
  CHECK(sample_categorical(p, 0.1999) == 0);
  CHECK(sample_categorical(p, 0.2) == 2);
  CHECK(sample_categorical(p, 0.9999999) == 2);
}

TEST_CASE("sampling: a deterministic policy repeats itself") {
  const TaskSpec t = tiny_task(RewardMode::FractionMatch);
  TabularPolicy p(t);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t s = 0; s < 4; ++s) p.logits(c, s)[1] = 50.0;
  const RolloutBatch b = sample_rollouts(p, t, 8, 3);
  for (const auto& g : b.groups) {
    for (const auto& tr : g.trajectories) CHECK(tr.tokens == g.trajectories[0].tokens);
    for (double r : g.rewards) CHECK(r == g.rewards[0]);
  }
}

TEST_CASE("sampling: seeded and round-keyed") {
  const TaskSpec t = make_task_preset("default");
  TabularPolicy p(t);
  p.randomize(1.0, 2);
  const auto a = sample_rollouts(p, t, 8, 11, 4);
  const auto b = sample_rollouts(p, t, 8, 11, 4);
  const auto c = sample_rollouts(p, t, 8, 11, 5);
  bool differ = false;
  for (std::size_t g = 0; g < a.groups.size(); ++g)
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(a.groups[g].trajectories[i].tokens == b.groups[g].trajectories[i].tokens);
      CHECK(a.groups[g].trajectories[i].p_old == b.groups[g].trajectories[i].p_old);
      differ = differ || a.groups[g].trajectories[i].tokens != c.groups[g].trajectories[i].tokens;
    }
  CHECK(differ);
}

TEST_CASE("sampling: p_old comes from the snapshot, which later edits cannot reach") {
  const TaskSpec t = tiny_task(RewardMode::AnyExact);
  TabularPolicy p(t);
  p.randomize(1.0, 4);
  const RolloutBatch b = sample_rollouts(p, t, 4, 1);
  const TabularPolicy before = p;
  p.add_scaled(std::vector<double>(p.table().size(), 1.0), 3.0);
  p.logits(0, 0)[0] += 5.0;
  CHECK(b.snapshot.policy() == before);
  for (const auto& g : b.groups)
    for (const auto& tr : g.trajectories)
      for (std::size_t s = 0; s < t.horizon; ++s)
        CHECK(tr.p_old[s] == b.snapshot.prob(tr.context, s, tr.tokens[s]));
}

TEST_CASE("sampling: reward noise uses its own stream") {
  TaskSpec t = make_task_preset("default");
  TabularPolicy p(t);
  const auto clean = sample_rollouts(p, t, 8, 5, 2);
  t.reward_noise = 0.5;
  const auto noisy = sample_rollouts(p, t, 8, 5, 2);
  std::size_t replaced = 0, total = 0;
  for (std::size_t g = 0; g < clean.groups.size(); ++g)
    for (std::size_t i = 0; i < 8; ++i) {
      const auto& a = clean.groups[g].trajectories[i];
      const auto& b = noisy.groups[g].trajectories[i];
      CHECK(a.tokens == b.tokens);
      CHECK(a.reward == verify_reward(a.tokens, a.context, t));
      CHECK(b.reward >= 0.0);
      CHECK(b.reward <= 1.0);
      replaced += a.reward != b.reward;
      ++total;
    }
  // Binomial(256, 0.5) with a few collisions on equal values.
  CHECK(replaced > total / 4);
  CHECK(replaced < 3 * total / 4);
}

TEST_CASE("sampling: uniform policy hits an exact target at rate V^-L") {
  // One million trajectories: 1000 contexts x 1000 samples.
  TaskSpec t;
  t.n_contexts = 1000;
  t.vocab = 16;
  t.horizon = 4;
  t.reward_mode = RewardMode::AnyExact;
  t.targets = random_targets(t.n_contexts, t.vocab, t.horizon, 1, 77);
  const TabularPolicy p(t);
  const auto b = sample_rollouts(p, t, 1000, 99);
  double hits = 0;
  for (const auto& g : b.groups)
    for (double r : g.rewards) hits += r;
  const double n = 1e6;
  const double q = std::pow(16.0, -4);
  const double se = std::sqrt(q * (1 - q) / n);
  CHECK(std::abs(hits / n - q) < 3 * se);
}

TEST_CASE("sampling: shape errors") {
  const TaskSpec t = tiny_task(RewardMode::AnyExact);
  CHECK_THROWS_AS(sample_rollouts(TabularPolicy(t), t, 1, 0), InvalidInput);
  CHECK_THROWS_AS(sample_rollouts(TabularPolicy(2, 4, 5), t, 4, 0), InvalidInput);
}
