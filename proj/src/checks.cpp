#include "entroclip/checks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "entroclip/advantage.hpp"
#include "entroclip/numerics.hpp"
#include "entroclip/scheduler.hpp"
#include "entroclip/taskpolicy.hpp"

namespace entroclip {

namespace {

struct RandomCase {
  std::vector<double> z;
  std::size_t action;
  double advantage;
};

RandomCase random_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> vocab(2, 32);
  std::uniform_real_distribution<double> spread(0.2, 3.0);
  std::uniform_real_distribution<double> adv(-2.0, 2.0);
  RandomCase c;
  const std::size_t v = vocab(rng);
  std::normal_distribution<double> logit(0.0, spread(rng));
  c.z.resize(v);
  for (double& x : c.z) x = logit(rng);
  c.action = std::uniform_int_distribution<std::size_t>(0, v - 1)(rng);
  c.advantage = adv(rng);
  return c;
}

double entropy_of_logits(std::span<const double> z) {
  return entropy(softmax(LogitVector(std::vector<double>(z.begin(), z.end()))));
}

void record(SuiteResult& r, std::string failure) {
  r.passed = false;
  if (r.failures.size() < 20) r.failures.push_back(std::move(failure));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

} // namespace

SuiteResult check_gradients(std::uint64_t seed, std::size_t cases) {
  SuiteResult r{"fd_gradients", true, "", {}};
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (std::size_t i = 0; i < cases; ++i) {
    const RandomCase c = random_case(rng);
    const ProbVector p = softmax(LogitVector(c.z));

    const auto h_fd = fd_gradient(entropy_of_logits, c.z);
    const double e_h = relative_gradient_error(entropy_grad_logits(p), h_fd);

    const auto l_fd = fd_gradient(
        [&](std::span<const double> z) { return c.advantage * log_softmax(z)[c.action]; }, c.z);
    const double e_l =
        relative_gradient_error(surrogate_grad_logits(p, c.action, c.advantage), l_fd);

    worst = std::max({worst, e_h, e_l});
    if (e_h > kDefaultFdRelTol || e_l > kDefaultFdRelTol)
      record(r, "case " + std::to_string(i) + ": rel err entropy " + fmt(e_h) + ", surrogate " +
                    fmt(e_l));
  }
  r.summary = std::to_string(cases) + " cases, worst relative error " + fmt(worst);
  return r;
}

SuiteResult check_alignment(std::uint64_t seed, std::size_t cases) {
  SuiteResult r{"alignment_exactness", true, "", {}};
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (std::size_t i = 0; i < cases; ++i) {
    const RandomCase c = random_case(rng);
    const ProbVector p = softmax(LogitVector(c.z));
    const AlignmentReport a = entropy_alignment(p, c.action, c.advantage);
    const double explicit_dot =
        dot(surrogate_grad_logits(p, c.action, c.advantage), entropy_grad_logits(p));
    const double err = std::abs(a.inner_product - explicit_dot);
    worst = std::max(worst, err);
    if (err > 1e-10) record(r, "case " + std::to_string(i) + ": |diff| " + fmt(err));
  }
  for (std::size_t v : {2u, 5u, 16u}) {
    const ProbVector u(std::vector<double>(v, 1.0 / static_cast<double>(v)));
    const AlignmentReport a = entropy_alignment(u, 0, 1.0);
    if (std::abs(a.inner_product) > 1e-15)
      record(r, "uniform V=" + std::to_string(v) + " inner product " + fmt(a.inner_product));
  }
  r.summary = std::to_string(cases) + " cases, worst |difference| " + fmt(worst);
  return r;
}

SuiteResult check_entropy_direction(std::uint64_t seed, std::size_t cases) {
  SuiteResult r{"entropy_direction", true, "", {}};
  std::mt19937_64 rng(seed);
  constexpr double eta = 1e-4;
  std::size_t counted = 0, agree = 0, approx_agree = 0;
  for (std::size_t i = 0; i < cases; ++i) {
    const RandomCase c = random_case(rng);
    const ProbVector p = softmax(LogitVector(c.z));
    const AlignmentReport a = entropy_alignment(p, c.action, c.advantage);
    if (std::abs(a.inner_product) <= 1e-6) continue;
    ++counted;
    const auto g = surrogate_grad_logits(p, c.action, c.advantage);
    std::vector<double> stepped = c.z;
    for (std::size_t x = 0; x < g.size(); ++x) stepped[x] += eta * g[x];
    const double dh = entropy_of_logits(stepped) - entropy(p);
    const int exact = a.inner_product > 0 ? 1 : -1;
    agree += ((dh > 0) ? 1 : -1) == exact ? 1 : 0;
    approx_agree += a.approx_sign == exact ? 1 : 0;
  }
  const double rate = counted ? static_cast<double>(agree) / static_cast<double>(counted) : 0.0;
  const double approx_rate =
      counted ? static_cast<double>(approx_agree) / static_cast<double>(counted) : 0.0;
  if (counted == 0 || rate < 0.99) record(r, "sign agreement " + fmt(rate) + " < 0.99");
  r.summary = std::to_string(counted) + " informative cases, step-and-measure agreement " +
              fmt(rate) + ", surprisal-rule agreement " + fmt(approx_rate);
  return r;
}

SuiteResult check_boundary_identities(const CheckHooks& hooks) {
  SuiteResult r{"boundary_identities", true, "", {}};
  const ThresholdFn fns[] = {ThresholdFn::linear(-0.25, 0.5), ThresholdFn::linear(-0.13, 0.3)};
  double worst = 0.0;
  for (const ThresholdFn& fn : fns) {
    double prev_max = INFINITY, prev_min = -INFINITY;
    for (int i = 1; i <= 99; ++i) {
      const double p = i / 100.0;
      const double r_max = hooks.upper_bound(p, fn);
      const double r_min = hooks.lower_bound(p, fn);
      const double e_up = std::abs(1.0 + fn(r_max * p) - r_max);
      const double e_lo = std::abs(1.0 - fn(r_min * p) - r_min);
      worst = std::max({worst, e_up, e_lo});
      if (e_up > 1e-12)
        record(r, fn.describe() + " upper identity off by " + fmt(e_up) + " at p=" + fmt(p));
      if (e_lo > 1e-12)
        record(r, fn.describe() + " lower identity off by " + fmt(e_lo) + " at p=" + fmt(p));
      if (!(r_max < prev_max))
        record(r, fn.describe() + " r_max not decreasing at p=" + fmt(p));
      if (!(r_min > prev_min))
        record(r, fn.describe() + " r_min not increasing at p=" + fmt(p));
      prev_max = r_max;
      prev_min = r_min;
    }
  }
  r.summary = "99-point grid, worst identity residual " + fmt(worst);
  return r;
}

SuiteResult check_scheduler() {
  SuiteResult r{"scheduler_algebra", true, "", {}};
  const std::size_t t_max = 200;
  if (lambda_k(0, t_max) != 1.0 || lambda_k(t_max / 2, t_max) != 0.0 ||
      lambda_k(t_max, t_max) != -1.0)
    record(r, "lambda_k endpoints are not {1, 0, -1}");

  for (double rho : {0.3, 0.4, 0.5, 0.6}) {
    StrategyConfig cfg;
    cfg.t_max = t_max;
    cfg.phase_ratio = rho;
    const auto split = static_cast<std::size_t>(std::llround(rho * t_max));
    const ThresholdPair id_at = thresholds_id(split, cfg);
    const ThresholdPair did_at = thresholds_did(split, cfg);
    const ThresholdPair id_l = id_pair(1, 0.0, cfg), id_r = id_pair(2, 0.0, cfg);
    const ThresholdPair did_l = did_pair(1, 0.0, cfg), did_r = did_pair(2, 0.0, cfg);
    for (int i = 0; i < 100; ++i) {
      const double p = i == 0 ? 0.01 : i / 100.0;
      auto off = [&](double a, double b) { return std::abs(a - b) > 1e-12; };
      if (off(id_at.upper(p), cfg.eps_std) || off(id_l.upper(p), id_r.upper(p)) ||
          off(id_r.upper(p), cfg.eps_std))
        record(r, "id upper discontinuous at rho=" + fmt(rho) + ", p=" + fmt(p));
      if (off(id_at.lower(p), cfg.eps_std) || off(id_l.lower(p), id_r.lower(p)))
        record(r, "id lower discontinuous at rho=" + fmt(rho) + ", p=" + fmt(p));
      if (off(did_at.upper(p), cfg.upper_fn(p)) || off(did_l.upper(p), did_r.upper(p)))
        record(r, "did upper discontinuous at rho=" + fmt(rho) + ", p=" + fmt(p));
    }
    const ThresholdPair id_end = thresholds_id(t_max, cfg);
    if (!(id_end.lower == cfg.lower_fn) && std::abs(id_end.lower(1.0) - cfg.lower_fn(1.0)) > 1e-12)
      record(r, "id lower does not reach M(p) at k=T_max (rho=" + fmt(rho) + ")");
    const ThresholdPair id_start = thresholds_id(0, cfg);
    if (std::abs(id_start.upper(0.3) - cfg.upper_fn(0.3)) > 1e-12)
      record(r, "id upper does not start at H(p) (rho=" + fmt(rho) + ")");
  }

  StrategyConfig od;
  od.kind = StrategyKind::OD;
  od.t_max = t_max;
  od.h_init = std::log(16.0);
  double prev = INFINITY;
  for (std::size_t k = 0; k <= t_max; ++k) {
    const EntropyBands b = od_bands(k, od);
    if (b.tau_high > prev) record(r, "tau_high increases at k=" + std::to_string(k));
    prev = b.tau_high;
  }
  const EntropyBands end = od_bands(t_max, od);
  if (end.tau_high != end.tau_low) record(r, "tau_high(T_max) != tau_low");

  StrategyConfig st;
  for (std::size_t k : {std::size_t{0}, std::size_t{137}, std::size_t{499}}) {
    Scheduler s(st);
    const ThresholdPair pair = s.step(k, 1.0);
    if (pair.upper != ThresholdFn::constant(0.2) || pair.lower != ThresholdFn::constant(0.2))
      record(r, "static strategy emitted a non-constant pair");
  }
  r.summary = "continuity at rho in {0.3,0.4,0.5,0.6}, lambda endpoints, od bands";
  return r;
}

SuiteResult check_hysteresis(std::uint64_t seed) {
  SuiteResult r{"hysteresis", true, "", {}};
  StrategyConfig cfg;
  cfg.kind = StrategyKind::OD;
  cfg.t_max = 400;
  cfg.h_init = 1.0;
  ScheduleState st;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.08);
  double h = 1.0;
  std::size_t flips = 0;
  for (std::size_t k = 0; k < cfg.t_max; ++k) {
    h = std::clamp(h + noise(rng) - 0.004, 0.0, 1.2);
    const int before = st.mode;
    const EntropyBands b = od_bands(k, cfg);
    thresholds_od(h, k, st, cfg);
    if (st.mode != before) {
      ++flips;
      if (st.mode == 1 && !(h <= b.tau_low))
        record(r, "boost without crossing tau_low at k=" + std::to_string(k));
      if (st.mode == 0 && !(h > b.tau_high))
        record(r, "suppress without crossing tau_high at k=" + std::to_string(k));
    }
    const bool boost = st.mode == 1;
    if (boost != (st.last->upper == cfg.upper_fn))
      record(r, "emitted pair does not match mode at k=" + std::to_string(k));
  }
  r.summary = "random entropy walk over " + std::to_string(cfg.t_max) + " steps, " +
              std::to_string(flips) + " mode switches";
  return r;
}

SuiteResult check_advantage(std::uint64_t seed, std::size_t cases) {
  SuiteResult r{"grpo_advantage", true, "", {}};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> size(2, 16);
  std::uniform_real_distribution<double> reward(0.0, 1.0);
  for (std::size_t i = 0; i < cases; ++i) {
    std::vector<double> rw(size(rng));
    for (double& x : rw) x = reward(rng);
    const auto adv = group_advantages(rw);
    const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / adv.size();
    if (std::abs(mean) > 1e-12) record(r, "case " + std::to_string(i) + ": mean " + fmt(mean));

    std::vector<std::size_t> perm(rw.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> permuted(rw.size());
    for (std::size_t j = 0; j < rw.size(); ++j) permuted[j] = rw[perm[j]];
    const auto adv_p = group_advantages(permuted);
    for (std::size_t j = 0; j < rw.size(); ++j)
      if (std::abs(adv_p[j] - adv[perm[j]]) > 1e-12)
        record(r, "case " + std::to_string(i) + ": not permutation equivariant");

    const std::vector<double> flat(rw.size(), reward(rng));
    for (double a : group_advantages(flat))
      if (a != 0.0) record(r, "case " + std::to_string(i) + ": constant rewards gave nonzero");
  }
  r.summary = std::to_string(cases) + " random groups";
  return r;
}

std::vector<SuiteResult> run_all_checks(const CheckHooks& hooks) {
  return {check_gradients(),       check_alignment(),           check_entropy_direction(),
          check_boundary_identities(hooks), check_scheduler(), check_hysteresis(),
          check_advantage()};
}

} // namespace entroclip
