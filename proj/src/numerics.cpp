#include "entroclip/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "entroclip/error.hpp"

namespace entroclip {

LogitVector::LogitVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2)
    throw InvalidInput("LogitVector: vocabulary size must be >= 2");
  for (double v : values_)
    if (!std::isfinite(v))
      throw InvalidInput("LogitVector: non-finite logit");
}

ProbVector::ProbVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2)
    throw InvalidInput("ProbVector: vocabulary size must be >= 2");
  double sum = 0.0;
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0))
      throw InvalidInput("ProbVector: component outside [0, 1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kProbSumTolerance)
    throw InvalidInput("ProbVector: components sum to " + std::to_string(sum));
}

std::vector<double> log_softmax(std::span<const double> z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z)
    sum += std::exp(v - zmax);
  const double log_norm = zmax + std::log(sum);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    out[i] = z[i] - log_norm;
  return out;
}

ProbVector softmax(const LogitVector& z) {
  std::vector<double> p = log_softmax(z.values());
  for (double& v : p)
    v = std::exp(v);
  // Renormalize so the sum invariant holds to rounding for any V.
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p)
    v /= sum;
  return ProbVector(std::move(p));
}

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

} // namespace

double entropy(const ProbVector& p) {
  double h = 0.0;
  for (double v : p.values())
    h -= xlogx(v);
  // Rounding can leave a -1e-17 residue for one-hot inputs.
  return std::max(h, 0.0);
}

std::vector<double> entropy_grad_logits(const ProbVector& p) {
  const double h = entropy(p);
  std::vector<double> g(p.size(), 0.0);
  for (std::size_t x = 0; x < p.size(); ++x)
    if (p[x] > 0.0)
      g[x] = -p[x] * (std::log(p[x]) + h);
  return g;
}

std::vector<double> surrogate_grad_logits(const ProbVector& p, std::size_t action,
                                          double advantage) {
  if (action >= p.size())
    throw InvalidInput("surrogate_grad_logits: token index out of range");
  std::vector<double> g(p.size());
  for (std::size_t x = 0; x < p.size(); ++x)
    g[x] = -advantage * p[x];
  g[action] = advantage * (1.0 - p[action]);
  return g;
}

AlignmentReport entropy_alignment(const ProbVector& p, std::size_t action, double advantage) {
  if (action >= p.size())
    throw InvalidInput("entropy_alignment: token index out of range");
  const double h = entropy(p);
  AlignmentReport r;
  const double pa = p[action];
  const double centered_a = pa > 0.0 ? std::log(pa) + h : 0.0;
  r.token_term = pa * centered_a;
  for (double px : p.values())
    if (px > 0.0)
      r.baseline_term += px * px * (std::log(px) + h);
  r.inner_product = -advantage * (r.token_term - r.baseline_term);
  const double s = advantage * centered_a;
  r.approx_sign = s > 0.0 ? -1 : (s < 0.0 ? 1 : 0);
  return r;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw InvalidInput("dot: length mismatch");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

std::vector<double> fd_gradient(const ScalarFn& f, std::span<const double> z, double h) {
  if (!(h > 0.0))
    throw InvalidInput("fd_gradient: step must be positive");
  std::vector<double> probe(z.begin(), z.end());
  std::vector<double> g(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    probe[i] = z[i] + h;
    const double fp = f(probe);
    probe[i] = z[i] - h;
    const double fm = f(probe);
    probe[i] = z[i];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw InvalidInput("fd_gradient: non-finite function value at coordinate " +
                         std::to_string(i));
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double relative_gradient_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw InvalidInput("relative_gradient_error: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]));
  const double norm = std::sqrt(dot(b, b));
  return worst / std::max(1.0, norm);
}

} // namespace entroclip
