#pragma once

// Softmax, entropy and policy-gradient kernels over a single categorical
// distribution parameterized by logits. All functions are pure.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace entroclip {

/// Pre-softmax scores over a vocabulary of size V >= 2. Values are finite.
class LogitVector {
public:
  explicit LogitVector(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

private:
  std::vector<double> values_;
};

/// A probability vector over V >= 2 outcomes. Components lie in [0, 1] and
/// sum to one within kProbSumTolerance. Exact zeros are allowed so that
/// degenerate distributions (and softmax underflow) are representable.
class ProbVector {
public:
  static constexpr double kProbSumTolerance = 1e-12;

  explicit ProbVector(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

private:
  std::vector<double> values_;
};

/// Decomposition of <grad_z L, grad_z H> for a single sampled token.
struct AlignmentReport {
  double token_term = 0.0;    // p_a (ln p_a + H)
  double baseline_term = 0.0; // sum_x p_x^2 (ln p_x + H)
  double inner_product = 0.0; // -A (token_term - baseline_term)
  int approx_sign = 0;        // -sgn(A (ln p_a + H)), drops the baseline term
};

ProbVector softmax(const LogitVector& z);

/// log softmax(z), computed with a max shift. Entries are finite even when
/// the corresponding probability underflows.
std::vector<double> log_softmax(std::span<const double> z);

/// Shannon entropy in nats, with 0 ln 0 := 0.
double entropy(const ProbVector& p);

/// grad_z H(softmax(z)) expressed in terms of p = softmax(z):
/// -p (ln p + H). Components with p_x = 0 are 0.
std::vector<double> entropy_grad_logits(const ProbVector& p);

/// grad_z [A ln softmax(z)_a] = A (e_a - p).
std::vector<double> surrogate_grad_logits(const ProbVector& p, std::size_t action,
                                          double advantage);

AlignmentReport entropy_alignment(const ProbVector& p, std::size_t action, double advantage);

double dot(std::span<const double> a, std::span<const double> b);

using ScalarFn = std::function<double(std::span<const double>)>;

inline constexpr double kDefaultFdStep = 1e-6;
inline constexpr double kDefaultFdRelTol = 1e-5;

/// Central finite-difference gradient of f at z with step h. Throws
/// InvalidInput if h <= 0 or any evaluation is non-finite.
std::vector<double> fd_gradient(const ScalarFn& f, std::span<const double> z,
                                double h = kDefaultFdStep);

/// max_i |a_i - b_i| / max(1, ||b||_2); the comparison used by the
/// gradient checks.
double relative_gradient_error(std::span<const double> a, std::span<const double> b);

} // namespace entroclip
