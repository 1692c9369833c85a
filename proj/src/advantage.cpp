#include "entroclip/advantage.hpp"

#include <algorithm>
#include <cmath>

#include "entroclip/error.hpp"

namespace entroclip {

std::vector<double> group_advantages(std::span<const double> rewards, double delta) {
  if (rewards.size() < 2)
    throw InvalidInput("group_advantages: group needs at least two rewards");
  if (!(delta > 0.0))
    throw InvalidInput("group_advantages: delta must be positive");
  for (double r : rewards)
    if (!std::isfinite(r))
      throw InvalidInput("group_advantages: non-finite reward");

  std::vector<double> adv(rewards.size(), 0.0);
  if (std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; }))
    return adv;

  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards)
    mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards)
    var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);

  for (std::size_t i = 0; i < rewards.size(); ++i)
    adv[i] = (rewards[i] - mean) / (sd + delta);
  return adv;
}

} // namespace entroclip
