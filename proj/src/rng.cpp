#include "diar/rng.hpp"

#include <cmath>

namespace diar {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] so the log is finite.
  double u1 = 1.0 - uniform01();
  double u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

double Rng::lognormal(double mu, double sigma) {
  return std::exp(mu + sigma * normal());
}

std::size_t Rng::categorical(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (total <= 0.0) return static_cast<std::size_t>(
      uniform_int(0, static_cast<std::int64_t>(weights.size()) - 1));
  double u = uniform01() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return weights.size() - 1;
}

Rng Rng::fork(std::uint64_t stream) const {
  // Hash the stream id through one splitmix step of a copy so substreams
  // with small ids do not correlate.
  Rng mixer(state_ ^ (stream * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull));
  return Rng(mixer.next_u64());
}

}  // namespace diar
