#include "actgen/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace actgen {

double Rng::uniform() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::uniform_range(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double Rng::normal() {
  // u1 in (0, 1] keeps the log finite.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::index: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = gen_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

Tensor Rng::gaussian(const std::vector<std::size_t>& shape) {
  Tensor t(shape);
  for (double& v : t.values()) v = normal();
  return t;
}

Tensor Rng::uniform_tensor(const std::vector<std::size_t>& shape, double lo, double hi) {
  Tensor t(shape);
  for (double& v : t.values()) v = uniform_range(lo, hi);
  return t;
}

std::string Rng::state() const {
  std::ostringstream os;
  os << gen_;
  return os.str();
}

void Rng::set_state(const std::string& s) {
  std::istringstream is(s);
  is >> gen_;
  if (is.fail()) throw std::runtime_error("Rng::set_state: malformed state string");
}

std::uint64_t Rng::derive(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over seed + stream offset.
  std::uint64_t z = seed + stream * 0x9E3779B97F4A7C15ULL + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Tensor sample_gaussian(const std::vector<std::size_t>& shape, Rng& rng) {
  return rng.gaussian(shape);
}

}  // namespace actgen
