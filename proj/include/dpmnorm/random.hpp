#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dpmnorm {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Families of substreams; a substream is addressed by (seed, family, index)
// so the draws seen by any unit of work do not depend on execution order.
enum class Stream : std::uint64_t {
  kReplicate = 1,
  kAlphaPoint = 2,
  kNullData = 3,
  kAltData = 4,
  kPath = 5,
  kGibbs = 6,
  kBenchSis = 7,
  kBenchBasuChib = 8,
  kPrior = 9,
  kSimulate = 10,
  kCheckpoint = 11,
};

constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream family, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(family))) + index);
}

inline Rng substream(std::uint64_t seed, Stream family, std::uint64_t index) {
  return Rng(derive_seed(seed, family, index));
}

// Uniform on the open interval (0, 1).
template <class Engine>
double uniform_open(Engine& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  while (u <= 0.0) u = unif(rng);
  return u;
}

template <class Engine>
double standard_normal(Engine& rng) {
  std::normal_distribution<double> norm(0.0, 1.0);
  return norm(rng);
}

template <class Engine>
double gamma_variate(double shape, Engine& rng) {
  std::gamma_distribution<double> gam(shape, 1.0);
  return gam(rng);
}

template <class Engine>
double chi_square(double df, Engine& rng) {
  return 2.0 * gamma_variate(0.5 * df, rng);
}

}  // namespace dpmnorm
