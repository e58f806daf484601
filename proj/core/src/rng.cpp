#include "stasmc/rng.hpp"

#include <cmath>

namespace stasmc {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
  std::uint64_t st = seed;
  std::uint64_t mix = splitmix64(st) ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
  for (auto& w : s_) w = splitmix64(mix);
}

std::uint64_t RngStream::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngStream::uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double RngStream::uniform(double lo, double hi) {
  if (hi <= lo) return lo;
  double v = lo + (hi - lo) * uniform01();
  return v > hi ? hi : v;
}

double RngStream::exponential(double rate) { return -std::log1p(-uniform01()) / rate; }

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n <= 1) return 0;
  std::uint64_t limit = -n % n;  // 2^64 mod n
  for (;;) {
    std::uint64_t r = next();
    if (r >= limit) return r % n;
  }
}

}  // namespace stasmc
