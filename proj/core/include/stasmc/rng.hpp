#pragma once
// Portable random streams. std::*_distribution output differs between
// standard libraries, so the transforms below are written out by hand.

#include <cstdint>

namespace stasmc {

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next();
  double uniform01();                 // [0, 1)
  double uniform(double lo, double hi);
  double exponential(double rate);    // mean 1/rate
  std::uint64_t below(std::uint64_t n);  // [0, n), unbiased
  bool bernoulli(double p) { return uniform01() < p; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t s_[4];
  std::uint64_t seed_, stream_;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace stasmc
