#pragma once

#include <cstdint>
#include <string_view>

namespace wta::nn {

// Counter-based generator: output k of a stream is a pure function of
// (key, k), so streams are reproducible on every platform and can be split
// into independent children without sharing state.
class Rng {
 public:
  static constexpr std::string_view algorithm = "splitmix64-ctr/v1";

  explicit Rng(std::uint64_t seed = 0) noexcept;

  std::uint64_t next_u64() noexcept;
  // Uniform on [0, 1) with 53 bits.
  double uniform() noexcept;
  // Uniform on the open interval (0, 1).
  double uniform_open() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  // Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;
  // Unit-rate exponential.
  double exponential() noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

  // Independent child stream for the given label; does not advance this stream.
  Rng split(std::uint64_t stream) const noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  Rng(std::uint64_t key, std::uint64_t counter) noexcept : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace wta::nn
