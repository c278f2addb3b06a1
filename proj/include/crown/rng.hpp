#pragma once

#include <cstdint>
#include <limits>

namespace crown {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: the i-th output is mix(key + (i+1)*gamma), so a
/// stream is fully described by its key and position. Sample substreams are
/// keyed by (run seed, sample index), which makes batch results independent of
/// how samples are scheduled across workers.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  /// Substream for one Monte-Carlo sample of a run.
  static CounterRng substream(std::uint64_t seed, std::uint64_t index, std::uint64_t salt = 0) noexcept {
    std::uint64_t k = splitmix64_mix(seed ^ 0x5851f42d4c957f2dULL);
    k = splitmix64_mix(k + splitmix64_mix(index + 0x14057b7ef767814fULL));
    k = splitmix64_mix(k ^ (salt * kGamma));
    return CounterRng(k);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    ++counter_;
    return splitmix64_mix(key_ + counter_ * kGamma);
  }

  std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace crown
