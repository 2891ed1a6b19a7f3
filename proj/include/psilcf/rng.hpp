#pragma once

#include <cstdint>
#include <random>

namespace psilcf {

/// (seed, stream, counter) identifies a position in a reproducible draw sequence.
struct SamplerState {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t counter = 0;

  friend bool operator==(const SamplerState&, const SamplerState&) = default;
};

/// Stream ids for independent work units (estimator, cell, shard, ...).
constexpr std::uint64_t derive_stream(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) noexcept {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(a) ^ b) ^ c);
}

/// mt19937_64 keyed by (seed, stream) through seed_seq; both are fully
/// specified by the standard, so draws are identical across platforms.
class Rng {
 public:
  explicit Rng(SamplerState s) : state_(s), engine_(make_engine(s)) { engine_.discard(s.counter); }

  /// Uniform on (0, 1] with 53 random bits.
  double uniform() {
    ++state_.counter;
    return static_cast<double>((engine_() >> 11) + 1) * 0x1p-53;
  }

  const SamplerState& state() const noexcept { return state_; }

 private:
  static std::mt19937_64 make_engine(const SamplerState& s) {
    std::seed_seq seq{static_cast<std::uint32_t>(s.seed), static_cast<std::uint32_t>(s.seed >> 32),
                      static_cast<std::uint32_t>(s.stream), static_cast<std::uint32_t>(s.stream >> 32)};
    return std::mt19937_64(seq);
  }

  SamplerState state_;
  std::mt19937_64 engine_;
};

}  // namespace psilcf
