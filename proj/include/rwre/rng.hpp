#pragma once

#include <cstdint>
#include <limits>

namespace rwre {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Tags for deriving independent sub-streams from one key.
enum class Stream : std::uint64_t {
  Environment = 0x01,
  Walk = 0x02,
  Strip = 0x03,
  Psi = 0x04,
  Pilot = 0x05,
  CopyA = 0x06,
  CopyB = 0x07,
  Sites = 0x08,
  Slabs = 0x09,
  Resample = 0x0A,
};

// Counter-based randomness handle. Every replica, site, or sub-task derives its own
// key from the master seed, so results never depend on scheduling order.
struct RngKey {
  std::uint64_t value = 0;

  constexpr RngKey child(std::uint64_t index) const noexcept {
    return RngKey{splitmix64(value ^ splitmix64(index + 0x632BE59BD9B4E019ULL))};
  }
  constexpr RngKey child(Stream tag) const noexcept {
    return child(static_cast<std::uint64_t>(tag) << 56);
  }
  friend constexpr bool operator==(RngKey, RngKey) = default;
};

// Sequential generator over a SplitMix64 counter; satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  constexpr explicit Rng(RngKey key) noexcept : state_(key.value) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 bits of resolution.
  constexpr double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
};

constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace rwre
