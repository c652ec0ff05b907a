#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "rwre/rng.hpp"

namespace rwre {

inline constexpr int kMaxDim = 8;

// Index of a signed unit move: 2k is +e_{k+1}, 2k+1 is -e_{k+1}.
using Move = std::uint8_t;

constexpr int move_axis(Move m) noexcept { return m / 2; }
constexpr int move_sign(Move m) noexcept { return (m % 2 == 0) ? 1 : -1; }
constexpr Move plus_move(int axis) noexcept { return static_cast<Move>(2 * axis); }
constexpr Move minus_move(int axis) noexcept { return static_cast<Move>(2 * axis + 1); }

// A point of Z^d; coordinates beyond the active dimension stay zero. The level of a
// site is its first coordinate (the transience direction is the first axis).
struct Site {
  std::array<std::int32_t, kMaxDim> c{};

  constexpr std::int64_t level() const noexcept { return c[0]; }

  constexpr Site& operator+=(const Site& o) noexcept {
    for (int i = 0; i < kMaxDim; ++i) c[i] += o.c[i];
    return *this;
  }
  constexpr Site& operator-=(const Site& o) noexcept {
    for (int i = 0; i < kMaxDim; ++i) c[i] -= o.c[i];
    return *this;
  }
  friend constexpr Site operator+(Site a, const Site& b) noexcept { return a += b; }
  friend constexpr Site operator-(Site a, const Site& b) noexcept { return a -= b; }
  friend constexpr Site operator-(Site a) noexcept {
    for (auto& x : a.c) x = -x;
    return a;
  }
  friend constexpr bool operator==(const Site&, const Site&) = default;
  friend constexpr auto operator<=>(const Site&, const Site&) = default;

  constexpr Site stepped(Move m) const noexcept {
    Site s = *this;
    s.c[move_axis(m)] += move_sign(m);
    return s;
  }

  constexpr std::int64_t norm2() const noexcept {
    std::int64_t r = 0;
    for (auto x : c) r += static_cast<std::int64_t>(x) * x;
    return r;
  }
  double norm() const noexcept { return std::sqrt(static_cast<double>(norm2())); }

  static constexpr Site unit(int axis, int sign = 1) noexcept {
    Site s;
    s.c[axis] = sign;
    return s;
  }
};

std::string to_string(const Site& s, int dim);

struct SiteHash {
  std::size_t operator()(const Site& s) const noexcept {
    std::uint64_t h = 0x51ED2701A3C9F5B1ULL;
    for (int i = 0; i < kMaxDim; i += 2) {
      const std::uint64_t packed = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.c[i])) << 32) |
                                   static_cast<std::uint32_t>(s.c[i + 1]);
      h = splitmix64(h ^ packed);
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace rwre
