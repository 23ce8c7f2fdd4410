#pragma once

#include <array>
#include <cstdint>

namespace wigner {

/// Philox4x32-10 block function (Salmon et al., SC'11). Stateless: maps
/// (key, counter) to four 32-bit words.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key) noexcept;
};

/// 64-bit finalizer used to derive stream identifiers.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Purpose tags keep the streams of different consumers disjoint.
enum class StreamTag : std::uint64_t {
  matrix_entries = 1,
  ou_noise = 2,
  dbm_noise = 3,
  relaxation_noise = 4,
  metropolis = 5,
  moments = 6,
  oracle = 7,
  reference_ensemble = 8,
};

constexpr std::uint64_t stream_id(StreamTag tag, std::uint64_t index) noexcept {
  return mix64(mix64(static_cast<std::uint64_t>(tag)) ^ index);
}

/// Counter-based random stream. Output block `position` of stream `stream`
/// under key `seed` is a pure function of the triple, so any entry can be
/// regenerated without replaying the stream.
class CounterRng {
 public:
  CounterRng() = default;
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t position = 0) noexcept
      : seed_(seed), stream_(stream), position_(position) {}

  /// Raw block at an explicit position; does not touch the sequential cursor.
  [[nodiscard]] Philox4x32::Counter block(std::uint64_t position) const noexcept;

  /// Two uniforms in (0,1) from block `position`.
  [[nodiscard]] std::array<double, 2> uniform_pair(std::uint64_t position) const noexcept;
  /// Two independent standard normals from block `position` (Box-Muller).
  [[nodiscard]] std::array<double, 2> normal_pair(std::uint64_t position) const noexcept;

  // Sequential interface.
  double uniform() noexcept;  // (0,1)
  double normal() noexcept;
  std::uint64_t next_u64() noexcept;

  [[nodiscard]] std::uint64_t position() const noexcept { return position_; }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t position_ = 0;
  std::array<double, 2> uniform_buffer_{};
  std::array<double, 2> normal_buffer_{};
  int uniform_left_ = 0;
  int normal_left_ = 0;
};

/// Maps the top 52 bits to the open interval (0,1). With 53 bits the top
/// value would round to exactly 1.
constexpr double to_open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

}  // namespace wigner
