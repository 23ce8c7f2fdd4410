#include "wigner/rng.hpp"

#include <cmath>
#include <numbers>

namespace wigner {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53U;
constexpr std::uint32_t kMul1 = 0xCD9E8D57U;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9U;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85U;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

std::array<double, 2> box_muller(double u1, double u2) noexcept {
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

Philox4x32::Counter CounterRng::block(std::uint64_t position) const noexcept {
  const Philox4x32::Counter counter{static_cast<std::uint32_t>(position),
                                    static_cast<std::uint32_t>(position >> 32),
                                    static_cast<std::uint32_t>(stream_),
                                    static_cast<std::uint32_t>(stream_ >> 32)};
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
  return Philox4x32::generate(counter, key);
}

std::array<double, 2> CounterRng::uniform_pair(std::uint64_t position) const noexcept {
  const auto words = block(position);
  const std::uint64_t a = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  const std::uint64_t b = (static_cast<std::uint64_t>(words[2]) << 32) | words[3];
  return {to_open_unit(a), to_open_unit(b)};
}

std::array<double, 2> CounterRng::normal_pair(std::uint64_t position) const noexcept {
  const auto [u1, u2] = uniform_pair(position);
  return box_muller(u1, u2);
}

double CounterRng::uniform() noexcept {
  if (uniform_left_ == 0) {
    uniform_buffer_ = uniform_pair(position_++);
    uniform_left_ = 2;
  }
  return uniform_buffer_[2 - uniform_left_--];
}

double CounterRng::normal() noexcept {
  if (normal_left_ == 0) {
    normal_buffer_ = normal_pair(position_++);
    normal_left_ = 2;
  }
  return normal_buffer_[2 - normal_left_--];
}

std::uint64_t CounterRng::next_u64() noexcept {
  const auto words = block(position_++);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

}  // namespace wigner
