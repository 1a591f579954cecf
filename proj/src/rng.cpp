#include "fdpomm/rng.hpp"

namespace fdpomm {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kStreamSalt = 0xD1B54A32D192ED03ULL;
}  // namespace

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(mix64(seed) ^ mix64(stream * kStreamSalt + kGamma))) {}

Rng::result_type Rng::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGamma);
}

Rng Rng::substream(std::uint64_t id) const {
  return Rng(FromKey{}, mix64(key_ ^ mix64((id + 1) * kStreamSalt)));
}

double Rng::uniform() {
  // 53 random bits, shifted off zero.
  return ((*this)() >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

double Rng::normal() { return normal_(*this); }

}  // namespace fdpomm
