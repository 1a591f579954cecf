#ifndef FDPOMM_RNG_HPP_
#define FDPOMM_RNG_HPP_

#include <cstdint>
#include <limits>
#include <random>

namespace fdpomm {

// Counter-based 64-bit generator. The output at position i is a bijective
// mix of (key, i), so a stream is fully described by its key and counter and
// independent substreams are obtained by re-keying rather than by sharing
// state. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  Rng(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  // Derived stream; never overlaps the parent or a sibling with another id.
  Rng substream(std::uint64_t id) const;

  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  struct FromKey {};
  Rng(FromKey, std::uint64_t key) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace fdpomm

#endif  // FDPOMM_RNG_HPP_
