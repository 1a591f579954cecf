#ifndef FDPOMM_SRC_MC_HPP_
#define FDPOMM_SRC_MC_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "fdpomm/parallel.hpp"
#include "fdpomm/rng.hpp"

namespace fdpomm::detail {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  bool infinite = false;
};

// Mean and standard error of draw(rng) over `draws` replicates. Draws are
// split into fixed blocks, each on its own substream, and combined in block
// order, so the answer depends only on (draws, seed, stream).
template <typename Draw>
MeanSe mc_mean(std::size_t draws, std::uint64_t seed, std::uint64_t stream, Draw&& draw) {
  constexpr std::size_t kBlocks = 64;
  const std::size_t blocks = std::max<std::size_t>(1, std::min(kBlocks, draws));
  struct Acc {
    double n = 0.0, mean = 0.0, m2 = 0.0;
    bool inf = false;
  };
  std::vector<Acc> acc(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t count = draws / blocks + (b < draws % blocks ? 1 : 0);
    Rng rng(seed, stream * 1024 + b);
    Acc& a = acc[b];
    for (std::size_t i = 0; i < count; ++i) {
      const double v = draw(rng);
      if (std::isinf(v) && v > 0) {
        a.inf = true;
        continue;
      }
      a.n += 1.0;
      const double d = v - a.mean;
      a.mean += d / a.n;
      a.m2 += d * (v - a.mean);
    }
  });
  Acc tot;
  for (const Acc& a : acc) {
    tot.inf = tot.inf || a.inf;
    if (a.n == 0.0) continue;
    const double n = tot.n + a.n;
    const double d = a.mean - tot.mean;
    tot.mean += d * a.n / n;
    tot.m2 += a.m2 + d * d * tot.n * a.n / n;
    tot.n = n;
  }
  MeanSe out;
  if (tot.inf) {
    out.mean = std::numeric_limits<double>::infinity();
    out.se = 0.0;
    out.infinite = true;
    return out;
  }
  out.mean = tot.mean;
  out.se = tot.n > 1.0 ? std::sqrt(tot.m2 / (tot.n - 1.0) / tot.n) : 0.0;
  return out;
}

}  // namespace fdpomm::detail

#endif  // FDPOMM_SRC_MC_HPP_
