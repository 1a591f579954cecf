#ifndef FDPOMM_GRID_HPP_
#define FDPOMM_GRID_HPP_

#include <cstddef>
#include <functional>
#include <vector>

#include "fdpomm/model_core.hpp"

namespace fdpomm {

// Discretized prior. prior_weight is the (possibly unnormalized) prior mass
// carried by each point's cell; cell_volume is the Lebesgue volume of that
// cell, used to turn masses into densities.
struct ParamGrid {
  std::vector<ParamPoint> points;
  std::vector<double> prior_weight;
  std::vector<double> cell_volume;

  std::size_t size() const { return points.size(); }
  void validate() const;
};

// count points from lo to hi inclusive, each carrying a cell of width
// (hi - lo) / (count - 1) and unit prior density.
ParamGrid linspace_grid(double lo, double hi, std::size_t count);

// count equal cells partitioning [lo, hi], one point at each cell center.
ParamGrid cell_grid(double lo, double hi, std::size_t count);

// Cartesian product; weights and volumes multiply.
ParamGrid product_grid(const std::vector<ParamGrid>& axes);

// Replaces every prior weight by density(theta) * cell_volume.
ParamGrid with_prior_density(ParamGrid grid, const std::function<double(const ParamPoint&)>& density);

ParamGrid singleton_grid(const ParamPoint& theta);

}  // namespace fdpomm

#endif  // FDPOMM_GRID_HPP_
