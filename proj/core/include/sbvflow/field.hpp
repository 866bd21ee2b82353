#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "sbvflow/geometry.hpp"

namespace sbvflow {

/// Values of u on the nodes of a GridDiscretization plus a time stamp.
/// Exterior entries hold NaN.
struct GridField {
  std::vector<double> values;
  double time = 0.0;

  double operator[](int node) const { return values[node]; }
  double& operator[](int node) { return values[node]; }
};

/// Samples `fn` at every active node of `grid`.
inline GridField sample_field(const GridDiscretization& grid, const std::function<double(const Vec2&)>& fn,
                              double time = 0.0) {
  GridField field;
  field.values.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  field.time = time;
  for (int node : grid.active_nodes()) field.values[node] = fn(grid.coord(node));
  return field;
}

/// True when every active value is finite.
inline bool is_finite_on(const GridField& field, const GridDiscretization& grid) {
  for (int node : grid.active_nodes())
    if (!std::isfinite(field.values[node])) return false;
  return true;
}

}  // namespace sbvflow
