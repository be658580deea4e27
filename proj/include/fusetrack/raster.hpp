#pragma once

#include <cstddef>
#include <vector>

#include "fusetrack/types.hpp"

namespace fusetrack {

// Per-pixel depth in meters, row-major. Values <= 0 mean invalid/missing
// (sparse sensors leave most pixels invalid); lookups are nearest-neighbor
// at integer pixel coordinates.
struct DepthMap {
  int width = 0, height = 0;
  std::vector<float> values;

  bool in_bounds(int u, int v) const { return u >= 0 && u < width && v >= 0 && v < height; }
  float at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }
  bool valid_at(int u, int v) const { return in_bounds(u, v) && at(u, v) > 0.0f; }

  static DepthMap invalid(int w, int h) {
    return DepthMap{w, h, std::vector<float>(static_cast<std::size_t>(w) * h, 0.0f)};
  }
};

// Per-pixel (du, dv) displacement in pixels from frame t to t+1, row-major
// interleaved.
struct FlowField {
  int width = 0, height = 0;
  std::vector<float> data;  // 2 * width * height

  bool in_bounds(int u, int v) const { return u >= 0 && u < width && v >= 0 && v < height; }
  Vec2 at(int u, int v) const {
    const std::size_t i = 2 * (static_cast<std::size_t>(v) * width + u);
    return Vec2(data[i], data[i + 1]);
  }
  void set(int u, int v, double du, double dv) {
    const std::size_t i = 2 * (static_cast<std::size_t>(v) * width + u);
    data[i] = static_cast<float>(du);
    data[i + 1] = static_cast<float>(dv);
  }

  static FlowField zero(int w, int h) {
    return FlowField{w, h, std::vector<float>(2 * static_cast<std::size_t>(w) * h, 0.0f)};
  }
};

}  // namespace fusetrack
