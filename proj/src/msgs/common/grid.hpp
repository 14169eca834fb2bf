// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace msgs {

/// Dense row-major H x W x C raster with interleaved channels.
template <class T>
struct Grid {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int w, int h, int c = 1, T fill = T{})
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool empty() const { return data.empty(); }

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  T& operator()(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  const T& operator()(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  template <class U>
  bool same_size(const Grid<U>& other) const {
    return width == other.width && height == other.height;
  }

  bool operator==(const Grid&) const = default;
};

/// Floating color or scalar map; colors are nominally in [0,1].
using Image = Grid<double>;
/// Binary map, 0 or 1.
using Mask = Grid<std::uint8_t>;
/// Integer label map, 0 = unlabeled.
using LabelMap = Grid<std::int32_t>;

}  // namespace msgs
