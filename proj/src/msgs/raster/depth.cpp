// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "msgs/common/error.hpp"
#include "msgs/raster/rasterizer.hpp"

namespace msgs {

Image depth_from_plane(const Image& normal, const Image& distance, const CameraIntrinsics& k, Mask& valid,
                       double epsilon) {
  if (normal.channels != 3 || distance.channels != 1 || !normal.same_size(distance)) {
    fail(ErrorCode::InvalidArgument, "depth_from_plane: expected a 3-channel normal map and a matching distance map");
  }
  Image depth(distance.width, distance.height, 1);
  valid = Mask(distance.width, distance.height, 1, 0);
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const Vec3 n(normal(x, y, 0), normal(x, y, 1), normal(x, y, 2));
      const double den = n.dot(k.ray(x, y));
      if (std::abs(den) < epsilon) continue;
      depth(x, y) = distance(x, y) / den;
      valid(x, y) = 1;
    }
  }
  return depth;
}

}  // namespace msgs
