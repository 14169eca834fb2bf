// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "msgs/losses/losses.hpp"

namespace msgs {

namespace {

int min_axis(const Vec3& v) {
  int axis = 0;
  for (int i = 1; i < 3; ++i) {
    if (v[i] < v[axis]) axis = i;
  }
  return axis;
}

}  // namespace

double scale_loss(std::span<const Vec3> scales, double lambda_s, std::vector<Vec3>* d_scale) {
  if (d_scale) d_scale->assign(scales.size(), Vec3::Zero());
  double sum = 0.0;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const int axis = min_axis(scales[i]);
    const double s = scales[i][axis];
    sum += lambda_s * std::abs(s);
    if (d_scale) (*d_scale)[i][axis] = lambda_s * (s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0));
  }
  return sum;
}

double scale_loss(std::span<const Splat> splats, double lambda_s, std::vector<Vec3>* d_log_scale) {
  if (d_log_scale) d_log_scale->assign(splats.size(), Vec3::Zero());
  double sum = 0.0;
  for (std::size_t i = 0; i < splats.size(); ++i) {
    // exp is monotone, so the smallest log-scale is the smallest scale.
    const int axis = min_axis(splats[i].log_scale);
    const double s = std::exp(splats[i].log_scale[axis]);
    sum += lambda_s * s;
    if (d_log_scale) (*d_log_scale)[i][axis] = lambda_s * s;
  }
  return sum;
}

}  // namespace msgs
