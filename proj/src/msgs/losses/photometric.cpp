// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "msgs/common/error.hpp"
#include "msgs/losses/losses.hpp"

namespace msgs {

void LossWeights::validate() const {
  if (!(lambda_pho >= 0.0 && lambda_s >= 0.0 && lambda_a >= 0.0 && lambda_b >= 0.0 && lambda_c >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "loss weights must be nonnegative");
  }
  if (lambda_pho > 1.0) fail(ErrorCode::InvalidArgument, "lambda_pho must lie in [0, 1]");
}

PhotometricResult photometric_loss(const Image& rendered, const Image& target, const Mask* transient,
                                   double lambda_pho) {
  if (!rendered.same_size(target) || rendered.channels != target.channels) {
    fail(ErrorCode::InvalidArgument, "photometric_loss: rendered and target differ in shape");
  }
  if (transient && !transient->same_size(rendered)) {
    fail(ErrorCode::InvalidArgument, "photometric_loss: mask size does not match the image");
  }
  const int channels = rendered.channels;
  const std::size_t n = rendered.pixel_count();
  PhotometricResult out;
  out.grad = Image(rendered.width, rendered.height, channels, 0.0);
  out.per_pixel = Image(rendered.width, rendered.height, 1, 0.0);

  SsimResult s;
  if (lambda_pho > 0.0) s = ssim(rendered, target);
  for (std::size_t i = 0; i < n; ++i) {
    double l1 = 0.0;
    for (int c = 0; c < channels; ++c) l1 += std::abs(rendered.data[i * channels + c] - target.data[i * channels + c]);
    l1 /= channels;
    double v = (1.0 - lambda_pho) * l1;
    if (lambda_pho > 0.0) v += lambda_pho * (1.0 - s.map.data[i]);
    out.per_pixel.data[i] = v;
  }

  std::vector<char> include(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (transient && transient->data[i] != 0) include[i] = 0;
    out.included += include[i];
  }
  if (out.included == 0) return out;

  const double inv = 1.0 / static_cast<double>(out.included);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!include[i]) continue;
    sum += out.per_pixel.data[i];
    for (int c = 0; c < channels; ++c) {
      const double d = rendered.data[i * channels + c] - target.data[i * channels + c];
      const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      out.grad.data[i * channels + c] = (1.0 - lambda_pho) * sign / channels * inv;
    }
  }
  out.value = sum * inv;

  if (lambda_pho > 0.0) {
    Image d_map(rendered.width, rendered.height, 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) d_map.data[i] = include[i] ? -lambda_pho * inv : 0.0;
    const Image g = ssim_backward(rendered, target, d_map);
    for (std::size_t i = 0; i < g.data.size(); ++i) out.grad.data[i] += g.data[i];
  }
  return out;
}

}  // namespace msgs
