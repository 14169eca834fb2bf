// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <cmath>
#include <string>

#include "msgs/common/error.hpp"
#include "msgs/losses/losses.hpp"

namespace msgs {

namespace {

using Plane = std::vector<double>;

std::array<double, kSsimWindow> gaussian_taps() {
  std::array<double, kSsimWindow> taps{};
  double sum = 0.0;
  const int r = kSsimWindow / 2;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - r;
    taps[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Separable correlation with zero padding. The kernel is symmetric, so this is
// also its own adjoint.
Plane blur(const Plane& in, int w, int h) {
  static const auto taps = gaussian_taps();
  const int r = kSsimWindow / 2;
  Plane tmp(in.size(), 0.0), out(in.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        const int xx = x + i;
        if (xx >= 0 && xx < w) acc += taps[i + r] * in[static_cast<std::size_t>(y) * w + xx];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        const int yy = y + i;
        if (yy >= 0 && yy < h) acc += taps[i + r] * tmp[static_cast<std::size_t>(yy) * w + x];
      }
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  return out;
}

Plane channel(const Image& img, int c) {
  Plane p(img.pixel_count());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = img.data[i * img.channels + c];
  return p;
}

struct ChannelStats {
  Plane mu_a, mu_b, var_a, var_b, cov_ab, norm;
};

ChannelStats channel_stats(const Plane& a, const Plane& b, const Plane& norm, int w, int h) {
  const std::size_t n = a.size();
  Plane aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  ChannelStats s;
  s.mu_a = blur(a, w, h);
  s.mu_b = blur(b, w, h);
  s.var_a = blur(aa, w, h);
  s.var_b = blur(bb, w, h);
  s.cov_ab = blur(ab, w, h);
  s.norm = norm;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = norm[i];
    s.mu_a[i] /= z;
    s.mu_b[i] /= z;
    s.var_a[i] = s.var_a[i] / z - s.mu_a[i] * s.mu_a[i];
    s.var_b[i] = s.var_b[i] / z - s.mu_b[i] * s.mu_b[i];
    s.cov_ab[i] = s.cov_ab[i] / z - s.mu_a[i] * s.mu_b[i];
  }
  return s;
}

void check_inputs(const Image& a, const Image& b) {
  if (!a.same_size(b) || a.channels != b.channels) {
    fail(ErrorCode::InvalidArgument, "ssim: images differ in shape");
  }
  if (a.width < kSsimWindow || a.height < kSsimWindow) {
    fail(ErrorCode::InvalidArgument, "ssim: image " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                                         " is smaller than the " + std::to_string(kSsimWindow) + "px window");
  }
}

Plane window_norm(int w, int h) { return blur(Plane(static_cast<std::size_t>(w) * h, 1.0), w, h); }

}  // namespace

SsimResult ssim(const Image& a, const Image& b) {
  check_inputs(a, b);
  const int w = a.width, h = a.height;
  const Plane norm = window_norm(w, h);
  SsimResult out;
  out.map = Image(w, h, 1, 0.0);
  for (int c = 0; c < a.channels; ++c) {
    const ChannelStats s = channel_stats(channel(a, c), channel(b, c), norm, w, h);
    for (std::size_t i = 0; i < norm.size(); ++i) {
      const double n1 = 2.0 * s.mu_a[i] * s.mu_b[i] + kSsimC1;
      const double n2 = 2.0 * s.cov_ab[i] + kSsimC2;
      const double d1 = s.mu_a[i] * s.mu_a[i] + s.mu_b[i] * s.mu_b[i] + kSsimC1;
      const double d2 = s.var_a[i] + s.var_b[i] + kSsimC2;
      out.map.data[i] += n1 * n2 / (d1 * d2) / a.channels;
    }
  }
  double sum = 0.0;
  for (double v : out.map.data) sum += v;
  out.value = sum / static_cast<double>(out.map.data.size());
  return out;
}

Image ssim_backward(const Image& a, const Image& b, const Image& d_map) {
  check_inputs(a, b);
  const int w = a.width, h = a.height;
  if (!d_map.same_size(a) || d_map.channels != 1) fail(ErrorCode::InvalidArgument, "ssim_backward: bad d_map shape");
  const Plane norm = window_norm(w, h);
  const std::size_t n = norm.size();
  Image grad(w, h, a.channels, 0.0);
  for (int c = 0; c < a.channels; ++c) {
    const Plane pa = channel(a, c), pb = channel(b, c);
    const ChannelStats s = channel_stats(pa, pb, norm, w, h);
    // Per window center: coefficients of the local statistics, divided by the
    // window normalizer so that a plain blur scatters them back to pixels.
    Plane ca(n), cb(n), cc(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = d_map.data[i] / a.channels;
      const double n1 = 2.0 * s.mu_a[i] * s.mu_b[i] + kSsimC1;
      const double n2 = 2.0 * s.cov_ab[i] + kSsimC2;
      const double d1 = s.mu_a[i] * s.mu_a[i] + s.mu_b[i] * s.mu_b[i] + kSsimC1;
      const double d2 = s.var_a[i] + s.var_b[i] + kSsimC2;
      const double val = n1 * n2 / (d1 * d2);
      const double ds_dmu = 2.0 * s.mu_b[i] * n2 / (d1 * d2) - val * 2.0 * s.mu_a[i] / d1;
      const double ds_dvar = -val / d2;
      const double ds_dcov = 2.0 * n1 / (d1 * d2);
      const double z = norm[i];
      ca[i] = u * (ds_dmu - 2.0 * s.mu_a[i] * ds_dvar - s.mu_b[i] * ds_dcov) / z;
      cb[i] = u * 2.0 * ds_dvar / z;
      cc[i] = u * ds_dcov / z;
    }
    const Plane ga = blur(ca, w, h), gb = blur(cb, w, h), gc = blur(cc, w, h);
    for (std::size_t i = 0; i < n; ++i) {
      grad.data[i * a.channels + c] = ga[i] + pa[i] * gb[i] + pb[i] * gc[i];
    }
  }
  return grad;
}

}  // namespace msgs
