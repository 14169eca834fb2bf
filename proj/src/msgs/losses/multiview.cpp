// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "msgs/common/error.hpp"
#include "msgs/losses/losses.hpp"

namespace msgs {

std::optional<Mat3> homography_for_patch(const CameraPose& ref_pose, const CameraPose& nbr_pose,
                                         const CameraIntrinsics& k, const Vec3& plane_normal,
                                         double plane_distance) {
  if (!(std::abs(plane_distance) >= 1e-6)) return std::nullopt;
  const Mat3 r = nbr_pose.rotation_matrix() * ref_pose.rotation_matrix().transpose();
  const Vec3 t = nbr_pose.translation - r * ref_pose.translation;
  const Mat3 km = k.matrix();
  return Mat3(km * (r + t * plane_normal.transpose() / plane_distance) * km.inverse());
}

Image to_gray(const Image& rgb) {
  if (rgb.channels != 3) fail(ErrorCode::InvalidArgument, "to_gray: expected a 3-channel image");
  Image out(rgb.width, rgb.height, 1, 0.0);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = 0.299 * rgb.data[3 * i] + 0.587 * rgb.data[3 * i + 1] + 0.114 * rgb.data[3 * i + 2];
  }
  return out;
}

std::vector<std::pair<int, int>> ncc_patch_centers(int width, int height, int patch_size, int stride) {
  std::vector<std::pair<int, int>> out;
  const int r = patch_size / 2;
  if (stride < 1) fail(ErrorCode::InvalidArgument, "ncc stride must be positive");
  for (int y = r; y + r < height; y += stride) {
    for (int x = r; x + r < width; x += stride) out.emplace_back(x, y);
  }
  return out;
}

NccResult mv_photometric_ncc(const Image& ref_gray, const Image& nbr_gray, std::span<const NccPatch> patches,
                             int patch_size) {
  if (ref_gray.channels != 1 || nbr_gray.channels != 1) {
    fail(ErrorCode::InvalidArgument, "mv_photometric_ncc: expected single-channel images");
  }
  if (patch_size < 1 || patch_size % 2 == 0) fail(ErrorCode::InvalidArgument, "ncc patch size must be odd");
  const int r = patch_size / 2;
  const int m = patch_size * patch_size;
  NccResult out;
  out.d_ref = Image(ref_gray.width, ref_gray.height, 1, 0.0);
  std::vector<double> a(m), b(m);
  std::vector<int> px(m), py(m);
  for (const NccPatch& patch : patches) {
    bool ok = true;
    int idx = 0;
    for (int dy = -r; dy <= r && ok; ++dy) {
      for (int dx = -r; dx <= r && ok; ++dx, ++idx) {
        const int x = patch.cx + dx, y = patch.cy + dy;
        if (!ref_gray.contains(x, y)) {
          ok = false;
          break;
        }
        const Vec3 w = patch.h * Vec3(x, y, 1.0);
        if (!(std::abs(w.z()) > 0.0)) {
          ok = false;
          break;
        }
        const auto s = sample_bilinear(nbr_gray, w.x() / w.z(), w.y() / w.z());
        if (!s) {
          ok = false;
          break;
        }
        px[idx] = x;
        py[idx] = y;
        a[idx] = ref_gray(x, y);
        b[idx] = *s;
      }
    }
    if (!ok) continue;
    double ma = 0.0, mb = 0.0;
    for (int i = 0; i < m; ++i) {
      ma += a[i];
      mb += b[i];
    }
    ma /= m;
    mb /= m;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (int i = 0; i < m; ++i) {
      const double da = a[i] - ma, db = b[i] - mb;
      sab += da * db;
      saa += da * da;
      sbb += db * db;
    }
    if (saa < 1e-12 || sbb < 1e-12) continue;
    const double denom = std::sqrt(saa * sbb);
    const double ncc = sab / denom;
    out.value += 1.0 - ncc;
    ++out.count;
    for (int i = 0; i < m; ++i) {
      const double d_ncc = (b[i] - mb) / denom - ncc * (a[i] - ma) / saa;
      out.d_ref(px[i], py[i]) -= d_ncc;
    }
  }
  return out;
}

}  // namespace msgs
