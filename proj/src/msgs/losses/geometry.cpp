// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <ceres/jet.h>

#include "msgs/common/error.hpp"
#include "msgs/losses/losses.hpp"

namespace msgs {

std::optional<double> sample_bilinear(const Image& img, double x, double y, int c) {
  if (!(x >= 0.0 && y >= 0.0 && x <= img.width - 1 && y <= img.height - 1)) return std::nullopt;
  const int x0 = std::min(static_cast<int>(x), img.width - 2 < 0 ? 0 : img.width - 2);
  const int y0 = std::min(static_cast<int>(y), img.height - 2 < 0 ? 0 : img.height - 2);
  const int x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0, fy = y - y0;
  return (1 - fx) * (1 - fy) * img(x0, y0, c) + fx * (1 - fy) * img(x1, y0, c) + (1 - fx) * fy * img(x0, y1, c) +
         fx * fy * img(x1, y1, c);
}

namespace {

bool neighborhood_valid(const Mask& valid, int x, int y) {
  return x > 0 && y > 0 && x + 1 < valid.width && y + 1 < valid.height && valid(x, y) && valid(x - 1, y) &&
         valid(x + 1, y) && valid(x, y - 1) && valid(x, y + 1);
}

struct LocalNormal {
  Vec3 dx, dy, v;  // v = dy x dx
};

LocalNormal local_normal(const Image& depth, const CameraIntrinsics& k, int x, int y) {
  const auto p = [&](int px, int py) -> Vec3 { return depth(px, py) * k.ray(px, py); };
  LocalNormal n;
  n.dx = p(x + 1, y) - p(x - 1, y);
  n.dy = p(x, y + 1) - p(x, y - 1);
  n.v = n.dy.cross(n.dx);
  return n;
}

}  // namespace

Image depth_normals(const Image& depth, const Mask& valid, const CameraIntrinsics& k) {
  Image out(depth.width, depth.height, 3, 0.0);
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      if (!neighborhood_valid(valid, x, y)) continue;
      const LocalNormal ln = local_normal(depth, k, x, y);
      const double len = ln.v.norm();
      if (len <= 0.0) continue;
      for (int c = 0; c < 3; ++c) out(x, y, c) = ln.v[c] / len;
    }
  }
  return out;
}

GeometryLossResult svgeo_loss(const RenderOutput& render, const CameraIntrinsics& k, const Mask* transient) {
  const int w = render.width, h = render.height;
  if (transient && (transient->width != w || transient->height != h)) {
    fail(ErrorCode::InvalidArgument, "svgeo_loss: mask size does not match the render");
  }
  GeometryLossResult out;
  out.d_normal = Image(w, h, 3, 0.0);
  out.d_depth = Image(w, h, 1, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!neighborhood_valid(render.depth_valid, x, y)) continue;
      if (transient && (*transient)(x, y)) continue;
      const LocalNormal ln = local_normal(render.depth, k, x, y);
      const double len = ln.v.norm();
      if (len <= 0.0) continue;
      const Vec3 nd = ln.v / len;
      const Vec3 n(render.normal(x, y, 0), render.normal(x, y, 1), render.normal(x, y, 2));
      const Vec3 diff = nd - n;
      const double dist = diff.norm();
      out.value += dist;
      ++out.count;
      if (dist <= 0.0) continue;
      const Vec3 g = diff / dist;  // d dist / d nd
      for (int c = 0; c < 3; ++c) out.d_normal(x, y, c) -= g[c];
      const Vec3 g_v = (g - nd * nd.dot(g)) / len;
      const Vec3 g_dy = ln.dx.cross(g_v);
      const Vec3 g_dx = g_v.cross(ln.dy);
      out.d_depth(x + 1, y) += g_dx.dot(k.ray(x + 1, y));
      out.d_depth(x - 1, y) -= g_dx.dot(k.ray(x - 1, y));
      out.d_depth(x, y + 1) += g_dy.dot(k.ray(x, y + 1));
      out.d_depth(x, y - 1) -= g_dy.dot(k.ray(x, y - 1));
    }
  }
  return out;
}

GeometryLossResult mv_geometric(const RenderOutput& ref, const RenderOutput& nbr, const CameraPose& ref_pose,
                                const CameraPose& nbr_pose, const CameraIntrinsics& k, double gate) {
  using J = ceres::Jet<double, 5>;  // ref depth, then four neighbor depths
  const Mat3 r_ref = ref_pose.rotation_matrix(), r_nbr = nbr_pose.rotation_matrix();
  const Mat3 r = r_nbr * r_ref.transpose();
  const Vec3 t = nbr_pose.translation - r * ref_pose.translation;
  const Mat3 rj_ref_to_nbr = r;
  GeometryLossResult out;
  out.d_depth = Image(ref.width, ref.height, 1, 0.0);
  out.d_depth_other = Image(nbr.width, nbr.height, 1, 0.0);
  for (int y = 0; y < ref.height; ++y) {
    for (int x = 0; x < ref.width; ++x) {
      if (!ref.depth_valid(x, y)) continue;
      const Vec3 xn = rj_ref_to_nbr * (ref.depth(x, y) * k.ray(x, y)) + t;
      if (xn.z() <= 0.0) continue;
      const Vec2 q = k.project(xn);
      if (!(q.x() >= 0.0 && q.y() >= 0.0 && q.x() <= nbr.width - 1 && q.y() <= nbr.height - 1)) continue;
      const int x0 = std::min(static_cast<int>(q.x()), nbr.width - 2);
      const int y0 = std::min(static_cast<int>(q.y()), nbr.height - 2);
      if (x0 < 0 || y0 < 0) continue;
      const int nx[4] = {x0, x0 + 1, x0, x0 + 1};
      const int ny[4] = {y0, y0, y0 + 1, y0 + 1};
      bool ok = true;
      for (int i = 0; i < 4; ++i) ok = ok && nbr.depth_valid(nx[i], ny[i]);
      if (!ok) continue;

      const J d_ref(ref.depth(x, y), 0);
      Eigen::Matrix<J, 3, 1> pr;
      const Vec3 ray = k.ray(x, y);
      for (int c = 0; c < 3; ++c) pr[c] = d_ref * ray[c];
      const Eigen::Matrix<J, 3, 1> pn = r.cast<J>() * pr + t.cast<J>();
      const J qx = J(k.fx) * pn[0] / pn[2] + J(k.cx);
      const J qy = J(k.fy) * pn[1] / pn[2] + J(k.cy);
      const J fx = qx - J(x0), fy = qy - J(y0);
      J dn[4];
      for (int i = 0; i < 4; ++i) dn[i] = J(nbr.depth(nx[i], ny[i]), i + 1);
      const J dq = (J(1) - fx) * (J(1) - fy) * dn[0] + fx * (J(1) - fy) * dn[1] + (J(1) - fx) * fy * dn[2] +
                   fx * fy * dn[3];
      Eigen::Matrix<J, 3, 1> back;
      back << dq * (qx - J(k.cx)) / J(k.fx), dq * (qy - J(k.cy)) / J(k.fy), dq;
      const Eigen::Matrix<J, 3, 1> pr2 = r.transpose().cast<J>() * (back - t.cast<J>());
      if (pr2[2].a <= 0.0) continue;
      const J ex = J(k.fx) * pr2[0] / pr2[2] + J(k.cx) - J(x);
      const J ey = J(k.fy) * pr2[1] / pr2[2] + J(k.cy) - J(y);
      const J phi2 = ex * ex + ey * ey;
      const double phi = std::sqrt(phi2.a);
      if (!std::isfinite(phi) || phi > gate) continue;
      out.value += phi;
      ++out.count;
      if (phi < 1e-12) continue;
      // d phi = d phi2 / (2 phi)
      const double s = 0.5 / phi;
      out.d_depth(x, y) += s * phi2.v[0];
      for (int i = 0; i < 4; ++i) out.d_depth_other(nx[i], ny[i]) += s * phi2.v[i + 1];
    }
  }
  return out;
}

}  // namespace msgs
