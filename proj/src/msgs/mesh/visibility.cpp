// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>

#include "msgs/common/error.hpp"
#include "msgs/mesh/mesh.hpp"

namespace msgs {

FaceBuffer rasterize_faces(const Mesh& mesh, const CameraPose& pose, const CameraIntrinsics& k) {
  FaceBuffer buf;
  buf.face = Grid<int>(k.width, k.height, 1, -1);
  buf.depth = Image(k.width, k.height, 1, std::numeric_limits<double>::infinity());
  const Mat3 r = pose.rotation_matrix();
  std::vector<Vec3> cam(mesh.vertices.size());
  for (std::size_t i = 0; i < cam.size(); ++i) cam[i] = r * mesh.vertices[i] + pose.translation;
  constexpr double kNear = 1e-6;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    Vec3 c[3];
    Vec2 p[3];
    bool ok = true;
    for (int v = 0; v < 3; ++v) {
      c[v] = cam[mesh.faces[f][v]];
      if (c[v].z() <= kNear) ok = false;
      else p[v] = k.project(c[v]);
    }
    if (!ok) continue;
    const double area = (p[1] - p[0]).x() * (p[2] - p[0]).y() - (p[1] - p[0]).y() * (p[2] - p[0]).x();
    if (area == 0.0) continue;
    const int x0 = std::max(0, static_cast<int>(std::ceil(std::min({p[0].x(), p[1].x(), p[2].x()}))));
    const int x1 = std::min(k.width - 1, static_cast<int>(std::floor(std::max({p[0].x(), p[1].x(), p[2].x()}))));
    const int y0 = std::max(0, static_cast<int>(std::ceil(std::min({p[0].y(), p[1].y(), p[2].y()}))));
    const int y1 = std::min(k.height - 1, static_cast<int>(std::floor(std::max({p[0].y(), p[1].y(), p[2].y()}))));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        double b[3];
        for (int v = 0; v < 3; ++v) {
          const Vec2& a = p[(v + 1) % 3];
          const Vec2& e = p[(v + 2) % 3];
          b[v] = ((e - a).x() * (y - a.y()) - (e - a).y() * (x - a.x())) / area;
        }
        if (b[0] < 0.0 || b[1] < 0.0 || b[2] < 0.0) continue;
        const double inv_z = b[0] / c[0].z() + b[1] / c[1].z() + b[2] / c[2].z();
        const double z = 1.0 / inv_z;
        if (z < buf.depth(x, y)) {
          buf.depth(x, y) = z;
          buf.face(x, y) = static_cast<int>(f);
        }
      }
    }
  }
  return buf;
}

std::vector<int> visible_faces(const Mesh& mesh, std::span<const CameraPose> poses, const CameraIntrinsics& k) {
  if (mesh.faces.empty()) fail(ErrorCode::InvalidArgument, "visible_faces: empty mesh");
  Mesh m = mesh;
  if (m.normals.size() != m.faces.size()) m.compute_normals();
  std::vector<char> visible(m.faces.size(), 1);
  for (const CameraPose& pose : poses) {
    const FaceBuffer buf = rasterize_faces(m, pose, k);
    const Vec3 center = pose.center();
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
      if (!visible[f]) continue;
      const Vec3 centroid = m.centroid(f);
      const Vec3 cam = pose.to_camera(centroid);
      bool ok = cam.z() > 0.0 && m.normals[f].dot(centroid - center) < 0.0;
      if (ok) {
        const Vec2 p = k.project(cam);
        const int px = static_cast<int>(std::lround(p.x())), py = static_cast<int>(std::lround(p.y()));
        ok = px >= 0 && py >= 0 && px < k.width && py < k.height;
        if (ok) {
          bool seen = false;
          for (int dy = -1; dy <= 1 && !seen; ++dy) {
            for (int dx = -1; dx <= 1 && !seen; ++dx) {
              if (buf.face.contains(px + dx, py + dy) && buf.face(px + dx, py + dy) == static_cast<int>(f)) seen = true;
            }
          }
          if (!seen) seen = cam.z() <= buf.depth(px, py) * (1.0 + 1e-4);
          ok = seen;
        }
      }
      if (!ok) visible[f] = 0;
    }
  }
  std::vector<int> out;
  for (std::size_t f = 0; f < visible.size(); ++f) {
    if (visible[f]) out.push_back(static_cast<int>(f));
  }
  return out;
}

}  // namespace msgs
