// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>

#include "msgs/common/error.hpp"
#include "msgs/mesh/mc_tables.hpp"
#include "msgs/mesh/mesh.hpp"

namespace msgs {

namespace {

constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

// Samples exactly on the level set would put several edge vertices on one
// corner; nudging them to the positive side keeps every triangle non-degenerate.
double nudge(double v) { return v == 0.0 ? 1e-12 : v; }

}  // namespace

void Mesh::compute_normals() {
  normals.resize(faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Vec3& a = vertices[faces[f][0]];
    const Vec3 n = (vertices[faces[f][1]] - a).cross(vertices[faces[f][2]] - a);
    const double len = n.norm();
    normals[f] = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
  }
}

Vec3 Mesh::centroid(std::size_t face) const {
  return (vertices[faces[face][0]] + vertices[faces[face][1]] + vertices[faces[face][2]]) / 3.0;
}

Mesh marching_cubes(const std::vector<double>& values, std::array<int, 3> dims, const Vec3& origin,
                    double spacing, const std::vector<double>* weights) {
  const std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  if (values.size() != n || (weights && weights->size() != n)) {
    fail(ErrorCode::InvalidArgument, "marching_cubes: grid size mismatch");
  }
  const auto index = [&](int i, int j, int k) { return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i; };
  Mesh mesh;
  std::unordered_map<std::uint64_t, int> edge_vertex;
  for (int k = 0; k + 1 < dims[2]; ++k) {
    for (int j = 0; j + 1 < dims[1]; ++j) {
      for (int i = 0; i + 1 < dims[0]; ++i) {
        double v[8];
        bool observed = true;
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          const std::size_t idx = index(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]);
          if (weights && (*weights)[idx] <= 0.0) observed = false;
          v[c] = nudge(values[idx]);
          if (v[c] < 0.0) cube |= 1 << c;
        }
        if (!observed) continue;
        const int edges = mc::kEdgeTable[cube];
        if (edges == 0) continue;
        int vert[12];
        for (int e = 0; e < 12; ++e) {
          if (!(edges & (1 << e))) continue;
          const int a = kEdge[e][0], b = kEdge[e][1];
          const int ai = i + kCorner[a][0], aj = j + kCorner[a][1], ak = k + kCorner[a][2];
          const int bi = i + kCorner[b][0], bj = j + kCorner[b][1], bk = k + kCorner[b][2];
          const int axis = ai != bi ? 0 : (aj != bj ? 1 : 2);
          const std::size_t lo = index(std::min(ai, bi), std::min(aj, bj), std::min(ak, bk));
          const std::uint64_t key = static_cast<std::uint64_t>(lo) * 3 + axis;
          auto it = edge_vertex.find(key);
          if (it == edge_vertex.end()) {
            const double t = v[a] / (v[a] - v[b]);
            const Vec3 pa = origin + spacing * Vec3(ai, aj, ak);
            const Vec3 pb = origin + spacing * Vec3(bi, bj, bk);
            mesh.vertices.push_back(pa + t * (pb - pa));
            it = edge_vertex.emplace(key, static_cast<int>(mesh.vertices.size()) - 1).first;
          }
          vert[e] = it->second;
        }
        for (int t = 0; mc::kTriTable[cube][t] != -1; t += 3) {
          // Table winding faces the negative side; swap to face outward.
          mesh.faces.push_back({vert[mc::kTriTable[cube][t]], vert[mc::kTriTable[cube][t + 2]],
                                vert[mc::kTriTable[cube][t + 1]]});
        }
      }
    }
  }
  mesh.compute_normals();
  return mesh;
}

Mesh extract_mesh(const TsdfVolume& volume) {
  return marching_cubes(volume.tsdf, volume.dims, volume.origin, volume.voxel_size, &volume.weight);
}

long long euler_characteristic(const Mesh& mesh) {
  std::set<std::pair<int, int>> edges;
  for (const auto& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      const int a = f[e], b = f[(e + 1) % 3];
      edges.emplace(std::min(a, b), std::max(a, b));
    }
  }
  return static_cast<long long>(mesh.vertices.size()) - static_cast<long long>(edges.size()) +
         static_cast<long long>(mesh.faces.size());
}

void write_obj(const std::filesystem::path& path, const Mesh& mesh) {
  std::ostringstream out;
  out.precision(9);
  for (const Vec3& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  std::ofstream file(path);
  if (!file) fail(ErrorCode::Io, "cannot write mesh " + path.string());
  file << out.str();
  if (!file) fail(ErrorCode::Io, "write failed for " + path.string());
}

Mesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open mesh " + path.string());
  Mesh mesh;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z())) fail(ErrorCode::Parse, path.string() + ":" + std::to_string(lineno) + ": bad vertex");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::array<int, 3> f{};
      for (int& idx : f) {
        std::string tok;
        if (!(ls >> tok)) fail(ErrorCode::Parse, path.string() + ":" + std::to_string(lineno) + ": bad face");
        idx = std::stoi(tok.substr(0, tok.find('/'))) - 1;
      }
      mesh.faces.push_back(f);
    }
  }
  for (const auto& f : mesh.faces) {
    for (int idx : f) {
      if (idx < 0 || idx >= static_cast<int>(mesh.vertices.size())) {
        fail(ErrorCode::Parse, path.string() + ": face index out of range");
      }
    }
  }
  mesh.compute_normals();
  return mesh;
}

}  // namespace msgs
