// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include "msgs/scene_io/colmap.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "msgs/common/error.hpp"

namespace msgs {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    fail(ErrorCode::InvalidArgument, "camera focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) fail(ErrorCode::InvalidArgument, "camera size must be positive");
  if (!(cx > 0.0 && cx < width && cy > 0.0 && cy < height)) {
    fail(ErrorCode::InvalidArgument, "principal point lies outside the image");
  }
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

CameraPose CameraPose::look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-12) x = z.cross(Vec3::UnitY());
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  CameraPose pose;
  pose.rotation = Eigen::Quaterniond(r);
  pose.translation = -(r * eye);
  return pose;
}

const CameraIntrinsics& ColmapReconstruction::camera(int camera_id) const {
  for (const auto& [id, intr] : cameras) {
    if (id == camera_id) return intr;
  }
  fail(ErrorCode::InvalidArgument, "unknown COLMAP camera id " + std::to_string(camera_id));
}

namespace {

struct Line {
  int number;
  std::string_view text;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Non-comment lines with 1-based numbers; blank lines are kept (images.txt needs them).
std::vector<Line> content_lines(std::string_view text) {
  std::vector<Line> out;
  int number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    ++number;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() != '#') out.push_back({number, line});
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] void parse_error(std::string_view file, int line, const std::string& what) {
  fail(ErrorCode::Parse, std::string(file) + ":" + std::to_string(line) + ": " + what);
}

template <class T>
bool try_number(std::string_view tok, T& out) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

template <class T>
T number(std::string_view tok, std::string_view file, int line) {
  T out{};
  if (!try_number(tok, out)) parse_error(file, line, "expected a number, got '" + std::string(tok) + "'");
  return out;
}

bool all_numeric(const std::vector<std::string_view>& toks) {
  double scratch = 0.0;
  for (auto t : toks) {
    if (!try_number(t, scratch)) return false;
  }
  return true;
}

void append_double(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

std::vector<std::pair<int, CameraIntrinsics>> parse_cameras(std::string_view text) {
  constexpr std::string_view file = "cameras.txt";
  std::vector<std::pair<int, CameraIntrinsics>> cameras;
  for (const auto& line : content_lines(text)) {
    if (line.text.empty()) continue;
    const auto toks = split(line.text);
    if (toks.size() < 4) parse_error(file, line.number, "truncated camera record");
    const int id = number<int>(toks[0], file, line.number);
    const std::string_view model = toks[1];
    CameraIntrinsics intr;
    intr.width = number<int>(toks[2], file, line.number);
    intr.height = number<int>(toks[3], file, line.number);
    if (model == "SIMPLE_PINHOLE") {
      if (toks.size() != 7) parse_error(file, line.number, "SIMPLE_PINHOLE expects 3 parameters");
      intr.fx = intr.fy = number<double>(toks[4], file, line.number);
      intr.cx = number<double>(toks[5], file, line.number);
      intr.cy = number<double>(toks[6], file, line.number);
    } else if (model == "PINHOLE") {
      if (toks.size() != 8) parse_error(file, line.number, "PINHOLE expects 4 parameters");
      intr.fx = number<double>(toks[4], file, line.number);
      intr.fy = number<double>(toks[5], file, line.number);
      intr.cx = number<double>(toks[6], file, line.number);
      intr.cy = number<double>(toks[7], file, line.number);
    } else {
      parse_error(file, line.number, "unsupported camera model " + std::string(model));
    }
    try {
      intr.validate();
    } catch (const Error& e) {
      parse_error(file, line.number, e.what());
    }
    cameras.emplace_back(id, intr);
  }
  return cameras;
}

std::vector<CameraPose> parse_images(std::string_view text) {
  constexpr std::string_view file = "images.txt";
  std::vector<CameraPose> poses;
  const auto lines = content_lines(text);
  std::size_t i = 0;
  while (i < lines.size()) {
    const Line& header = lines[i++];
    if (header.text.empty()) continue;
    const auto toks = split(header.text);
    if (toks.size() < 10) parse_error(file, header.number, "truncated image record");
    CameraPose pose;
    pose.image_id = number<int>(toks[0], file, header.number);
    const double qw = number<double>(toks[1], file, header.number);
    const double qx = number<double>(toks[2], file, header.number);
    const double qy = number<double>(toks[3], file, header.number);
    const double qz = number<double>(toks[4], file, header.number);
    const double norm = std::sqrt(qw * qw + qx * qx + qy * qy + qz * qz);
    if (!(norm > 0.0) || !std::isfinite(norm)) parse_error(file, header.number, "malformed quaternion (zero norm)");
    pose.rotation = Eigen::Quaterniond(qw, qx, qy, qz);
    // Already-unit quaternions are kept verbatim so text round trips stay bitwise exact.
    if (std::abs(norm - 1.0) > 1e-9) pose.rotation.normalize();
    pose.translation = {number<double>(toks[5], file, header.number),
                        number<double>(toks[6], file, header.number),
                        number<double>(toks[7], file, header.number)};
    pose.camera_id = number<int>(toks[8], file, header.number);
    // Names may contain spaces.
    const std::size_t name_pos = static_cast<std::size_t>(toks[9].data() - header.text.data());
    pose.image_path = std::string(header.text.substr(name_pos));
    poses.push_back(std::move(pose));
    // The observation line follows; it may be blank. A line that does not look
    // like observations is treated as the next header.
    if (i < lines.size()) {
      const auto obs = split(lines[i].text);
      if (obs.empty() || all_numeric(obs)) ++i;
    }
  }
  return poses;
}

std::vector<ColmapPoint> parse_points(std::string_view text) {
  constexpr std::string_view file = "points3D.txt";
  std::vector<ColmapPoint> points;
  for (const auto& line : content_lines(text)) {
    if (line.text.empty()) continue;
    const auto toks = split(line.text);
    if (toks.size() < 8) parse_error(file, line.number, "truncated point record");
    ColmapPoint p;
    p.id = number<std::int64_t>(toks[0], file, line.number);
    p.position = {number<double>(toks[1], file, line.number), number<double>(toks[2], file, line.number),
                  number<double>(toks[3], file, line.number)};
    for (int c = 0; c < 3; ++c) {
      const int v = number<int>(toks[4 + c], file, line.number);
      if (v < 0 || v > 255) parse_error(file, line.number, "color component out of range");
      p.rgb[c] = static_cast<std::uint8_t>(v);
    }
    p.error = number<double>(toks[7], file, line.number);
    points.push_back(p);
  }
  return points;
}

}  // namespace

ColmapReconstruction parse_colmap(std::string_view cameras_text, std::string_view images_text,
                                  std::string_view points_text) {
  ColmapReconstruction recon;
  recon.cameras = parse_cameras(cameras_text);
  recon.poses = parse_images(images_text);
  recon.points = parse_points(points_text);
  for (const auto& pose : recon.poses) {
    recon.camera(pose.camera_id);  // throws on dangling camera ids
  }
  return recon;
}

ColmapReconstruction read_colmap_dir(const std::filesystem::path& dir) {
  return parse_colmap(read_file(dir / "cameras.txt"), read_file(dir / "images.txt"),
                      read_file(dir / "points3D.txt"));
}

std::string format_colmap_cameras(const std::vector<std::pair<int, CameraIntrinsics>>& cameras) {
  std::string out = "# Camera list with one line of data per camera:\n"
                    "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n";
  for (const auto& [id, c] : cameras) {
    out += std::to_string(id) + " PINHOLE " + std::to_string(c.width) + " " + std::to_string(c.height);
    for (double v : {c.fx, c.fy, c.cx, c.cy}) {
      out += ' ';
      append_double(out, v);
    }
    out += '\n';
  }
  return out;
}

std::string format_colmap_images(const std::vector<CameraPose>& poses) {
  std::string out = "# Image list with two lines of data per image:\n"
                    "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n"
                    "#   POINTS2D[] as (X, Y, POINT3D_ID)\n";
  for (const auto& p : poses) {
    out += std::to_string(p.image_id);
    const auto& q = p.rotation;
    for (double v : {q.w(), q.x(), q.y(), q.z(), p.translation.x(), p.translation.y(), p.translation.z()}) {
      out += ' ';
      append_double(out, v);
    }
    out += ' ' + std::to_string(p.camera_id) + ' ' + p.image_path + "\n\n";
  }
  return out;
}

std::string format_colmap_points(const std::vector<ColmapPoint>& points) {
  std::string out = "# 3D point list with one line of data per point:\n"
                    "#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[]\n";
  for (const auto& p : points) {
    out += std::to_string(p.id);
    for (int i = 0; i < 3; ++i) {
      out += ' ';
      append_double(out, p.position[i]);
    }
    for (int i = 0; i < 3; ++i) out += ' ' + std::to_string(p.rgb[i]);
    out += ' ';
    append_double(out, p.error);
    out += '\n';
  }
  return out;
}

void write_colmap_dir(const std::filesystem::path& dir, const ColmapReconstruction& recon) {
  std::filesystem::create_directories(dir);
  write_file(dir / "cameras.txt", format_colmap_cameras(recon.cameras));
  write_file(dir / "images.txt", format_colmap_images(recon.poses));
  write_file(dir / "points3D.txt", format_colmap_points(recon.points));
}

}  // namespace msgs
