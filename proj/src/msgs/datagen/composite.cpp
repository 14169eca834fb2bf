// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "msgs/common/config.hpp"
#include "msgs/common/error.hpp"
#include "msgs/datagen/datagen.hpp"

namespace msgs {

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma >= 0.0)) fail(ErrorCode::InvalidArgument, "blur sigma must be nonnegative");
  if (sigma == 0.0) return {1.0};
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    taps[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += taps[i + r];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

Image gaussian_blur(const Image& image, double sigma) {
  const std::vector<double> taps = gaussian_kernel(sigma);
  if (taps.size() == 1) return image;
  const int r = static_cast<int>(taps.size() / 2);
  const int w = image.width, h = image.height, c = image.channels;
  Image tmp(w, h, c, 0.0), out(w, h, c, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) acc += taps[i + r] * image(std::clamp(x + i, 0, w - 1), y, ch);
        tmp(x, y, ch) = acc;
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) acc += taps[i + r] * tmp(x, std::clamp(y + i, 0, h - 1), ch);
        out(x, y, ch) = acc;
      }
    }
  }
  return out;
}

Image composite(const Image& fg, const Image& bg, const CompositeSettings& s) {
  if (fg.channels != 4 || bg.channels != 3) fail(ErrorCode::InvalidArgument, "composite: expected RGBA over RGB");
  if (!fg.same_size(bg)) {
    fail(ErrorCode::InvalidArgument, "composite: foreground " + std::to_string(fg.width) + "x" +
                                         std::to_string(fg.height) + " does not match background " +
                                         std::to_string(bg.width) + "x" + std::to_string(bg.height));
  }
  Image rgb(fg.width, fg.height, 3), alpha(fg.width, fg.height, 1);
  for (std::size_t i = 0; i < fg.pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) rgb.data[3 * i + c] = fg.data[4 * i + c];
    alpha.data[i] = std::clamp(fg.data[4 * i + 3], 0.0, 1.0);
  }
  const Image blurred = gaussian_blur(rgb, s.blur_sigma);
  if (s.blur_alpha) alpha = gaussian_blur(alpha, s.blur_sigma);
  Image out(bg.width, bg.height, 3);
  for (std::size_t i = 0; i < bg.pixel_count(); ++i) {
    const double a = alpha.data[i];
    for (int c = 0; c < 3; ++c) {
      const double f = s.premultiplied ? blurred.data[3 * i + c] : a * blurred.data[3 * i + c];
      out.data[3 * i + c] = std::clamp(f + (1.0 - a) * bg.data[3 * i + c], 0.0, 1.0);
    }
  }
  return out;
}

namespace {

double parse_double(const std::string& tok, const std::string& what) {
  double v = 0.0;
  const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) fail(ErrorCode::Parse, what + ": bad number '" + tok + "'");
  return v;
}

std::vector<std::vector<std::string>> tokenize(const std::string& text) {
  std::vector<std::vector<std::string>> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::string> toks;
    std::string t;
    while (ls >> t) toks.push_back(t);
    if (!toks.empty()) lines.push_back(std::move(toks));
  }
  return lines;
}

int parse_class(const std::string& tok, const std::string& what) {
  int v = 0;
  const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) fail(ErrorCode::Parse, what + ": bad class '" + tok + "'");
  return v;
}

}  // namespace

std::string format_annotations(std::span<const Box> boxes, int width, int height) {
  if (width <= 0 || height <= 0) fail(ErrorCode::InvalidArgument, "annotation image size must be positive");
  std::string out;
  for (const Box& b : boxes) {
    const double cx = 0.5 * (b.xmin + b.xmax) / width, cy = 0.5 * (b.ymin + b.ymax) / height;
    const double w = (b.xmax - b.xmin) / width, h = (b.ymax - b.ymin) / height;
    out += std::to_string(b.cls) + ' ' + format_number(cx) + ' ' + format_number(cy) + ' ' + format_number(w) + ' ' +
           format_number(h) + '\n';
  }
  return out;
}

std::vector<Box> parse_annotations(const std::string& text, int width, int height) {
  std::vector<Box> out;
  for (const auto& t : tokenize(text)) {
    if (t.size() != 5) fail(ErrorCode::Parse, "annotation line needs 5 fields");
    Box b;
    b.cls = parse_class(t[0], "annotation");
    const double cx = parse_double(t[1], "annotation") * width, cy = parse_double(t[2], "annotation") * height;
    const double w = parse_double(t[3], "annotation") * width, h = parse_double(t[4], "annotation") * height;
    b.xmin = cx - 0.5 * w;
    b.xmax = cx + 0.5 * w;
    b.ymin = cy - 0.5 * h;
    b.ymax = cy + 0.5 * h;
    out.push_back(b);
  }
  return out;
}

std::string format_boxes(std::span<const Box> boxes) {
  std::string out;
  for (const Box& b : boxes) {
    out += std::to_string(b.cls) + ' ' + format_number(b.xmin) + ' ' + format_number(b.ymin) + ' ' +
           format_number(b.xmax) + ' ' + format_number(b.ymax) + '\n';
  }
  return out;
}

std::vector<Box> parse_boxes(const std::string& text) {
  std::vector<Box> out;
  for (const auto& t : tokenize(text)) {
    if (t.size() != 5) fail(ErrorCode::Parse, "box line needs 5 fields");
    out.push_back({parse_class(t[0], "box"), parse_double(t[1], "box"), parse_double(t[2], "box"),
                   parse_double(t[3], "box"), parse_double(t[4], "box")});
  }
  return out;
}

BillboardFrame render_billboards(std::span<const ActorPlacement> actors, const CameraPose& pose,
                                 const CameraIntrinsics& k, const BillboardSettings& s) {
  BillboardFrame frame;
  frame.rgba = Image(k.width, k.height, 4, 0.0);
  Image zbuf(k.width, k.height, 1, std::numeric_limits<double>::infinity());
  const Vec3 eye = pose.center();
  const Mat3 rt = pose.rotation_matrix().transpose();
  const Vec3 up = Vec3::UnitZ();
  for (const ActorPlacement& a : actors) {
    const double height = a.scale * s.height_per_scale;
    const double half_w = 0.5 * height * s.aspect;
    Vec3 facing = eye - a.position;
    facing.z() = 0.0;
    if (facing.norm() < 1e-12) facing = Vec3(std::cos(a.heading), std::sin(a.heading), 0.0);
    facing.normalize();
    const Vec3 right = up.cross(facing).normalized();
    // Per-actor hue from the id, stripes shifted by the heading.
    const Vec3 base(0.5 + 0.5 * std::sin(a.actor_id * 2.1), 0.5 + 0.5 * std::sin(a.actor_id * 2.1 + 2.0),
                    0.5 + 0.5 * std::sin(a.actor_id * 2.1 + 4.0));
    for (int y = 0; y < k.height; ++y) {
      for (int x = 0; x < k.width; ++x) {
        const Vec3 d = rt * k.ray(x, y);
        const double den = facing.dot(d);
        if (std::abs(den) < 1e-12) continue;
        const double t = facing.dot(a.position - eye) / den;
        if (t <= 0.0) continue;
        const Vec3 hit = eye + t * d - a.position;
        const double u = right.dot(hit), v = up.dot(hit);
        if (std::abs(u) > half_w || v < 0.0 || v > height) continue;
        const double z = t;  // ray has unit camera z
        if (z >= zbuf(x, y)) continue;
        zbuf(x, y) = z;
        const bool stripe = static_cast<int>(std::floor(6.0 * v / height + a.heading)) % 2 == 0;
        for (int c = 0; c < 3; ++c) frame.rgba(x, y, c) = stripe ? base[c] : 0.5 * base[c];
        frame.rgba(x, y, 3) = 1.0;
      }
    }
    double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
    bool in_front = true;
    for (double su : {-1.0, 1.0}) {
      for (double sv : {0.0, 1.0}) {
        const Vec3 cam = pose.to_camera(a.position + su * half_w * right + sv * height * up);
        if (cam.z() <= 0.0) in_front = false;
        if (!in_front) break;
        const Vec2 p = k.project(cam);
        x0 = std::min(x0, p.x() + 0.5);
        x1 = std::max(x1, p.x() + 0.5);
        y0 = std::min(y0, p.y() + 0.5);
        y1 = std::max(y1, p.y() + 0.5);
      }
    }
    if (!in_front) continue;
    Box b{0, std::clamp(x0, 0.0, double(k.width)), std::clamp(y0, 0.0, double(k.height)),
          std::clamp(x1, 0.0, double(k.width)), std::clamp(y1, 0.0, double(k.height))};
    if (b.xmax > b.xmin && b.ymax > b.ymin) frame.boxes.push_back(b);
  }
  return frame;
}

}  // namespace msgs
