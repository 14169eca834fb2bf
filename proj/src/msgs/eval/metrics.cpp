// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include "msgs/eval/metrics.hpp"

#include <cmath>
#include <map>

#include "msgs/common/config.hpp"
#include "msgs/common/error.hpp"
#include "msgs/losses/losses.hpp"

namespace msgs {

double psnr(const Image& a, const Image& b, const Mask* include) {
  if (!a.same_size(b) || a.channels != b.channels) fail(ErrorCode::InvalidArgument, "psnr: images differ in shape");
  if (include && !include->same_size(a)) fail(ErrorCode::InvalidArgument, "psnr: mask size does not match");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.pixel_count(); ++i) {
    if (include && !include->data[i]) continue;
    for (int c = 0; c < a.channels; ++c) {
      const double d = a.data[i * a.channels + c] - b.data[i * a.channels + c];
      sum += d * d;
    }
    n += a.channels;
  }
  if (n == 0) fail(ErrorCode::InvalidArgument, "psnr: every pixel is excluded");
  const double mse = sum / static_cast<double>(n);
  if (mse == 0.0) return kPsnrInfinite;
  return 10.0 * std::log10(1.0 / mse);
}

double masked_ssim(const Image& a, const Image& b, const Mask* include) {
  const SsimResult s = ssim(a, b);
  if (!include) return s.value;
  if (!include->same_size(a)) fail(ErrorCode::InvalidArgument, "ssim: mask size does not match");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.map.data.size(); ++i) {
    if (!include->data[i]) continue;
    sum += s.map.data[i];
    ++n;
  }
  if (n == 0) fail(ErrorCode::InvalidArgument, "ssim: every pixel is excluded");
  return sum / static_cast<double>(n);
}

std::vector<EvalReport::Summary> EvalReport::per_sequence() const {
  struct Acc {
    int frames = 0, finite = 0, masked = 0, masked_finite = 0;
    double psnr = 0, ssim = 0, mpsnr = 0, mssim = 0;
  };
  std::map<int, Acc> acc;
  for (const auto& r : rows) {
    Acc& a = acc[r.sequence];
    ++a.frames;
    a.ssim += r.ssim;
    if (std::isfinite(r.psnr)) {
      a.psnr += r.psnr;
      ++a.finite;
    }
    if (r.masked_ssim) {
      ++a.masked;
      a.mssim += *r.masked_ssim;
    }
    if (r.masked_psnr && std::isfinite(*r.masked_psnr)) {
      a.mpsnr += *r.masked_psnr;
      ++a.masked_finite;
    }
  }
  std::vector<Summary> out;
  for (const auto& [seq, a] : acc) {
    Summary s;
    s.sequence = seq;
    s.frames = a.frames;
    s.psnr = a.finite ? a.psnr / a.finite : kPsnrInfinite;
    s.ssim = a.ssim / a.frames;
    if (a.masked) {
      s.masked_ssim = a.mssim / a.masked;
      s.masked_psnr = a.masked_finite ? a.mpsnr / a.masked_finite : kPsnrInfinite;
    }
    out.push_back(s);
  }
  return out;
}

namespace {

std::string num(double v) { return std::isinf(v) ? std::string("inf") : format_number(v); }
std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

}  // namespace

std::string EvalReport::to_csv() const {
  std::string out = "frame,sequence,psnr,ssim,masked_psnr,masked_ssim\n";
  for (const auto& r : rows) {
    out += r.name + ',' + std::to_string(r.sequence) + ',' + num(r.psnr) + ',' + num(r.ssim) + ',' +
           opt(r.masked_psnr) + ',' + opt(r.masked_ssim) + '\n';
  }
  for (const auto& s : per_sequence()) {
    out += "mean," + std::to_string(s.sequence) + ',' + num(s.psnr) + ',' + num(s.ssim) + ',' + opt(s.masked_psnr) +
           ',' + opt(s.masked_ssim) + '\n';
  }
  return out;
}

}  // namespace msgs
