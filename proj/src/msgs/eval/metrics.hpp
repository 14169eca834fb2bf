// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "msgs/common/grid.hpp"

namespace msgs {

/// Returned by psnr for identical images.
inline constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();

/// 10 log10(1 / MSE) over pixels whose include-map value is nonzero (all pixels
/// when `include` is null). Throws when no pixel is included.
double psnr(const Image& a, const Image& b, const Mask* include = nullptr);

/// Mean of the SSIM map over included pixels.
double masked_ssim(const Image& a, const Image& b, const Mask* include = nullptr);

struct EvalRow {
  std::string name;
  int sequence = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  std::optional<double> masked_psnr;
  std::optional<double> masked_ssim;
};

struct EvalReport {
  std::vector<EvalRow> rows;

  /// Mean over finite values; infinite PSNRs are skipped.
  struct Summary {
    int sequence = 0;
    int frames = 0;
    double psnr = 0.0;
    double ssim = 0.0;
    std::optional<double> masked_psnr;
    std::optional<double> masked_ssim;
  };
  std::vector<Summary> per_sequence() const;

  /// Header row then one row per frame, then "mean,<seq>,..." rows. Infinite
  /// PSNR is written as "inf"; absent masked values as empty fields.
  std::string to_csv() const;
};

}  // namespace msgs
