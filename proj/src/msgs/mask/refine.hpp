// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "msgs/common/grid.hpp"

namespace msgs {

struct EntityStats {
  std::int32_t entity_id = 0;
  std::size_t area = 0;
  double mean_error = 0.0;
};

/// One entry per distinct nonzero label, sorted by label.
std::vector<EntityStats> entity_error(const Image& err_map, const LabelMap& entities);

/// mean(R) - std(R)/2 with the population standard deviation.
double pho_threshold(std::span<const EntityStats> stats);

/// Area below which pct percent of `areas` fall: the sorted value at index
/// floor(pct/100 * n). Infinity when that index is past the end or the list is empty.
double area_percentile(std::vector<std::size_t> areas, double pct);

struct RefineSettings {
  double rho1_pct = 70.0;  // entity area percentile
  double rho2_pct = 80.0;  // SAM component area percentile
  int dilation_px = 3;
  std::optional<double> rho_pho;  // overrides mean - std/2
  bool drop_large_sam = false;    // also delete oversized SAM components from the output
};

struct RefineReport {
  double rho1 = 0.0;
  double rho2 = 0.0;
  double rho_pho = 0.0;
  std::vector<std::int32_t> added;    // candidate entities ORed into the mask
  std::vector<std::int32_t> removed;  // candidate entities cleared from the mask
};

/// Entity-error refinement of a transient mask (1 = transient).
Mask refine_masks(const Mask& sam, const LabelMap& entities, const Image& err_map,
                  const RefineSettings& settings = {}, RefineReport* report = nullptr);

/// 8-connected components of the nonzero pixels; 0 = background, labels from 1.
LabelMap connected_components(const Mask& mask, int* count = nullptr);

/// Dilation by a (2r+1) x (2r+1) square.
Mask dilate_square(const Mask& mask, int radius);

}  // namespace msgs
