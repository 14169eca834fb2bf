// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include "msgs/mask/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "msgs/common/error.hpp"

namespace msgs {

std::vector<EntityStats> entity_error(const Image& err_map, const LabelMap& entities) {
  if (!err_map.same_size(entities) || err_map.channels != 1) {
    fail(ErrorCode::InvalidArgument, "entity_error: error map and entity map differ in shape");
  }
  std::map<std::int32_t, std::pair<std::size_t, double>> acc;
  for (std::size_t i = 0; i < entities.data.size(); ++i) {
    const std::int32_t id = entities.data[i];
    if (id == 0) continue;
    auto& a = acc[id];
    ++a.first;
    a.second += err_map.data[i];
  }
  std::vector<EntityStats> out;
  out.reserve(acc.size());
  for (const auto& [id, a] : acc) out.push_back({id, a.first, a.second / static_cast<double>(a.first)});
  return out;
}

double pho_threshold(std::span<const EntityStats> stats) {
  if (stats.empty()) fail(ErrorCode::InvalidArgument, "pho_threshold: no entities");
  double mean = 0.0;
  for (const auto& s : stats) mean += s.mean_error;
  mean /= static_cast<double>(stats.size());
  double var = 0.0;
  for (const auto& s : stats) var += (s.mean_error - mean) * (s.mean_error - mean);
  var /= static_cast<double>(stats.size());
  return mean - 0.5 * std::sqrt(var);
}

double area_percentile(std::vector<std::size_t> areas, double pct) {
  if (areas.empty()) return std::numeric_limits<double>::infinity();
  if (!(pct >= 0.0)) fail(ErrorCode::InvalidArgument, "area percentile must be nonnegative");
  std::sort(areas.begin(), areas.end());
  const double pos = std::floor(pct / 100.0 * static_cast<double>(areas.size()));
  if (pos >= static_cast<double>(areas.size())) return std::numeric_limits<double>::infinity();
  return static_cast<double>(areas[static_cast<std::size_t>(pos)]);
}

LabelMap connected_components(const Mask& mask, int* count) {
  LabelMap labels(mask.width, mask.height, 1, 0);
  int next = 0;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask(x, y) || labels(x, y)) continue;
      labels(x, y) = ++next;
      stack.assign(1, {x, y});
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (!mask.contains(nx, ny) || !mask(nx, ny) || labels(nx, ny)) continue;
            labels(nx, ny) = next;
            stack.emplace_back(nx, ny);
          }
        }
      }
    }
  }
  if (count) *count = next;
  return labels;
}

Mask dilate_square(const Mask& mask, int radius) {
  if (radius < 0) fail(ErrorCode::InvalidArgument, "dilation radius must be nonnegative");
  // Separable: a square is the product of two segments.
  Mask rows(mask.width, mask.height, 1, 0), out(mask.width, mask.height, 1, 0);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask(x, y)) continue;
      for (int xx = std::max(0, x - radius); xx <= std::min(mask.width - 1, x + radius); ++xx) rows(xx, y) = 1;
    }
  }
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!rows(x, y)) continue;
      for (int yy = std::max(0, y - radius); yy <= std::min(mask.height - 1, y + radius); ++yy) out(x, yy) = 1;
    }
  }
  return out;
}

Mask refine_masks(const Mask& sam, const LabelMap& entities, const Image& err_map, const RefineSettings& settings,
                  RefineReport* report) {
  if (!sam.same_size(entities) || !sam.same_size(err_map)) {
    fail(ErrorCode::InvalidArgument, "refine_masks: SAM mask, entity map and error map differ in size");
  }
  RefineReport local;
  RefineReport& rep = report ? *report : local;
  rep = RefineReport{};

  const std::vector<EntityStats> stats = entity_error(err_map, entities);
  std::vector<std::size_t> entity_areas;
  for (const auto& s : stats) entity_areas.push_back(s.area);
  rep.rho1 = area_percentile(entity_areas, settings.rho1_pct);
  std::vector<EntityStats> surviving;
  for (const auto& s : stats) {
    if (static_cast<double>(s.area) < rep.rho1) surviving.push_back(s);
  }

  int ncomp = 0;
  const LabelMap comps = connected_components(sam, &ncomp);
  std::vector<std::size_t> comp_area(static_cast<std::size_t>(ncomp) + 1, 0);
  for (std::int32_t l : comps.data) {
    if (l) ++comp_area[l];
  }
  rep.rho2 = area_percentile(std::vector<std::size_t>(comp_area.begin() + 1, comp_area.end()), settings.rho2_pct);

  Mask out = sam;
  for (auto& v : out.data) v = v ? 1 : 0;
  Mask small_sam(sam.width, sam.height, 1, 0);
  for (std::size_t i = 0; i < comps.data.size(); ++i) {
    const std::int32_t l = comps.data[i];
    if (!l) continue;
    if (static_cast<double>(comp_area[l]) < rep.rho2) {
      small_sam.data[i] = 1;
    } else if (settings.drop_large_sam) {
      out.data[i] = 0;
    }
  }
  if (surviving.empty()) return out;
  rep.rho_pho = settings.rho_pho ? *settings.rho_pho : pho_threshold(surviving);

  const Mask dilated = dilate_square(small_sam, settings.dilation_px);
  std::map<std::int32_t, const EntityStats*> lookup;
  for (const auto& s : surviving) lookup[s.entity_id] = &s;
  std::map<std::int32_t, bool> candidate;
  for (std::size_t i = 0; i < entities.data.size(); ++i) {
    const std::int32_t id = entities.data[i];
    if (id && dilated.data[i] && lookup.count(id)) candidate[id] = true;
  }
  for (const auto& [id, _] : candidate) {
    (lookup[id]->mean_error > rep.rho_pho ? rep.added : rep.removed).push_back(id);
  }
  for (std::size_t i = 0; i < entities.data.size(); ++i) {
    const std::int32_t id = entities.data[i];
    if (!id || !candidate.count(id)) continue;
    out.data[i] = lookup[id]->mean_error > rep.rho_pho ? 1 : 0;
  }
  return out;
}

}  // namespace msgs
