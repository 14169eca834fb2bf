// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "msgs/trainer/trainer.hpp"

namespace msgs {

Splat split_child(const Splat& parent, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec3 z;
  do {
    z = Vec3(normal(rng), normal(rng), normal(rng));
  } while (z.squaredNorm() > 9.0);
  const Mat3 r = quaternion_matrix<double>(parent.rot);
  Splat child = parent;
  child.mu = parent.mu + r * parent.scale().cwiseProduct(z);
  child.log_scale = parent.log_scale.array() - std::log(1.6);
  return child;
}

DensifyResult densify_and_prune(const std::vector<Splat>& splats, const GradStats& stats,
                                const DensifyConfig& config, double extent, std::mt19937_64& rng) {
  DensifyResult out;
  std::vector<Splat> grown;
  std::vector<std::int64_t> grown_source;
  std::vector<Splat> extra;
  std::size_t total = splats.size();
  for (std::size_t i = 0; i < splats.size(); ++i) {
    const Splat& s = splats[i];
    const bool hot = i < stats.count.size() && stats.count[i] > 0 &&
                     stats.grad_sum[i] / stats.count[i] > config.grad_threshold;
    if (!hot || total >= config.max_splats) {
      grown.push_back(s);
      grown_source.push_back(static_cast<std::int64_t>(i));
      continue;
    }
    if (s.scale().maxCoeff() > config.percent_dense * extent) {
      extra.push_back(split_child(s, rng));
      extra.push_back(split_child(s, rng));
      ++out.split;
      ++total;
    } else {
      grown.push_back(s);
      grown_source.push_back(static_cast<std::int64_t>(i));
      extra.push_back(s);
      ++out.cloned;
      ++total;
    }
  }
  for (const Splat& s : extra) {
    grown.push_back(s);
    grown_source.push_back(-1);
  }
  for (std::size_t i = 0; i < grown.size(); ++i) {
    if (grown[i].opacity() < config.min_opacity) {
      ++out.pruned;
      continue;
    }
    out.splats.push_back(grown[i]);
    out.source.push_back(grown_source[i]);
  }
  return out;
}

}  // namespace msgs
