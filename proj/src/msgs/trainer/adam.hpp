// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace msgs {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  void resize(std::size_t n) {
    m.resize(n, 0.0);
    v.resize(n, 0.0);
  }
};

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam. Element i uses lr[i % lr.size()], so a per-slot
/// learning-rate pattern can drive interleaved parameter blocks.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               std::span<const double> lr, const AdamSettings& settings = {});

inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
                      const AdamSettings& settings = {}) {
  adam_step(params, grads, state, std::span<const double>(&lr, 1), settings);
}

}  // namespace msgs
