// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include "msgs/trainer/adam.hpp"

#include <cmath>

#include "msgs/common/error.hpp"

namespace msgs {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               std::span<const double> lr, const AdamSettings& s) {
  if (params.size() != grads.size()) fail(ErrorCode::InvalidArgument, "adam_step: parameter/gradient size mismatch");
  if (lr.empty()) fail(ErrorCode::InvalidArgument, "adam_step: empty learning-rate pattern");
  state.resize(params.size());
  ++state.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = s.beta1 * state.m[i] + (1.0 - s.beta1) * g;
    state.v[i] = s.beta2 * state.v[i] + (1.0 - s.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= lr[i % lr.size()] * mhat / (std::sqrt(vhat) + s.eps);
  }
}

}  // namespace msgs
