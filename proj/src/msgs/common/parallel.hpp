// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace msgs {

/// Worker count used by parallel_for. Defaults to the number of logical cores.
int thread_count();
void set_thread_count(int n);

/// Runs body(i) for i in [0, n). Work is split into contiguous static chunks, so
/// any computation whose writes are disjoint per index is thread-count invariant.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace msgs
