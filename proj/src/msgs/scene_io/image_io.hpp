// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "msgs/common/grid.hpp"

namespace msgs {

/// Reads an 8/16-bit PNG or a binary PPM (P6) as 3-channel color in [0,1].
/// Gray inputs are replicated, alpha is dropped.
Image read_image(const std::filesystem::path& path);
/// 4-channel straight-alpha color in [0,1]; inputs without alpha get alpha 1.
Image read_rgba(const std::filesystem::path& path);
/// Single-channel PNG; nonzero pixels map to 1.
Mask read_mask(const std::filesystem::path& path);
/// 8- or 16-bit single-channel PNG of label ids.
LabelMap read_label_map(const std::filesystem::path& path);

/// 8-bit PNG with 1, 3 or 4 channels; values are clamped to [0,1] and rounded.
void write_png(const std::filesystem::path& path, const Image& image);
void write_ppm(const std::filesystem::path& path, const Image& image);
/// 0/255 gray PNG.
void write_mask(const std::filesystem::path& path, const Mask& mask);
/// 16-bit gray PNG; labels must lie in [0, 65535].
void write_label_map(const std::filesystem::path& path, const LabelMap& labels);

/// Raw float map: magic "MSGSMAP1", u32 width, u32 height (little endian), then
/// width*height*C little-endian float32 values, channel-interleaved. C is implied
/// by the payload size.
void write_raw_map(const std::filesystem::path& path, const Image& map);
Image read_raw_map(const std::filesystem::path& path);

}  // namespace msgs
