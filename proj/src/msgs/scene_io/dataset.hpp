// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msgs/common/config.hpp"
#include "msgs/common/grid.hpp"
#include "msgs/scene_io/colmap.hpp"

namespace msgs {

struct Frame {
  std::string name;
  CameraPose pose;
  Image image;  // 3 channels in [0,1]
  Mask sam;     // 1 = transient, excluded from the photometric loss
  LabelMap entity;
  std::optional<Mask> eval_mask;  // 1 = excluded from metrics
  bool held_out = false;          // evaluation-only frame
};

/// Frames from N capture sequences sharing one reconstruction.
struct MultiSequenceDataset {
  std::map<int, CameraIntrinsics> cameras;
  std::vector<Frame> frames;
  std::vector<ColmapPoint> points;
  int num_sequences = 0;

  const CameraIntrinsics& intrinsics(const Frame& frame) const;
  /// Indices into `frames` belonging to one sequence, in frame order.
  std::vector<std::size_t> sequence_frames(int sequence_id) const;
  std::vector<std::size_t> training_frames() const;
  std::vector<std::size_t> held_out_frames() const;
  /// Checks sequence ids, image sizes and mask shapes.
  void validate() const;
};

/// Manifest layout (INI):
///
///   [dataset]
///   colmap = sparse          ; directory holding cameras.txt / images.txt / points3D.txt
///   images = images
///   sam_masks = masks        ; optional, <image stem>.png per frame
///   entity_maps = entities   ; optional, <image stem>.png per frame
///   [sequences]
///   frame_000.png = 0        ; every COLMAP image must be listed
///   [held_out]
///   frame_007.png = 1        ; evaluation frames, never trained on
///   [eval_masks]
///   frame_007.png = eval/frame_007.png
///
/// Missing SAM masks and entity maps default to all-zero. N is max id + 1.
MultiSequenceDataset load_dataset(const std::filesystem::path& root, const Config& manifest);

}  // namespace msgs
