// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "msgs/appearance/appearance.hpp"
#include "msgs/common/config.hpp"
#include "msgs/common/config_keys.hpp"
#include "msgs/losses/losses.hpp"
#include "msgs/mask/refine.hpp"
#include "msgs/raster/rasterizer.hpp"
#include "msgs/scene_io/dataset.hpp"
#include "msgs/trainer/adam.hpp"

namespace msgs {

struct LearningRates {
  double position = 1.6e-4;  // times the scene extent
  double position_final = 1.6e-6;
  double rotation = 1e-3;
  double scale = 5e-3;
  double opacity = 5e-2;
  double color = 2.5e-3;
  double mlp = 1e-3;
  double embedding = 1e-3;
};

struct DensifyConfig {
  bool enabled = true;
  int start = 500;
  double end_fraction = 0.6;
  int interval = 100;
  double grad_threshold = 2e-4;  // mean screen-space gradient, normalized device units
  double percent_dense = 0.01;   // split instead of clone above this fraction of the scene extent
  double min_opacity = 0.005;
  std::size_t max_splats = 20000;
};

struct TrainConfig {
  int iterations = 30000;
  int stage2_start = -1;  // negative: iterations / 2
  LossWeights weights;
  LearningRates lr;
  DensifyConfig densify;
  std::uint64_t seed = 0;
  bool use_masks = true;       // masked photometric loss with the frames' SAM masks
  bool refine_masks = true;    // entity-error refinement at the stage-2 boundary
  bool multi_view = true;      // stage-2 multi-view terms
  bool shared_embedding = false;  // one embedding for every sequence
  RefineSettings refine;
  RenderSettings render;
  int ncc_patch = 7;
  int ncc_stride = 4;
  double geo_gate = 1.0;  // px

  int stage2_iteration() const { return stage2_start < 0 ? iterations / 2 : stage2_start; }
  void validate() const;
  /// Reads [train] keys; unknown keys are rejected with their name.
  static TrainConfig from_config(const Config& config);
  Config to_config() const;
};

/// Keys accepted in the [train] section.
const std::vector<ConfigKey<TrainConfig>>& train_config_keys();

struct LossLogEntry {
  int iteration = 0;
  int frame = 0;
  double total = 0.0;
  double photometric = 0.0;
  double scale = 0.0;
  double svgeo = 0.0;
  double mv_geometric = 0.0;
  double mv_photometric = 0.0;
  std::size_t splats = 0;
};

struct TrainedModel {
  std::vector<Splat> splats;
  AppearanceModel appearance;
  std::string config_echo;
  std::vector<LossLogEntry> log;
  std::vector<int> sequence_map;  // dataset sequence id -> embedding index

  int embedding_for(int sequence_id) const;
};

/// Splats seeded from the reconstruction's points: base color from the point
/// RGB, isotropic scale from the mean distance to the three nearest points.
std::vector<Splat> initial_splats(const MultiSequenceDataset& dataset);

/// Largest camera-center distance to the camera centroid, times 1.1.
double scene_extent(const MultiSequenceDataset& dataset);

using ProgressCallback = std::function<void(const LossLogEntry&)>;

TrainedModel train(const MultiSequenceDataset& dataset, const TrainConfig& config,
                   const ProgressCallback& progress = {});

/// Toned colors + rasterization for one pose.
RenderOutput render_model(const TrainedModel& model, const CameraPose& pose, int sequence_id,
                          const CameraIntrinsics& k, const RenderSettings& settings = {});

/// Per-pixel unmasked photometric loss between each frame's render and its image.
std::vector<Image> compute_error_maps(const TrainedModel& model, const MultiSequenceDataset& dataset,
                                      const std::vector<std::size_t>& frames, double lambda_pho = 0.2,
                                      const RenderSettings& settings = {});

// ---- densification --------------------------------------------------------

struct GradStats {
  std::vector<double> grad_sum;
  std::vector<int> count;

  void reset(std::size_t n) {
    grad_sum.assign(n, 0.0);
    count.assign(n, 0);
  }
};

struct DensifyResult {
  std::vector<Splat> splats;
  /// For every output splat, the input index it came from, or -1 for new
  /// children whose optimizer state starts at zero.
  std::vector<std::int64_t> source;
  std::size_t cloned = 0;
  std::size_t split = 0;
  std::size_t pruned = 0;
};

/// Clone small / split large splats with mean gradient above threshold, then
/// prune those with opacity below config.min_opacity.
DensifyResult densify_and_prune(const std::vector<Splat>& splats, const GradStats& stats,
                                const DensifyConfig& config, double extent, std::mt19937_64& rng);

/// Two children of a split: scale / 1.6, means drawn from N(mu, Sigma)
/// restricted to the 3-sigma ellipsoid.
Splat split_child(const Splat& parent, std::mt19937_64& rng);

// ---- checkpoints ----------------------------------------------------------

/// Binary, little-endian: "MSGSCKP1", u32 splat count, u32 values per splat
/// (46: mu, rot, log_scale, opacity_logit, base_color, embedding) as float64,
/// u32 sequence-map length + i32 entries, u32 config byte count + text, then
/// the MSGSAPP1 appearance block.
void write_checkpoint(std::ostream& out, const TrainedModel& model);
TrainedModel read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_checkpoint(const std::filesystem::path& path);

/// CSV with header iteration,frame,total,photometric,scale,svgeo,mv_geometric,mv_photometric,splats.
void write_loss_log(const std::filesystem::path& path, const std::vector<LossLogEntry>& log);

/// Writes via a temporary sibling file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace msgs
