// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include <cstring>
#include <fstream>
#include <sstream>

#include "msgs/common/error.hpp"
#include "msgs/trainer/trainer.hpp"

namespace msgs {

const std::vector<ConfigKey<TrainConfig>>& train_config_keys() {
  using C = TrainConfig;
  static const std::vector<ConfigKey<C>> keys = {
      make_key<C>("iterations", "optimization steps", [](C& c) -> auto& { return c.iterations; }),
      make_key<C>("stage2_start", "first stage-2 iteration; negative means iterations/2",
                  [](C& c) -> auto& { return c.stage2_start; }),
      make_key<C>("seed", "random seed for frame sampling, initialization and densification",
                  [](C& c) -> auto& { return c.seed; }),
      make_key<C>("lambda_pho", "SSIM weight inside the photometric loss",
                  [](C& c) -> auto& { return c.weights.lambda_pho; }),
      make_key<C>("lambda_s", "scale regularization weight", [](C& c) -> auto& { return c.weights.lambda_s; }),
      make_key<C>("lambda_a", "multi-view geometric weight", [](C& c) -> auto& { return c.weights.lambda_a; }),
      make_key<C>("lambda_b", "multi-view photometric (NCC) weight",
                  [](C& c) -> auto& { return c.weights.lambda_b; }),
      make_key<C>("lambda_c", "single-view normal weight", [](C& c) -> auto& { return c.weights.lambda_c; }),
      make_key<C>("lr_position", "initial position learning rate (times scene extent)",
                  [](C& c) -> auto& { return c.lr.position; }),
      make_key<C>("lr_position_final", "final position learning rate (times scene extent)",
                  [](C& c) -> auto& { return c.lr.position_final; }),
      make_key<C>("lr_rotation", "rotation learning rate", [](C& c) -> auto& { return c.lr.rotation; }),
      make_key<C>("lr_scale", "log-scale learning rate", [](C& c) -> auto& { return c.lr.scale; }),
      make_key<C>("lr_opacity", "opacity-logit learning rate", [](C& c) -> auto& { return c.lr.opacity; }),
      make_key<C>("lr_color", "base color learning rate", [](C& c) -> auto& { return c.lr.color; }),
      make_key<C>("lr_mlp", "appearance MLP learning rate", [](C& c) -> auto& { return c.lr.mlp; }),
      make_key<C>("lr_embedding", "sequence and per-splat embedding learning rate",
                  [](C& c) -> auto& { return c.lr.embedding; }),
      make_key<C>("densify", "enable densification and pruning", [](C& c) -> auto& { return c.densify.enabled; }),
      make_key<C>("densify_start", "first densification iteration", [](C& c) -> auto& { return c.densify.start; }),
      make_key<C>("densify_end_fraction", "densification stops at this fraction of iterations",
                  [](C& c) -> auto& { return c.densify.end_fraction; }),
      make_key<C>("densify_interval", "iterations between densification passes",
                  [](C& c) -> auto& { return c.densify.interval; }),
      make_key<C>("densify_grad_threshold", "mean screen-space gradient that triggers clone/split",
                  [](C& c) -> auto& { return c.densify.grad_threshold; }),
      make_key<C>("percent_dense", "split when the largest scale exceeds this fraction of the scene extent",
                  [](C& c) -> auto& { return c.densify.percent_dense; }),
      make_key<C>("min_opacity", "prune splats below this opacity",
                  [](C& c) -> auto& { return c.densify.min_opacity; }),
      make_key<C>("max_splats", "upper bound on the splat count", [](C& c) -> auto& { return c.densify.max_splats; }),
      make_key<C>("use_masks", "exclude SAM-masked pixels from the photometric loss",
                  [](C& c) -> auto& { return c.use_masks; }),
      make_key<C>("refine_masks", "refine masks with entity error maps at the stage-2 boundary",
                  [](C& c) -> auto& { return c.refine_masks; }),
      make_key<C>("multi_view", "enable the stage-2 multi-view terms", [](C& c) -> auto& { return c.multi_view; }),
      make_key<C>("shared_embedding", "use one appearance embedding for all sequences",
                  [](C& c) -> auto& { return c.shared_embedding; }),
      make_key<C>("rho1_pct", "entity area percentile kept by refinement",
                  [](C& c) -> auto& { return c.refine.rho1_pct; }),
      make_key<C>("rho2_pct", "SAM component area percentile kept by refinement",
                  [](C& c) -> auto& { return c.refine.rho2_pct; }),
      make_key<C>("dilation_px", "square dilation radius in pixels",
                  [](C& c) -> auto& { return c.refine.dilation_px; }),
      make_key<C>("drop_large_sam", "delete oversized SAM components from the refined mask",
                  [](C& c) -> auto& { return c.refine.drop_large_sam; }),
      make_key<C>("ncc_patch", "NCC patch size (odd)", [](C& c) -> auto& { return c.ncc_patch; }),
      make_key<C>("ncc_stride", "NCC patch stride", [](C& c) -> auto& { return c.ncc_stride; }),
      make_key<C>("geo_gate", "reprojection errors above this many pixels are ignored",
                  [](C& c) -> auto& { return c.geo_gate; }),
      make_key<C>("min_transmittance", "blending stops below this transmittance",
                  [](C& c) -> auto& { return c.render.min_transmittance; }),
  };
  return keys;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void put_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), 8); }

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  if (!in) fail(ErrorCode::Parse, "checkpoint truncated");
  return v;
}

double get_f64(std::istream& in) {
  double v = 0.0;
  in.read(reinterpret_cast<char*>(&v), 8);
  if (!in) fail(ErrorCode::Parse, "checkpoint truncated");
  return v;
}

constexpr std::uint32_t kValuesPerSplat = 3 + 4 + 3 + 1 + 3 + kEmbeddingDim;

}  // namespace

void write_checkpoint(std::ostream& out, const TrainedModel& model) {
  out.write("MSGSCKP1", 8);
  put_u32(out, static_cast<std::uint32_t>(model.splats.size()));
  put_u32(out, kValuesPerSplat);
  for (const Splat& s : model.splats) {
    for (int k = 0; k < 3; ++k) put_f64(out, s.mu[k]);
    for (int k = 0; k < 4; ++k) put_f64(out, s.rot[k]);
    for (int k = 0; k < 3; ++k) put_f64(out, s.log_scale[k]);
    put_f64(out, s.opacity_logit);
    for (int k = 0; k < 3; ++k) put_f64(out, s.base_color[k]);
    for (int k = 0; k < kEmbeddingDim; ++k) put_f64(out, s.embedding[k]);
  }
  put_u32(out, static_cast<std::uint32_t>(model.sequence_map.size()));
  for (int m : model.sequence_map) put_u32(out, static_cast<std::uint32_t>(m));
  put_u32(out, static_cast<std::uint32_t>(model.config_echo.size()));
  out.write(model.config_echo.data(), static_cast<std::streamsize>(model.config_echo.size()));
  write_appearance(out, model.appearance);
}

TrainedModel read_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "MSGSCKP1", 8) != 0) fail(ErrorCode::Parse, "not an MSGSCKP1 checkpoint");
  TrainedModel model;
  const std::uint32_t n = get_u32(in);
  if (get_u32(in) != kValuesPerSplat) fail(ErrorCode::Parse, "checkpoint: unexpected splat layout");
  model.splats.resize(n);
  for (Splat& s : model.splats) {
    for (int k = 0; k < 3; ++k) s.mu[k] = get_f64(in);
    for (int k = 0; k < 4; ++k) s.rot[k] = get_f64(in);
    for (int k = 0; k < 3; ++k) s.log_scale[k] = get_f64(in);
    s.opacity_logit = get_f64(in);
    for (int k = 0; k < 3; ++k) s.base_color[k] = get_f64(in);
    for (int k = 0; k < kEmbeddingDim; ++k) s.embedding[k] = get_f64(in);
  }
  model.sequence_map.resize(get_u32(in));
  for (int& m : model.sequence_map) m = static_cast<int>(get_u32(in));
  const std::uint32_t len = get_u32(in);
  model.config_echo.resize(len);
  in.read(model.config_echo.data(), len);
  if (!in) fail(ErrorCode::Parse, "checkpoint truncated");
  model.appearance = read_appearance(in);
  for (int m : model.sequence_map) {
    if (m < 0 || m >= model.appearance.num_sequences()) fail(ErrorCode::Parse, "checkpoint: bad sequence map");
  }
  return model;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::Io, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model) {
  std::ostringstream buf(std::ios::binary);
  write_checkpoint(buf, model);
  write_file_atomic(path, buf.str());
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

void write_loss_log(const std::filesystem::path& path, const std::vector<LossLogEntry>& log) {
  std::string text = "iteration,frame,total,photometric,scale,svgeo,mv_geometric,mv_photometric,splats\n";
  for (const auto& e : log) {
    text += std::to_string(e.iteration) + ',' + std::to_string(e.frame) + ',' + format_number(e.total) + ',' +
            format_number(e.photometric) + ',' + format_number(e.scale) + ',' + format_number(e.svgeo) + ',' +
            format_number(e.mv_geometric) + ',' + format_number(e.mv_photometric) + ',' + std::to_string(e.splats) +
            '\n';
  }
  write_file_atomic(path, text);
}

}  // namespace msgs
