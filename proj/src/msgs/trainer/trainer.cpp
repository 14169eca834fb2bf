// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include "msgs/trainer/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>

#include "msgs/common/error.hpp"
#include "msgs/common/config_keys.hpp"

namespace msgs {

namespace {

constexpr int kSplatParams = 3 + 4 + 3 + 1 + 3 + kEmbeddingDim;

void pack_splats(const std::vector<Splat>& splats, std::vector<double>& out) {
  out.resize(splats.size() * kSplatParams);
  for (std::size_t i = 0; i < splats.size(); ++i) {
    double* p = out.data() + i * kSplatParams;
    const Splat& s = splats[i];
    for (int k = 0; k < 3; ++k) p[k] = s.mu[k];
    for (int k = 0; k < 4; ++k) p[3 + k] = s.rot[k];
    for (int k = 0; k < 3; ++k) p[7 + k] = s.log_scale[k];
    p[10] = s.opacity_logit;
    for (int k = 0; k < 3; ++k) p[11 + k] = s.base_color[k];
    for (int k = 0; k < kEmbeddingDim; ++k) p[14 + k] = s.embedding[k];
  }
}

void unpack_splats(const std::vector<double>& in, std::vector<Splat>& splats) {
  for (std::size_t i = 0; i < splats.size(); ++i) {
    const double* p = in.data() + i * kSplatParams;
    Splat& s = splats[i];
    for (int k = 0; k < 3; ++k) s.mu[k] = p[k];
    for (int k = 0; k < 4; ++k) s.rot[k] = p[3 + k];
    s.rot.normalize();
    for (int k = 0; k < 3; ++k) s.log_scale[k] = p[7 + k];
    s.opacity_logit = p[10];
    for (int k = 0; k < 3; ++k) s.base_color[k] = p[11 + k];
    for (int k = 0; k < kEmbeddingDim; ++k) s.embedding[k] = p[14 + k];
  }
}

template <class F>
void for_each_mlp_block(ColorMlp& m, F&& f) {
  f(m.w1.data(), m.w1.size());
  f(m.b1.data(), m.b1.size());
  f(m.w2.data(), m.w2.size());
  f(m.b2.data(), m.b2.size());
  f(m.w3.data(), m.w3.size());
  f(m.b3.data(), m.b3.size());
}

std::vector<double> pack_mlp(const ColorMlp& m) {
  std::vector<double> out;
  out.reserve(m.parameter_count());
  for_each_mlp_block(const_cast<ColorMlp&>(m), [&](double* p, Eigen::Index n) { out.insert(out.end(), p, p + n); });
  return out;
}

void unpack_mlp(const std::vector<double>& in, ColorMlp& m) {
  std::size_t off = 0;
  for_each_mlp_block(m, [&](double* p, Eigen::Index n) {
    std::copy(in.begin() + off, in.begin() + off + n, p);
    off += n;
  });
}

bool finite_splat(const Splat& s) {
  return s.mu.allFinite() && s.rot.allFinite() && s.log_scale.allFinite() && std::isfinite(s.opacity_logit) &&
         s.base_color.allFinite() && s.embedding.allFinite();
}

void check_term(double value, const char* name, int iteration) {
  if (!std::isfinite(value)) {
    fail(ErrorCode::Numeric, "non-finite loss at iteration " + std::to_string(iteration) + " (term " + name + ")");
  }
}

// Nearest training frame of the same sequence by camera-center distance; -1 if none.
std::vector<std::int64_t> neighbor_frames(const MultiSequenceDataset& ds, const std::vector<std::size_t>& frames) {
  std::vector<std::int64_t> out(ds.frames.size(), -1);
  for (std::size_t a : frames) {
    const Vec3 ca = ds.frames[a].pose.center();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t b : frames) {
      if (a == b || ds.frames[a].pose.sequence_id != ds.frames[b].pose.sequence_id) continue;
      const double d = (ds.frames[b].pose.center() - ca).norm();
      if (d < best) {
        best = d;
        out[a] = static_cast<std::int64_t>(b);
      }
    }
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (iterations < 0) fail(ErrorCode::InvalidArgument, "iterations must be nonnegative");
  if (iterations > 0 && stage2_iteration() >= iterations && stage2_start >= 0) {
    fail(ErrorCode::InvalidArgument, "stage2_start must be smaller than iterations");
  }
  weights.validate();
  const double rates[] = {lr.position, lr.position_final, lr.rotation, lr.scale, lr.opacity,
                          lr.color,    lr.mlp,            lr.embedding};
  for (double r : rates) {
    if (!(r > 0.0)) fail(ErrorCode::InvalidArgument, "learning rates must be positive");
  }
  if (densify.interval < 1) fail(ErrorCode::InvalidArgument, "densify_interval must be positive");
  if (ncc_patch < 1 || ncc_patch % 2 == 0) fail(ErrorCode::InvalidArgument, "ncc_patch must be odd and positive");
  if (ncc_stride < 1) fail(ErrorCode::InvalidArgument, "ncc_stride must be positive");
}

TrainConfig TrainConfig::from_config(const Config& config) {
  TrainConfig cfg;
  apply_section(config, "train", train_config_keys(), cfg);
  cfg.validate();
  return cfg;
}

Config TrainConfig::to_config() const {
  return section_to_config("train", train_config_keys(), *this);
}

int TrainedModel::embedding_for(int sequence_id) const {
  if (sequence_map.empty()) return sequence_id < appearance.num_sequences() ? sequence_id : 0;
  if (sequence_id < 0 || sequence_id >= static_cast<int>(sequence_map.size())) {
    fail(ErrorCode::InvalidArgument, "sequence id " + std::to_string(sequence_id) + " is not part of the model");
  }
  return sequence_map[sequence_id];
}

std::vector<Splat> initial_splats(const MultiSequenceDataset& dataset) {
  const auto& pts = dataset.points;
  if (pts.empty()) fail(ErrorCode::InvalidArgument, "dataset has no 3D points to seed splats from");
  const double fallback = 0.01 * std::max(scene_extent(dataset), 1e-3);
  std::vector<Splat> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double best[3] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                      std::numeric_limits<double>::infinity()};
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i == j) continue;
      double d = (pts[j].position - pts[i].position).squaredNorm();
      for (double& b : best) {
        if (d < b) std::swap(d, b);
      }
    }
    double sum = 0.0;
    int n = 0;
    for (double b : best) {
      if (std::isfinite(b)) {
        sum += std::sqrt(b);
        ++n;
      }
    }
    const double scale = n > 0 && sum > 0.0 ? sum / n : fallback;
    Splat& s = out[i];
    s.mu = pts[i].position;
    s.log_scale = Vec3::Constant(std::log(scale));
    s.opacity_logit = std::log(0.1 / 0.9);
    for (int c = 0; c < 3; ++c) s.base_color[c] = pts[i].rgb[c] / 255.0;
  }
  return out;
}

double scene_extent(const MultiSequenceDataset& dataset) {
  if (dataset.frames.empty()) return 1.0;
  Vec3 mean = Vec3::Zero();
  for (const auto& f : dataset.frames) mean += f.pose.center();
  mean /= static_cast<double>(dataset.frames.size());
  double d = 0.0;
  for (const auto& f : dataset.frames) d = std::max(d, (f.pose.center() - mean).norm());
  return d > 0.0 ? 1.1 * d : 1.0;
}

RenderOutput render_model(const TrainedModel& model, const CameraPose& pose, int sequence_id,
                          const CameraIntrinsics& k, const RenderSettings& settings) {
  const TonedColors toned = modulate_colors(model.appearance, model.splats, model.embedding_for(sequence_id), pose);
  return render(model.splats, toned.colors, pose, k, settings);
}

std::vector<Image> compute_error_maps(const TrainedModel& model, const MultiSequenceDataset& dataset,
                                      const std::vector<std::size_t>& frames, double lambda_pho,
                                      const RenderSettings& settings) {
  std::vector<Image> out;
  out.reserve(frames.size());
  for (std::size_t fi : frames) {
    const Frame& f = dataset.frames.at(fi);
    const RenderOutput r = render_model(model, f.pose, f.pose.sequence_id, dataset.intrinsics(f), settings);
    out.push_back(photometric_loss(r.color, f.image, nullptr, lambda_pho).per_pixel);
  }
  return out;
}

TrainedModel train(const MultiSequenceDataset& ds, const TrainConfig& cfg, const ProgressCallback& progress) {
  cfg.validate();
  ds.validate();
  const std::vector<std::size_t> frames = ds.training_frames();
  if (frames.empty()) fail(ErrorCode::InvalidArgument, "dataset has no training frames");
  for (int s = 0; s < ds.num_sequences; ++s) {
    const bool any = std::any_of(frames.begin(), frames.end(),
                                 [&](std::size_t f) { return ds.frames[f].pose.sequence_id == s; });
    if (!any) fail(ErrorCode::InvalidArgument, "sequence " + std::to_string(s) + " has no training frames");
  }

  TrainedModel model;
  model.sequence_map.resize(ds.num_sequences);
  for (int s = 0; s < ds.num_sequences; ++s) model.sequence_map[s] = cfg.shared_embedding ? 0 : s;
  model.appearance = AppearanceModel(cfg.shared_embedding ? 1 : ds.num_sequences, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  model.splats = initial_splats(ds);
  model.config_echo = cfg.to_config().to_text();
  if (cfg.iterations == 0) return model;

  const double extent = scene_extent(ds);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, frames.size() - 1);
  const std::vector<std::int64_t> neighbors = neighbor_frames(ds, frames);
  const int stage2 = cfg.stage2_iteration();
  const int densify_end = static_cast<int>(cfg.densify.end_fraction * cfg.iterations);
  const auto patch_centers = [&] {
    const auto& k = ds.intrinsics(ds.frames[frames.front()]);
    return ncc_patch_centers(k.width, k.height, cfg.ncc_patch, cfg.ncc_stride);
  }();

  // Masks in use: SAM masks in stage 1, refined masks from stage 2 on.
  std::vector<const Mask*> masks(ds.frames.size(), nullptr);
  std::vector<Mask> refined(ds.frames.size());
  if (cfg.use_masks) {
    for (std::size_t fi : frames) masks[fi] = &ds.frames[fi].sam;
  }

  AdamState splat_state, mlp_state, emb_state;
  std::vector<double> splat_lr(kSplatParams);
  std::fill(splat_lr.begin() + 3, splat_lr.begin() + 7, cfg.lr.rotation);
  std::fill(splat_lr.begin() + 7, splat_lr.begin() + 10, cfg.lr.scale);
  splat_lr[10] = cfg.lr.opacity;
  std::fill(splat_lr.begin() + 11, splat_lr.begin() + 14, cfg.lr.color);
  std::fill(splat_lr.begin() + 14, splat_lr.end(), cfg.lr.embedding);

  GradStats stats;
  stats.reset(model.splats.size());
  std::vector<double> params, grads;

  for (int it = 0; it < cfg.iterations; ++it) {
    const bool in_stage2 = it >= stage2;
    if (it == stage2 && cfg.use_masks && cfg.refine_masks) {
      const std::vector<Image> errors = compute_error_maps(model, ds, frames, cfg.weights.lambda_pho, cfg.render);
      for (std::size_t j = 0; j < frames.size(); ++j) {
        const Frame& f = ds.frames[frames[j]];
        refined[frames[j]] = refine_masks(f.sam, f.entity, errors[j], cfg.refine);
        masks[frames[j]] = &refined[frames[j]];
      }
    }

    const std::size_t fi = frames[pick(rng)];
    const Frame& frame = ds.frames[fi];
    const CameraIntrinsics& k = ds.intrinsics(frame);
    const int emb = model.embedding_for(frame.pose.sequence_id);
    const std::size_t n = model.splats.size();

    const TonedColors toned = modulate_colors(model.appearance, model.splats, emb, frame.pose);
    const RenderOutput out = render(model.splats, toned.colors, frame.pose, k, cfg.render);
    PhotometricResult pho = photometric_loss(out.color, frame.image, masks[fi], cfg.weights.lambda_pho);

    LossLogEntry entry;
    entry.iteration = it;
    entry.frame = static_cast<int>(fi);
    entry.photometric = pho.value;
    check_term(pho.value, "photometric", it);

    std::vector<Vec3> d_log_scale;
    entry.scale = cfg.weights.lambda_s > 0.0 && n > 0
                      ? scale_loss(model.splats, cfg.weights.lambda_s, &d_log_scale) / static_cast<double>(n)
                      : 0.0;
    check_term(entry.scale, "scale", it);

    Image d_color = std::move(pho.grad);
    Image d_depth(out.width, out.height, 1, 0.0);
    Image d_normal(out.width, out.height, 3, 0.0);
    bool use_geometry = false;
    std::optional<RenderOutput> nbr_out;
    std::optional<TonedColors> nbr_toned;
    Image nbr_d_depth;
    const Frame* nbr = neighbors[fi] >= 0 ? &ds.frames[neighbors[fi]] : nullptr;

    if (in_stage2) {
      if (cfg.weights.lambda_c > 0.0) {
        const GeometryLossResult sv = svgeo_loss(out, k, masks[fi]);
        if (sv.count > 0) {
          const double w = cfg.weights.lambda_c / static_cast<double>(sv.count);
          entry.svgeo = sv.value / static_cast<double>(sv.count);
          check_term(entry.svgeo, "svgeo", it);
          for (std::size_t i = 0; i < d_normal.data.size(); ++i) d_normal.data[i] += w * sv.d_normal.data[i];
          for (std::size_t i = 0; i < d_depth.data.size(); ++i) d_depth.data[i] += w * sv.d_depth.data[i];
          use_geometry = true;
        }
      }
      if (cfg.multi_view && nbr) {
        if (cfg.weights.lambda_a > 0.0) {
          nbr_toned = modulate_colors(model.appearance, model.splats, emb, nbr->pose);
          nbr_out = render(model.splats, nbr_toned->colors, nbr->pose, ds.intrinsics(*nbr), cfg.render);
          const GeometryLossResult mg = mv_geometric(out, *nbr_out, frame.pose, nbr->pose, k, cfg.geo_gate);
          if (mg.count > 0) {
            const double w = cfg.weights.lambda_a / static_cast<double>(mg.count);
            entry.mv_geometric = mg.value / static_cast<double>(mg.count);
            check_term(entry.mv_geometric, "mv_geometric", it);
            for (std::size_t i = 0; i < d_depth.data.size(); ++i) d_depth.data[i] += w * mg.d_depth.data[i];
            nbr_d_depth = mg.d_depth_other;
            for (double& v : nbr_d_depth.data) v *= w;
            use_geometry = true;
          }
        }
        if (cfg.weights.lambda_b > 0.0) {
          std::vector<NccPatch> patches;
          for (const auto& [cx, cy] : patch_centers) {
            if (!out.depth_valid(cx, cy) || (masks[fi] && (*masks[fi])(cx, cy))) continue;
            const Vec3 nrm(out.normal(cx, cy, 0), out.normal(cx, cy, 1), out.normal(cx, cy, 2));
            const auto h = homography_for_patch(frame.pose, nbr->pose, k, nrm, out.distance(cx, cy));
            if (h) patches.push_back({cx, cy, *h});
          }
          const NccResult ncc =
              mv_photometric_ncc(to_gray(out.color), to_gray(nbr->image), patches, cfg.ncc_patch);
          if (ncc.count > 0) {
            const double w = cfg.weights.lambda_b / static_cast<double>(ncc.count);
            entry.mv_photometric = ncc.value / static_cast<double>(ncc.count);
            check_term(entry.mv_photometric, "mv_photometric", it);
            const double gray[3] = {0.299, 0.587, 0.114};
            for (std::size_t i = 0; i < ncc.d_ref.data.size(); ++i) {
              for (int c = 0; c < 3; ++c) d_color.data[3 * i + c] += w * gray[c] * ncc.d_ref.data[i];
            }
          }
        }
      }
    }
    entry.total = entry.photometric + entry.scale + cfg.weights.lambda_c * entry.svgeo +
                  cfg.weights.lambda_a * entry.mv_geometric + cfg.weights.lambda_b * entry.mv_photometric;
    entry.splats = n;
    check_term(entry.total, "total", it);

    RenderGradInput gin;
    gin.color = &d_color;
    if (use_geometry) {
      gin.depth = &d_depth;
      gin.normal = &d_normal;
    }
    GradientBuffer gb = backward(out, gin, model.splats, toned.colors, frame.pose, k, cfg.render);
    const AppearanceGradients ag = appearance_backward(model.appearance, model.splats, toned, gb.color);
    if (nbr_out && !nbr_d_depth.empty()) {
      RenderGradInput ngin;
      ngin.depth = &nbr_d_depth;
      const GradientBuffer nb =
          backward(*nbr_out, ngin, model.splats, nbr_toned->colors, nbr->pose, ds.intrinsics(*nbr), cfg.render);
      for (std::size_t i = 0; i < n; ++i) {
        gb.splat[i].mu += nb.splat[i].mu;
        gb.splat[i].rot += nb.splat[i].rot;
        gb.splat[i].log_scale += nb.splat[i].log_scale;
        gb.splat[i].opacity_logit += nb.splat[i].opacity_logit;
      }
    }

    // Densification statistics: screen-space gradient in normalized device units.
    for (std::size_t i = 0; i < n; ++i) {
      if (!out.state->projected[i]) continue;
      const Vec2 g(gb.mean2d[i].x() * 0.5 * k.width, gb.mean2d[i].y() * 0.5 * k.height);
      stats.grad_sum[i] += g.norm();
      ++stats.count[i];
    }

    // Adam updates.
    pack_splats(model.splats, params);
    grads.assign(params.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double* g = grads.data() + i * kSplatParams;
      const SplatGradient& sg = gb.splat[i];
      const Vec3 mu = sg.mu + ag.mu[i];
      for (int c = 0; c < 3; ++c) g[c] = mu[c];
      for (int c = 0; c < 4; ++c) g[3 + c] = sg.rot[c];
      for (int c = 0; c < 3; ++c) g[7 + c] = sg.log_scale[c] + (d_log_scale.empty() ? 0.0 : d_log_scale[i][c] / n);
      g[10] = sg.opacity_logit;
      for (int c = 0; c < 3; ++c) g[11 + c] = ag.base_color[i][c];
      for (int c = 0; c < kEmbeddingDim; ++c) g[14 + c] = ag.embedding[i][c];
    }
    const double t = cfg.iterations > 1 ? static_cast<double>(it) / (cfg.iterations - 1) : 0.0;
    const double pos_lr =
        std::exp((1.0 - t) * std::log(cfg.lr.position) + t * std::log(cfg.lr.position_final)) * extent;
    std::fill(splat_lr.begin(), splat_lr.begin() + 3, pos_lr);
    adam_step(params, grads, splat_state, splat_lr);
    unpack_splats(params, model.splats);

    std::vector<double> mlp_params = pack_mlp(model.appearance.mlp);
    adam_step(mlp_params, pack_mlp(ag.mlp), mlp_state, cfg.lr.mlp);
    unpack_mlp(mlp_params, model.appearance.mlp);

    std::vector<double> emb_grad(model.appearance.sequence_embeddings.size(), 0.0);
    for (int c = 0; c < kEmbeddingDim; ++c) emb_grad[static_cast<std::size_t>(emb) * kEmbeddingDim + c] = ag.sequence[c];
    adam_step(std::span<double>(model.appearance.sequence_embeddings.data(), emb_grad.size()), emb_grad, emb_state,
              cfg.lr.embedding);

    model.log.push_back(entry);
    if (progress) progress(entry);

    const int done = it + 1;
    if (cfg.densify.enabled && done > cfg.densify.start && done <= densify_end && done % cfg.densify.interval == 0) {
      DensifyResult d = densify_and_prune(model.splats, stats, cfg.densify, extent, rng);
      AdamState next;
      next.step = splat_state.step;
      next.resize(d.splats.size() * kSplatParams);
      for (std::size_t i = 0; i < d.splats.size(); ++i) {
        if (d.source[i] < 0) continue;
        const auto src = static_cast<std::size_t>(d.source[i]) * kSplatParams;
        std::copy_n(splat_state.m.begin() + src, kSplatParams, next.m.begin() + i * kSplatParams);
        std::copy_n(splat_state.v.begin() + src, kSplatParams, next.v.begin() + i * kSplatParams);
      }
      splat_state = std::move(next);
      model.splats = std::move(d.splats);
      stats.reset(model.splats.size());
      for (const Splat& s : model.splats) {
        if (!finite_splat(s)) {
          fail(ErrorCode::Numeric, "non-finite splat parameter after iteration " + std::to_string(it));
        }
      }
    }
  }
  return model;
}

}  // namespace msgs
