// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include "msgs/pipeline/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "msgs/common/error.hpp"
#include "msgs/datagen/datagen.hpp"
#include "msgs/eval/metrics.hpp"
#include "msgs/mask/refine.hpp"
#include "msgs/mesh/mesh.hpp"
#include "msgs/scene_io/dataset.hpp"
#include "msgs/scene_io/image_io.hpp"
#include "msgs/trainer/trainer.hpp"

namespace fs = std::filesystem;

namespace msgs {

namespace {

std::vector<CommandKey> camera_keys(const std::string& section) {
  return {
      {section, "width", "0", "image width in pixels (0: taken from the other inputs)"},
      {section, "height", "0", "image height in pixels (0: taken from the other inputs)"},
      {section, "fx", "0", "focal length x in pixels (0: 0.8 * width)"},
      {section, "fy", "0", "focal length y in pixels (0: same as fx)"},
      {section, "cx", "-1", "principal point x (negative: image center)"},
      {section, "cy", "-1", "principal point y (negative: image center)"},
  };
}

std::vector<CommandInfo> build_commands() {
  std::vector<CommandInfo> out;

  CommandInfo train{"train", "optimize splats and appearance model on a multi-sequence dataset", {}};
  train.keys.push_back({"dataset", "manifest", "", "dataset manifest (INI); paths inside are relative to it",
                        KeyKind::InputPath});
  {
    const TrainConfig defaults;
    for (const auto& k : train_config_keys()) train.keys.push_back({"train", k.name, k.get(defaults), k.help});
  }
  train.keys.push_back({"output", "error_maps", "false", "write per-frame error maps (MSGSMAP1) after training"});
  train.keys.push_back({"output", "refined_masks", "false", "write refined masks computed from the final model"});
  train.keys.push_back({"output", "log_every", "100", "print a progress line every N iterations (0: never)"});
  out.push_back(train);

  CommandInfo render{"render", "render a checkpoint along dataset frames or a trajectory", {}};
  render.keys = {
      {"render", "checkpoint", "", "MSGSCKP1 checkpoint from train", KeyKind::InputPath},
      {"render", "manifest", "", "dataset manifest whose frames are rendered", KeyKind::OptionalPath},
      {"render", "trajectory", "", "JSON-lines trajectory from gen-trajectory", KeyKind::OptionalPath},
      {"render", "frames", "all", "manifest frames to render: all, train or held_out"},
      {"render", "sequence_id", "-1", "appearance embedding to use (negative: each frame's own sequence, 0 for trajectories)"},
      {"render", "write_depth", "false", "also write plane depth as MSGSMAP1 raw maps"},
      {"render", "write_normal", "false", "also write normal maps as PNG"},
      {"render", "background", "0,0,0", "background color r,g,b"},
  };
  for (auto& k : camera_keys("camera")) render.keys.push_back(k);
  out.push_back(render);

  CommandInfo refine{"refine-masks", "refine SAM masks with entity maps and error maps", {}};
  refine.keys = {
      {"refine", "sam_dir", "", "directory of SAM mask PNGs (nonzero = transient)", KeyKind::InputPath},
      {"refine", "entity_dir", "", "directory of entity label PNGs with the same stems", KeyKind::InputPath},
      {"refine", "error_dir", "", "directory of <stem>.map error maps", KeyKind::InputPath},
      {"refine", "rho1_pct", "70", "entity area percentile kept"},
      {"refine", "rho2_pct", "80", "SAM component area percentile kept"},
      {"refine", "dilation_px", "3", "square dilation radius in pixels"},
      {"refine", "rho_pho", "auto", "error threshold; auto = mean - std/2 over surviving entities"},
      {"refine", "drop_large_sam", "false", "delete oversized SAM components from the output"},
  };
  out.push_back(refine);

  CommandInfo mesh{"extract-mesh", "fuse rendered depth of every training view and extract a mesh", {}};
  mesh.keys = {
      {"mesh", "checkpoint", "", "MSGSCKP1 checkpoint from train", KeyKind::InputPath},
      {"mesh", "manifest", "", "dataset manifest providing the views", KeyKind::InputPath},
      {"mesh", "resolution", "128", "samples along the longest axis of the volume"},
      {"mesh", "truncation_voxels", "4", "truncation distance in voxels"},
      {"mesh", "alpha_threshold", "0.5", "depth samples with lower accumulated alpha are ignored"},
  };
  out.push_back(mesh);

  CommandInfo traj{"gen-trajectory", "synthesize a UAV camera trajectory and optional actor placements", {}};
  traj.keys = {
      {"trajectory", "kind", "orbit", "translational, yaw, orbit or altitude"},
      {"trajectory", "frames", "60", "number of poses"},
      {"trajectory", "seed", "0", "noise and placement seed"},
      {"trajectory", "base_t", "0,0,10", "Blender location x,y,z"},
      {"trajectory", "base_r", "0,0,0", "Blender Euler angles x,y,z in radians"},
      {"trajectory", "noise_t", "0,0,0", "location noise sigma per axis"},
      {"trajectory", "noise_r", "0,0,0", "rotation noise sigma per axis (radians)"},
      {"trajectory", "radius", "5", "orbit radius"},
      {"trajectory", "center", "0,0,0", "orbit center when no actors are available"},
      {"trajectory", "z_min", "5", "altitude sweep start"},
      {"trajectory", "z_max", "15", "altitude sweep end"},
      {"trajectory", "direction", "1,0,0", "translational direction"},
      {"trajectory", "span", "10", "translational distance"},
      {"trajectory", "yaw_start", "0", "first yaw angle"},
      {"trajectory", "yaw_range", "6.283185307179586", "yaw sweep"},
      {"trajectory", "actors_file", "", "JSON-lines placements whose mean is the orbit center",
       KeyKind::OptionalPath},
      {"actors", "mesh", "", "OBJ mesh to place actors on", KeyKind::OptionalPath},
      {"actors", "count", "0", "actor count (0: uniform in [10, 15])"},
      {"actors", "min_spacing", "0.5", "minimum distance between actors"},
      {"actors", "scale", "0.135", "actor scale"},
  };
  for (auto& k : camera_keys("camera")) traj.keys.push_back(k);
  for (auto& k : traj.keys) {
    if (k.section == "camera" && k.key == "width") k.default_value = "640";
    if (k.section == "camera" && k.key == "height") k.default_value = "480";
  }
  out.push_back(traj);

  CommandInfo comp{"composite", "alpha-blend foreground layers over background renders and write annotations", {}};
  comp.keys = {
      {"composite", "background_dir", "", "directory of background PNGs", KeyKind::InputPath},
      {"composite", "foreground_dir", "", "directory of RGBA PNGs plus <stem>.boxes.txt", KeyKind::OptionalPath},
      {"composite", "actors", "", "placements for the billboard fallback", KeyKind::OptionalPath},
      {"composite", "trajectory", "", "poses for the billboard fallback, one per background", KeyKind::OptionalPath},
      {"composite", "blur_sigma", "0", "Gaussian blur applied to the foreground color"},
      {"composite", "premultiplied", "false", "foreground color is premultiplied by alpha"},
      {"composite", "blur_alpha", "false", "blur the matte together with the color"},
      {"composite", "class_id", "0", "class written for billboard boxes"},
  };
  for (auto& k : camera_keys("camera")) comp.keys.push_back(k);
  out.push_back(comp);

  CommandInfo ev{"eval", "PSNR/SSIM of renders against ground truth", {}};
  ev.keys = {
      {"eval", "renders_dir", "", "directory of rendered PNGs", KeyKind::InputPath},
      {"eval", "ground_truth_dir", "", "directory of ground-truth PNGs with the same names", KeyKind::InputPath},
      {"eval", "masks_dir", "", "optional <stem>.png masks, nonzero = excluded", KeyKind::OptionalPath},
      {"eval", "manifest", "", "dataset manifest mapping images to sequences", KeyKind::OptionalPath},
      {"eval", "lpips", "false", "request LPIPS (not available; prints a notice)"},
  };
  out.push_back(ev);
  return out;
}

Vec3 parse_vec3(const Config& c, const std::string& section, const std::string& key) {
  const std::string text = c.get_string(section, key, "");
  Vec3 v;
  std::stringstream ss(text);
  std::string tok;
  int n = 0;
  while (std::getline(ss, tok, ',')) {
    if (n >= 3) break;
    try {
      std::size_t used = 0;
      v[n] = std::stod(tok, &used);
      if (tok.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidArgument, "invalid value '" + text + "' for key '" + key + "' (expected x,y,z)");
    }
    ++n;
  }
  if (n != 3 || std::getline(ss, tok, ',')) {
    fail(ErrorCode::InvalidArgument, "invalid value '" + text + "' for key '" + key + "' (expected x,y,z)");
  }
  return v;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<fs::path> list_png(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

MultiSequenceDataset load_manifest(const std::string& path) {
  const fs::path p(path);
  return load_dataset(p.parent_path(), Config::load(p));
}

CameraIntrinsics camera_from_config(const Config& c, int width, int height) {
  CameraIntrinsics k;
  k.width = static_cast<int>(c.get_int("camera", "width", 0));
  k.height = static_cast<int>(c.get_int("camera", "height", 0));
  if (k.width <= 0) k.width = width;
  if (k.height <= 0) k.height = height;
  if (k.width <= 0 || k.height <= 0) fail(ErrorCode::InvalidArgument, "camera width and height must be set");
  k.fx = c.get_double("camera", "fx", 0.0);
  if (k.fx <= 0.0) k.fx = 0.8 * k.width;
  k.fy = c.get_double("camera", "fy", 0.0);
  if (k.fy <= 0.0) k.fy = k.fx;
  k.cx = c.get_double("camera", "cx", -1.0);
  if (k.cx < 0.0) k.cx = 0.5 * (k.width - 1);
  k.cy = c.get_double("camera", "cy", -1.0);
  if (k.cy < 0.0) k.cy = 0.5 * (k.height - 1);
  k.validate();
  return k;
}

void say(const LogFn& log, const std::string& msg) {
  if (log) log(msg);
}

// ---- train -----------------------------------------------------------------

void run_train(const Config& c, const fs::path& out, const LogFn& log) {
  const MultiSequenceDataset ds = load_manifest(c.get_string("dataset", "manifest", ""));
  Config train_only;
  for (const auto& [k, v] : c.entries("train")) train_only.set("train", k, v);
  const TrainConfig cfg = TrainConfig::from_config(train_only);
  const long long every = c.get_int("output", "log_every", 100);
  say(log, "training on " + std::to_string(ds.training_frames().size()) + " frames, " +
               std::to_string(ds.num_sequences) + " sequence(s), " + std::to_string(cfg.iterations) + " iterations");
  const TrainedModel model = train(ds, cfg, [&](const LossLogEntry& e) {
    if (every > 0 && ((e.iteration + 1) % every == 0 || e.iteration + 1 == cfg.iterations)) {
      say(log, "iter " + std::to_string(e.iteration + 1) + " loss " + format_number(e.total) + " splats " +
                   std::to_string(e.splats));
    }
  });
  save_checkpoint(out / "model.ckpt", model);
  write_loss_log(out / "loss_log.csv", model.log);
  const bool errors = c.get_bool("output", "error_maps", false);
  const bool refined = c.get_bool("output", "refined_masks", false);
  if (errors || refined) {
    const auto frames = ds.training_frames();
    const auto maps = compute_error_maps(model, ds, frames, cfg.weights.lambda_pho, cfg.render);
    if (errors) fs::create_directories(out / "error_maps");
    if (refined) fs::create_directories(out / "refined_masks");
    for (std::size_t j = 0; j < frames.size(); ++j) {
      const Frame& f = ds.frames[frames[j]];
      const std::string stem = fs::path(f.name).stem().string();
      if (errors) write_raw_map(out / "error_maps" / (stem + ".map"), maps[j]);
      if (refined) write_mask(out / "refined_masks" / (stem + ".png"), refine_masks(f.sam, f.entity, maps[j], cfg.refine));
    }
  }
  say(log, "wrote " + (out / "model.ckpt").string());
}

// ---- render ----------------------------------------------------------------

void write_render(const fs::path& dir, const std::string& stem, const RenderOutput& r, bool depth, bool normal) {
  write_png(dir / (stem + ".png"), r.color);
  if (depth) write_raw_map(dir / (stem + ".depth.map"), r.depth);
  if (normal) {
    Image n(r.width, r.height, 3);
    for (std::size_t i = 0; i < n.data.size(); ++i) n.data[i] = 0.5 * (r.normal.data[i] + 1.0);
    write_png(dir / (stem + ".normal.png"), n);
  }
}

void run_render(const Config& c, const fs::path& out, const LogFn& log) {
  const TrainedModel model = load_checkpoint(c.get_string("render", "checkpoint", ""));
  const std::string manifest = c.get_string("render", "manifest", "");
  const std::string trajectory = c.get_string("render", "trajectory", "");
  if (manifest.empty() == trajectory.empty()) {
    fail(ErrorCode::InvalidArgument, "render needs exactly one of manifest or trajectory");
  }
  const long long seq = c.get_int("render", "sequence_id", -1);
  if (seq >= static_cast<long long>(model.sequence_map.size()) && !model.sequence_map.empty()) {
    fail(ErrorCode::InvalidArgument, "sequence_id " + std::to_string(seq) + " exceeds the model's " +
                                         std::to_string(model.sequence_map.size()) + " sequences");
  }
  RenderSettings settings;
  settings.background = parse_vec3(c, "render", "background");
  const bool depth = c.get_bool("render", "write_depth", false);
  const bool normal = c.get_bool("render", "write_normal", false);
  std::size_t count = 0;
  if (!manifest.empty()) {
    const MultiSequenceDataset ds = load_manifest(manifest);
    const std::string which = c.get_string("render", "frames", "all");
    std::vector<std::size_t> frames;
    if (which == "all") {
      for (std::size_t i = 0; i < ds.frames.size(); ++i) frames.push_back(i);
    } else if (which == "train") {
      frames = ds.training_frames();
    } else if (which == "held_out") {
      frames = ds.held_out_frames();
    } else {
      fail(ErrorCode::InvalidArgument, "invalid value '" + which + "' for key 'frames' (all, train, held_out)");
    }
    for (std::size_t fi : frames) {
      const Frame& f = ds.frames[fi];
      const int s = seq >= 0 ? static_cast<int>(seq) : f.pose.sequence_id;
      const RenderOutput r = render_model(model, f.pose, s, ds.intrinsics(f), settings);
      write_render(out, fs::path(f.name).stem().string(), r, depth, normal);
      ++count;
    }
  } else {
    const auto frames = trajectory_from_jsonl(read_text(trajectory));
    const CameraIntrinsics k = camera_from_config(c, 0, 0);
    const int s = seq >= 0 ? static_cast<int>(seq) : 0;
    for (const auto& f : frames) {
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%05d", f.index);
      write_render(out, name, render_model(model, f.pose, s, k, settings), depth, normal);
      ++count;
    }
  }
  say(log, "rendered " + std::to_string(count) + " frame(s)");
}

// ---- refine-masks ----------------------------------------------------------

void run_refine(const Config& c, const fs::path& out, const LogFn& log) {
  RefineSettings s;
  s.rho1_pct = c.get_double("refine", "rho1_pct", 70.0);
  s.rho2_pct = c.get_double("refine", "rho2_pct", 80.0);
  s.dilation_px = static_cast<int>(c.get_int("refine", "dilation_px", 3));
  s.drop_large_sam = c.get_bool("refine", "drop_large_sam", false);
  const std::string rho = c.get_string("refine", "rho_pho", "auto");
  if (rho != "auto") s.rho_pho = c.get_double("refine", "rho_pho", 0.0);
  const fs::path sam_dir = c.get_string("refine", "sam_dir", "");
  const fs::path entity_dir = c.get_string("refine", "entity_dir", "");
  const fs::path error_dir = c.get_string("refine", "error_dir", "");
  std::size_t count = 0;
  for (const fs::path& sam_path : list_png(sam_dir)) {
    const std::string stem = sam_path.stem().string();
    const fs::path entity_path = entity_dir / (stem + ".png");
    const fs::path error_path = error_dir / (stem + ".map");
    if (!fs::exists(entity_path)) fail(ErrorCode::Io, "missing entity map " + entity_path.string());
    if (!fs::exists(error_path)) fail(ErrorCode::Io, "missing error map " + error_path.string());
    const Mask sam = read_mask(sam_path);
    const LabelMap entities = read_label_map(entity_path);
    const Image err = read_raw_map(error_path);
    if (!sam.same_size(entities) || !sam.same_size(err)) {
      fail(ErrorCode::InvalidArgument, "size mismatch between " + sam_path.string() + ", " + entity_path.string() +
                                           " and " + error_path.string());
    }
    write_mask(out / (stem + ".png"), refine_masks(sam, entities, err, s));
    ++count;
  }
  say(log, "refined " + std::to_string(count) + " mask(s)");
}

// ---- extract-mesh ----------------------------------------------------------

void run_mesh(const Config& c, const fs::path& out, const LogFn& log) {
  const TrainedModel model = load_checkpoint(c.get_string("mesh", "checkpoint", ""));
  const MultiSequenceDataset ds = load_manifest(c.get_string("mesh", "manifest", ""));
  const double alpha_min = c.get_double("mesh", "alpha_threshold", 0.5);
  const auto frames = ds.training_frames();
  std::vector<Image> depths;
  std::vector<Mask> valids;
  depths.reserve(frames.size());
  valids.reserve(frames.size());
  for (std::size_t fi : frames) {
    const Frame& f = ds.frames[fi];
    const RenderOutput r = render_model(model, f.pose, f.pose.sequence_id, ds.intrinsics(f));
    Mask v = r.depth_valid;
    for (std::size_t i = 0; i < v.data.size(); ++i) {
      if (r.alpha.data[i] < alpha_min) v.data[i] = 0;
    }
    depths.push_back(r.depth);
    valids.push_back(std::move(v));
  }
  std::vector<DepthView> views;
  for (std::size_t j = 0; j < frames.size(); ++j) {
    const Frame& f = ds.frames[frames[j]];
    views.push_back({&depths[j], &valids[j], f.pose, ds.intrinsics(f)});
  }
  const Bounds b = fit_bounds(views);
  const int res = static_cast<int>(c.get_int("mesh", "resolution", 128));
  TsdfVolume vol = volume_for_bounds(b, res);
  vol.truncation = c.get_double("mesh", "truncation_voxels", 4.0) * vol.voxel_size;
  for (const DepthView& v : views) tsdf_integrate(vol, *v.depth, *v.valid, v.pose, v.intrinsics);
  const Mesh mesh = extract_mesh(vol);
  write_obj(out / "mesh.obj", mesh);
  say(log, "mesh: " + std::to_string(mesh.vertices.size()) + " vertices, " + std::to_string(mesh.faces.size()) +
               " faces");
}

// ---- gen-trajectory ----------------------------------------------------------

void run_trajectory(const Config& c, const fs::path& out, const LogFn& log) {
  TrajectorySpec spec;
  spec.kind = parse_trajectory_kind(c.get_string("trajectory", "kind", "orbit"));
  spec.frames = static_cast<int>(c.get_int("trajectory", "frames", 60));
  spec.base_t = parse_vec3(c, "trajectory", "base_t");
  spec.base_r = parse_vec3(c, "trajectory", "base_r");
  spec.noise_sigma_t = parse_vec3(c, "trajectory", "noise_t");
  spec.noise_sigma_r = parse_vec3(c, "trajectory", "noise_r");
  spec.orbit_radius = c.get_double("trajectory", "radius", 5.0);
  spec.center = parse_vec3(c, "trajectory", "center");
  spec.z_min = c.get_double("trajectory", "z_min", 5.0);
  spec.z_max = c.get_double("trajectory", "z_max", 15.0);
  spec.direction = parse_vec3(c, "trajectory", "direction");
  spec.span = c.get_double("trajectory", "span", 10.0);
  spec.yaw_start = c.get_double("trajectory", "yaw_start", 0.0);
  spec.yaw_range = c.get_double("trajectory", "yaw_range", spec.yaw_range);
  const long long seed_value = c.get_int("trajectory", "seed", 0);
  const auto seed = static_cast<std::uint64_t>(seed_value);

  std::vector<ActorPlacement> actors;
  const std::string actors_file = c.get_string("trajectory", "actors_file", "");
  if (!actors_file.empty()) actors = placements_from_jsonl(read_text(actors_file));
  const std::string mesh_path = c.get_string("actors", "mesh", "");
  if (!mesh_path.empty()) {
    const Mesh mesh = read_obj(mesh_path);
    const CameraIntrinsics k = camera_from_config(c, 0, 0);
    std::mt19937_64 rng(seed);
    long long count = c.get_int("actors", "count", 0);
    if (count <= 0) count = sample_actor_count(rng);
    const CameraPose base = blender_camera_pose(spec.base_t, spec.base_r);
    actors = place_actors(mesh, std::span<const CameraPose>(&base, 1), k, static_cast<int>(count),
                          c.get_double("actors", "min_spacing", 0.5), seed + 1, c.get_double("actors", "scale", 0.135));
    write_file_atomic(out / "actors.jsonl", placements_to_jsonl(actors));
    say(log, "placed " + std::to_string(actors.size()) + " actors");
  }
  if (!actors.empty() && spec.kind == TrajectoryKind::Orbit) spec.center = actor_center(actors);
  const auto frames = gen_trajectory(spec, seed);
  write_file_atomic(out / "trajectory.jsonl", trajectory_to_jsonl(frames));
  say(log, "wrote " + std::to_string(frames.size()) + " poses");
}

// ---- composite ---------------------------------------------------------------

void run_composite(const Config& c, const fs::path& out, const LogFn& log) {
  CompositeSettings s;
  s.blur_sigma = c.get_double("composite", "blur_sigma", 0.0);
  s.premultiplied = c.get_bool("composite", "premultiplied", false);
  s.blur_alpha = c.get_bool("composite", "blur_alpha", false);
  const fs::path fg_dir = c.get_string("composite", "foreground_dir", "");
  const std::string actors_path = c.get_string("composite", "actors", "");
  const std::string traj_path = c.get_string("composite", "trajectory", "");
  if (fg_dir.empty() && (actors_path.empty() || traj_path.empty())) {
    fail(ErrorCode::InvalidArgument, "composite needs foreground_dir, or actors and trajectory for billboards");
  }
  const auto backgrounds = list_png(c.get_string("composite", "background_dir", ""));
  std::vector<ActorPlacement> actors;
  std::vector<TrajectoryFrame> poses;
  if (fg_dir.empty()) {
    actors = placements_from_jsonl(read_text(actors_path));
    poses = trajectory_from_jsonl(read_text(traj_path));
    if (poses.size() < backgrounds.size()) {
      fail(ErrorCode::InvalidArgument, "trajectory has " + std::to_string(poses.size()) + " poses for " +
                                           std::to_string(backgrounds.size()) + " backgrounds");
    }
  }
  const int cls = static_cast<int>(c.get_int("composite", "class_id", 0));
  for (std::size_t i = 0; i < backgrounds.size(); ++i) {
    const std::string stem = backgrounds[i].stem().string();
    const Image bg = read_image(backgrounds[i]);
    Image fg;
    std::vector<Box> boxes;
    if (!fg_dir.empty()) {
      fg = read_rgba(fg_dir / (stem + ".png"));
      const fs::path box_path = fg_dir / (stem + ".boxes.txt");
      if (fs::exists(box_path)) boxes = parse_boxes(read_text(box_path));
    } else {
      const CameraIntrinsics k = camera_from_config(c, bg.width, bg.height);
      BillboardFrame b = render_billboards(actors, poses[i].pose, k);
      fg = std::move(b.rgba);
      boxes = std::move(b.boxes);
      for (Box& box : boxes) box.cls = cls;
    }
    write_png(out / (stem + ".png"), composite(fg, bg, s));
    write_file_atomic(out / (stem + ".txt"), format_annotations(boxes, bg.width, bg.height));
  }
  say(log, "composited " + std::to_string(backgrounds.size()) + " frame(s)");
}

// ---- eval --------------------------------------------------------------------

void run_eval(const Config& c, const fs::path& out, const LogFn& log) {
  const fs::path renders = c.get_string("eval", "renders_dir", "");
  const fs::path truth = c.get_string("eval", "ground_truth_dir", "");
  const std::string masks = c.get_string("eval", "masks_dir", "");
  const std::string manifest = c.get_string("eval", "manifest", "");
  if (c.get_bool("eval", "lpips", false)) {
    say(log, "notice: LPIPS is not implemented in this build; reporting PSNR and SSIM only");
  }
  std::map<std::string, int> sequence_of;
  if (!manifest.empty()) {
    for (const auto& [name, id] : Config::load(manifest).entries("sequences")) {
      sequence_of[fs::path(name).stem().string()] = std::stoi(id);
    }
  }
  EvalReport report;
  for (const fs::path& gt_path : list_png(truth)) {
    const std::string stem = gt_path.stem().string();
    const fs::path r_path = renders / (stem + ".png");
    if (!fs::exists(r_path)) fail(ErrorCode::Io, "missing render " + r_path.string());
    const Image gt = read_image(gt_path);
    const Image r = read_image(r_path);
    EvalRow row;
    row.name = stem;
    row.sequence = sequence_of.count(stem) ? sequence_of[stem] : 0;
    row.psnr = psnr(r, gt);
    row.ssim = masked_ssim(r, gt);
    if (!masks.empty() && fs::exists(fs::path(masks) / (stem + ".png"))) {
      Mask include = read_mask(fs::path(masks) / (stem + ".png"));
      for (auto& v : include.data) v = v ? 0 : 1;
      row.masked_psnr = psnr(r, gt, &include);
      row.masked_ssim = masked_ssim(r, gt, &include);
    }
    report.rows.push_back(row);
  }
  if (report.rows.empty()) fail(ErrorCode::InvalidArgument, "no ground-truth PNGs in " + truth.string());
  write_file_atomic(out / "eval.csv", report.to_csv());
  for (const auto& s : report.per_sequence()) {
    say(log, "sequence " + std::to_string(s.sequence) + ": PSNR " + format_number(s.psnr) + " SSIM " +
                 format_number(s.ssim) + " over " + std::to_string(s.frames) + " frame(s)");
  }
}

}  // namespace

const CommandKey* CommandInfo::find(const std::string& k) const {
  for (const auto& key : keys) {
    if (key.key == k) return &key;
  }
  return nullptr;
}

const std::vector<CommandInfo>& commands() {
  static const std::vector<CommandInfo> all = build_commands();
  return all;
}

const CommandInfo& command_info(const std::string& name) {
  for (const auto& c : commands()) {
    if (c.name == name) return c;
  }
  fail(ErrorCode::InvalidArgument, "unknown command '" + name + "'");
}

Config effective_config(const CommandInfo& info, const Config& user) {
  Config out;
  for (const auto& k : info.keys) out.set(k.section, k.key, k.default_value);
  for (const auto& section : user.sections()) {
    for (const auto& [key, value] : user.entries(section)) {
      const bool known = std::any_of(info.keys.begin(), info.keys.end(),
                                     [&](const CommandKey& k) { return k.section == section && k.key == key; });
      if (!known) {
        fail(ErrorCode::InvalidArgument, "unknown key '" + key + "' in section [" + section + "] for " + info.name);
      }
      out.set(section, key, value);
    }
  }
  return out;
}

void check_inputs(const CommandInfo& info, const Config& c) {
  for (const auto& k : info.keys) {
    if (k.kind == KeyKind::Value) continue;
    const std::string v = c.get_string(k.section, k.key, "");
    if (v.empty()) {
      if (k.kind == KeyKind::InputPath) fail(ErrorCode::InvalidArgument, "missing required input '" + k.key + "'");
      continue;
    }
    if (!fs::exists(v)) fail(ErrorCode::InvalidArgument, "input '" + k.key + "' does not exist: " + v);
  }
}

void run_command(const std::string& name, const Config& user, const fs::path& output_dir, const LogFn& log) {
  const CommandInfo& info = command_info(name);
  const Config c = effective_config(info, user);
  check_inputs(info, c);
  std::error_code ec;
  fs::create_directories(output_dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory " + output_dir.string() + ": " + ec.message());
  write_file_atomic(output_dir / "config.ini", c.to_text());
  if (name == "train") run_train(c, output_dir, log);
  else if (name == "render") run_render(c, output_dir, log);
  else if (name == "refine-masks") run_refine(c, output_dir, log);
  else if (name == "extract-mesh") run_mesh(c, output_dir, log);
  else if (name == "gen-trajectory") run_trajectory(c, output_dir, log);
  else if (name == "composite") run_composite(c, output_dir, log);
  else if (name == "eval") run_eval(c, output_dir, log);
}

}  // namespace msgs
