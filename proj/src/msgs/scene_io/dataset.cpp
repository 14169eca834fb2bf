// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include "msgs/scene_io/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "msgs/common/error.hpp"
#include "msgs/scene_io/image_io.hpp"

namespace msgs {

namespace fs = std::filesystem;

const CameraIntrinsics& MultiSequenceDataset::intrinsics(const Frame& frame) const {
  auto it = cameras.find(frame.pose.camera_id);
  if (it == cameras.end()) {
    fail(ErrorCode::InvalidArgument, "frame " + frame.name + " references unknown camera " +
                                         std::to_string(frame.pose.camera_id));
  }
  return it->second;
}

std::vector<std::size_t> MultiSequenceDataset::sequence_frames(int sequence_id) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].pose.sequence_id == sequence_id) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> MultiSequenceDataset::training_frames() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (!frames[i].held_out) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> MultiSequenceDataset::held_out_frames() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].held_out) out.push_back(i);
  }
  return out;
}

void MultiSequenceDataset::validate() const {
  for (const auto& f : frames) {
    if (f.pose.sequence_id < 0 || f.pose.sequence_id >= num_sequences) {
      fail(ErrorCode::InvalidArgument, "frame " + f.name + " has sequence id " +
                                           std::to_string(f.pose.sequence_id) + " outside [0," +
                                           std::to_string(num_sequences) + ")");
    }
    const auto& k = intrinsics(f);
    if (f.image.width != k.width || f.image.height != k.height) {
      fail(ErrorCode::InvalidArgument, "frame " + f.name + " does not match its camera size");
    }
    if (!f.sam.same_size(f.image) || !f.entity.same_size(f.image)) {
      fail(ErrorCode::InvalidArgument, "frame " + f.name + " has masks of the wrong size");
    }
    if (f.eval_mask && !f.eval_mask->same_size(f.image)) {
      fail(ErrorCode::InvalidArgument, "frame " + f.name + " has an evaluation mask of the wrong size");
    }
    for (auto label : f.entity.data) {
      if (label < 0) fail(ErrorCode::InvalidArgument, "frame " + f.name + " has negative entity labels");
    }
  }
}

namespace {

fs::path resolve(const fs::path& root, const std::string& rel) {
  const fs::path p(rel);
  return p.is_absolute() ? p : root / p;
}

int parse_sequence_id(const std::string& name, const std::string& value) {
  int id = -1;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), id);
  if (ec != std::errc() || ptr != value.data() + value.size() || id < 0) {
    fail(ErrorCode::Parse, "manifest: sequence id for " + name + " must be a nonnegative integer");
  }
  return id;
}

template <class G>
void check_same_size(const Image& image, const fs::path& image_path, const G& mask, const fs::path& mask_path) {
  if (!mask.same_size(image)) {
    fail(ErrorCode::InvalidArgument, "dimension mismatch: " + image_path.string() + " is " +
                                         std::to_string(image.width) + "x" + std::to_string(image.height) +
                                         " but " + mask_path.string() + " is " + std::to_string(mask.width) +
                                         "x" + std::to_string(mask.height));
  }
}

}  // namespace

MultiSequenceDataset load_dataset(const fs::path& root, const Config& manifest) {
  const fs::path colmap_dir = resolve(root, manifest.get_string("dataset", "colmap", "sparse"));
  const fs::path image_dir = resolve(root, manifest.get_string("dataset", "images", "images"));
  const auto sam_dir = manifest.get("dataset", "sam_masks");
  const auto entity_dir = manifest.get("dataset", "entity_maps");

  std::map<std::string, int> sequence_of;
  for (const auto& [name, value] : manifest.entries("sequences")) {
    sequence_of[name] = parse_sequence_id(name, value);
  }
  std::set<std::string> held_out;
  for (const auto& [name, value] : manifest.entries("held_out")) {
    if (value != "0" && value != "false") held_out.insert(name);
  }
  std::map<std::string, std::string> eval_masks;
  for (const auto& [name, value] : manifest.entries("eval_masks")) eval_masks[name] = value;

  const ColmapReconstruction recon = read_colmap_dir(colmap_dir);

  MultiSequenceDataset ds;
  for (const auto& [id, intr] : recon.cameras) ds.cameras[id] = intr;
  ds.points = recon.points;
  int max_id = -1;
  std::set<std::string> seen;
  for (const auto& pose : recon.poses) {
    auto it = sequence_of.find(pose.image_path);
    if (it == sequence_of.end()) {
      fail(ErrorCode::InvalidArgument, "manifest: image " + pose.image_path + " has no sequence assignment");
    }
    seen.insert(pose.image_path);
    Frame f;
    f.name = pose.image_path;
    f.pose = pose;
    f.pose.sequence_id = it->second;
    max_id = std::max(max_id, it->second);
    const fs::path image_path = image_dir / pose.image_path;
    f.image = read_image(image_path);
    const std::string stem = fs::path(pose.image_path).replace_extension(".png").string();
    f.sam = Mask(f.image.width, f.image.height, 1, 0);
    if (sam_dir) {
      const fs::path p = resolve(root, *sam_dir) / stem;
      if (fs::exists(p)) {
        f.sam = read_mask(p);
        check_same_size(f.image, image_path, f.sam, p);
      }
    }
    f.entity = LabelMap(f.image.width, f.image.height, 1, 0);
    if (entity_dir) {
      const fs::path p = resolve(root, *entity_dir) / stem;
      if (fs::exists(p)) {
        f.entity = read_label_map(p);
        check_same_size(f.image, image_path, f.entity, p);
      }
    }
    if (auto em = eval_masks.find(pose.image_path); em != eval_masks.end()) {
      const fs::path p = resolve(root, em->second);
      f.eval_mask = read_mask(p);
      check_same_size(f.image, image_path, *f.eval_mask, p);
    }
    f.held_out = held_out.count(pose.image_path) > 0;
    ds.frames.push_back(std::move(f));
  }
  for (const auto& [name, id] : sequence_of) {
    if (!seen.count(name)) fail(ErrorCode::InvalidArgument, "manifest: image " + name + " is not in the reconstruction");
  }
  ds.num_sequences = max_id + 1;
  ds.validate();
  return ds;
}

}  // namespace msgs
