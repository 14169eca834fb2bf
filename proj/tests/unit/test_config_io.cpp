// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include <cstring>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "msgs/common/config.hpp"
#include "msgs/common/error.hpp"
#include "msgs/scene_io/colmap.hpp"
#include "msgs/scene_io/dataset.hpp"
#include "msgs/scene_io/image_io.hpp"
#include "msgs/trainer/trainer.hpp"
#include "synthetic.hpp"

namespace msgs {
namespace {

TEST(Config, ParsesSectionsAndTypedValues) {
  const Config c = Config::parse("[a]\nx = 1.5\nn = 7\nflag = yes\n[b]\nname = hello world\n");
  EXPECT_DOUBLE_EQ(c.get_double("a", "x", 0.0), 1.5);
  EXPECT_EQ(c.get_int("a", "n", 0), 7);
  EXPECT_TRUE(c.get_bool("a", "flag", false));
  EXPECT_EQ(c.get_string("b", "name", ""), "hello world");
  EXPECT_EQ(c.get_int("a", "missing", 42), 42);
  EXPECT_FALSE(c.has("c", "x"));
}

TEST(Config, BadNumberNamesTheKey) {
  const Config c = Config::parse("[a]\nx = 1.5abc\n");
  try {
    c.get_double("a", "x", 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    EXPECT_NE(std::string(e.what()).find("a.x"), std::string::npos);
  }
}

TEST(Config, SetOverridesAndRoundTrips) {
  Config c;
  c.set("train", "iterations", "10");
  c.set("train", "iterations", "20");
  const Config back = Config::parse(c.to_text());
  EXPECT_EQ(back.get_int("train", "iterations", 0), 20);
  EXPECT_EQ(back.entries("train").size(), 1u);
}

TEST(Config, FormatNumberRoundTripsBitwise) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
}

TEST(TrainConfig, RoundTripsThroughConfig) {
  TrainConfig a;
  a.iterations = 1234;
  a.weights.lambda_b = 0.125;
  a.lr.position = 3.3e-5;
  a.shared_embedding = true;
  a.refine.rho1_pct = 55.0;
  const TrainConfig b = TrainConfig::from_config(a.to_config());
  EXPECT_EQ(b.iterations, 1234);
  EXPECT_EQ(b.weights.lambda_b, 0.125);
  EXPECT_EQ(b.lr.position, 3.3e-5);
  EXPECT_TRUE(b.shared_embedding);
  EXPECT_EQ(b.refine.rho1_pct, 55.0);
  EXPECT_EQ(a.to_config().to_text(), b.to_config().to_text());
}

TEST(TrainConfig, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(TrainConfig::from_config(Config::parse("[train]\nbogus = 1\n")), Error);
  EXPECT_THROW(TrainConfig::from_config(Config::parse("[train]\niterations = many\n")), Error);
  EXPECT_THROW(TrainConfig::from_config(Config::parse("[train]\nlambda_pho = 1.5\n")), Error);
}

// ---- COLMAP ---------------------------------------------------------------

constexpr const char* kCameras =
    "# Camera list\n"
    "1 PINHOLE 64 48 50.5 51.5 31.5 23.5\n"
    "2 SIMPLE_PINHOLE 32 32 40 15.5 15.5\n";
constexpr const char* kImages =
    "# Image list\n"
    "1 1 0 0 0 0.5 -1 2 1 a.png\n"
    "10 20 30.5 1 -1\n"
    "2 0.7071067811865476 0 0.7071067811865476 0 0 0 4 2 b.png\n"
    "\n";
constexpr const char* kPoints = "# Points\n5 1 2 3 255 128 0 0.25 1 0 2 1\n";

TEST(Colmap, ParsesPinholeModelsAndPoses) {
  const auto r = parse_colmap(kCameras, kImages, kPoints);
  ASSERT_EQ(r.cameras.size(), 2u);
  const auto& k1 = r.camera(1);
  EXPECT_EQ(k1.width, 64);
  EXPECT_EQ(k1.fx, 50.5);
  EXPECT_EQ(k1.fy, 51.5);
  const auto& k2 = r.camera(2);
  EXPECT_EQ(k2.fx, 40.0);
  EXPECT_EQ(k2.fy, 40.0);
  ASSERT_EQ(r.poses.size(), 2u);
  EXPECT_EQ(r.poses[0].image_path, "a.png");
  EXPECT_EQ(r.poses[0].translation, Vec3(0.5, -1, 2));
  EXPECT_EQ(r.poses[1].camera_id, 2);
  // 90 degrees about y: camera x axis is world -z.
  const Vec3 p = r.poses[1].to_camera(Vec3(0, 0, 1));
  EXPECT_NEAR(p.x(), 1.0, 1e-12);
  EXPECT_NEAR(p.z(), 4.0, 1e-12);
  ASSERT_EQ(r.points.size(), 1u);
  EXPECT_EQ(r.points[0].position, Vec3(1, 2, 3));
  EXPECT_EQ(r.points[0].rgb[1], 128);
}

TEST(Colmap, RejectsDistortedModelsByName) {
  try {
    parse_colmap("1 OPENCV 10 10 5 5 5 5 0 0 0 0\n", "", "");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("OPENCV"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find(":1:"), std::string::npos);
  }
}

TEST(Colmap, MalformedLineReportsLine) {
  try {
    parse_colmap(kCameras, "1 1 0 0 0 0.5 -1 2 1 a.png\n10 20 30\n2 x 0 0 0 0 0 0 1 b.png\n", "");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
    EXPECT_NE(std::string(e.what()).find("images.txt:3:"), std::string::npos) << e.what();
  }
}

TEST(Colmap, FormatParseIsBitwiseIdentity) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 3.0);
  ColmapReconstruction r;
  CameraIntrinsics k{n(rng) * n(rng) + 100.0, 77.123456789, 31.7, 20.1, 64, 48};
  r.cameras.emplace_back(3, k);
  for (int i = 0; i < 20; ++i) {
    CameraPose p;
    p.rotation = Eigen::Quaterniond(Eigen::Vector4d(n(rng), n(rng), n(rng), n(rng)).normalized());
    p.translation = Vec3(n(rng), n(rng), n(rng));
    p.camera_id = 3;
    p.image_id = i + 1;
    p.image_path = "img_" + std::to_string(i) + ".png";
    r.poses.push_back(p);
    ColmapPoint pt;
    pt.id = i + 100;
    pt.position = Vec3(n(rng), n(rng), n(rng));
    pt.rgb = {static_cast<std::uint8_t>(i), 7, 200};
    pt.error = std::abs(n(rng));
    r.points.push_back(pt);
  }
  const auto back = parse_colmap(format_colmap_cameras(r.cameras), format_colmap_images(r.poses),
                                 format_colmap_points(r.points));
  EXPECT_EQ(back.cameras[0].second, k);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(back.poses[i].rotation.coeffs(), r.poses[i].rotation.coeffs());
    EXPECT_EQ(back.poses[i].translation, r.poses[i].translation);
    EXPECT_EQ(back.poses[i].image_path, r.poses[i].image_path);
    EXPECT_EQ(back.points[i].position, r.points[i].position);
    EXPECT_EQ(back.points[i].error, r.points[i].error);
  }
}

// ---- images ---------------------------------------------------------------

TEST(ImageIo, PngRoundTripsQuantizedValues) {
  const auto dir = testing::temp_dir("png");
  Image img(5, 3, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<double>((i * 37) % 256) / 255.0;
  write_png(dir / "a.png", img);
  const Image back = read_image(dir / "a.png");
  ASSERT_TRUE(back.same_size(img));
  for (std::size_t i = 0; i < img.data.size(); ++i) EXPECT_DOUBLE_EQ(back.data[i], img.data[i]);
}

TEST(ImageIo, MaskAndLabelMaps) {
  const auto dir = testing::temp_dir("mask");
  Mask m(4, 4, 1, 0);
  m(1, 2) = 1;
  write_mask(dir / "m.png", m);
  EXPECT_EQ(read_mask(dir / "m.png"), m);
  LabelMap l(4, 4, 1, 0);
  l(3, 3) = 65535;
  l(0, 0) = 300;
  write_label_map(dir / "l.png", l);
  EXPECT_EQ(read_label_map(dir / "l.png"), l);
  l(0, 0) = 70000;
  EXPECT_THROW(write_label_map(dir / "l2.png", l), Error);
}

TEST(ImageIo, RawMapRoundTripsAsFloat32) {
  const auto dir = testing::temp_dir("raw");
  Image m(7, 2, 1);
  for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = 0.1 * static_cast<double>(i) - 0.3;
  write_raw_map(dir / "e.map", m);
  const Image back = read_raw_map(dir / "e.map");
  ASSERT_TRUE(back.same_size(m));
  for (std::size_t i = 0; i < m.data.size(); ++i) EXPECT_EQ(back.data[i], static_cast<double>(static_cast<float>(m.data[i])));
  std::ofstream(dir / "bad.map") << "MSGSMAP1xx";
  EXPECT_THROW(read_raw_map(dir / "bad.map"), Error);
}

TEST(ImageIo, MissingFileIsIoError) {
  try {
    read_image("/nonexistent/x.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}

// ---- dataset ----------------------------------------------------------------

TEST(Dataset, LoadsWrittenSceneAndAssignsSequences) {
  testing::SceneOptions o;
  o.num_splats = 30;
  o.frames_per_sequence = 4;
  o.sprite_fraction = 0.5;
  const auto scene = testing::make_scene(o);
  const auto dir = testing::temp_dir("ds");
  const auto manifest = testing::write_scene(scene, dir);
  const auto ds = load_dataset(dir, Config::load(manifest));
  ASSERT_EQ(ds.frames.size(), scene.dataset.frames.size());
  EXPECT_EQ(ds.num_sequences, 2);
  EXPECT_EQ(ds.held_out_frames().size(), scene.dataset.held_out_frames().size());
  for (std::size_t i = 0; i < ds.frames.size(); ++i) {
    const auto& a = ds.frames[i];
    const auto& b = scene.dataset.frames[i];
    EXPECT_EQ(a.pose.sequence_id, b.pose.sequence_id);
    EXPECT_EQ(a.sam, b.sam);
    EXPECT_EQ(a.entity, b.entity);
    for (std::size_t j = 0; j < a.image.data.size(); ++j) EXPECT_NEAR(a.image.data[j], b.image.data[j], 0.5 / 255.0 + 1e-12);
  }
  EXPECT_EQ(ds.points.size(), 30u);
  EXPECT_EQ(ds.sequence_frames(1).size(), 4u);
}

TEST(Dataset, UnassignedImageIsRejected) {
  testing::SceneOptions o;
  o.num_splats = 10;
  o.frames_per_sequence = 2;
  const auto scene = testing::make_scene(o);
  const auto dir = testing::temp_dir("ds2");
  testing::write_scene(scene, dir);
  const Config manifest = Config::parse("[dataset]\ncolmap = sparse\n[sequences]\ns0_f00.png = 0\n");
  try {
    load_dataset(dir, manifest);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("s1_f00.png"), std::string::npos) << e.what();
  }
}

TEST(Dataset, MaskSizeMismatchNamesBothFiles) {
  testing::SceneOptions o;
  o.num_splats = 10;
  o.frames_per_sequence = 2;
  const auto scene = testing::make_scene(o);
  const auto dir = testing::temp_dir("ds3");
  const auto manifest = testing::write_scene(scene, dir);
  write_mask(dir / "masks" / "s0_f01.png", Mask(3, 3, 1, 0));
  try {
    load_dataset(dir, Config::load(manifest));
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("masks/s0_f01.png"), std::string::npos) << msg;
    EXPECT_NE(msg.find("images/s0_f01.png"), std::string::npos) << msg;
  }
}

}  // namespace
}  // namespace msgs
