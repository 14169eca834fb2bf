// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "msgs/splat/splat.hpp"

namespace msgs {

inline constexpr int kDirectionDim = 3;
inline constexpr int kMlpInput = 2 * kEmbeddingDim + kDirectionDim + 3;  // [h, q, d, base color]
inline constexpr int kMlpHidden = 128;
inline constexpr int kMlpOutput = 6;  // alpha (3), beta (3)

/// Two ReLU hidden layers and a linear head.
struct ColorMlp {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;

  static ColorMlp zeros();
  void set_zero();
  std::size_t parameter_count() const;
};

/// Per-sequence appearance: one embedding per capture sequence plus the color MLP.
struct AppearanceModel {
  Eigen::MatrixXd sequence_embeddings;  // kEmbeddingDim x N, column q_i per sequence
  ColorMlp mlp;

  AppearanceModel() = default;
  /// Hidden layers uniform in +-sqrt(1/fan_in) from `seed`; head weights zero
  /// with bias (1,1,1,0,0,0) so every splat starts with identity modulation;
  /// sequence embeddings zero.
  AppearanceModel(int num_sequences, std::uint64_t seed);

  int num_sequences() const { return static_cast<int>(sequence_embeddings.cols()); }
  Embedding sequence(int id) const;
};

struct AffineColor {
  Vec3 alpha = Vec3::Ones();
  Vec3 beta = Vec3::Zero();
};

/// f(h, q, d, base_color) -> (alpha, beta).
AffineColor mlp_forward(const ColorMlp& mlp, const Embedding& h, const Embedding& q, const Vec3& dir,
                        const Vec3& base_color);

/// Toned colors c^a = alpha * base + beta with the activations needed for backprop.
struct TonedColors {
  int sequence_id = 0;
  std::vector<Vec3> colors;
  Eigen::MatrixXd input;    // kMlpInput x n
  Eigen::MatrixXd hidden1;  // post-ReLU
  Eigen::MatrixXd hidden2;
  Eigen::MatrixXd output;   // kMlpOutput x n
  std::vector<Vec3> unnormalized_dir;  // mu - camera center
};

/// Colors of every splat as seen from `pose` under sequence `sequence_id`.
TonedColors modulate_colors(const AppearanceModel& model, std::span<const Splat> splats, int sequence_id,
                            const CameraPose& pose);

struct AppearanceGradients {
  ColorMlp mlp;
  Embedding sequence = Embedding::Zero();  // for the sequence used in the forward pass
  std::vector<Embedding> embedding;        // per splat h
  std::vector<Vec3> base_color;
  std::vector<Vec3> mu;  // through the viewing direction
};

AppearanceGradients appearance_backward(const AppearanceModel& model, std::span<const Splat> splats,
                                        const TonedColors& toned, std::span<const Vec3> d_toned);

/// Binary checkpoint, little-endian:
///   "MSGSAPP1", u32 layer count (3), per layer u32 rows and u32 cols,
///   u32 sequence count N, u32 embedding dim,
///   per layer float32 weights (row-major) then float32 bias,
///   float32 embeddings, sequence-major (N x dim).
void write_appearance(std::ostream& out, const AppearanceModel& model);
AppearanceModel read_appearance(std::istream& in);

}  // namespace msgs
