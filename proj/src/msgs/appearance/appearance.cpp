// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include "msgs/appearance/appearance.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>

#include "msgs/common/error.hpp"

namespace msgs {

ColorMlp ColorMlp::zeros() {
  ColorMlp m;
  m.w1 = Eigen::MatrixXd::Zero(kMlpHidden, kMlpInput);
  m.b1 = Eigen::VectorXd::Zero(kMlpHidden);
  m.w2 = Eigen::MatrixXd::Zero(kMlpHidden, kMlpHidden);
  m.b2 = Eigen::VectorXd::Zero(kMlpHidden);
  m.w3 = Eigen::MatrixXd::Zero(kMlpOutput, kMlpHidden);
  m.b3 = Eigen::VectorXd::Zero(kMlpOutput);
  return m;
}

void ColorMlp::set_zero() { *this = zeros(); }

std::size_t ColorMlp::parameter_count() const {
  return w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size();
}

AppearanceModel::AppearanceModel(int num_sequences, std::uint64_t seed) {
  if (num_sequences < 1) fail(ErrorCode::InvalidArgument, "appearance model needs at least one sequence");
  sequence_embeddings = Eigen::MatrixXd::Zero(kEmbeddingDim, num_sequences);
  mlp = ColorMlp::zeros();
  std::mt19937_64 rng(seed);
  auto fill = [&](Eigen::MatrixXd& w, Eigen::VectorXd& b) {
    const double bound = std::sqrt(1.0 / static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
    }
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = u(rng);
  };
  fill(mlp.w1, mlp.b1);
  fill(mlp.w2, mlp.b2);
  mlp.b3 << 1.0, 1.0, 1.0, 0.0, 0.0, 0.0;
}

Embedding AppearanceModel::sequence(int id) const {
  if (id < 0 || id >= num_sequences()) {
    fail(ErrorCode::InvalidArgument, "unknown sequence id " + std::to_string(id) + " (model has " +
                                         std::to_string(num_sequences()) + ")");
  }
  return sequence_embeddings.col(id);
}

AffineColor mlp_forward(const ColorMlp& mlp, const Embedding& h, const Embedding& q, const Vec3& dir,
                        const Vec3& base_color) {
  Eigen::VectorXd x(kMlpInput);
  x << h, q, dir, base_color;
  const Eigen::VectorXd h1 = (mlp.w1 * x + mlp.b1).cwiseMax(0.0);
  const Eigen::VectorXd h2 = (mlp.w2 * h1 + mlp.b2).cwiseMax(0.0);
  const Eigen::VectorXd o = mlp.w3 * h2 + mlp.b3;
  return {o.head<3>(), o.tail<3>()};
}

TonedColors modulate_colors(const AppearanceModel& model, std::span<const Splat> splats, int sequence_id,
                            const CameraPose& pose) {
  const Embedding q = model.sequence(sequence_id);
  const Vec3 center = pose.center();
  const auto n = static_cast<Eigen::Index>(splats.size());
  TonedColors out;
  out.sequence_id = sequence_id;
  out.input.resize(kMlpInput, n);
  out.unnormalized_dir.resize(splats.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Splat& s = splats[i];
    const Vec3 v = s.mu - center;
    out.unnormalized_dir[i] = v;
    const double len = v.norm();
    const Vec3 dir = len > 0.0 ? Vec3(v / len) : Vec3::Zero();
    out.input.col(i) << s.embedding, q, dir, s.base_color;
  }
  out.hidden1 = ((model.mlp.w1 * out.input).colwise() + model.mlp.b1).cwiseMax(0.0);
  out.hidden2 = ((model.mlp.w2 * out.hidden1).colwise() + model.mlp.b2).cwiseMax(0.0);
  out.output = (model.mlp.w3 * out.hidden2).colwise() + model.mlp.b3;
  out.colors.resize(splats.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.colors[i] = out.output.col(i).head<3>().cwiseProduct(splats[i].base_color) + out.output.col(i).tail<3>();
  }
  return out;
}

AppearanceGradients appearance_backward(const AppearanceModel& model, std::span<const Splat> splats,
                                        const TonedColors& toned, std::span<const Vec3> d_toned) {
  const auto n = static_cast<Eigen::Index>(splats.size());
  if (d_toned.size() != splats.size() || toned.input.cols() != n) {
    fail(ErrorCode::InvalidArgument, "appearance_backward: gradient count does not match the forward pass");
  }
  AppearanceGradients g;
  g.mlp = ColorMlp::zeros();
  g.embedding.assign(splats.size(), Embedding::Zero());
  g.base_color.assign(splats.size(), Vec3::Zero());
  g.mu.assign(splats.size(), Vec3::Zero());

  Eigen::MatrixXd d_out(kMlpOutput, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3& dc = d_toned[i];
    d_out.col(i).head<3>() = dc.cwiseProduct(splats[i].base_color);
    d_out.col(i).tail<3>() = dc;
    g.base_color[i] = dc.cwiseProduct(toned.output.col(i).head<3>());
  }
  g.mlp.w3 = d_out * toned.hidden2.transpose();
  g.mlp.b3 = d_out.rowwise().sum();
  Eigen::MatrixXd d_h2 = model.mlp.w3.transpose() * d_out;
  d_h2 = d_h2.cwiseProduct((toned.hidden2.array() > 0.0).cast<double>().matrix());
  g.mlp.w2 = d_h2 * toned.hidden1.transpose();
  g.mlp.b2 = d_h2.rowwise().sum();
  Eigen::MatrixXd d_h1 = model.mlp.w2.transpose() * d_h2;
  d_h1 = d_h1.cwiseProduct((toned.hidden1.array() > 0.0).cast<double>().matrix());
  g.mlp.w1 = d_h1 * toned.input.transpose();
  g.mlp.b1 = d_h1.rowwise().sum();
  const Eigen::MatrixXd d_in = model.mlp.w1.transpose() * d_h1;

  for (Eigen::Index i = 0; i < n; ++i) {
    g.embedding[i] = d_in.col(i).segment<kEmbeddingDim>(0);
    g.sequence += d_in.col(i).segment<kEmbeddingDim>(kEmbeddingDim);
    g.base_color[i] += d_in.col(i).segment<3>(2 * kEmbeddingDim + kDirectionDim);
    // dir = v / |v|, v = mu - center
    const Vec3 d_dir = d_in.col(i).segment<3>(2 * kEmbeddingDim);
    const Vec3& v = toned.unnormalized_dir[i];
    const double len = v.norm();
    if (len > 0.0) {
      const Vec3 dir = v / len;
      g.mu[i] = (d_dir - d_dir.dot(dir) * dir) / len;
    }
  }
  return g;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  if (!in) fail(ErrorCode::Parse, "appearance checkpoint truncated");
  return v;
}

void put_f32(std::ostream& out, double v) {
  const float f = static_cast<float>(v);
  out.write(reinterpret_cast<const char*>(&f), 4);
}

double get_f32(std::istream& in) {
  float f = 0.0f;
  in.read(reinterpret_cast<char*>(&f), 4);
  if (!in) fail(ErrorCode::Parse, "appearance checkpoint truncated");
  return f;
}

}  // namespace

void write_appearance(std::ostream& out, const AppearanceModel& model) {
  out.write("MSGSAPP1", 8);
  const Eigen::MatrixXd* weights[3] = {&model.mlp.w1, &model.mlp.w2, &model.mlp.w3};
  const Eigen::VectorXd* biases[3] = {&model.mlp.b1, &model.mlp.b2, &model.mlp.b3};
  put_u32(out, 3);
  for (const auto* w : weights) {
    put_u32(out, static_cast<std::uint32_t>(w->rows()));
    put_u32(out, static_cast<std::uint32_t>(w->cols()));
  }
  put_u32(out, static_cast<std::uint32_t>(model.num_sequences()));
  put_u32(out, kEmbeddingDim);
  for (int l = 0; l < 3; ++l) {
    const auto& w = *weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) put_f32(out, w(r, c));
    }
    for (Eigen::Index r = 0; r < biases[l]->size(); ++r) put_f32(out, (*biases[l])[r]);
  }
  for (int s = 0; s < model.num_sequences(); ++s) {
    for (int d = 0; d < kEmbeddingDim; ++d) put_f32(out, model.sequence_embeddings(d, s));
  }
}

AppearanceModel read_appearance(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "MSGSAPP1", 8) != 0) fail(ErrorCode::Parse, "not an MSGSAPP1 appearance checkpoint");
  if (get_u32(in) != 3) fail(ErrorCode::Parse, "appearance checkpoint: expected 3 layers");
  const std::uint32_t expected[3][2] = {{kMlpHidden, kMlpInput}, {kMlpHidden, kMlpHidden}, {kMlpOutput, kMlpHidden}};
  for (const auto& shape : expected) {
    const std::uint32_t r = get_u32(in), c = get_u32(in);
    if (r != shape[0] || c != shape[1]) fail(ErrorCode::Parse, "appearance checkpoint: unexpected layer shape");
  }
  const std::uint32_t n = get_u32(in);
  if (get_u32(in) != kEmbeddingDim || n == 0) fail(ErrorCode::Parse, "appearance checkpoint: bad embedding header");
  AppearanceModel model;
  model.mlp = ColorMlp::zeros();
  Eigen::MatrixXd* weights[3] = {&model.mlp.w1, &model.mlp.w2, &model.mlp.w3};
  Eigen::VectorXd* biases[3] = {&model.mlp.b1, &model.mlp.b2, &model.mlp.b3};
  for (int l = 0; l < 3; ++l) {
    auto& w = *weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = get_f32(in);
    }
    for (Eigen::Index r = 0; r < biases[l]->size(); ++r) (*biases[l])[r] = get_f32(in);
  }
  model.sequence_embeddings.resize(kEmbeddingDim, n);
  for (std::uint32_t s = 0; s < n; ++s) {
    for (int d = 0; d < kEmbeddingDim; ++d) model.sequence_embeddings(d, s) = get_f32(in);
  }
  return model;
}

}  // namespace msgs
