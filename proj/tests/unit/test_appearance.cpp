// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "msgs/appearance/appearance.hpp"
#include "msgs/common/error.hpp"
#include "synthetic.hpp"

namespace msgs {
namespace {

void randomize(Eigen::MatrixXd& m, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
}
void randomize(Eigen::VectorXd& v, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = n(rng);
}

AppearanceModel random_model(int sequences, std::mt19937_64& rng) {
  AppearanceModel m(sequences, 3);
  randomize(m.mlp.w3, rng, 0.1);
  randomize(m.mlp.b1, rng, 0.1);
  randomize(m.mlp.b2, rng, 0.1);
  randomize(m.sequence_embeddings, rng, 0.5);
  return m;
}

// Scalar-loop forward pass, written independently of the Eigen expression.
AffineColor loop_forward(const ColorMlp& mlp, const std::vector<double>& x) {
  auto layer = [](const Eigen::MatrixXd& w, const Eigen::VectorXd& b, const std::vector<double>& in, bool relu) {
    std::vector<double> out(w.rows());
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      double s = b[r];
      for (Eigen::Index c = 0; c < w.cols(); ++c) s += w(r, c) * in[c];
      out[r] = relu ? std::max(0.0, s) : s;
    }
    return out;
  };
  const auto o = layer(mlp.w3, mlp.b3, layer(mlp.w2, mlp.b2, layer(mlp.w1, mlp.b1, x, true), true), false);
  AffineColor a;
  a.alpha = Vec3(o[0], o[1], o[2]);
  a.beta = Vec3(o[3], o[4], o[5]);
  return a;
}

TEST(Appearance, ShapesAndParameterCount) {
  const AppearanceModel m(3, 1);
  EXPECT_EQ(m.mlp.w1.rows(), kMlpHidden);
  EXPECT_EQ(m.mlp.w1.cols(), kMlpInput);
  EXPECT_EQ(m.mlp.w2.rows(), kMlpHidden);
  EXPECT_EQ(m.mlp.w3.rows(), kMlpOutput);
  EXPECT_EQ(kMlpInput, 2 * 32 + 3 + 3);
  EXPECT_EQ(m.mlp.parameter_count(),
            static_cast<std::size_t>(kMlpHidden * (kMlpInput + 1) + kMlpHidden * (kMlpHidden + 1) +
                                     kMlpOutput * (kMlpHidden + 1)));
  EXPECT_EQ(m.num_sequences(), 3);
  EXPECT_THROW(m.sequence(3), Error);
}

TEST(Appearance, InitializationIsIdentityModulation) {
  std::mt19937_64 rng(1);
  const AppearanceModel m(4, 99);
  std::vector<Splat> splats;
  for (int i = 0; i < 20; ++i) splats.push_back(testing::random_splat(rng));
  const CameraPose pose = CameraPose::look_at(Vec3(0, 0, -4), Vec3::Zero(), Vec3::UnitY());
  for (int seq = 0; seq < 4; ++seq) {
    const TonedColors t = modulate_colors(m, splats, seq, pose);
    for (std::size_t i = 0; i < splats.size(); ++i) EXPECT_EQ(t.colors[i], splats[i].base_color);
  }
  // Hidden layers are seeded and bounded by sqrt(1/fan_in).
  EXPECT_LE(m.mlp.w1.cwiseAbs().maxCoeff(), std::sqrt(1.0 / kMlpInput));
  EXPECT_GT(m.mlp.w1.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(AppearanceModel(4, 99).mlp.w1, m.mlp.w1);
  EXPECT_NE(AppearanceModel(4, 98).mlp.w1, m.mlp.w1);
}

TEST(Appearance, ForwardMatchesScalarOracle) {
  std::mt19937_64 rng(2);
  const AppearanceModel m = random_model(2, rng);
  for (int t = 0; t < 10; ++t) {
    const Splat s = testing::random_splat(rng);
    const Embedding q = m.sequence(t % 2);
    const Vec3 dir = Vec3::Random().normalized();
    std::vector<double> x;
    for (int i = 0; i < kEmbeddingDim; ++i) x.push_back(s.embedding[i]);
    for (int i = 0; i < kEmbeddingDim; ++i) x.push_back(q[i]);
    for (int i = 0; i < 3; ++i) x.push_back(dir[i]);
    for (int i = 0; i < 3; ++i) x.push_back(s.base_color[i]);
    const AffineColor want = loop_forward(m.mlp, x);
    const AffineColor got = mlp_forward(m.mlp, s.embedding, q, dir, s.base_color);
    EXPECT_LT((got.alpha - want.alpha).norm(), 1e-12);
    EXPECT_LT((got.beta - want.beta).norm(), 1e-12);
  }
}

TEST(Appearance, ModulateUsesViewDirectionAndSequence) {
  std::mt19937_64 rng(3);
  const AppearanceModel m = random_model(2, rng);
  std::vector<Splat> splats;
  for (int i = 0; i < 8; ++i) splats.push_back(testing::random_splat(rng));
  const CameraPose pose = CameraPose::look_at(Vec3(1, 0.5, -4), Vec3::Zero(), Vec3::UnitY());
  const TonedColors t = modulate_colors(m, splats, 1, pose);
  for (std::size_t i = 0; i < splats.size(); ++i) {
    const Vec3 dir = (splats[i].mu - pose.center()).normalized();
    const AffineColor a = mlp_forward(m.mlp, splats[i].embedding, m.sequence(1), dir, splats[i].base_color);
    const Vec3 want = a.alpha.cwiseProduct(splats[i].base_color) + a.beta;
    EXPECT_LT((t.colors[i] - want).norm(), 1e-12);
  }
  const TonedColors other = modulate_colors(m, splats, 0, pose);
  EXPECT_GT((other.colors[0] - t.colors[0]).norm(), 1e-6);
  EXPECT_THROW(modulate_colors(m, splats, 2, pose), Error);
}

TEST(Appearance, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  AppearanceModel m = random_model(2, rng);
  std::vector<Splat> splats;
  for (int i = 0; i < 5; ++i) splats.push_back(testing::random_splat(rng));
  const CameraPose pose = CameraPose::look_at(Vec3(1, 0.5, -4), Vec3::Zero(), Vec3::UnitY());
  std::vector<Vec3> w(splats.size());
  for (auto& v : w) v = Vec3::Random();
  auto loss = [&](const AppearanceModel& mm, const std::vector<Splat>& ss) {
    const TonedColors t = modulate_colors(mm, ss, 1, pose);
    double v = 0;
    for (std::size_t i = 0; i < ss.size(); ++i) v += w[i].dot(t.colors[i]);
    return v;
  };
  const TonedColors t = modulate_colors(m, splats, 1, pose);
  const AppearanceGradients g = appearance_backward(m, splats, t, w);
  const double h = 1e-6;
  auto fd = [&](double& p) {
    const double v = p;
    p = v + h;
    const double fp = loss(m, splats);
    p = v - h;
    const double fm = loss(m, splats);
    p = v;
    return (fp - fm) / (2 * h);
  };
  auto near = [](double a, double n) { return std::abs(a - n) <= 1e-6 * std::max(1.0, std::abs(n)); };
  for (std::size_t i = 0; i < splats.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      EXPECT_PRED2(near, g.base_color[i][c], fd(splats[i].base_color[c]));
      EXPECT_PRED2(near, g.mu[i][c], fd(splats[i].mu[c]));
    }
    for (int c = 0; c < kEmbeddingDim; c += 5) EXPECT_PRED2(near, g.embedding[i][c], fd(splats[i].embedding[c]));
  }
  for (int c = 0; c < kEmbeddingDim; c += 3) EXPECT_PRED2(near, g.sequence[c], fd(m.sequence_embeddings(c, 1)));
  std::uniform_int_distribution<int> r(0, kMlpHidden - 1);
  for (int t2 = 0; t2 < 20; ++t2) {
    const int a = r(rng), b = r(rng);
    EXPECT_PRED2(near, g.mlp.w2(a, b), fd(m.mlp.w2(a, b)));
    EXPECT_PRED2(near, g.mlp.w1(a, b % kMlpInput), fd(m.mlp.w1(a, b % kMlpInput)));
    EXPECT_PRED2(near, g.mlp.w3(t2 % kMlpOutput, a), fd(m.mlp.w3(t2 % kMlpOutput, a)));
  }
  for (int o = 0; o < kMlpOutput; ++o) EXPECT_PRED2(near, g.mlp.b3[o], fd(m.mlp.b3[o]));
}

TEST(Appearance, CheckpointRoundTrip) {
  std::mt19937_64 rng(5);
  const AppearanceModel m = random_model(3, rng);
  std::stringstream first;
  write_appearance(first, m);
  const std::string bytes = first.str();
  EXPECT_EQ(bytes.substr(0, 8), "MSGSAPP1");
  const std::size_t floats = m.mlp.parameter_count() + 3 * kEmbeddingDim;
  EXPECT_EQ(bytes.size(), 8 + 4 + 3 * 8 + 8 + 4 * floats);

  std::stringstream in(bytes);
  const AppearanceModel back = read_appearance(in);
  EXPECT_EQ(back.num_sequences(), 3);
  EXPECT_LT((back.mlp.w2 - m.mlp.w2).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((back.sequence_embeddings - m.sequence_embeddings).cwiseAbs().maxCoeff(), 1e-6);
  // Values already at float precision survive bitwise.
  std::stringstream second;
  write_appearance(second, back);
  EXPECT_EQ(second.str(), bytes);
  std::stringstream again(second.str());
  EXPECT_EQ(read_appearance(again).mlp.w1, back.mlp.w1);
}

TEST(Appearance, CheckpointRejectsCorruptInput) {
  std::stringstream bad("MSGSAPP2xxxxxxxx");
  try {
    read_appearance(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
  }
  std::mt19937_64 rng(6);
  std::stringstream full;
  write_appearance(full, random_model(1, rng));
  std::stringstream truncated(full.str().substr(0, full.str().size() - 10));
  EXPECT_THROW(read_appearance(truncated), Error);
}

}  // namespace
}  // namespace msgs
