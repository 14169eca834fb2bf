// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "msgs/common/error.hpp"
#include "msgs/eval/metrics.hpp"
#include "msgs/losses/losses.hpp"
#include "synthetic.hpp"

namespace msgs {
namespace {

TEST(Psnr, IdenticalImagesAreInfinite) {
  std::mt19937_64 rng(1);
  const Image a = testing::random_image(rng, 12, 9, 3);
  EXPECT_EQ(psnr(a, a), kPsnrInfinite);
}

TEST(Psnr, UniformOffsetOfOneTenthIsTwentyDb) {
  const Image a(10, 10, 3, 0.2), b(10, 10, 3, 0.3);
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
}

TEST(Psnr, MatchesScalarOracle) {
  std::mt19937_64 rng(2);
  const Image a = testing::random_image(rng, 17, 13, 3), b = testing::random_image(rng, 17, 13, 3);
  double sum = 0;
  for (int y = 0; y < 13; ++y)
    for (int x = 0; x < 17; ++x)
      for (int c = 0; c < 3; ++c) sum += std::pow(a(x, y, c) - b(x, y, c), 2);
  EXPECT_NEAR(psnr(a, b), -10.0 * std::log10(sum / (17 * 13 * 3)), 1e-10);
}

TEST(Psnr, MaskExcludesPixels) {
  Image a(8, 8, 3, 0.5), b(8, 8, 3, 0.5);
  Mask include(8, 8, 1, 1);
  for (int c = 0; c < 3; ++c) b(2, 3, c) = 0.0;  // corrupt one pixel
  include(2, 3) = 0;
  EXPECT_EQ(psnr(a, b, &include), kPsnrInfinite);
  EXPECT_LT(psnr(a, b), 30.0);
  // Only the corrupted pixel included: MSE 0.25.
  Mask only(8, 8, 1, 0);
  only(2, 3) = 1;
  EXPECT_NEAR(psnr(a, b, &only), 10.0 * std::log10(4.0), 1e-12);
  const Mask none(8, 8, 1, 0);
  EXPECT_THROW(psnr(a, b, &none), Error);
  EXPECT_THROW(psnr(a, Image(8, 7, 3)), Error);
  const Mask small(4, 4, 1, 1);
  EXPECT_THROW(psnr(a, b, &small), Error);
}

TEST(Ssim, MaskedMeanOverIncludedPixels) {
  std::mt19937_64 rng(3);
  const Image a = testing::random_image(rng, 20, 16, 3), b = testing::random_image(rng, 20, 16, 3);
  const SsimResult full = ssim(a, b);
  EXPECT_EQ(masked_ssim(a, b), full.value);
  EXPECT_EQ(masked_ssim(a, a), 1.0);
  Mask include(20, 16, 1, 0);
  double sum = 0;
  int n = 0;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 20; ++x)
      if ((x + 2 * y) % 3 == 0) {
        include(x, y) = 1;
        sum += full.map(x, y);
        ++n;
      }
  EXPECT_NEAR(masked_ssim(a, b, &include), sum / n, 1e-12);
  const Mask none(20, 16, 1, 0);
  EXPECT_THROW(masked_ssim(a, b, &none), Error);
}

TEST(EvalReport, SummaryAndCsv) {
  EvalReport r;
  r.rows.push_back({"a.png", 0, 20.0, 0.5, 22.0, 0.6});
  r.rows.push_back({"b.png", 0, kPsnrInfinite, 1.0, std::nullopt, std::nullopt});
  r.rows.push_back({"c.png", 0, 30.0, 0.75, 26.0, 0.8});
  r.rows.push_back({"d.png", 1, 25.0, 0.25, std::nullopt, std::nullopt});
  const auto s = r.per_sequence();
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].frames, 3);
  EXPECT_EQ(s[0].psnr, 25.0);
  EXPECT_EQ(s[0].ssim, 0.75);
  EXPECT_EQ(*s[0].masked_psnr, 24.0);
  EXPECT_NEAR(*s[0].masked_ssim, 0.7, 1e-15);
  EXPECT_FALSE(s[1].masked_psnr.has_value());
  EXPECT_EQ(r.to_csv(),
            "frame,sequence,psnr,ssim,masked_psnr,masked_ssim\n"
            "a.png,0,20,0.5,22,0.6\n"
            "b.png,0,inf,1,,\n"
            "c.png,0,30,0.75,26,0.8\n"
            "d.png,1,25,0.25,,\n"
            "mean,0,25,0.75,24,0.7\n"
            "mean,1,25,0.25,,\n");
}

}  // namespace
}  // namespace msgs
