#include <gtest/gtest.h>

#include <cstdio>
#include <set>

#include "sim2real/error.hpp"
#include "sim2real/image.hpp"
#include "sim2real/png_io.hpp"
#include "test_support.hpp"

using namespace sim2real;
using testing_support::RandomImage;
using testing_support::TempDir;

namespace {

std::set<double> ValueSet(const ImageBuffer& img) {
  return std::set<double>(img.data().begin(), img.data().end());
}

// Direct per-pixel 2-D convolution with reflect-101 borders.
double ConvAt(const ImageBuffer& img, const Kernel2D& k, int x, int y) {
  const int r = k.radius();
  double acc = 0.0;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      acc += k.at(dy + r, dx + r) *
             img.at(Reflect101(x + dx, img.width()), Reflect101(y + dy, img.height()));
  return acc;
}

}  // namespace

TEST(ImageBuffer, RejectsBadShapes) {
  EXPECT_THROW(ImageBuffer(0, 4, 1), Error);
  EXPECT_THROW(ImageBuffer(4, 4, 2), Error);
  EXPECT_THROW(ImageBuffer(2, 2, 1, std::vector<double>(3)), Error);
}

TEST(Png, DecodesRgbPixelsExactly) {
  TempDir dir;
  ImageBuffer img(2, 1, 3, std::vector<double>{0, 0, 0, 255, 255, 255});
  SavePng(img, dir / "a.png");
  const ImageBuffer back = LoadPng(dir / "a.png");
  EXPECT_EQ(back.width(), 2);
  EXPECT_EQ(back.height(), 1);
  EXPECT_EQ(back.channels(), 3);
  EXPECT_EQ(std::vector<double>(back.data().begin(), back.data().end()),
            (std::vector<double>{0, 0, 0, 255, 255, 255}));
}

TEST(Png, DecodesGray) {
  TempDir dir;
  SavePng(ImageBuffer(1, 1, 1, 128.0), dir / "g.png");
  const ImageBuffer back = LoadPng(dir / "g.png");
  EXPECT_EQ(back.channels(), 1);
  EXPECT_EQ(back.data()[0], 128.0);
}

TEST(Png, RoundTripIsBitExact) {
  TempDir dir;
  for (int c : {1, 3}) {
    const ImageBuffer img = RandomImage(37, 23, c, 11 + c);
    SavePng(img, dir / "r.png");
    EXPECT_EQ(LoadPng(dir / "r.png"), img);
  }
}

TEST(Png, SixteenBitOnlyInInstanceMode) {
  TempDir dir;
  ImageBuffer ids(3, 1, 1, std::vector<double>{0, 26001, 65535});
  SavePng(ids, dir / "i.png", 16);
  EXPECT_EQ(ReadPngInfo(dir / "i.png").bit_depth, 16);
  try {
    LoadPng(dir / "i.png");
    FAIL() << "16-bit accepted in image mode";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
  }
  EXPECT_EQ(LoadPng(dir / "i.png", PngMode::kInstanceIds), ids);
}

TEST(Png, TruncatedFileNamesPath) {
  TempDir dir;
  SavePng(RandomImage(40, 40, 3, 1), dir / "t.png");
  std::string bytes = testing_support::ReadText(dir / "t.png");
  testing_support::WriteText(dir / "t.png", bytes.substr(0, bytes.size() / 2));
  try {
    LoadPng(dir / "t.png");
    FAIL() << "truncated PNG decoded";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
    EXPECT_NE(std::string(e.what()).find("t.png"), std::string::npos);
  }
}

TEST(Png, MissingFileIsIoError) {
  try {
    LoadPng("/nonexistent/dir/x.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

TEST(Resize, ConstantImageStaysConstant) {
  const ImageBuffer img(100, 100, 1, 77.0);
  for (ResizeMode m : {ResizeMode::kNearest, ResizeMode::kBilinear, ResizeMode::kLanczos3}) {
    const ImageBuffer out = Resize(img, 1024, 512, m);
    ASSERT_EQ(out.width(), 1024);
    ASSERT_EQ(out.height(), 512);
    for (double v : out.data()) ASSERT_NEAR(v, 77.0, 1e-9);
  }
}

TEST(Resize, NearestKeepsValueSet) {
  ImageBuffer checker(2, 2, 1, std::vector<double>{0, 255, 255, 0});
  const ImageBuffer up = Resize(checker, 9, 7, ResizeMode::kNearest);
  EXPECT_EQ(ValueSet(up), (std::set<double>{0, 255}));
  // Random content, arbitrary ratios both ways.
  const ImageBuffer img = RandomImage(31, 17, 3, 5);
  for (auto [w, h] : {std::pair{64, 40}, std::pair{13, 5}, std::pair{31, 9}}) {
    const auto in = ValueSet(img);
    const ImageBuffer out = Resize(img, w, h, ResizeMode::kNearest);
    for (double v : out.data()) ASSERT_TRUE(in.count(v));
  }
}

TEST(Resize, BilinearRampMatchesDirectInterpolation) {
  ImageBuffer ramp(2048, 1024, 1);
  for (int y = 0; y < 1024; ++y)
    for (int x = 0; x < 2048; ++x) ramp.at(x, y) = 255.0 * x / 2047.0;
  const ImageBuffer out = Resize(ramp, 1024, 512, ResizeMode::kBilinear);
  ASSERT_EQ(out.width(), 1024);
  ASSERT_EQ(out.height(), 512);
  for (int y = 0; y < 512; y += 97) {
    for (int x = 0; x < 1024; ++x) {
      // Half-pixel centres: output x samples source position 2x + 0.5.
      const double pos = 2.0 * x + 0.5;
      const double expect = 255.0 * pos / 2047.0;
      ASSERT_NEAR(out.at(x, y), expect, 1e-9);
      if (x > 0) ASSERT_GE(out.at(x, y), out.at(x - 1, y));
    }
  }
}

TEST(Resize, ZeroTargetRejected) {
  EXPECT_THROW(Resize(ImageBuffer(4, 4, 1), 0, 4, ResizeMode::kNearest), Error);
}

TEST(Luma, Bt601Weights) {
  ImageBuffer px(3, 1, 3, std::vector<double>{255, 255, 255, 255, 0, 0, 0, 0, 0});
  const ImageBuffer y = ToLuma(px);
  ASSERT_EQ(y.channels(), 1);
  EXPECT_NEAR(y.data()[0], 255.0, 1e-12);
  EXPECT_NEAR(y.data()[1], 76.245, 1e-12);
  EXPECT_EQ(y.data()[2], 0.0);
  EXPECT_THROW(ToLuma(ImageBuffer(2, 2, 1)), Error);
}

TEST(Convolve, IdentityIsBitwiseEqual) {
  const ImageBuffer img = RandomImage(19, 11, 1, 3, false);
  EXPECT_EQ(Convolve2D(img, Kernel2D::Identity(3)), img);
}

TEST(Convolve, GaussianKeepsConstant) {
  const Kernel2D g = Kernel2D::Gaussian(11, 1.5);
  double sum = 0.0;
  for (double t : g.taps()) sum += t;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  const ImageBuffer out = Convolve2D(ImageBuffer(20, 13, 1, 42.5), g);
  for (double v : out.data()) ASSERT_NEAR(v, 42.5, 1e-9);
}

TEST(Convolve, BoxCenterIsNeighbourhoodMean) {
  ImageBuffer ramp(5, 5, 1);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) ramp.at(x, y) = 5 * y + x;
  const ImageBuffer out = Convolve2D(ramp, Kernel2D::Box(3));
  // 3x3 around (2,2): rows 1..3, cols 1..3 -> mean of 6,7,8,11,12,13,16,17,18.
  EXPECT_NEAR(out.at(2, 2), 12.0, 1e-12);
}

TEST(Convolve, ReflectBorderMatchesDirectOracle) {
  const ImageBuffer img = RandomImage(9, 7, 1, 21, false);
  const Kernel2D k = Kernel2D::Gaussian(5, 1.1);
  const ImageBuffer out = Convolve2D(img, k);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 9; ++x) ASSERT_NEAR(out.at(x, y), ConvAt(img, k, x, y), 1e-9);
  EXPECT_EQ(Reflect101(-1, 5), 1);
  EXPECT_EQ(Reflect101(5, 5), 3);
}

TEST(Convolve, SeparableMatchesFull) {
  const ImageBuffer img = RandomImage(23, 17, 1, 8, false);
  const auto taps = GaussianTaps(7, 7.0 / 6.0);
  const ImageBuffer a = ConvolveSeparable(img, taps, taps);
  const ImageBuffer b = Convolve2D(img, Kernel2D::Gaussian(7, 7.0 / 6.0));
  for (std::size_t i = 0; i < a.data().size(); ++i) ASSERT_NEAR(a.data()[i], b.data()[i], 1e-9);
}

TEST(Convolve, IsLinear) {
  const Kernel2D k = Kernel2D::Gaussian(5, 1.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ImageBuffer x = RandomImage(16, 16, 1, seed, false);
    const ImageBuffer y = RandomImage(16, 16, 1, seed + 100, false);
    const double a = 0.3 + seed, b = -1.7;
    ImageBuffer mix(16, 16, 1);
    for (std::size_t i = 0; i < mix.data().size(); ++i)
      mix.data()[i] = a * x.data()[i] + b * y.data()[i];
    const ImageBuffer lhs = Convolve2D(mix, k);
    const ImageBuffer cx = Convolve2D(x, k), cy = Convolve2D(y, k);
    for (std::size_t i = 0; i < lhs.data().size(); ++i)
      ASSERT_NEAR(lhs.data()[i], a * cx.data()[i] + b * cy.data()[i], 1e-9);
  }
}

TEST(Downsample2, ConstantAndShape) {
  const ImageBuffer out = Downsample2(ImageBuffer(4, 4, 1, 50.0));
  ASSERT_EQ(out.width(), 2);
  ASSERT_EQ(out.height(), 2);
  for (double v : out.data()) EXPECT_NEAR(v, 50.0, 1e-9);
  const ImageBuffer big = Downsample2(ImageBuffer(1024, 512, 1, 1.0));
  EXPECT_EQ(big.width(), 512);
  EXPECT_EQ(big.height(), 256);
  const ImageBuffer odd = Downsample2(ImageBuffer(7, 5, 1, 3.0));
  EXPECT_EQ(odd.width(), 3);
  EXPECT_EQ(odd.height(), 2);
  EXPECT_THROW(Downsample2(ImageBuffer(1, 8, 1)), Error);
}

TEST(Downsample2, ReducesWhiteNoiseVariance) {
  auto variance = [](const ImageBuffer& img) {
    double m = 0.0, s = 0.0;
    for (double v : img.data()) m += v;
    m /= img.data().size();
    for (double v : img.data()) s += (v - m) * (v - m);
    return s / img.data().size();
  };
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ImageBuffer noise = RandomImage(32, 32, 1, 1000 + seed, false);
    ASSERT_LT(variance(Downsample2(noise)), variance(noise)) << "seed " << seed;
  }
}

TEST(Operations, OutputsStayFinite) {
  const ImageBuffer img = RandomImage(33, 21, 3, 2);
  for (ResizeMode m : {ResizeMode::kNearest, ResizeMode::kBilinear, ResizeMode::kLanczos3}) {
    const ImageBuffer out = Resize(img, 70, 9, m);
    for (double v : out.data()) ASSERT_TRUE(std::isfinite(v));
  }
  const ImageBuffer small = Downsample2(ToLuma(img));
  for (double v : small.data()) ASSERT_TRUE(std::isfinite(v));
}
