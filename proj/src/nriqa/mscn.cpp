#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nriqa/internal.hpp"
#include "sim2real/error.hpp"
#include "sim2real/nriqa.hpp"

namespace sim2real::nriqa {
namespace {

constexpr int kGridSize = 9801;  // 0.2 .. 10.0 step 1e-3

struct AlphaGrid {
  std::vector<double> alpha;
  std::vector<double> ggd_ratio;   // G(1/a) G(3/a) / G(2/a)^2
  std::vector<double> aggd_ratio;  // reciprocal of the above

  AlphaGrid() : alpha(kGridSize), ggd_ratio(kGridSize), aggd_ratio(kGridSize) {
    for (int k = 0; k < kGridSize; ++k) {
      const double a = 0.2 + k * 1e-3;
      alpha[k] = a;
      const double lr = std::lgamma(1.0 / a) + std::lgamma(3.0 / a) - 2.0 * std::lgamma(2.0 / a);
      ggd_ratio[k] = std::exp(lr);
      aggd_ratio[k] = std::exp(-lr);
    }
  }
};

const AlphaGrid& Grid() {
  static const AlphaGrid grid;
  return grid;
}

void RequireSamples(std::size_t n, const char* what) {
  if (n < kMinFitSamples) {
    Fail(ErrorKind::kInvalidArgument, std::string(what) + ": need at least " +
                                          std::to_string(kMinFitSamples) +
                                          " samples, got " + std::to_string(n));
  }
}

// Neighbour offsets (dx, dy) for the horizontal, vertical and two diagonal
// pairwise products.
constexpr int kPairOffsets[4][2] = {{1, 0}, {0, 1}, {1, 1}, {-1, 1}};

}  // namespace

MscnResult MscnWithSigma(const ImageBuffer& luma) {
  if (luma.channels() != 1) {
    Fail(ErrorKind::kInvalidArgument, "mscn expects a single-channel image");
  }
  static const std::vector<double> taps = GaussianTaps(7, 7.0 / 6.0);
  const ImageBuffer mu = ConvolveSeparable(luma, taps, taps);
  const ImageBuffer sq = Multiply(luma, luma);
  const ImageBuffer mu_sq = ConvolveSeparable(sq, taps, taps);
  MscnResult r{ImageBuffer(luma.width(), luma.height(), 1),
               ImageBuffer(luma.width(), luma.height(), 1)};
  for (std::size_t i = 0; i < luma.pixel_count(); ++i) {
    const double m = mu.data()[i];
    const double sigma = std::sqrt(std::abs(mu_sq.data()[i] - m * m));
    r.sigma.data()[i] = sigma;
    r.mscn.data()[i] = (luma.data()[i] - m) / (sigma + 1.0);
  }
  return r;
}

ImageBuffer Mscn(const ImageBuffer& luma) { return MscnWithSigma(luma).mscn; }

GgdFit FitGgd(std::span<const double> x) {
  RequireSamples(x.size(), "ggd fit");
  double sq = 0.0;
  double ab = 0.0;
  for (double v : x) {
    sq += v * v;
    ab += std::abs(v);
  }
  const double n = static_cast<double>(x.size());
  const double sigma2 = sq / n;
  const double e = ab / n;
  if (sigma2 == 0.0) return {2.0, 0.0};
  const double rho = sigma2 / (e * e);
  const AlphaGrid& g = Grid();
  int best = 0;
  double best_diff = std::abs(rho - g.ggd_ratio[0]);
  for (int k = 1; k < kGridSize; ++k) {
    const double d = std::abs(rho - g.ggd_ratio[k]);
    if (d < best_diff) {
      best_diff = d;
      best = k;
    }
  }
  return {g.alpha[best], sigma2};
}

AggdFit FitAggd(std::span<const double> x) {
  RequireSamples(x.size(), "aggd fit");
  double left_sq = 0.0, right_sq = 0.0, sq = 0.0, ab = 0.0;
  std::size_t nl = 0, nr = 0;
  for (double v : x) {
    if (v < 0) {
      left_sq += v * v;
      ++nl;
    } else if (v > 0) {
      right_sq += v * v;
      ++nr;
    }
    sq += v * v;
    ab += std::abs(v);
  }
  if (sq == 0.0) return {2.0, 0.0, 0.0, 0.0};
  const double n = static_cast<double>(x.size());
  const double left_std = nl ? std::sqrt(left_sq / nl) : 0.0;
  const double right_std = nr ? std::sqrt(right_sq / nr) : 0.0;
  // With one side empty the ratio term tends to 1 from either direction.
  const double gh = (nl && nr) ? left_std / right_std : 0.0;
  const double rhat = (ab / n) * (ab / n) / (sq / n);
  const double rhat_norm = rhat * (gh * gh * gh + 1.0) * (gh + 1.0) /
                           ((gh * gh + 1.0) * (gh * gh + 1.0));
  const AlphaGrid& g = Grid();
  int best = 0;
  double best_diff = (g.aggd_ratio[0] - rhat_norm) * (g.aggd_ratio[0] - rhat_norm);
  for (int k = 1; k < kGridSize; ++k) {
    const double d = (g.aggd_ratio[k] - rhat_norm) * (g.aggd_ratio[k] - rhat_norm);
    if (d < best_diff) {
      best_diff = d;
      best = k;
    }
  }
  const double alpha = g.alpha[best];
  const double shape = std::sqrt(std::tgamma(1.0 / alpha) / std::tgamma(3.0 / alpha));
  const double mean = (right_std - left_std) * shape * std::tgamma(2.0 / alpha) /
                      std::tgamma(1.0 / alpha);
  return {alpha, mean, left_std * left_std, right_std * right_std};
}

std::array<double, 18> ScaleFeatures(const ImageBuffer& mscn, int x0, int y0, int w,
                                     int h) {
  if (x0 < 0 || y0 < 0 || w < 2 || h < 2 || x0 + w > mscn.width() ||
      y0 + h > mscn.height()) {
    Fail(ErrorKind::kInvalidArgument, "feature tile outside the image");
  }
  std::array<double, 18> f{};
  std::vector<double> buf;
  buf.reserve(static_cast<std::size_t>(w) * h);
  for (int y = y0; y < y0 + h; ++y)
    for (int x = x0; x < x0 + w; ++x) buf.push_back(mscn.at(x, y));
  const GgdFit g = FitGgd(buf);
  f[0] = g.alpha;
  f[1] = g.sigma2;
  for (int o = 0; o < 4; ++o) {
    const int dx = kPairOffsets[o][0];
    const int dy = kPairOffsets[o][1];
    buf.clear();
    for (int y = y0; y + dy < y0 + h; ++y)
      for (int x = std::max(x0, x0 - dx); x < x0 + w && x + dx < x0 + w; ++x)
        buf.push_back(mscn.at(x, y) * mscn.at(x + dx, y + dy));
    const AggdFit a = FitAggd(buf);
    f[2 + 4 * o] = a.alpha;
    f[3 + 4 * o] = a.mean;
    f[4 + 4 * o] = a.left_var;
    f[5 + 4 * o] = a.right_var;
  }
  return f;
}

FeatureVector BrisqueFeatures(const ImageBuffer& img) {
  if (std::min(img.width(), img.height()) < 32) {
    Fail(ErrorKind::kInvalidArgument,
         "brisque: image " + std::to_string(img.width()) + "x" +
             std::to_string(img.height()) + " too small (min dimension 32)");
  }
  const ImageBuffer luma = AsLuma(img);
  const ImageBuffer half = Downsample2(luma);
  const ImageBuffer m1 = Mscn(luma);
  const ImageBuffer m2 = Mscn(half);
  const auto f1 = ScaleFeatures(m1, 0, 0, m1.width(), m1.height());
  const auto f2 = ScaleFeatures(m2, 0, 0, m2.width(), m2.height());
  FeatureVector out{};
  std::copy(f1.begin(), f1.end(), out.begin());
  std::copy(f2.begin(), f2.end(), out.begin() + 18);
  return out;
}

}  // namespace sim2real::nriqa
