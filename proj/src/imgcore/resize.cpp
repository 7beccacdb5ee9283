#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sim2real/error.hpp"
#include "sim2real/image.hpp"

namespace sim2real {
namespace {

// Source taps contributing to one output sample.
struct Contribution {
  std::vector<int> index;
  std::vector<double> weight;
};

double Sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double Lanczos3(double x) {
  return std::abs(x) < 3.0 ? Sinc(x) * Sinc(x / 3.0) : 0.0;
}

std::vector<Contribution> Contributions(int src, int dst, ResizeMode mode) {
  const double scale = static_cast<double>(src) / dst;
  std::vector<Contribution> out(dst);
  for (int i = 0; i < dst; ++i) {
    Contribution& c = out[i];
    switch (mode) {
      case ResizeMode::kNearest: {
        const int s = std::min(static_cast<int>(std::floor((i + 0.5) * scale)), src - 1);
        c.index = {s};
        c.weight = {1.0};
        break;
      }
      case ResizeMode::kBilinear: {
        const double pos = std::clamp((i + 0.5) * scale - 0.5, 0.0, src - 1.0);
        const int i0 = static_cast<int>(std::floor(pos));
        const int i1 = std::min(i0 + 1, src - 1);
        const double f = pos - i0;
        c.index = {i0, i1};
        c.weight = {1.0 - f, f};
        break;
      }
      case ResizeMode::kLanczos3: {
        // Antialiased: the kernel is stretched by the scale when shrinking.
        const double stretch = std::max(scale, 1.0);
        const double support = 3.0 * stretch;
        const double center = (i + 0.5) * scale;
        const int lo = static_cast<int>(std::floor(center - support));
        const int hi = static_cast<int>(std::ceil(center + support));
        double sum = 0.0;
        for (int j = lo; j <= hi; ++j) {
          const double w = Lanczos3((j + 0.5 - center) / stretch);
          if (w == 0.0) continue;
          c.index.push_back(Reflect101(j, src));
          c.weight.push_back(w);
          sum += w;
        }
        for (double& w : c.weight) w /= sum;
        break;
      }
    }
  }
  return out;
}

}  // namespace

ImageBuffer Resize(const ImageBuffer& img, int width, int height,
                   ResizeMode mode) {
  if (width < 1 || height < 1) {
    Fail(ErrorKind::kInvalidArgument,
         "resize target must be at least 1x1, got " + std::to_string(width) +
             "x" + std::to_string(height));
  }
  if (img.width() == width && img.height() == height) return img;

  const int ch = img.channels();
  const auto horiz = Contributions(img.width(), width, mode);
  const auto vert = Contributions(img.height(), height, mode);

  ImageBuffer tmp(width, img.height(), ch);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < width; ++x) {
      const Contribution& c = horiz[x];
      for (int k = 0; k < ch; ++k) {
        double acc = 0.0;
        for (std::size_t t = 0; t < c.index.size(); ++t)
          acc += c.weight[t] * img.at(c.index[t], y, k);
        tmp.at(x, y, k) = acc;
      }
    }
  }

  ImageBuffer out(width, height, ch);
  for (int y = 0; y < height; ++y) {
    const Contribution& c = vert[y];
    for (int x = 0; x < width; ++x) {
      for (int k = 0; k < ch; ++k) {
        double acc = 0.0;
        for (std::size_t t = 0; t < c.index.size(); ++t)
          acc += c.weight[t] * tmp.at(x, c.index[t], k);
        out.at(x, y, k) = acc;
      }
    }
  }
  return out;
}

}  // namespace sim2real
