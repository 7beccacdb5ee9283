#include <string>

#include "sim2real/error.hpp"
#include "sim2real/image.hpp"

namespace sim2real {

int Reflect101(int i, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

namespace {

void RequireSingleChannel(const ImageBuffer& img, const char* op) {
  if (img.channels() != 1) {
    Fail(ErrorKind::kInvalidArgument,
         std::string(op) + " expects a single-channel image");
  }
}

std::vector<int> ReflectTable(int n, int radius) {
  std::vector<int> table(n + 2 * radius);
  for (int i = -radius; i < n + radius; ++i) table[i + radius] = Reflect101(i, n);
  return table;
}

}  // namespace

ImageBuffer Convolve2D(const ImageBuffer& img, const Kernel2D& kernel) {
  RequireSingleChannel(img, "convolve2d");
  const int w = img.width();
  const int h = img.height();
  const int r = kernel.radius();
  const std::vector<int> xs = ReflectTable(w, r);
  const std::vector<int> ys = ReflectTable(h, r);
  ImageBuffer out(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int ky = 0; ky < kernel.size(); ++ky) {
        const int sy = ys[y + ky];
        for (int kx = 0; kx < kernel.size(); ++kx) {
          acc += kernel.at(ky, kx) * img.at(xs[x + kx], sy);
        }
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

ImageBuffer ConvolveSeparable(const ImageBuffer& img,
                              std::span<const double> row_taps,
                              std::span<const double> col_taps) {
  RequireSingleChannel(img, "convolve_separable");
  if (row_taps.size() % 2 == 0 || col_taps.size() % 2 == 0) {
    Fail(ErrorKind::kInvalidArgument, "separable taps must have odd length");
  }
  const int w = img.width();
  const int h = img.height();
  const int rr = static_cast<int>(row_taps.size() / 2);
  const int cr = static_cast<int>(col_taps.size() / 2);
  const std::vector<int> xs = ReflectTable(w, rr);
  const std::vector<int> ys = ReflectTable(h, cr);

  ImageBuffer tmp(w, h, 1);
  auto src = img.data();
  auto mid = tmp.data();
  for (int y = 0; y < h; ++y) {
    const double* row = src.data() + static_cast<std::size_t>(y) * w;
    double* dst = mid.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < row_taps.size(); ++k) acc += row_taps[k] * row[xs[x + k]];
      dst[x] = acc;
    }
  }

  ImageBuffer out(w, h, 1);
  auto dst = out.data();
  for (int y = 0; y < h; ++y) {
    double* orow = dst.data() + static_cast<std::size_t>(y) * w;
    for (std::size_t k = 0; k < col_taps.size(); ++k) {
      const double t = col_taps[k];
      const double* irow = mid.data() + static_cast<std::size_t>(ys[y + k]) * w;
      for (int x = 0; x < w; ++x) orow[x] += t * irow[x];
    }
  }
  return out;
}

ImageBuffer Downsample2(const ImageBuffer& img) {
  RequireSingleChannel(img, "downsample2");
  if (img.width() < 2 || img.height() < 2) {
    Fail(ErrorKind::kInvalidArgument,
         "downsample2 needs at least 2x2, got " + std::to_string(img.width()) +
             "x" + std::to_string(img.height()));
  }
  static const std::vector<double> taps = GaussianTaps(5, 1.0);
  const ImageBuffer blurred = ConvolveSeparable(img, taps, taps);
  const int w = img.width() / 2;
  const int h = img.height() / 2;
  ImageBuffer out(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(x, y) = blurred.at(2 * x, 2 * y);
  return out;
}

}  // namespace sim2real
