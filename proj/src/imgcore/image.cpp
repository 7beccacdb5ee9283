#include "sim2real/image.hpp"

#include <cmath>
#include <string>

#include "sim2real/error.hpp"

namespace sim2real {
namespace {

void CheckShape(int width, int height, int channels) {
  if (width < 1 || height < 1) {
    Fail(ErrorKind::kInvalidArgument,
         "image dimensions must be positive, got " + std::to_string(width) +
             "x" + std::to_string(height));
  }
  if (channels != 1 && channels != 3) {
    Fail(ErrorKind::kInvalidArgument,
         "image must have 1 or 3 channels, got " + std::to_string(channels));
  }
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  CheckShape(width, height, channels);
  data_.assign(pixel_count() * channels, fill);
}

ImageBuffer::ImageBuffer(int width, int height, int channels,
                         std::vector<double> data)
    : width_(width), height_(height), channels_(channels),
      data_(std::move(data)) {
  CheckShape(width, height, channels);
  if (data_.size() != pixel_count() * channels) {
    Fail(ErrorKind::kInvalidArgument,
         "image data length " + std::to_string(data_.size()) +
             " does not match " + std::to_string(width) + "x" +
             std::to_string(height) + "x" + std::to_string(channels));
  }
}

Kernel2D::Kernel2D(int size, std::vector<double> taps)
    : size_(size), taps_(std::move(taps)) {
  if (size < 1 || size % 2 == 0) {
    Fail(ErrorKind::kInvalidArgument,
         "kernel size must be odd and positive, got " + std::to_string(size));
  }
  if (taps_.size() != static_cast<std::size_t>(size) * size) {
    Fail(ErrorKind::kInvalidArgument, "kernel tap count does not match size");
  }
}

std::vector<double> GaussianTaps(int size, double sigma) {
  if (size < 1 || size % 2 == 0 || !(sigma > 0.0)) {
    Fail(ErrorKind::kInvalidArgument, "gaussian needs odd size and sigma > 0");
  }
  std::vector<double> taps(size);
  const int r = size / 2;
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    taps[i + r] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += taps[i + r];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

Kernel2D Kernel2D::Gaussian(int size, double sigma) {
  const std::vector<double> g = GaussianTaps(size, sigma);
  std::vector<double> taps(static_cast<std::size_t>(size) * size);
  double sum = 0.0;
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) sum += taps[r * size + c] = g[r] * g[c];
  for (double& t : taps) t /= sum;
  return Kernel2D(size, std::move(taps));
}

Kernel2D Kernel2D::Box(int size) {
  return Kernel2D(size, std::vector<double>(static_cast<std::size_t>(size) * size,
                                            1.0 / (size * size)));
}

Kernel2D Kernel2D::Identity(int size) {
  std::vector<double> taps(static_cast<std::size_t>(size) * size, 0.0);
  taps[(size / 2) * size + size / 2] = 1.0;
  return Kernel2D(size, std::move(taps));
}

ImageBuffer ToLuma(const ImageBuffer& img) {
  if (img.channels() != 3) {
    Fail(ErrorKind::kInvalidArgument,
         "to_luma expects 3 channels, got " + std::to_string(img.channels()));
  }
  ImageBuffer out(img.width(), img.height(), 1);
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
  }
  return out;
}

ImageBuffer AsLuma(const ImageBuffer& img) {
  return img.channels() == 1 ? img : ToLuma(img);
}

ImageBuffer Multiply(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) Fail(ErrorKind::kInvalidArgument, "shape mismatch");
  ImageBuffer out = a;
  auto o = out.data();
  auto s = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= s[i];
  return out;
}

}  // namespace sim2real
