#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sim2real {

// Decoded raster. Samples are stored row-major and interleaved per pixel as
// 64-bit floats with a nominal [0,255] range; 8-bit quantization only happens
// at the PNG boundary.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, int channels, double fill = 0.0);
  ImageBuffer(int width, int height, int channels, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  double at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }

  bool same_shape(const ImageBuffer& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// Square filter kernel with an odd side length.
class Kernel2D {
 public:
  Kernel2D(int size, std::vector<double> taps);

  static Kernel2D Gaussian(int size, double sigma);
  static Kernel2D Box(int size);
  static Kernel2D Identity(int size = 1);

  int size() const noexcept { return size_; }
  int radius() const noexcept { return size_ / 2; }
  double at(int row, int col) const { return taps_[row * size_ + col]; }
  std::span<const double> taps() const noexcept { return taps_; }

 private:
  int size_;
  std::vector<double> taps_;
};

// Normalized 1-D Gaussian taps of odd length `size`.
std::vector<double> GaussianTaps(int size, double sigma);

// Reflect-101 index mapping: -1 -> 1, n -> n-2.
int Reflect101(int i, int n) noexcept;

enum class ResizeMode { kNearest, kBilinear, kLanczos3 };

ImageBuffer Resize(const ImageBuffer& img, int width, int height,
                   ResizeMode mode);

// ITU-R BT.601 luma, unrounded.
ImageBuffer ToLuma(const ImageBuffer& img);

// Returns the image itself if single-channel, its luma otherwise.
ImageBuffer AsLuma(const ImageBuffer& img);

ImageBuffer Convolve2D(const ImageBuffer& img, const Kernel2D& kernel);

// Separable convolution with row taps then column taps, reflect-101 borders.
ImageBuffer ConvolveSeparable(const ImageBuffer& img,
                              std::span<const double> row_taps,
                              std::span<const double> col_taps);

// 5x5 Gaussian (sigma 1) low-pass followed by 2x decimation.
ImageBuffer Downsample2(const ImageBuffer& img);

// Element-wise helpers used by the metric modules.
ImageBuffer Multiply(const ImageBuffer& a, const ImageBuffer& b);

}  // namespace sim2real
