#pragma once

#include <complex>
#include <cstddef>
#include <memory>

namespace sim2real::fft {

// 16-byte aligned complex buffer compatible with FFTW's SIMD plans.
class ComplexGrid {
 public:
  ComplexGrid(int width, int height);
  ComplexGrid(const ComplexGrid& other);
  ComplexGrid& operator=(const ComplexGrid& other);
  ComplexGrid(ComplexGrid&&) noexcept = default;
  ComplexGrid& operator=(ComplexGrid&&) noexcept = default;

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(width_) * height_;
  }
  std::complex<double>* data() noexcept { return data_.get(); }
  const std::complex<double>* data() const noexcept { return data_.get(); }
  std::complex<double>& operator[](std::size_t i) noexcept { return data_[i]; }
  const std::complex<double>& operator[](std::size_t i) const noexcept {
    return data_[i];
  }
  std::complex<double>& at(int x, int y) noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  const std::complex<double>& at(int x, int y) const noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

 private:
  struct Free {
    void operator()(std::complex<double>* p) const;
  };
  int width_;
  int height_;
  std::unique_ptr<std::complex<double>[], Free> data_;
};

// Unnormalized forward DFT, in place.
void Forward(ComplexGrid& grid);

// Inverse DFT including the 1/N factor, in place.
void Inverse(ComplexGrid& grid);

}  // namespace sim2real::fft
