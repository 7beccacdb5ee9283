#include "imgcore/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <new>
#include <tuple>

namespace sim2real::fft {
namespace {

// Planner calls are not thread-safe in FFTW; execution with the new-array
// interface is. Plans are created once per shape and reused.
std::mutex g_plan_mutex;
std::map<std::tuple<int, int, int>, fftw_plan> g_plans;

fftw_plan PlanFor(int width, int height, int sign) {
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto key = std::make_tuple(width, height, sign);
  auto it = g_plans.find(key);
  if (it != g_plans.end()) return it->second;
  auto* scratch = fftw_alloc_complex(static_cast<std::size_t>(width) * height);
  fftw_plan plan = fftw_plan_dft_2d(height, width, scratch, scratch, sign,
                                    FFTW_ESTIMATE);
  fftw_free(scratch);
  g_plans.emplace(key, plan);
  return plan;
}

std::complex<double>* Allocate(std::size_t n) {
  auto* p = reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(n));
  if (p == nullptr) throw std::bad_alloc();
  return p;
}

}  // namespace

void ComplexGrid::Free::operator()(std::complex<double>* p) const {
  fftw_free(p);
}

ComplexGrid::ComplexGrid(int width, int height)
    : width_(width), height_(height), data_(Allocate(size())) {
  std::fill(data_.get(), data_.get() + size(), std::complex<double>{});
}

ComplexGrid::ComplexGrid(const ComplexGrid& other)
    : width_(other.width_), height_(other.height_), data_(Allocate(other.size())) {
  std::copy(other.data(), other.data() + size(), data_.get());
}

ComplexGrid& ComplexGrid::operator=(const ComplexGrid& other) {
  if (this != &other) {
    ComplexGrid copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void Forward(ComplexGrid& grid) {
  fftw_plan plan = PlanFor(grid.width(), grid.height(), FFTW_FORWARD);
  auto* p = reinterpret_cast<fftw_complex*>(grid.data());
  fftw_execute_dft(plan, p, p);
}

void Inverse(ComplexGrid& grid) {
  fftw_plan plan = PlanFor(grid.width(), grid.height(), FFTW_BACKWARD);
  auto* p = reinterpret_cast<fftw_complex*>(grid.data());
  fftw_execute_dft(plan, p, p);
  const double scale = 1.0 / static_cast<double>(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] *= scale;
}

}  // namespace sim2real::fft
