#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "imgcore/fft.hpp"
#include "sim2real/error.hpp"
#include "sim2real/friqa.hpp"

namespace sim2real::friqa {
namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

// Signed frequency index of DFT bin k for length n.
int FreqIndex(int k, int n) { return k <= (n - 1) / 2 ? k : k - n; }

// Raised-cosine transition on log2 radius: 0 below -1, 1 above 0.
double HighMask(double x) {
  if (x >= 0.0) return 1.0;
  if (x <= -1.0) return 0.0;
  return std::cos(kPi / 2.0 * x);
}
double LowMask(double x) {
  if (x >= 0.0) return 0.0;
  if (x <= -1.0) return 1.0;
  return std::abs(std::sin(kPi / 2.0 * x));
}

// Frequency-domain state of the pyramid at one level, unshifted layout.
struct Spectrum {
  int width;
  int height;
  std::vector<double> log_rad;
  std::vector<double> angle;
  fft::ComplexGrid dft;
};

Spectrum TopLevel(const ImageBuffer& luma) {
  const int w = luma.width();
  const int h = luma.height();
  Spectrum s{w, h, std::vector<double>(luma.pixel_count()),
             std::vector<double>(luma.pixel_count()), fft::ComplexGrid(w, h)};
  for (std::size_t i = 0; i < luma.pixel_count(); ++i) s.dft[i] = luma.data()[i];
  fft::Forward(s.dft);
  for (int ky = 0; ky < h; ++ky) {
    const double fy = FreqIndex(ky, h) / (h / 2.0);
    for (int kx = 0; kx < w; ++kx) {
      const double fx = FreqIndex(kx, w) / (w / 2.0);
      const std::size_t i = static_cast<std::size_t>(ky) * w + kx;
      s.angle[i] = std::atan2(fy, fx);
      s.log_rad[i] = std::log2(std::sqrt(fx * fx + fy * fy));
    }
  }
  // DC borrows the radius of its horizontal neighbour.
  s.log_rad[0] = w > 1 ? std::log2(1.0 / (w / 2.0)) : 0.0;
  return s;
}

// Keeps the central (low) frequencies: decimation by two in space.
Spectrum Crop(const Spectrum& s) {
  const int lw = (s.width + 1) / 2;
  const int lh = (s.height + 1) / 2;
  Spectrum out{lw, lh, std::vector<double>(static_cast<std::size_t>(lw) * lh),
               std::vector<double>(static_cast<std::size_t>(lw) * lh),
               fft::ComplexGrid(lw, lh)};
  for (int ky = 0; ky < lh; ++ky) {
    int sy = FreqIndex(ky, lh);
    if (sy < 0) sy += s.height;
    for (int kx = 0; kx < lw; ++kx) {
      int sx = FreqIndex(kx, lw);
      if (sx < 0) sx += s.width;
      const std::size_t src = static_cast<std::size_t>(sy) * s.width + sx;
      const std::size_t dst = static_cast<std::size_t>(ky) * lw + kx;
      out.log_rad[dst] = s.log_rad[src];
      out.angle[dst] = s.angle[src];
      out.dft[dst] = s.dft[src];
    }
  }
  return out;
}

double AngularMask(double theta, int orientations) {
  const int order = orientations - 1;
  double fact_order = 1.0;
  for (int i = 2; i <= order; ++i) fact_order *= i;
  double fact_2order = 1.0;
  for (int i = 2; i <= 2 * order; ++i) fact_2order *= i;
  const double c = std::pow(2.0, 2 * order) * fact_order * fact_order /
                   (orientations * fact_2order);
  const double wrapped = std::fmod(kPi + theta, 2.0 * kPi);
  const double alfa = (wrapped < 0 ? wrapped + 2.0 * kPi : wrapped) - kPi;
  if (std::abs(alfa) >= kPi / 2.0) return 0.0;
  return 2.0 * std::sqrt(c) * std::pow(std::cos(theta), order);
}

// Mean over fully-contained box windows of `v`.
std::vector<double> BoxMeans(const std::vector<double>& v, int w, int h, int k) {
  const int ow = w - k + 1;
  const int oh = h - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t) acc += v[static_cast<std::size_t>(y) * w + x + t];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  const double norm = 1.0 / (k * k);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t) acc += rows[static_cast<std::size_t>(y + t) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc * norm;
    }
  return out;
}

}  // namespace

std::vector<ComplexBand> SteerableBands(const ImageBuffer& luma, int level,
                                        int orientations) {
  if (luma.channels() != 1) {
    Fail(ErrorKind::kInvalidArgument, "steerable pyramid expects luma input");
  }
  if (level < 1 || orientations < 1) {
    Fail(ErrorKind::kInvalidArgument, "steerable pyramid needs level, orientations >= 1");
  }
  Spectrum s = TopLevel(luma);
  for (std::size_t i = 0; i < s.dft.size(); ++i) s.dft[i] *= LowMask(s.log_rad[i]);
  for (int d = 1; d < level; ++d) {
    s = Crop(s);
    for (std::size_t i = 0; i < s.dft.size(); ++i) s.dft[i] *= LowMask(s.log_rad[i] + d);
  }

  // (-i)^(orientations-1)
  cd phase{1.0, 0.0};
  for (int i = 0; i < orientations - 1; ++i) phase *= cd{0.0, -1.0};

  std::vector<ComplexBand> bands;
  bands.reserve(orientations);
  for (int b = 0; b < orientations; ++b) {
    fft::ComplexGrid g(s.width, s.height);
    const double theta_b = kPi * b / orientations;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double m = HighMask(s.log_rad[i] + level) *
                       AngularMask(s.angle[i] - theta_b, orientations);
      g[i] = m == 0.0 ? cd{} : phase * s.dft[i] * m;
    }
    fft::Inverse(g);
    ComplexBand band{s.width, s.height, std::vector<double>(g.size()),
                     std::vector<double>(g.size())};
    for (std::size_t i = 0; i < g.size(); ++i) {
      band.re[i] = g[i].real();
      band.im[i] = g[i].imag();
    }
    bands.push_back(std::move(band));
  }
  return bands;
}

FRScore CwSsim(const ImageBuffer& a, const ImageBuffer& b, const CwSsimParams& p) {
  if (!a.same_shape(b)) {
    Fail(ErrorKind::kInvalidArgument, "cw_ssim: dimension mismatch");
  }
  const int min_dim = (1 << p.levels) * 8;
  if (std::min(a.width(), a.height()) < min_dim) {
    Fail(ErrorKind::kInvalidArgument,
         "cw_ssim: image too small (need min dimension >= " +
             std::to_string(min_dim) + ")");
  }
  const auto ba = SteerableBands(AsLuma(a), p.levels, p.orientations);
  const auto bb = SteerableBands(AsLuma(b), p.levels, p.orientations);

  double total = 0.0;
  for (int o = 0; o < p.orientations; ++o) {
    const ComplexBand& x = ba[o];
    const ComplexBand& y = bb[o];
    const std::size_t n = x.re.size();
    std::vector<double> corr_re(n), corr_im(n), varr(n);
    for (std::size_t i = 0; i < n; ++i) {
      // x * conj(y)
      corr_re[i] = x.re[i] * y.re[i] + x.im[i] * y.im[i];
      corr_im[i] = x.im[i] * y.re[i] - x.re[i] * y.im[i];
      varr[i] = (x.re[i] * x.re[i] + x.im[i] * x.im[i]) +
                (y.re[i] * y.re[i] + y.im[i] * y.im[i]);
    }
    const auto sre = BoxMeans(corr_re, x.width, x.height, p.window);
    const auto sim = BoxMeans(corr_im, x.width, x.height, p.window);
    const auto sv = BoxMeans(varr, x.width, x.height, p.window);
    double band_sum = 0.0;
    for (std::size_t i = 0; i < sv.size(); ++i) {
      band_sum += (2.0 * std::hypot(sre[i], sim[i]) + p.k) / (sv[i] + p.k);
    }
    total += band_sum / static_cast<double>(sv.size());
  }
  return {Metric::kCwSsim, total / p.orientations, true};
}

}  // namespace sim2real::friqa
