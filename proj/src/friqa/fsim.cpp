#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>

#include "imgcore/fft.hpp"
#include "sim2real/error.hpp"
#include "sim2real/friqa.hpp"

namespace sim2real::friqa {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEnergyEpsilon = 1e-4;

int FreqIndex(int k, int n) { return k <= (n - 1) / 2 ? k : k - n; }

// Normalized frequency coordinate of bin k, matching the filter-bank grid
// convention (odd sizes normalize by n-1).
double FreqCoord(int k, int n) {
  return FreqIndex(k, n) / static_cast<double>(n % 2 ? std::max(n - 1, 1) : n);
}

// Image-independent part of the phase congruency computation.
struct FilterBank {
  int width = 0;
  int height = 0;
  // filters[o * scales + s], unshifted frequency layout
  std::vector<std::vector<double>> filters;
  // per orientation: energy of the finest filter, and the pairwise sums
  // used by the noise model
  std::vector<double> em_n;
  std::vector<double> sum_an2;
  std::vector<double> sum_aiaj;
};

std::shared_ptr<const FilterBank> BuildBank(int w, int h, const FsimParams& p) {
  auto bank = std::make_shared<FilterBank>();
  bank->width = w;
  bank->height = h;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<double> radius(n), theta(n), lowpass(n);
  for (int ky = 0; ky < h; ++ky) {
    const double y = FreqCoord(ky, h);
    for (int kx = 0; kx < w; ++kx) {
      const double x = FreqCoord(kx, w);
      const std::size_t i = static_cast<std::size_t>(ky) * w + kx;
      const double r = std::sqrt(x * x + y * y);
      lowpass[i] = 1.0 / (1.0 + std::pow(r / 0.45, 2 * 15));
      radius[i] = r;
      theta[i] = std::atan2(-y, x);
    }
  }
  radius[0] = 1.0;

  const double log_sigma = std::log(p.sigma_onf);
  std::vector<std::vector<double>> log_gabor(p.scales, std::vector<double>(n));
  for (int s = 0; s < p.scales; ++s) {
    const double fo = 1.0 / (p.min_wavelength * std::pow(p.mult, s));
    for (std::size_t i = 0; i < n; ++i) {
      const double lr = std::log(radius[i] / fo);
      log_gabor[s][i] = std::exp(-(lr * lr) / (2.0 * log_sigma * log_sigma)) * lowpass[i];
    }
    log_gabor[s][0] = 0.0;
  }

  const double theta_sigma = kPi / p.orientations / p.d_theta_on_sigma;
  bank->filters.resize(static_cast<std::size_t>(p.orientations) * p.scales);
  bank->em_n.resize(p.orientations);
  bank->sum_an2.resize(p.orientations);
  bank->sum_aiaj.resize(p.orientations);
  for (int o = 0; o < p.orientations; ++o) {
    const double angl = o * kPi / p.orientations;
    const double ca = std::cos(angl);
    const double sa = std::sin(angl);
    std::vector<double> spread(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double st = std::sin(theta[i]);
      const double ct = std::cos(theta[i]);
      const double ds = st * ca - ct * sa;
      const double dc = ct * ca + st * sa;
      const double dtheta = std::abs(std::atan2(ds, dc));
      spread[i] = std::exp(-(dtheta * dtheta) / (2.0 * theta_sigma * theta_sigma));
    }
    // Hermitian parts of the filters give the spatial (real) filter
    // responses; their pixel-wise products sum to the same values in the
    // frequency domain.
    std::vector<std::vector<double>> herm(p.scales, std::vector<double>(n));
    for (int s = 0; s < p.scales; ++s) {
      std::vector<double>& f = bank->filters[o * p.scales + s];
      f.resize(n);
      for (std::size_t i = 0; i < n; ++i) f[i] = log_gabor[s][i] * spread[i];
      for (int ky = 0; ky < h; ++ky) {
        const int my = (h - ky) % h;
        for (int kx = 0; kx < w; ++kx) {
          const int mx = (w - kx) % w;
          herm[s][static_cast<std::size_t>(ky) * w + kx] =
              0.5 * (f[static_cast<std::size_t>(ky) * w + kx] +
                     f[static_cast<std::size_t>(my) * w + mx]);
        }
      }
    }
    double em = 0.0;
    for (double v : bank->filters[o * p.scales]) em += v * v;
    bank->em_n[o] = em;
    double an2 = 0.0;
    double aiaj = 0.0;
    for (int si = 0; si < p.scales; ++si) {
      for (std::size_t i = 0; i < n; ++i) an2 += herm[si][i] * herm[si][i];
      for (int sj = si + 1; sj < p.scales; ++sj)
        for (std::size_t i = 0; i < n; ++i) aiaj += herm[si][i] * herm[sj][i];
    }
    bank->sum_an2[o] = an2;
    bank->sum_aiaj[o] = aiaj;
  }
  return bank;
}

std::shared_ptr<const FilterBank> CachedBank(int w, int h, const FsimParams& p) {
  using Key = std::tuple<int, int, int, int, double, double, double, double>;
  static std::mutex mu;
  static std::map<Key, std::shared_ptr<const FilterBank>> cache;
  const Key key{w, h, p.scales, p.orientations, p.min_wavelength, p.mult,
                p.sigma_onf, p.d_theta_on_sigma};
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  auto bank = BuildBank(w, h, p);
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(key, std::move(bank)).first->second;
}

double Median(std::vector<double> v) {
  const std::size_t n = v.size();
  auto mid = v.begin() + n / 2;
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

// F x F block mean sampled every F pixels, reflect-101 at the borders.
ImageBuffer BlockDownsample(const ImageBuffer& img, int f) {
  const int w = (img.width() + f - 1) / f;
  const int h = (img.height() + f - 1) / f;
  const int off = (f - 1) / 2;
  ImageBuffer out(w, h, 1);
  const double norm = 1.0 / (f * f);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = 0; dy < f; ++dy) {
        const int sy = Reflect101(y * f - off + dy, img.height());
        for (int dx = 0; dx < f; ++dx)
          acc += img.at(Reflect101(x * f - off + dx, img.width()), sy);
      }
      out.at(x, y) = acc * norm;
    }
  return out;
}

ImageBuffer GradientMagnitude(const ImageBuffer& img) {
  static const Kernel2D dx(3, {3 / 16.0, 0.0, -3 / 16.0, 10 / 16.0, 0.0,
                               -10 / 16.0, 3 / 16.0, 0.0, -3 / 16.0});
  static const Kernel2D dy(3, {3 / 16.0, 10 / 16.0, 3 / 16.0, 0.0, 0.0, 0.0,
                               -3 / 16.0, -10 / 16.0, -3 / 16.0});
  const ImageBuffer gx = Convolve2D(img, dx);
  const ImageBuffer gy = Convolve2D(img, dy);
  ImageBuffer out(img.width(), img.height(), 1);
  for (std::size_t i = 0; i < out.pixel_count(); ++i)
    out.data()[i] = std::hypot(gx.data()[i], gy.data()[i]);
  return out;
}

}  // namespace

ImageBuffer PhaseCongruency(const ImageBuffer& luma, const FsimParams& p) {
  if (luma.channels() != 1) {
    Fail(ErrorKind::kInvalidArgument, "phase congruency expects luma input");
  }
  const int w = luma.width();
  const int h = luma.height();
  const std::size_t n = luma.pixel_count();
  const auto bank = CachedBank(w, h, p);

  fft::ComplexGrid spectrum(w, h);
  for (std::size_t i = 0; i < n; ++i) spectrum[i] = luma.data()[i];
  fft::Forward(spectrum);

  std::vector<double> energy_all(n, 0.0), an_all(n, 0.0);
  std::vector<fft::ComplexGrid> eo;
  eo.reserve(p.scales);
  std::vector<double> sum_e(n), sum_o(n), sum_an(n), energy(n), e2(n);
  for (int o = 0; o < p.orientations; ++o) {
    eo.clear();
    std::fill(sum_e.begin(), sum_e.end(), 0.0);
    std::fill(sum_o.begin(), sum_o.end(), 0.0);
    std::fill(sum_an.begin(), sum_an.end(), 0.0);
    std::fill(energy.begin(), energy.end(), 0.0);
    for (int s = 0; s < p.scales; ++s) {
      const std::vector<double>& filt = bank->filters[o * p.scales + s];
      fft::ComplexGrid g(w, h);
      for (std::size_t i = 0; i < n; ++i) g[i] = spectrum[i] * filt[i];
      fft::Inverse(g);
      for (std::size_t i = 0; i < n; ++i) {
        sum_an[i] += std::abs(g[i]);
        sum_e[i] += g[i].real();
        sum_o[i] += g[i].imag();
      }
      eo.push_back(std::move(g));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double x_energy = std::hypot(sum_e[i], sum_o[i]) + kEnergyEpsilon;
      const double mean_e = sum_e[i] / x_energy;
      const double mean_o = sum_o[i] / x_energy;
      double acc = 0.0;
      for (int s = 0; s < p.scales; ++s) {
        const double e = eo[s][i].real();
        const double od = eo[s][i].imag();
        acc += e * mean_e + od * mean_o - std::abs(e * mean_o - od * mean_e);
      }
      energy[i] = acc;
      e2[i] = std::norm(eo[0][i]);
    }
    // Noise threshold from the finest-scale response statistics.
    const double mean_e2n = -Median(e2) / std::log(0.5);
    const double noise_power = mean_e2n / bank->em_n[o];
    const double est_noise_energy2 =
        2.0 * noise_power * bank->sum_an2[o] + 4.0 * noise_power * bank->sum_aiaj[o];
    const double tau = std::sqrt(est_noise_energy2 / 2.0);
    const double est_noise_energy = tau * std::sqrt(kPi / 2.0);
    const double est_noise_sigma = std::sqrt((2.0 - kPi / 2.0) * tau * tau);
    const double threshold = (est_noise_energy + p.noise_k * est_noise_sigma) / 1.7;
    for (std::size_t i = 0; i < n; ++i) {
      energy_all[i] += std::max(energy[i] - threshold, 0.0);
      an_all[i] += sum_an[i];
    }
  }
  ImageBuffer pc(w, h, 1);
  for (std::size_t i = 0; i < n; ++i)
    pc.data()[i] = an_all[i] > 0.0 ? energy_all[i] / an_all[i] : 0.0;
  return pc;
}

FRScore Fsim(const ImageBuffer& a, const ImageBuffer& b, const FsimParams& p) {
  if (!a.same_shape(b)) {
    Fail(ErrorKind::kInvalidArgument, "fsim: dimension mismatch");
  }
  ImageBuffer ya = AsLuma(a);
  ImageBuffer yb = AsLuma(b);
  // Work at roughly 256 px on the short side.
  const int f = std::max(1, static_cast<int>(std::lround(std::min(ya.width(), ya.height()) / 256.0)));
  if (f > 1) {
    ya = BlockDownsample(ya, f);
    yb = BlockDownsample(yb, f);
  }
  const ImageBuffer pc1 = PhaseCongruency(ya, p);
  const ImageBuffer pc2 = PhaseCongruency(yb, p);
  const ImageBuffer g1 = GradientMagnitude(ya);
  const ImageBuffer g2 = GradientMagnitude(yb);

  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < pc1.pixel_count(); ++i) {
    const double p1 = pc1.data()[i];
    const double p2 = pc2.data()[i];
    const double m1 = g1.data()[i];
    const double m2 = g2.data()[i];
    const double s_pc = (2.0 * p1 * p2 + p.t1) / (p1 * p1 + p2 * p2 + p.t1);
    const double s_g = (2.0 * m1 * m2 + p.t2) / (m1 * m1 + m2 * m2 + p.t2);
    const double pcm = std::max(p1, p2);
    num += s_g * s_pc * pcm;
    den += pcm;
  }
  // Both phase-congruency maps empty: nothing to disagree about.
  if (den < p.pc_guard) return {Metric::kFsim, 1.0, true};
  return {Metric::kFsim, num / den, true};
}

}  // namespace sim2real::friqa
