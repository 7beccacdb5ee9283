#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "sim2real/error.hpp"
#include "sim2real/friqa.hpp"

namespace sim2real::friqa {
namespace {

void RequireSameShape(const ImageBuffer& a, const ImageBuffer& b, const char* op) {
  if (!a.same_shape(b)) {
    Fail(ErrorKind::kInvalidArgument,
         std::string(op) + ": dimension mismatch (" + std::to_string(a.width()) +
             "x" + std::to_string(a.height()) + "x" + std::to_string(a.channels()) +
             " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()) +
             "x" + std::to_string(b.channels()) + ")");
  }
}

// Correlates with `taps` separably, keeping only fully-contained windows.
std::vector<double> ValidFilter(std::span<const double> src, int w, int h,
                                const std::vector<double>& taps) {
  const int k = static_cast<int>(taps.size());
  const int ow = w - k + 1;
  const int oh = h - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    const double* in = src.data() + static_cast<std::size_t>(y) * w;
    double* out = rows.data() + static_cast<std::size_t>(y) * ow;
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t) acc += taps[t] * in[x + t];
      out[x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh, 0.0);
  for (int y = 0; y < oh; ++y) {
    double* o = out.data() + static_cast<std::size_t>(y) * ow;
    for (int t = 0; t < k; ++t) {
      const double* r = rows.data() + static_cast<std::size_t>(y + t) * ow;
      for (int x = 0; x < ow; ++x) o[x] += taps[t] * r[x];
    }
  }
  return out;
}

struct SsimMaps {
  int width = 0;
  int height = 0;
  std::vector<double> ssim;
  std::vector<double> cs;
};

SsimMaps ComputeMaps(const ImageBuffer& la, const ImageBuffer& lb,
                     const SsimParams& p) {
  const int w = la.width();
  const int h = la.height();
  if (std::min(w, h) < p.window) {
    Fail(ErrorKind::kInvalidArgument,
         "ssim: image " + std::to_string(w) + "x" + std::to_string(h) +
             " smaller than the " + std::to_string(p.window) + "px window");
  }
  const std::vector<double> taps = GaussianTaps(p.window, p.sigma);
  const std::span<const double> x = la.data();
  const std::span<const double> y = lb.data();
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = ValidFilter(x, w, h, taps);
  const auto my = ValidFilter(y, w, h, taps);
  const auto exx = ValidFilter(xx, w, h, taps);
  const auto eyy = ValidFilter(yy, w, h, taps);
  const auto exy = ValidFilter(xy, w, h, taps);

  const double c1 = p.c1();
  const double c2 = p.c2();
  SsimMaps m;
  m.width = w - p.window + 1;
  m.height = h - p.window + 1;
  m.ssim.resize(mx.size());
  m.cs.resize(mx.size());
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = exx[i] - mx[i] * mx[i];
    const double vy = eyy[i] - my[i] * my[i];
    const double cov = exy[i] - mx[i] * my[i];
    const double lum = (2.0 * mx[i] * my[i] + c1) / (mx[i] * mx[i] + my[i] * my[i] + c1);
    const double cs = (2.0 * cov + c2) / (vx + vy + c2);
    m.cs[i] = cs;
    m.ssim[i] = lum * cs;
  }
  return m;
}

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

const ImageBuffer& Luma(const ImageBuffer& img, ImageBuffer& scratch) {
  if (img.channels() == 1) return img;
  scratch = ToLuma(img);
  return scratch;
}

}  // namespace

const char* MetricName(Metric m) noexcept {
  switch (m) {
    case Metric::kPsnr: return "psnr";
    case Metric::kSsim: return "ssim";
    case Metric::kMsSsim: return "ms_ssim";
    case Metric::kCwSsim: return "cw_ssim";
    case Metric::kFsim: return "fsim";
    case Metric::kLpips: return "lpips";
  }
  return "?";
}

bool HigherIsBetter(Metric m) noexcept { return m != Metric::kLpips; }

FRScore Psnr(const ImageBuffer& a, const ImageBuffer& b) {
  RequireSameShape(a, b, "psnr");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(a.data().size());
  const double v = mse == 0.0 ? kPsnrCap : std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
  return {Metric::kPsnr, v, true};
}

ImageBuffer SsimMap(const ImageBuffer& a, const ImageBuffer& b,
                    const SsimParams& params) {
  RequireSameShape(a, b, "ssim");
  ImageBuffer sa, sb;
  SsimMaps m = ComputeMaps(Luma(a, sa), Luma(b, sb), params);
  return ImageBuffer(m.width, m.height, 1, std::move(m.ssim));
}

FRScore Ssim(const ImageBuffer& a, const ImageBuffer& b, const SsimParams& params) {
  RequireSameShape(a, b, "ssim");
  ImageBuffer sa, sb;
  const SsimMaps m = ComputeMaps(Luma(a, sa), Luma(b, sb), params);
  return {Metric::kSsim, Mean(m.ssim), true};
}

FRScore MsSsim(const ImageBuffer& a, const ImageBuffer& b, const SsimParams& params) {
  RequireSameShape(a, b, "ms_ssim");
  const int scales = static_cast<int>(kMsSsimWeights.size());
  const int min_dim = params.window << (scales - 1);
  if (std::min(a.width(), a.height()) < min_dim) {
    Fail(ErrorKind::kInvalidArgument,
         "ms_ssim: image too small for " + std::to_string(scales) +
             " scales (need min dimension >= " + std::to_string(min_dim) + ")");
  }
  ImageBuffer x = AsLuma(a);
  ImageBuffer y = AsLuma(b);
  double product = 1.0;
  for (int s = 0; s < scales; ++s) {
    const SsimMaps m = ComputeMaps(x, y, params);
    // Negative contrast-structure terms are clamped before the fractional power.
    const double term = s + 1 < scales ? Mean(m.cs) : Mean(m.ssim);
    product *= std::pow(std::max(term, 0.0), kMsSsimWeights[s]);
    if (s + 1 < scales) {
      x = Downsample2(x);
      y = Downsample2(y);
    }
  }
  return {Metric::kMsSsim, product, true};
}

nlohmann::json ConfigEcho(const SsimParams& ssim, const CwSsimParams& cw,
                          const FsimParams& fsim) {
  return {
      {"color_space", "luma_bt601"},
      {"psnr", {{"cap_db", kPsnrCap}, {"peak", 255.0}}},
      {"ssim",
       {{"window", ssim.window}, {"sigma", ssim.sigma}, {"k1", ssim.k1},
        {"k2", ssim.k2}, {"dynamic_range", ssim.dynamic_range},
        {"region", "valid"}}},
      {"ms_ssim",
       {{"scales", kMsSsimWeights.size()},
        {"weights", kMsSsimWeights},
        {"downsample", "gaussian5x5_sigma1_decimate2"}}},
      {"cw_ssim",
       {{"levels", cw.levels}, {"orientations", cw.orientations},
        {"window", cw.window}, {"k", cw.k}}},
      {"fsim",
       {{"scales", fsim.scales}, {"orientations", fsim.orientations},
        {"min_wavelength", fsim.min_wavelength}, {"mult", fsim.mult},
        {"sigma_onf", fsim.sigma_onf}, {"d_theta_on_sigma", fsim.d_theta_on_sigma},
        {"noise_k", fsim.noise_k}, {"t1", fsim.t1}, {"t2", fsim.t2},
        {"pc_guard", fsim.pc_guard}, {"gradient", "scharr"}}},
  };
}

}  // namespace sim2real::friqa
