#pragma once

#include <array>
#include <string>
#include <vector>

#include "json.hpp"
#include "sim2real/image.hpp"

namespace sim2real::friqa {

enum class Metric { kPsnr, kSsim, kMsSsim, kCwSsim, kFsim, kLpips };

const char* MetricName(Metric m) noexcept;
bool HigherIsBetter(Metric m) noexcept;

struct FRScore {
  Metric metric;
  double value;
  bool higher_better;
};

inline constexpr double kPsnrCap = 100.0;

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
};

inline constexpr std::array<double, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001,
                                                         0.2363, 0.1333};

struct CwSsimParams {
  int levels = 4;
  int orientations = 8;
  int window = 7;
  // Stabilizer; (0.01 * 255)^2 matches the SSIM luminance constant.
  double k = (0.01 * 255.0) * (0.01 * 255.0);
};

struct FsimParams {
  int scales = 4;
  int orientations = 4;
  double min_wavelength = 6.0;
  double mult = 2.0;
  double sigma_onf = 0.55;
  double d_theta_on_sigma = 1.2;
  double noise_k = 2.0;
  double t1 = 0.85;
  double t2 = 160.0;
  double pc_guard = 1e-8;
};

// PSNR from the MSE pooled over all samples; capped at kPsnrCap.
FRScore Psnr(const ImageBuffer& a, const ImageBuffer& b);

// Single-scale SSIM on luma, mean over all fully-contained windows.
FRScore Ssim(const ImageBuffer& a, const ImageBuffer& b,
             const SsimParams& params = {});

// Per-window SSIM map (valid region) for callers that need it.
ImageBuffer SsimMap(const ImageBuffer& a, const ImageBuffer& b,
                    const SsimParams& params = {});

FRScore MsSsim(const ImageBuffer& a, const ImageBuffer& b,
               const SsimParams& params = {});

FRScore CwSsim(const ImageBuffer& a, const ImageBuffer& b,
               const CwSsimParams& params = {});

FRScore Fsim(const ImageBuffer& a, const ImageBuffer& b,
             const FsimParams& params = {});

// Phase congruency map of a luma image, exposed for testing.
ImageBuffer PhaseCongruency(const ImageBuffer& luma, const FsimParams& params = {});

// One band of a complex steerable pyramid, decimated to its native size.
struct ComplexBand {
  int width = 0;
  int height = 0;
  std::vector<double> re;
  std::vector<double> im;
};

// Oriented bands at pyramid level `level` (1-based; level 1 is the finest
// oriented band).
std::vector<ComplexBand> SteerableBands(const ImageBuffer& luma, int level,
                                        int orientations);

struct LayerShape {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::size_t size() const {
    return static_cast<std::size_t>(channels) * height * width;
  }
  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

struct Layer {
  LayerShape shape;
  std::vector<float> data;  // channel-major (C, H, W)
};

struct LayerFeatures {
  std::vector<Layer> layers;
  std::string source_image_id;
};

struct LpipsWeights {
  std::vector<std::vector<double>> per_layer;

  static LpipsWeights FromJson(const nlohmann::json& j);
  static LpipsWeights Load(const std::string& path);
};

FRScore LpipsFromFeatures(const LayerFeatures& a, const LayerFeatures& b,
                          const LpipsWeights& weights);

// Layer shapes sidecar: {"backbone": "...", "layers": [{channels, height, width}]}
std::vector<LayerShape> LoadLayerShapes(const std::string& path);

// Reads one image's features from an FVEC file (count 1, dim = sum of layer
// sizes) using the shapes sidecar.
LayerFeatures LoadLayerFeatures(const std::string& fvec_path,
                                const std::vector<LayerShape>& shapes);

nlohmann::json ConfigEcho(const SsimParams& ssim, const CwSsimParams& cw,
                          const FsimParams& fsim);

}  // namespace sim2real::friqa
