#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "sim2real/image.hpp"

namespace sim2real::nriqa {

inline constexpr int kFeatureCount = 36;
using FeatureVector = std::array<double, kFeatureCount>;

// Mean-subtracted contrast-normalized coefficients, 7x7 Gaussian (sigma 7/6)
// local statistics, C = 1.
ImageBuffer Mscn(const ImageBuffer& luma);

struct GgdFit {
  double alpha;
  double sigma2;
};
struct AggdFit {
  double alpha;
  double mean;
  double left_var;
  double right_var;
};

inline constexpr std::size_t kMinFitSamples = 100;

GgdFit FitGgd(std::span<const double> samples);
AggdFit FitAggd(std::span<const double> samples);

// 18 features at native scale then 18 at half scale.
FeatureVector BrisqueFeatures(const ImageBuffer& img);

// Same features for an already-computed MSCN pair restricted to one tile.
// Exposed so NIQE tiles and full images share one code path.
std::array<double, 18> ScaleFeatures(const ImageBuffer& mscn, int x0, int y0, int w,
                                     int h);

struct SvrModel {
  double gamma = 0.0;
  double rho = 0.0;
  std::vector<FeatureVector> support_vectors;
  std::vector<double> dual_coeffs;
  FeatureVector feature_min{};
  FeatureVector feature_max{};
  // Target interval of the per-feature min-max scaling (JSON "range").
  std::array<double, 2> scale_range{-1.0, 1.0};

  void Validate() const;
  static SvrModel FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
  static SvrModel Load(const std::string& path);
};

double BrisqueScoreFromFeatures(const FeatureVector& f, const SvrModel& model);
double BrisqueScore(const ImageBuffer& img, const SvrModel& model);

// Builds an SvrModel from a LIBSVM epsilon-SVR model file with an RBF kernel
// and an svm-scale range file.
SvrModel ConvertLibsvmModel(const std::string& model_path, const std::string& range_path);

struct NiqeModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  int patch = 96;
  double quantile = 0.75;

  static NiqeModel FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
  static NiqeModel Load(const std::string& path);
};

struct NiqeOptions {
  int patch = 96;
  // Tiles whose mean local deviation exceeds quantile * (max over the image)
  // are kept when fitting.
  double quantile = 0.75;
};

// Per-tile feature vectors of one image. With `select` the sharpness
// criterion is applied, otherwise every tile is returned.
std::vector<FeatureVector> NiqeTileFeatures(const ImageBuffer& img, int patch,
                                            double quantile, bool select);

NiqeModel FitNiqe(const std::vector<ImageBuffer>& pristine, const NiqeOptions& opt = {});

// Gaussian fit of a set of feature rows (sample covariance, 1/(N-1)).
void FitGaussian(const std::vector<FeatureVector>& rows, Eigen::VectorXd& mean,
                 Eigen::MatrixXd& cov);

double NiqeDistance(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& cov1,
                    const Eigen::VectorXd& mu2, const Eigen::MatrixXd& cov2);

double NiqeScore(const ImageBuffer& img, const NiqeModel& model);

}  // namespace sim2real::nriqa
