#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "nriqa/internal.hpp"
#include "sim2real/error.hpp"
#include "sim2real/nriqa.hpp"
#include "util/files.hpp"

namespace sim2real::nriqa {
namespace {

constexpr double kPinvCutoff = 1e-10;

void RequireSize(const ImageBuffer& img, int patch) {
  if (patch < 2 || patch % 2) {
    Fail(ErrorKind::kInvalidArgument, "niqe: patch size must be even and >= 2");
  }
  if (img.width() < 2 * patch || img.height() < 2 * patch) {
    Fail(ErrorKind::kInvalidArgument,
         "niqe: image " + std::to_string(img.width()) + "x" +
             std::to_string(img.height()) + " too small (need >= " +
             std::to_string(2 * patch) + " in both dimensions)");
  }
}

ImageBuffer Crop(const ImageBuffer& img, int w, int h) {
  if (w == img.width() && h == img.height()) return img;
  ImageBuffer out(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(x, y) = img.at(x, y);
  return out;
}

}  // namespace

std::vector<FeatureVector> NiqeTileFeatures(const ImageBuffer& img, int patch,
                                            double quantile, bool select) {
  RequireSize(img, patch);
  const int cols = img.width() / patch;
  const int rows = img.height() / patch;
  const ImageBuffer luma = Crop(AsLuma(img), cols * patch, rows * patch);
  const MscnResult s1 = MscnWithSigma(luma);
  const ImageBuffer m2 = Mscn(Downsample2(luma));
  const int half = patch / 2;

  std::vector<double> sharpness(static_cast<std::size_t>(rows) * cols, 0.0);
  for (int ty = 0; ty < rows; ++ty)
    for (int tx = 0; tx < cols; ++tx) {
      double acc = 0.0;
      for (int y = ty * patch; y < (ty + 1) * patch; ++y)
        for (int x = tx * patch; x < (tx + 1) * patch; ++x) acc += s1.sigma.at(x, y);
      sharpness[static_cast<std::size_t>(ty) * cols + tx] =
          acc / (static_cast<double>(patch) * patch);
    }
  const double max_sharp = *std::max_element(sharpness.begin(), sharpness.end());

  std::vector<FeatureVector> out;
  for (int ty = 0; ty < rows; ++ty)
    for (int tx = 0; tx < cols; ++tx) {
      if (select && !(sharpness[static_cast<std::size_t>(ty) * cols + tx] >
                      quantile * max_sharp)) {
        continue;
      }
      const auto f1 = ScaleFeatures(s1.mscn, tx * patch, ty * patch, patch, patch);
      const auto f2 = ScaleFeatures(m2, tx * half, ty * half, half, half);
      FeatureVector f{};
      std::copy(f1.begin(), f1.end(), f.begin());
      std::copy(f2.begin(), f2.end(), f.begin() + 18);
      out.push_back(f);
    }
  return out;
}

void FitGaussian(const std::vector<FeatureVector>& rows, Eigen::VectorXd& mean,
                 Eigen::MatrixXd& cov) {
  if (rows.size() < 2) {
    Fail(ErrorKind::kData, "niqe: need at least 2 feature tiles, got " +
                               std::to_string(rows.size()));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd x(n, kFeatureCount);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < kFeatureCount; ++j) x(i, j) = rows[i][j];
  mean = x.colwise().mean().transpose();
  x.rowwise() -= mean.transpose();
  const Eigen::MatrixXd c = (x.transpose() * x) / static_cast<double>(n - 1);
  cov = 0.5 * (c + c.transpose());
}

double NiqeDistance(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& cov1,
                    const Eigen::VectorXd& mu2, const Eigen::MatrixXd& cov2) {
  if (mu1.size() != mu2.size() || cov1.rows() != mu1.size() || cov2.rows() != mu2.size()) {
    Fail(ErrorKind::kData, "niqe: model/feature dimension mismatch");
  }
  Eigen::MatrixXd pooled = 0.5 * (cov1 + cov2);
  pooled = 0.5 * (pooled + pooled.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pooled);
  const Eigen::VectorXd d = mu1 - mu2;
  const Eigen::VectorXd proj = es.eigenvectors().transpose() * d;
  double q = 0.0;
  for (Eigen::Index i = 0; i < proj.size(); ++i) {
    const double ev = es.eigenvalues()(i);
    if (ev > kPinvCutoff) q += proj(i) * proj(i) / ev;
  }
  return std::sqrt(std::max(q, 0.0));
}

NiqeModel FitNiqe(const std::vector<ImageBuffer>& pristine, const NiqeOptions& opt) {
  if (pristine.size() < 10) {
    Fail(ErrorKind::kInvalidArgument, "niqe: pristine corpus needs at least 10 images, got " +
                                          std::to_string(pristine.size()));
  }
  std::vector<FeatureVector> rows;
  for (const ImageBuffer& img : pristine) {
    auto tiles = NiqeTileFeatures(img, opt.patch, opt.quantile, true);
    rows.insert(rows.end(), tiles.begin(), tiles.end());
  }
  if (rows.empty()) {
    Fail(ErrorKind::kData, "niqe: no tiles survived sharpness selection");
  }
  NiqeModel m;
  m.patch = opt.patch;
  m.quantile = opt.quantile;
  FitGaussian(rows, m.mean, m.cov);
  return m;
}

double NiqeScore(const ImageBuffer& img, const NiqeModel& model) {
  const auto rows = NiqeTileFeatures(img, model.patch, model.quantile, false);
  Eigen::VectorXd mu;
  Eigen::MatrixXd cov;
  FitGaussian(rows, mu, cov);
  return NiqeDistance(model.mean, model.cov, mu, cov);
}

NiqeModel NiqeModel::FromJson(const nlohmann::json& j) {
  NiqeModel m;
  try {
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto cov = j.at("cov").get<std::vector<std::vector<double>>>();
    if (mean.size() != kFeatureCount || cov.size() != kFeatureCount) {
      Fail(ErrorKind::kFormat, "niqe model: expected a 36-vector mean and 36x36 cov");
    }
    m.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), kFeatureCount);
    m.cov.resize(kFeatureCount, kFeatureCount);
    for (int r = 0; r < kFeatureCount; ++r) {
      if (cov[r].size() != kFeatureCount) {
        Fail(ErrorKind::kFormat, "niqe model: cov row " + std::to_string(r) + " has wrong length");
      }
      for (int c = 0; c < kFeatureCount; ++c) m.cov(r, c) = cov[r][c];
    }
    m.patch = j.value("patch", 96);
    m.quantile = j.value("quantile", 0.75);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kFormat, std::string("niqe model: ") + e.what());
  }
  if (!m.mean.allFinite() || !m.cov.allFinite()) {
    Fail(ErrorKind::kFormat, "niqe model: non-finite values");
  }
  return m;
}

nlohmann::json NiqeModel::ToJson() const {
  nlohmann::json cov_rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < cov.rows(); ++r) {
    std::vector<double> row(cov.cols());
    for (Eigen::Index c = 0; c < cov.cols(); ++c) row[c] = cov(r, c);
    cov_rows.push_back(row);
  }
  return {{"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
          {"cov", cov_rows},
          {"patch", patch},
          {"quantile", quantile}};
}

NiqeModel NiqeModel::Load(const std::string& path) {
  std::ifstream probe(path);
  if (!probe) Fail(ErrorKind::kModelMissing, path + ": NIQE model not found");
  try {
    return FromJson(util::ReadJsonFile(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kFormat) Fail(ErrorKind::kFormat, path + ": " + e.what());
    throw;
  }
}

}  // namespace sim2real::nriqa
