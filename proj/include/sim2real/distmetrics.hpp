#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sim2real::distmetrics {

// N x D float32 matrix, row-major. On disk: "SRFV", then u32 LE version,
// count, dim, then count*dim float32 LE.
struct FeatureSet {
  std::size_t count = 0;
  std::size_t dim = 0;
  std::vector<float> data;

  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(data).subspan(i * dim, dim);
  }
};

inline constexpr std::uint32_t kFvecVersion = 1;

FeatureSet ReadFvec(const std::string& path);
void WriteFvec(const FeatureSet& fs, const std::string& path);

// Parses an in-memory FVEC image; `name` is used in error messages.
FeatureSet ParseFvec(std::span<const unsigned char> bytes, const std::string& name);
std::vector<unsigned char> SerializeFvec(const FeatureSet& fs);

// Stacks single- or multi-row sets with equal dim, in order.
FeatureSet Concatenate(const std::vector<FeatureSet>& parts);

struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  std::size_t n = 0;
};

GaussianMoments FitMoments(const FeatureSet& fs);

inline constexpr double kFidEpsilon = 1e-6;

double Fid(const GaussianMoments& a, const GaussianMoments& b);

double FidFromFiles(const std::string& path_a, const std::string& path_b);

}  // namespace sim2real::distmetrics
