#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "sim2real/distmetrics.hpp"
#include "sim2real/error.hpp"

namespace sim2real::distmetrics {
namespace {

bool IsSingular(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const double max_ev = es.eigenvalues().cwiseAbs().maxCoeff();
  return es.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, max_ev);
}

// Symmetric PSD square root with negative eigenvalues clamped.
Eigen::MatrixXd SqrtPsd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
}

double TraceSqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

}  // namespace

GaussianMoments FitMoments(const FeatureSet& fs) {
  if (fs.count < 2) {
    Fail(ErrorKind::kData, "moments need at least 2 samples, got " + std::to_string(fs.count));
  }
  if (fs.dim < 1) Fail(ErrorKind::kData, "moments need dim >= 1");
  const auto n = static_cast<Eigen::Index>(fs.count);
  const auto d = static_cast<Eigen::Index>(fs.dim);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = fs.data[i * d + j];
  GaussianMoments m;
  m.n = fs.count;
  m.mean = x.colwise().mean().transpose();
  x.rowwise() -= m.mean.transpose();
  const Eigen::MatrixXd c = (x.transpose() * x) / static_cast<double>(n - 1);
  m.cov = 0.5 * (c + c.transpose());
  return m;
}

double Fid(const GaussianMoments& a, const GaussianMoments& b) {
  if (a.mean.size() != b.mean.size()) {
    Fail(ErrorKind::kData, "fid: dimension mismatch (" + std::to_string(a.mean.size()) +
                               " vs " + std::to_string(b.mean.size()) + ")");
  }
  if (!a.mean.allFinite() || !b.mean.allFinite() || !a.cov.allFinite() ||
      !b.cov.allFinite()) {
    Fail(ErrorKind::kData, "fid: non-finite moments");
  }
  Eigen::MatrixXd ca = a.cov;
  Eigen::MatrixXd cb = b.cov;
  if (IsSingular(ca) || IsSingular(cb)) {
    const auto eye = Eigen::MatrixXd::Identity(ca.rows(), ca.cols());
    ca += kFidEpsilon * eye;
    cb += kFidEpsilon * eye;
  }
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const Eigen::MatrixXd ra = SqrtPsd(ca);
  Eigen::MatrixXd inner = ra * cb * ra;
  inner = 0.5 * (inner + inner.transpose());
  return mean_term + ca.trace() + cb.trace() - 2.0 * TraceSqrt(inner);
}

double FidFromFiles(const std::string& path_a, const std::string& path_b) {
  const FeatureSet a = ReadFvec(path_a);
  const FeatureSet b = ReadFvec(path_b);
  if (a.dim != b.dim) {
    Fail(ErrorKind::kData, "fid: feature dimension mismatch (" + path_a + ": " +
                               std::to_string(a.dim) + ", " + path_b + ": " +
                               std::to_string(b.dim) + ")");
  }
  return Fid(FitMoments(a), FitMoments(b));
}

}  // namespace sim2real::distmetrics
