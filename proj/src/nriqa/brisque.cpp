#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "sim2real/error.hpp"
#include "sim2real/nriqa.hpp"
#include "util/files.hpp"

namespace sim2real::nriqa {
namespace {

FeatureVector ToFeatureVector(const nlohmann::json& j, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != kFeatureCount) {
    Fail(ErrorKind::kFormat, std::string("brisque model: ") + what + " has " +
                                 std::to_string(v.size()) + " entries, expected " +
                                 std::to_string(kFeatureCount));
  }
  FeatureVector out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

// Parses "idx:value" tokens of a LIBSVM sparse row; absent indices are 0.
FeatureVector ParseSparse(std::istringstream& is, const std::string& where) {
  FeatureVector out{};
  std::string tok;
  while (is >> tok) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos) {
      Fail(ErrorKind::kFormat, where + ": malformed token '" + tok + "'");
    }
    const int idx = std::stoi(tok.substr(0, colon));
    if (idx < 1 || idx > kFeatureCount) {
      Fail(ErrorKind::kFormat, where + ": feature index " + std::to_string(idx) +
                                   " out of range");
    }
    out[idx - 1] = std::stod(tok.substr(colon + 1));
  }
  return out;
}

}  // namespace

void SvrModel::Validate() const {
  if (!(gamma > 0.0)) Fail(ErrorKind::kFormat, "brisque model: gamma must be > 0");
  if (support_vectors.empty()) {
    Fail(ErrorKind::kFormat, "brisque model: no support vectors");
  }
  if (dual_coeffs.size() != support_vectors.size()) {
    Fail(ErrorKind::kFormat, "brisque model: " + std::to_string(dual_coeffs.size()) +
                                 " coefficients for " +
                                 std::to_string(support_vectors.size()) +
                                 " support vectors");
  }
  for (int i = 0; i < kFeatureCount; ++i) {
    if (!(feature_min[i] < feature_max[i])) {
      Fail(ErrorKind::kFormat, "brisque model: feature " + std::to_string(i) +
                                   " has min >= max");
    }
  }
  if (!(scale_range[0] < scale_range[1])) {
    Fail(ErrorKind::kFormat, "brisque model: empty scaling range");
  }
}

SvrModel SvrModel::FromJson(const nlohmann::json& j) {
  SvrModel m;
  try {
    m.gamma = j.at("gamma").get<double>();
    m.rho = j.at("rho").get<double>();
    for (const auto& row : j.at("sv")) m.support_vectors.push_back(ToFeatureVector(row, "sv row"));
    m.dual_coeffs = j.at("coeff").get<std::vector<double>>();
    m.feature_min = ToFeatureVector(j.at("fmin"), "fmin");
    m.feature_max = ToFeatureVector(j.at("fmax"), "fmax");
    if (j.contains("range")) {
      const auto r = j.at("range").get<std::vector<double>>();
      if (r.size() != 2) Fail(ErrorKind::kFormat, "brisque model: range needs 2 values");
      m.scale_range = {r[0], r[1]};
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kFormat, std::string("brisque model: ") + e.what());
  }
  m.Validate();
  return m;
}

nlohmann::json SvrModel::ToJson() const {
  nlohmann::json sv = nlohmann::json::array();
  for (const auto& row : support_vectors) sv.push_back(row);
  return {{"gamma", gamma},       {"rho", rho},
          {"sv", sv},             {"coeff", dual_coeffs},
          {"fmin", feature_min},  {"fmax", feature_max},
          {"range", scale_range}};
}

SvrModel SvrModel::Load(const std::string& path) {
  std::ifstream probe(path);
  if (!probe) Fail(ErrorKind::kModelMissing, path + ": BRISQUE model not found");
  try {
    return FromJson(util::ReadJsonFile(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kFormat) {
      Fail(ErrorKind::kFormat, path + ": " + e.what());
    }
    throw;
  }
}

double BrisqueScoreFromFeatures(const FeatureVector& f, const SvrModel& model) {
  FeatureVector x{};
  const double lo = model.scale_range[0];
  const double hi = model.scale_range[1];
  for (int i = 0; i < kFeatureCount; ++i) {
    x[i] = lo + (hi - lo) * (f[i] - model.feature_min[i]) /
                    (model.feature_max[i] - model.feature_min[i]);
  }
  double score = 0.0;
  for (std::size_t s = 0; s < model.support_vectors.size(); ++s) {
    const FeatureVector& sv = model.support_vectors[s];
    double d2 = 0.0;
    for (int i = 0; i < kFeatureCount; ++i) {
      const double d = x[i] - sv[i];
      d2 += d * d;
    }
    score += model.dual_coeffs[s] * std::exp(-model.gamma * d2);
  }
  return score - model.rho;
}

double BrisqueScore(const ImageBuffer& img, const SvrModel& model) {
  return BrisqueScoreFromFeatures(BrisqueFeatures(img), model);
}

SvrModel ConvertLibsvmModel(const std::string& model_path, const std::string& range_path) {
  SvrModel m;
  {
    std::ifstream in(model_path);
    if (!in) Fail(ErrorKind::kIo, model_path + ": cannot open");
    std::string line;
    std::string svm_type, kernel;
    bool in_sv = false;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream is(line);
      if (!in_sv) {
        std::string key;
        is >> key;
        if (key == "svm_type") is >> svm_type;
        else if (key == "kernel_type") is >> kernel;
        else if (key == "gamma") is >> m.gamma;
        else if (key == "rho") is >> m.rho;
        else if (key == "SV") in_sv = true;
        continue;
      }
      double coef = 0.0;
      if (!(is >> coef)) {
        Fail(ErrorKind::kFormat, model_path + ":" + std::to_string(line_no) +
                                     ": missing coefficient");
      }
      m.dual_coeffs.push_back(coef);
      m.support_vectors.push_back(
          ParseSparse(is, model_path + ":" + std::to_string(line_no)));
    }
    if (svm_type != "epsilon_svr" && svm_type != "nu_svr") {
      Fail(ErrorKind::kFormat, model_path + ": expected a regression model, got svm_type '" +
                                   svm_type + "'");
    }
    if (kernel != "rbf") {
      Fail(ErrorKind::kFormat, model_path + ": expected an rbf kernel, got '" + kernel + "'");
    }
  }
  {
    std::ifstream in(range_path);
    if (!in) Fail(ErrorKind::kIo, range_path + ": cannot open");
    std::string line;
    std::getline(in, line);
    if (line.rfind("x", 0) != 0) {
      Fail(ErrorKind::kFormat, range_path + ": expected an svm-scale feature range file");
    }
    if (!(in >> m.scale_range[0] >> m.scale_range[1])) {
      Fail(ErrorKind::kFormat, range_path + ": missing scaling bounds");
    }
    std::vector<bool> seen(kFeatureCount, false);
    int idx = 0;
    double lo = 0.0, hi = 0.0;
    while (in >> idx >> lo >> hi) {
      if (idx < 1 || idx > kFeatureCount) {
        Fail(ErrorKind::kFormat, range_path + ": feature index " + std::to_string(idx) +
                                     " out of range");
      }
      m.feature_min[idx - 1] = lo;
      m.feature_max[idx - 1] = hi;
      seen[idx - 1] = true;
    }
    for (int i = 0; i < kFeatureCount; ++i) {
      if (!seen[i]) {
        Fail(ErrorKind::kFormat, range_path + ": no range for feature " + std::to_string(i + 1));
      }
    }
  }
  m.Validate();
  return m;
}

}  // namespace sim2real::nriqa
