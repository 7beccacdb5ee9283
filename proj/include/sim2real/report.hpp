#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace sim2real::harness {

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t n = 0;
  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

struct Failure {
  std::string id;
  std::string metric;  // "*" when the whole entry failed
  std::string error;
  friend bool operator==(const Failure&, const Failure&) = default;
};

struct MetricReport {
  std::string role;
  int width = 0;  // 0 when unknown
  int height = 0;
  // entry id -> metric -> value
  std::map<std::string, std::map<std::string, double>> per_image;
  std::map<std::string, Aggregate> aggregate;
  // Set-level values (FID, segmentation scores, precomputed fixtures).
  std::map<std::string, double> dataset_level;
  std::vector<Failure> failures;
  nlohmann::json details = nlohmann::json::object();
  nlohmann::json config_echo = nlohmann::json::object();

  nlohmann::json ToJson() const;
  static MetricReport FromJson(const nlohmann::json& j);
  static MetricReport Load(const std::string& path);

  // Table value for a metric: aggregate mean if present, else dataset level.
  const double* Value(const std::string& metric) const;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

// Recomputes aggregates from per_image, over sorted entry ids.
void Reaggregate(MetricReport& r);

enum class ReportFormat { kJson, kCsv, kMarkdown };
ReportFormat ParseReportFormat(const std::string& s);

// true when larger values are better; unknown metrics are treated as
// higher-is-better.
bool MetricHigherIsBetter(const std::string& metric);

struct EmitOptions {
  bool allow_mixed_resolution = false;
};

std::string EmitReport(const std::vector<MetricReport>& reports, ReportFormat format,
                       const EmitOptions& opt = {});

// Inverse of the JSON and CSV emitters.
std::vector<MetricReport> ParseReportJson(const std::string& text);
std::vector<MetricReport> ParseReportCsv(const std::string& text);

// Loads a report file: either one MetricReport, or an emitted JSON/CSV
// document holding several.
std::vector<MetricReport> LoadReports(const std::string& path);

}  // namespace sim2real::harness
