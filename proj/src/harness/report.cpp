#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>

#include "sim2real/error.hpp"
#include "sim2real/report.hpp"
#include "util/files.hpp"

namespace sim2real::harness {
using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

struct MetricInfo {
  const char* key;
  const char* label;
  bool higher_better;
  int decimals;
};

// Table row order.
constexpr MetricInfo kMetrics[] = {
    {"psnr", "PSNR", true, 3},        {"ms_ssim", "SSIM (multi-scale)", true, 3},
    {"ssim", "SSIM (single-scale)", true, 3},  {"lpips", "LPIPS", false, 3},
    {"cw_ssim", "CW-SSIM", true, 3},  {"fsim", "FSIM", true, 3},
    {"niqe", "NIQE", false, 3},       {"brisque", "BRISQUE", false, 3},
    {"fid", "FID", false, 3},         {"pq", "PQ", true, 1},
    {"sq", "SQ", true, 1},            {"rq", "RQ", true, 1},
    {"pq_class_mean", "PQ (class mean)", true, 1},
    {"miou", "mIoU", true, 1},        {"ap", "AP", true, 1},
};

const MetricInfo* FindMetric(const std::string& m) {
  for (const MetricInfo& info : kMetrics)
    if (m == info.key) return &info;
  return nullptr;
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string Fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

double ParseNum(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) Fail(ErrorKind::kFormat, "report: bad number '" + s + "'");
  return v;
}

// Metrics appearing in any report, table order first, unknown ones sorted after.
std::vector<std::string> TableMetrics(const std::vector<MetricReport>& reports) {
  std::set<std::string> present;
  for (const MetricReport& r : reports) {
    for (const auto& [m, a] : r.aggregate) present.insert(m);
    for (const auto& [m, v] : r.dataset_level) present.insert(m);
  }
  std::vector<std::string> out;
  for (const MetricInfo& info : kMetrics) {
    if (present.erase(info.key)) out.push_back(info.key);
  }
  out.insert(out.end(), present.begin(), present.end());
  return out;
}

std::vector<std::string> ColumnNames(const std::vector<MetricReport>& reports) {
  std::map<std::string, int> seen;
  std::vector<std::string> out;
  for (const MetricReport& r : reports) {
    const std::string base = r.role.empty() ? "custom" : r.role;
    const int k = ++seen[base];
    out.push_back(k == 1 ? base : base + "#" + std::to_string(k));
  }
  return out;
}

struct Row {
  std::string metric;
  bool higher_better = true;
  std::vector<std::optional<double>> values;
  std::set<std::size_t> best;
  std::set<std::size_t> worst;
};

// Best and worst flags skip the V_i baseline and need two candidate values.
std::vector<Row> BuildRows(const std::vector<MetricReport>& reports) {
  std::vector<Row> rows;
  for (const std::string& m : TableMetrics(reports)) {
    Row row;
    row.metric = m;
    row.higher_better = MetricHigherIsBetter(m);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const double* v = reports[i].Value(m);
      row.values.push_back(v ? std::optional<double>(*v) : std::nullopt);
      if (v && reports[i].role != "V_i") candidates.push_back(i);
    }
    if (candidates.size() >= 2) {
      auto better = [&](double a, double b) { return row.higher_better ? a > b : a < b; };
      double best = *row.values[candidates[0]], worst = best;
      for (std::size_t i : candidates) {
        const double v = *row.values[i];
        if (better(v, best)) best = v;
        if (better(worst, v)) worst = v;
      }
      if (best != worst) {
        for (std::size_t i : candidates) {
          if (*row.values[i] == best) row.best.insert(i);
          if (*row.values[i] == worst) row.worst.insert(i);
        }
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void CheckResolutions(const std::vector<MetricReport>& reports, const EmitOptions& opt) {
  if (opt.allow_mixed_resolution) return;
  const MetricReport* first = nullptr;
  for (const MetricReport& r : reports) {
    if (r.width == 0) continue;
    if (!first) {
      first = &r;
    } else if (r.width != first->width || r.height != first->height) {
      Fail(ErrorKind::kData, "reports have mixed resolutions (" + std::to_string(first->width) +
                                 "x" + std::to_string(first->height) + " vs " +
                                 std::to_string(r.width) + "x" + std::to_string(r.height) +
                                 "); pass the mixed-resolution override to emit anyway");
    }
  }
}

std::string EmitJson(const std::vector<MetricReport>& reports) {
  json doc = {{"format_version", kFormatVersion}, {"reports", json::array()}};
  for (const MetricReport& r : reports) doc["reports"].push_back(r.ToJson());
  json rows = json::array();
  for (const Row& row : BuildRows(reports)) {
    json values = json::array();
    for (const auto& v : row.values) values.push_back(v ? json(*v) : json(nullptr));
    rows.push_back({{"metric", row.metric},
                    {"higher_is_better", row.higher_better},
                    {"values", std::move(values)},
                    {"best", std::vector<std::size_t>(row.best.begin(), row.best.end())},
                    {"worst", std::vector<std::size_t>(row.worst.begin(), row.worst.end())}});
  }
  doc["table"] = {{"columns", ColumnNames(reports)}, {"rows", std::move(rows)}};
  return util::DumpJson(doc);
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string EmitCsv(const std::vector<MetricReport>& reports) {
  std::ostringstream os;
  auto line = [&](std::size_t r, const char* record, const std::string& key,
                  const std::string& metric, const std::string& field, const std::string& value) {
    os << r << ',' << record << ',' << CsvField(key) << ',' << CsvField(metric) << ','
       << CsvField(field) << ',' << CsvField(value) << "\r\n";
  };
  os << "report,record,key,metric,field,value\r\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const MetricReport& r = reports[i];
    line(i, "meta", "", "", "role", r.role);
    line(i, "meta", "", "", "width", std::to_string(r.width));
    line(i, "meta", "", "", "height", std::to_string(r.height));
    for (const auto& [id, metrics] : r.per_image)
      for (const auto& [m, v] : metrics) line(i, "per_image", id, m, "value", Num(v));
    for (const auto& [m, a] : r.aggregate) {
      line(i, "aggregate", "", m, "mean", Num(a.mean));
      line(i, "aggregate", "", m, "std", Num(a.std));
      line(i, "aggregate", "", m, "n", std::to_string(a.n));
    }
    for (const auto& [m, v] : r.dataset_level) line(i, "dataset_level", "", m, "value", Num(v));
    for (const Failure& f : r.failures) line(i, "failure", f.id, f.metric, "error", f.error);
    line(i, "details", "", "", "json", r.details.dump());
    line(i, "config", "", "", "json", r.config_echo.dump());
  }
  return os.str();
}

std::string EmitMarkdown(const std::vector<MetricReport>& reports) {
  const std::vector<std::string> cols = ColumnNames(reports);
  std::ostringstream os;
  os << "| Metric |";
  for (const std::string& c : cols) os << ' ' << c << " |";
  os << "\n|---|";
  for (std::size_t i = 0; i < cols.size(); ++i) os << "---:|";
  os << '\n';
  for (const Row& row : BuildRows(reports)) {
    const MetricInfo* info = FindMetric(row.metric);
    const int decimals = info ? info->decimals : 3;
    os << "| " << (info ? info->label : row.metric) << (row.higher_better ? " ↑" : " ↓") << " |";
    for (std::size_t i = 0; i < row.values.size(); ++i) {
      if (!row.values[i]) {
        os << " - |";
        continue;
      }
      const std::string v = Fixed(*row.values[i], decimals);
      if (row.best.count(i)) {
        os << " **" << v << "** (best) |";
      } else if (row.worst.count(i)) {
        os << " _" << v << "_ (worst) |";
      } else {
        os << ' ' << v << " |";
      }
    }
    os << '\n';
  }
  os << "\nBest and worst values are marked per row; the V_i baseline column is not ranked.\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const MetricReport& r = reports[i];
    os << "\n### " << cols[i] << "\n\n";
    if (r.width > 0) os << "Resolution: " << r.width << "x" << r.height << "\n";
    std::size_t n = 0;
    for (const auto& [m, a] : r.aggregate) n = std::max(n, a.n);
    if (!r.aggregate.empty()) os << "Scored entries: " << n << "\n";
    os << "Failures: " << r.failures.size() << "\n\n";
    os << "```json\n" << r.config_echo.dump(2) << "\n```\n";
  }
  return os.str();
}

// RFC 4180 records.
std::vector<std::vector<std::string>> ParseCsvRecords(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, in_field = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = in_field = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      in_field = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (in_field || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      in_field = false;
    } else {
      field += c;
      in_field = true;
    }
  }
  if (quoted) Fail(ErrorKind::kFormat, "report csv: unterminated quoted field");
  if (in_field || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

json MetricReport::ToJson() const {
  json j;
  j["role"] = role;
  j["resolution"] = width > 0 ? json({width, height}) : json(nullptr);
  json pi = json::object();
  for (const auto& [id, metrics] : per_image) pi[id] = metrics;
  j["per_image"] = std::move(pi);
  json agg = json::object();
  for (const auto& [m, a] : aggregate) agg[m] = {{"mean", a.mean}, {"std", a.std}, {"n", a.n}};
  j["aggregate"] = std::move(agg);
  j["dataset_level"] = dataset_level;
  json fails = json::array();
  for (const Failure& f : failures)
    fails.push_back({{"id", f.id}, {"metric", f.metric}, {"error", f.error}});
  j["failures"] = std::move(fails);
  j["details"] = details;
  j["config_echo"] = config_echo;
  return j;
}

MetricReport MetricReport::FromJson(const json& j) {
  MetricReport r;
  try {
    r.role = j.value("role", "custom");
    if (j.contains("resolution") && !j.at("resolution").is_null()) {
      const auto res = j.at("resolution").get<std::vector<int>>();
      if (res.size() != 2) Fail(ErrorKind::kFormat, "report: resolution must be [width, height]");
      r.width = res[0];
      r.height = res[1];
    }
    if (j.contains("per_image")) {
      r.per_image = j.at("per_image").get<std::map<std::string, std::map<std::string, double>>>();
    }
    if (j.contains("aggregate")) {
      for (const auto& [m, a] : j.at("aggregate").items()) {
        r.aggregate[m] = {a.at("mean").get<double>(), a.value("std", 0.0),
                          a.value("n", std::size_t{0})};
      }
    }
    if (j.contains("dataset_level")) {
      r.dataset_level = j.at("dataset_level").get<std::map<std::string, double>>();
    }
    if (j.contains("failures")) {
      for (const auto& f : j.at("failures")) {
        r.failures.push_back({f.value("id", ""), f.value("metric", "*"), f.value("error", "")});
      }
    }
    if (j.contains("details")) r.details = j.at("details");
    if (j.contains("config_echo")) r.config_echo = j.at("config_echo");
  } catch (const json::exception& e) {
    Fail(ErrorKind::kFormat, std::string("report: ") + e.what());
  }
  return r;
}

MetricReport MetricReport::Load(const std::string& path) {
  try {
    return FromJson(util::ReadJsonFile(path));
  } catch (const Error& e) {
    Fail(e.kind(), path + ": " + e.what());
  }
}

const double* MetricReport::Value(const std::string& metric) const {
  if (auto it = aggregate.find(metric); it != aggregate.end() && it->second.n > 0) {
    return &it->second.mean;
  }
  if (auto it = dataset_level.find(metric); it != dataset_level.end()) return &it->second;
  return nullptr;
}

void Reaggregate(MetricReport& r) {
  std::map<std::string, std::vector<double>> values;
  for (const auto& [id, metrics] : r.per_image)
    for (const auto& [m, v] : metrics) values[m].push_back(v);
  r.aggregate.clear();
  for (const auto& [m, vs] : values) {
    double sum = 0.0;
    for (double v : vs) sum += v;
    const double mean = sum / static_cast<double>(vs.size());
    double ss = 0.0;
    for (double v : vs) ss += (v - mean) * (v - mean);
    r.aggregate[m] = {mean, std::sqrt(ss / static_cast<double>(vs.size())), vs.size()};
  }
}

ReportFormat ParseReportFormat(const std::string& s) {
  if (s == "json") return ReportFormat::kJson;
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "markdown" || s == "md") return ReportFormat::kMarkdown;
  Fail(ErrorKind::kInvalidArgument, "unknown report format '" + s + "' (json, csv, markdown)");
}

bool MetricHigherIsBetter(const std::string& metric) {
  const MetricInfo* info = FindMetric(metric);
  return info ? info->higher_better : true;
}

std::string EmitReport(const std::vector<MetricReport>& reports, ReportFormat format,
                       const EmitOptions& opt) {
  if (reports.empty()) Fail(ErrorKind::kInvalidArgument, "report: no input reports");
  CheckResolutions(reports, opt);
  switch (format) {
    case ReportFormat::kJson: return EmitJson(reports);
    case ReportFormat::kCsv: return EmitCsv(reports);
    case ReportFormat::kMarkdown: return EmitMarkdown(reports);
  }
  Fail(ErrorKind::kInvalidArgument, "report: bad format");
}

std::vector<MetricReport> ParseReportJson(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    Fail(ErrorKind::kFormat, std::string("report json: ") + e.what());
  }
  std::vector<MetricReport> out;
  if (doc.is_object() && doc.contains("reports")) {
    if (doc.value("format_version", 0) != kFormatVersion) {
      Fail(ErrorKind::kFormat, "report json: unsupported format_version");
    }
    for (const json& r : doc.at("reports")) out.push_back(MetricReport::FromJson(r));
  } else if (doc.is_array()) {
    for (const json& r : doc) out.push_back(MetricReport::FromJson(r));
  } else {
    out.push_back(MetricReport::FromJson(doc));
  }
  return out;
}

std::vector<MetricReport> ParseReportCsv(const std::string& text) {
  const auto rows = ParseCsvRecords(text);
  if (rows.empty() || rows[0] != std::vector<std::string>{"report", "record", "key", "metric",
                                                          "field", "value"}) {
    Fail(ErrorKind::kFormat, "report csv: missing or unexpected header");
  }
  std::vector<MetricReport> out;
  for (std::size_t li = 1; li < rows.size(); ++li) {
    const auto& row = rows[li];
    if (row.size() != 6) {
      Fail(ErrorKind::kFormat, "report csv: line " + std::to_string(li + 1) + " has " +
                                   std::to_string(row.size()) + " fields");
    }
    const std::size_t idx = static_cast<std::size_t>(ParseNum(row[0]));
    if (idx > out.size()) Fail(ErrorKind::kFormat, "report csv: report index out of order");
    if (idx == out.size()) out.emplace_back();
    MetricReport& r = out[idx];
    const std::string& rec = row[1];
    const std::string &key = row[2], &metric = row[3], &field = row[4], &value = row[5];
    try {
      if (rec == "meta") {
        if (field == "role") r.role = value;
        else if (field == "width") r.width = static_cast<int>(ParseNum(value));
        else if (field == "height") r.height = static_cast<int>(ParseNum(value));
      } else if (rec == "per_image") {
        r.per_image[key][metric] = ParseNum(value);
      } else if (rec == "aggregate") {
        Aggregate& a = r.aggregate[metric];
        if (field == "mean") a.mean = ParseNum(value);
        else if (field == "std") a.std = ParseNum(value);
        else if (field == "n") a.n = static_cast<std::size_t>(ParseNum(value));
      } else if (rec == "dataset_level") {
        r.dataset_level[metric] = ParseNum(value);
      } else if (rec == "failure") {
        r.failures.push_back({key, metric, value});
      } else if (rec == "details") {
        r.details = json::parse(value);
      } else if (rec == "config") {
        r.config_echo = json::parse(value);
      } else {
        Fail(ErrorKind::kFormat, "report csv: unknown record type '" + rec + "'");
      }
    } catch (const json::exception& e) {
      Fail(ErrorKind::kFormat, "report csv: line " + std::to_string(li + 1) + ": " + e.what());
    }
  }
  return out;
}

std::vector<MetricReport> LoadReports(const std::string& path) {
  const std::string text = util::ReadTextFile(path);
  try {
    if (std::filesystem::path(path).extension() == ".csv") return ParseReportCsv(text);
    return ParseReportJson(text);
  } catch (const Error& e) {
    Fail(e.kind(), path + ": " + e.what());
  }
}

}  // namespace sim2real::harness
