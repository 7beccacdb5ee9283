#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include "harness/parallel.hpp"
#include "sim2real/distmetrics.hpp"
#include "sim2real/error.hpp"
#include "sim2real/friqa.hpp"
#include "sim2real/harness.hpp"
#include "sim2real/nriqa.hpp"
#include "sim2real/png_io.hpp"
#include "util/files.hpp"

namespace sim2real::harness {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kOrder = {"psnr", "ssim",    "ms_ssim", "cw_ssim", "fsim",
                                         "lpips", "brisque", "niqe",    "fid"};
const std::set<std::string> kPixelFr = {"psnr", "ssim", "ms_ssim", "cw_ssim", "fsim"};

struct EntryResult {
  std::map<std::string, double> values;
  std::vector<Failure> failures;
  int width = 0;
  int height = 0;
};

struct Models {
  std::optional<nriqa::SvrModel> brisque;
  std::optional<nriqa::NiqeModel> niqe;
  std::optional<friqa::LpipsWeights> lpips;
  std::vector<friqa::LayerShape> test_shapes;
  std::vector<friqa::LayerShape> ref_shapes;
};

std::string ErrorText(const std::exception& e) { return e.what(); }

double ComputeMetric(const std::string& m, const ImageBuffer* ref, const ImageBuffer& test,
                     const ManifestEntry& te, const ManifestEntry* re, const Manifest& tm,
                     const Manifest* rm, const Models& models) {
  if (m == "psnr") return friqa::Psnr(*ref, test).value;
  if (m == "ssim") return friqa::Ssim(*ref, test).value;
  if (m == "ms_ssim") return friqa::MsSsim(*ref, test).value;
  if (m == "cw_ssim") return friqa::CwSsim(*ref, test).value;
  if (m == "fsim") return friqa::Fsim(*ref, test).value;
  if (m == "brisque") return nriqa::BrisqueScore(test, *models.brisque);
  if (m == "niqe") return nriqa::NiqeScore(test, *models.niqe);
  if (m == "lpips") {
    if (te.lpips_path.empty() || re->lpips_path.empty()) {
      Fail(ErrorKind::kData, "lpips_path missing");
    }
    const auto a = friqa::LoadLayerFeatures(rm->Resolve(re->lpips_path), models.ref_shapes);
    const auto b = friqa::LoadLayerFeatures(tm.Resolve(te.lpips_path), models.test_shapes);
    return friqa::LpipsFromFeatures(a, b, *models.lpips).value;
  }
  Fail(ErrorKind::kInvalidArgument, "unknown metric " + m);
}

distmetrics::FeatureSet CollectFeatures(const Manifest& m, const char* which) {
  if (!m.fid_features.empty()) {
    auto fs = distmetrics::ReadFvec(m.Resolve(m.fid_features));
    if (fs.count != m.entries.size()) {
      Fail(ErrorKind::kData, std::string(which) + " manifest: fid_features holds " +
                                 std::to_string(fs.count) + " rows for " +
                                 std::to_string(m.entries.size()) + " entries");
    }
    return fs;
  }
  std::vector<distmetrics::FeatureSet> parts;
  for (const ManifestEntry* e : m.SortedEntries()) {
    if (e->feature_path.empty()) {
      Fail(ErrorKind::kData, std::string(which) + " manifest: entry '" + e->id +
                                 "' has no feature_path (needed for fid)");
    }
    parts.push_back(distmetrics::ReadFvec(m.Resolve(e->feature_path)));
  }
  return distmetrics::Concatenate(parts);
}

std::string Basename(const std::string& p) { return fs::path(p).filename().string(); }

}  // namespace

std::vector<std::string> KnownIqaMetrics() { return kOrder; }

MetricReport RunIqa(const Manifest* ref, const Manifest& test, const IqaOptions& opt) {
  std::set<std::string> wanted;
  for (const std::string& m : opt.metrics) {
    if (std::find(kOrder.begin(), kOrder.end(), m) == kOrder.end()) {
      Fail(ErrorKind::kInvalidArgument, "unknown metric '" + m + "'");
    }
    wanted.insert(m);
  }
  if (wanted.empty()) Fail(ErrorKind::kInvalidArgument, "no metrics requested");
  std::vector<std::string> metrics;
  for (const std::string& m : kOrder)
    if (wanted.count(m)) metrics.push_back(m);

  const bool needs_ref = std::any_of(metrics.begin(), metrics.end(), [](const std::string& m) {
    return kPixelFr.count(m) || m == "lpips" || m == "fid";
  });
  if (needs_ref && !ref) {
    Fail(ErrorKind::kInvalidArgument, "full-reference metrics and fid need a reference manifest");
  }
  test.Validate(false);
  if (ref) ref->Validate(false);

  std::map<std::string, const ManifestEntry*> ref_by_id;
  if (ref) {
    for (const ManifestEntry& e : ref->entries) ref_by_id[e.id] = &e;
    std::vector<std::string> only_test, only_ref;
    std::set<std::string> test_ids;
    for (const ManifestEntry& e : test.entries) {
      test_ids.insert(e.id);
      if (!ref_by_id.count(e.id)) only_test.push_back(e.id);
    }
    for (const auto& [id, e] : ref_by_id)
      if (!test_ids.count(id)) only_ref.push_back(id);
    if (!only_test.empty() || !only_ref.empty()) {
      std::string msg = "entry correspondence mismatch:";
      if (!only_test.empty()) msg += " " + std::to_string(only_test.size()) + " only in test (first '" + only_test.front() + "')";
      if (!only_ref.empty()) msg += " " + std::to_string(only_ref.size()) + " only in reference (first '" + only_ref.front() + "')";
      Fail(ErrorKind::kData, msg);
    }
  }

  Models models;
  json echo = friqa::ConfigEcho({}, {}, {});
  echo["metrics"] = metrics;
  if (wanted.count("brisque")) {
    const std::string path = opt.brisque_model.empty()
                                 ? (fs::path(DefaultDataDir()) / "models" / "brisque_live.json").string()
                                 : opt.brisque_model;
    models.brisque = nriqa::SvrModel::Load(path);
    echo["brisque"] = {{"model", Basename(path)},
                       {"support_vectors", models.brisque->support_vectors.size()},
                       {"second_scale", "gaussian5x5_sigma1_decimate2"}};
  }
  if (wanted.count("niqe")) {
    if (opt.niqe_model.empty()) {
      Fail(ErrorKind::kModelMissing, "niqe needs a model file (fit one with fit-niqe)");
    }
    models.niqe = nriqa::NiqeModel::Load(opt.niqe_model);
    echo["niqe"] = {{"model", Basename(opt.niqe_model)},
                    {"patch", models.niqe->patch},
                    {"quantile", models.niqe->quantile},
                    {"pinv_cutoff", 1e-10}};
  }
  if (wanted.count("lpips")) {
    if (opt.lpips_weights.empty()) {
      Fail(ErrorKind::kModelMissing, "lpips needs a weights file");
    }
    if (!fs::exists(opt.lpips_weights)) {
      Fail(ErrorKind::kModelMissing, opt.lpips_weights + ": LPIPS weights not found");
    }
    models.lpips = friqa::LpipsWeights::Load(opt.lpips_weights);
    if (test.lpips_shapes.empty() || ref->lpips_shapes.empty()) {
      Fail(ErrorKind::kData, "lpips needs lpips_shapes on both manifests");
    }
    models.test_shapes = friqa::LoadLayerShapes(test.Resolve(test.lpips_shapes));
    models.ref_shapes = friqa::LoadLayerShapes(ref->Resolve(ref->lpips_shapes));
    const json sidecar = util::ReadJsonFile(test.Resolve(test.lpips_shapes));
    echo["lpips"] = {{"weights", Basename(opt.lpips_weights)},
                     {"backbone", sidecar.value("backbone", "unspecified")},
                     {"layers", models.test_shapes.size()},
                     {"normalize_eps", 1e-10}};
  }
  if (wanted.count("fid")) {
    echo["fid"] = {{"epsilon", distmetrics::kFidEpsilon}, {"covariance", "unbiased"},
                   {"sqrtm", "symmetric_eigendecomposition"}};
  }

  const bool needs_pixels = std::any_of(metrics.begin(), metrics.end(), [](const std::string& m) {
    return kPixelFr.count(m) || m == "brisque" || m == "niqe";
  });
  const bool needs_ref_pixels = std::any_of(metrics.begin(), metrics.end(),
                                            [](const std::string& m) { return kPixelFr.count(m) > 0; });

  const std::vector<const ManifestEntry*> order = test.SortedEntries();
  std::vector<EntryResult> results(order.size());
  ParallelFor(order.size(), ResolveThreads(opt.threads), [&](std::size_t i) {
    const ManifestEntry& te = *order[i];
    const ManifestEntry* re = ref ? ref_by_id.at(te.id) : nullptr;
    EntryResult& out = results[i];
    ImageBuffer test_img, ref_img;
    try {
      if (needs_pixels) {
        if (te.image_path.empty()) Fail(ErrorKind::kData, "image_path missing");
        test_img = LoadPng(test.Resolve(te.image_path));
        out.width = test_img.width();
        out.height = test_img.height();
      }
      if (needs_ref_pixels) {
        if (re->image_path.empty()) Fail(ErrorKind::kData, "reference image_path missing");
        ref_img = LoadPng(ref->Resolve(re->image_path));
        if (!ref_img.same_shape(test_img)) {
          Fail(ErrorKind::kData, "reference and test images differ in shape");
        }
      }
    } catch (const std::exception& e) {
      out.failures.push_back({te.id, "*", ErrorText(e)});
      return;
    }
    for (const std::string& m : metrics) {
      if (m == "fid") continue;
      try {
        out.values[m] = ComputeMetric(m, needs_ref_pixels ? &ref_img : nullptr, test_img, te,
                                      re, test, ref, models);
      } catch (const std::exception& e) {
        out.failures.push_back({te.id, m, ErrorText(e)});
      }
    }
  });

  MetricReport report;
  report.role = RoleName(test.role);
  report.width = test.width;
  report.height = test.height;
  for (std::size_t i = 0; i < order.size(); ++i) {
    EntryResult& r = results[i];
    const std::string& id = order[i]->id;
    if (r.width > 0) {
      if (report.width == 0) {
        report.width = r.width;
        report.height = r.height;
      } else if (r.width != report.width || r.height != report.height) {
        report.failures.push_back(
            {id, "*", "resolution " + std::to_string(r.width) + "x" + std::to_string(r.height) +
                          " differs from the set resolution " + std::to_string(report.width) +
                          "x" + std::to_string(report.height)});
        continue;
      }
    }
    for (Failure& f : r.failures) report.failures.push_back(std::move(f));
    if (!r.values.empty()) report.per_image[id] = std::move(r.values);
  }
  Reaggregate(report);

  if (wanted.count("fid")) {
    const auto a = CollectFeatures(*ref, "reference");
    const auto b = CollectFeatures(test, "test");
    if (a.dim != b.dim) {
      Fail(ErrorKind::kData, "fid: feature dimension mismatch (reference " +
                                 std::to_string(a.dim) + ", test " + std::to_string(b.dim) + ")");
    }
    const double v = distmetrics::Fid(distmetrics::FitMoments(a), distmetrics::FitMoments(b));
    report.dataset_level["fid"] = std::max(v, 0.0);
  }
  report.config_echo = std::move(echo);
  return report;
}

json FitNiqeCorpus(const std::string& corpus_dir, const NiqeFitOptions& opt) {
  if (!fs::is_directory(corpus_dir)) Fail(ErrorKind::kIo, corpus_dir + ": not a directory");
  std::vector<std::string> files;
  for (const auto& f : fs::directory_iterator(corpus_dir))
    if (f.is_regular_file() && f.path().extension() == ".png") files.push_back(f.path().string());
  std::sort(files.begin(), files.end());
  std::vector<ImageBuffer> images;
  for (const std::string& f : files) images.push_back(LoadPng(f));
  return nriqa::FitNiqe(images, {opt.patch, opt.quantile}).ToJson();
}

}  // namespace sim2real::harness
