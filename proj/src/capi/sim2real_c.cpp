#include "sim2real/sim2real.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "sim2real/distmetrics.hpp"
#include "sim2real/error.hpp"
#include "sim2real/friqa.hpp"
#include "sim2real/harness.hpp"
#include "sim2real/nriqa.hpp"
#include "sim2real/png_io.hpp"
#include "sim2real/taxonomy.hpp"
#include "util/files.hpp"

struct s2r_image {
  sim2real::ImageBuffer buf;
};

namespace {

using nlohmann::json;
using sim2real::ErrorKind;

thread_local std::string g_last_error;

s2r_status StatusOf(ErrorKind k) {
  switch (k) {
    case ErrorKind::kInvalidArgument: return S2R_ERR_INVALID_ARGUMENT;
    case ErrorKind::kIo: return S2R_ERR_IO;
    case ErrorKind::kFormat: return S2R_ERR_FORMAT;
    case ErrorKind::kData: return S2R_ERR_DATA;
    case ErrorKind::kModelMissing: return S2R_ERR_MODEL_MISSING;
    case ErrorKind::kCapability: return S2R_ERR_CAPABILITY;
  }
  return S2R_ERR_INTERNAL;
}

template <typename Fn>
s2r_status Guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return S2R_OK;
  } catch (const sim2real::Error& e) {
    g_last_error = e.what();
    return StatusOf(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return S2R_ERR_INTERNAL;
}

void Require(const void* p, const char* name) {
  if (!p) sim2real::Fail(ErrorKind::kInvalidArgument, std::string(name) + " is NULL");
}

char* Dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json ParseOptions(const char* text) {
  if (!text || !*text) return json::object();
  try {
    json j = json::parse(text);
    if (!j.is_object()) sim2real::Fail(ErrorKind::kInvalidArgument, "options must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    sim2real::Fail(ErrorKind::kInvalidArgument, std::string("options: ") + e.what());
  }
}

template <typename Metric>
s2r_status FullRef(const s2r_image* ref, const s2r_image* test, double* out, Metric metric) {
  return Guard([&] {
    Require(ref, "ref");
    Require(test, "test");
    Require(out, "out");
    *out = metric(ref->buf, test->buf).value;
  });
}

}  // namespace

extern "C" {

const char* s2r_last_error(void) { return g_last_error.c_str(); }
const char* s2r_version(void) { return "0.1.0"; }
void s2r_string_free(char* s) { std::free(s); }

s2r_status s2r_image_load(const char* path, s2r_image** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = nullptr;
    auto img = std::make_unique<s2r_image>();
    img->buf = sim2real::LoadPng(path);
    *out = img.release();
  });
}

s2r_status s2r_image_create(int width, int height, int channels, const double* data,
                            s2r_image** out) {
  return Guard([&] {
    Require(data, "data");
    Require(out, "out");
    *out = nullptr;
    if (width < 1 || height < 1 || channels < 1) {
      sim2real::Fail(ErrorKind::kInvalidArgument, "image dimensions must be positive");
    }
    const std::size_t n = static_cast<std::size_t>(width) * height * channels;
    auto img = std::make_unique<s2r_image>();
    img->buf = sim2real::ImageBuffer(width, height, channels, std::vector<double>(data, data + n));
    *out = img.release();
  });
}

s2r_status s2r_image_save(const s2r_image* img, const char* path) {
  return Guard([&] {
    Require(img, "img");
    Require(path, "path");
    sim2real::SavePng(img->buf, path);
  });
}

void s2r_image_free(s2r_image* img) { delete img; }
int s2r_image_width(const s2r_image* img) { return img ? img->buf.width() : 0; }
int s2r_image_height(const s2r_image* img) { return img ? img->buf.height() : 0; }
int s2r_image_channels(const s2r_image* img) { return img ? img->buf.channels() : 0; }
const double* s2r_image_data(const s2r_image* img) {
  return img ? img->buf.data().data() : nullptr;
}

s2r_status s2r_psnr(const s2r_image* ref, const s2r_image* test, double* out) {
  return FullRef(ref, test, out, [](const auto& a, const auto& b) { return sim2real::friqa::Psnr(a, b); });
}
s2r_status s2r_ssim(const s2r_image* ref, const s2r_image* test, double* out) {
  return FullRef(ref, test, out, [](const auto& a, const auto& b) { return sim2real::friqa::Ssim(a, b); });
}
s2r_status s2r_ms_ssim(const s2r_image* ref, const s2r_image* test, double* out) {
  return FullRef(ref, test, out, [](const auto& a, const auto& b) { return sim2real::friqa::MsSsim(a, b); });
}
s2r_status s2r_cw_ssim(const s2r_image* ref, const s2r_image* test, double* out) {
  return FullRef(ref, test, out, [](const auto& a, const auto& b) { return sim2real::friqa::CwSsim(a, b); });
}
s2r_status s2r_fsim(const s2r_image* ref, const s2r_image* test, double* out) {
  return FullRef(ref, test, out, [](const auto& a, const auto& b) { return sim2real::friqa::Fsim(a, b); });
}

s2r_status s2r_lpips_files(const char* weights_path, const char* shapes_path,
                           const char* features_a, const char* features_b, double* out) {
  return Guard([&] {
    Require(weights_path, "weights_path");
    Require(shapes_path, "shapes_path");
    Require(features_a, "features_a");
    Require(features_b, "features_b");
    Require(out, "out");
    if (!std::filesystem::exists(weights_path)) {
      sim2real::Fail(ErrorKind::kModelMissing, std::string(weights_path) + ": LPIPS weights not found");
    }
    namespace fr = sim2real::friqa;
    const auto w = fr::LpipsWeights::Load(weights_path);
    const auto shapes = fr::LoadLayerShapes(shapes_path);
    *out = fr::LpipsFromFeatures(fr::LoadLayerFeatures(features_a, shapes),
                                 fr::LoadLayerFeatures(features_b, shapes), w)
               .value;
  });
}

s2r_status s2r_brisque(const s2r_image* img, const char* model_path, double* out) {
  return Guard([&] {
    Require(img, "img");
    Require(out, "out");
    const std::string path =
        model_path ? std::string(model_path)
                   : (std::filesystem::path(sim2real::harness::DefaultDataDir()) / "models" /
                      "brisque_live.json")
                         .string();
    *out = sim2real::nriqa::BrisqueScore(img->buf, sim2real::nriqa::SvrModel::Load(path));
  });
}

s2r_status s2r_niqe(const s2r_image* img, const char* model_path, double* out) {
  return Guard([&] {
    Require(img, "img");
    Require(out, "out");
    if (!model_path) sim2real::Fail(ErrorKind::kModelMissing, "niqe needs a model file");
    *out = sim2real::nriqa::NiqeScore(img->buf, sim2real::nriqa::NiqeModel::Load(model_path));
  });
}

s2r_status s2r_fid_files(const char* fvec_a, const char* fvec_b, double* out) {
  return Guard([&] {
    Require(fvec_a, "fvec_a");
    Require(fvec_b, "fvec_b");
    Require(out, "out");
    *out = sim2real::distmetrics::FidFromFiles(fvec_a, fvec_b);
  });
}

s2r_status s2r_convert_labels(const char* in_png, const char* out_png,
                              const char* source_taxonomy, const char* data_dir,
                              char** stats_json) {
  return Guard([&] {
    Require(in_png, "in_png");
    Require(out_png, "out_png");
    Require(source_taxonomy, "source_taxonomy");
    namespace tx = sim2real::taxonomy;
    const std::string dir = data_dir ? data_dir : sim2real::harness::DefaultDataDir();
    const tx::Taxonomy source = tx::LoadTaxonomyByName(source_taxonomy, dir);
    const tx::Taxonomy target = tx::LoadTaxonomyByName(tx::kCityscapesTrainId, dir);
    const sim2real::ImageBuffer raw = sim2real::LoadPng(in_png);
    tx::LabelMap lm;
    if (raw.channels() == 1) {
      lm = tx::FromIdImage(raw, source);
    } else if (source.name() == target.name()) {
      lm = tx::DecodeColor(raw, source);
    } else {
      lm = tx::DecodeSimulatorLabels(raw, source);
    }
    std::size_t unmapped = 0;
    if (source.name() != target.name()) {
      const auto mapping = tx::FindMapping(source.name(), target.name(), dir);
      if (!mapping) {
        sim2real::Fail(ErrorKind::kData, "no mapping from '" + source.name() + "' to '" +
                                             target.name() + "'");
      }
      tx::ValidateMapping(*mapping, source, target);
      auto r = tx::ApplyMapping(lm, *mapping);
      unmapped = r.unmapped_pixels;
      lm = std::move(r.labels);
    }
    sim2real::SavePng(tx::ToIdImage(lm), out_png);
    if (stats_json) {
      json hist = json::object();
      for (const auto& [id, n] : tx::Histogram(lm)) hist[std::to_string(id)] = n;
      *stats_json = Dup(json({{"source", source.name()},
                              {"target", target.name()},
                              {"width", lm.width},
                              {"height", lm.height},
                              {"unmapped_pixels", unmapped},
                              {"histogram", hist}})
                            .dump());
    }
  });
}

s2r_status s2r_sample_shift(const char* scenario_root, uint64_t seed, const char* taxonomy,
                            const char* out_manifest) {
  return Guard([&] {
    Require(scenario_root, "scenario_root");
    Require(out_manifest, "out_manifest");
    sim2real::harness::SampleShift(scenario_root, seed, taxonomy ? taxonomy : "carla")
        .Save(out_manifest);
  });
}

s2r_status s2r_assemble(const char* manifest_path, const char* out_dir, int width, int height,
                        const char* data_dir) {
  return Guard([&] {
    Require(manifest_path, "manifest_path");
    Require(out_dir, "out_dir");
    sim2real::harness::AssembleOptions opt;
    opt.width = width;
    opt.height = height;
    if (data_dir) opt.data_dir = data_dir;
    sim2real::harness::Assemble(sim2real::harness::Manifest::Load(manifest_path), out_dir, opt);
  });
}

s2r_status s2r_run_iqa(const char* ref_manifest, const char* test_manifest,
                       const char* options_json, char** report_json) {
  return Guard([&] {
    Require(test_manifest, "test_manifest");
    Require(report_json, "report_json");
    *report_json = nullptr;
    const json o = ParseOptions(options_json);
    sim2real::harness::IqaOptions opt;
    try {
      opt.metrics = o.value("metrics", std::vector<std::string>{});
      opt.brisque_model = o.value("brisque_model", "");
      opt.niqe_model = o.value("niqe_model", "");
      opt.lpips_weights = o.value("lpips_weights", "");
      opt.threads = o.value("threads", 0);
    } catch (const json::exception& e) {
      sim2real::Fail(ErrorKind::kInvalidArgument, std::string("options: ") + e.what());
    }
    const auto test = sim2real::harness::Manifest::Load(test_manifest);
    std::optional<sim2real::harness::Manifest> ref;
    if (ref_manifest) ref = sim2real::harness::Manifest::Load(ref_manifest);
    const auto report = sim2real::harness::RunIqa(ref ? &*ref : nullptr, test, opt);
    *report_json = Dup(sim2real::util::DumpJson(report.ToJson()));
  });
}

s2r_status s2r_run_seg_eval(const char* gt_manifest, const char* pred_manifest,
                            const char* options_json, char** report_json) {
  return Guard([&] {
    Require(gt_manifest, "gt_manifest");
    Require(pred_manifest, "pred_manifest");
    Require(report_json, "report_json");
    *report_json = nullptr;
    const json o = ParseOptions(options_json);
    sim2real::harness::SegOptions opt;
    try {
      opt.tasks = o.value("tasks", std::vector<std::string>{});
      opt.threads = o.value("threads", 0);
      opt.data_dir = o.value("data_dir", "");
    } catch (const json::exception& e) {
      sim2real::Fail(ErrorKind::kInvalidArgument, std::string("options: ") + e.what());
    }
    const auto report = sim2real::harness::RunSegEval(
        sim2real::harness::Manifest::Load(gt_manifest),
        sim2real::harness::Manifest::Load(pred_manifest), opt);
    *report_json = Dup(sim2real::util::DumpJson(report.ToJson()));
  });
}

s2r_status s2r_fit_niqe(const char* corpus_dir, int patch, double quantile,
                        const char* out_model) {
  return Guard([&] {
    Require(corpus_dir, "corpus_dir");
    Require(out_model, "out_model");
    const json model = sim2real::harness::FitNiqeCorpus(corpus_dir, {patch, quantile});
    sim2real::util::WriteTextFile(out_model, sim2real::util::DumpJson(model));
  });
}

s2r_status s2r_emit_report(const char* const* report_paths, size_t count, const char* format,
                           int allow_mixed_resolution, char** document) {
  return Guard([&] {
    Require(report_paths, "report_paths");
    Require(format, "format");
    Require(document, "document");
    *document = nullptr;
    std::vector<sim2real::harness::MetricReport> reports;
    for (size_t i = 0; i < count; ++i) {
      Require(report_paths[i], "report path");
      for (auto& r : sim2real::harness::LoadReports(report_paths[i])) reports.push_back(std::move(r));
    }
    sim2real::harness::EmitOptions opt;
    opt.allow_mixed_resolution = allow_mixed_resolution != 0;
    *document = Dup(sim2real::harness::EmitReport(
        reports, sim2real::harness::ParseReportFormat(format), opt));
  });
}

s2r_status s2r_convert_brisque_model(const char* libsvm_model, const char* range_file,
                                     const char* out_json) {
  return Guard([&] {
    Require(libsvm_model, "libsvm_model");
    Require(range_file, "range_file");
    Require(out_json, "out_json");
    const auto model = sim2real::nriqa::ConvertLibsvmModel(libsvm_model, range_file);
    sim2real::util::WriteTextFile(out_json, sim2real::util::DumpJson(model.ToJson()));
  });
}

}  // extern "C"
