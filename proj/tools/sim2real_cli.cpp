// Command-line front end. Everything goes through the C API.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sim2real/sim2real.h"

namespace {

using nlohmann::json;

enum Exit { kOk = 0, kUsage = 1, kDataError = 2, kModelMissing = 3 };

int ExitFor(s2r_status s) {
  switch (s) {
    case S2R_OK: return kOk;
    case S2R_ERR_INVALID_ARGUMENT: return kUsage;
    case S2R_ERR_MODEL_MISSING: return kModelMissing;
    default: return kDataError;
  }
}

int Report(s2r_status s) {
  if (s != S2R_OK) std::fprintf(stderr, "error: %s\n", s2r_last_error());
  return ExitFor(s);
}

const char* OrNull(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

// Writes an owned C string to `path` (or stdout) and frees it.
int Emit(s2r_status s, char* text, const std::string& path) {
  if (s != S2R_OK) return Report(s);
  int rc = kOk;
  if (path.empty()) {
    std::fputs(text, stdout);
  } else {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
      std::fprintf(stderr, "error: cannot write %s\n", path.c_str());
      rc = kDataError;
    }
  }
  s2r_string_free(text);
  return rc;
}

std::vector<std::string> SplitList(const std::vector<std::string>& in) {
  std::vector<std::string> out;
  for (const std::string& item : in) {
    std::size_t start = 0;
    while (start <= item.size()) {
      const std::size_t comma = item.find(',', start);
      const std::string part = item.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!part.empty()) out.push_back(part);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image quality, distribution and segmentation metrics for sim-to-real datasets"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(s2r_version()));

  int rc = kOk;

  // convert-labels
  std::string cl_in, cl_out, cl_source = "carla", cl_data, cl_stats;
  auto* convert = app.add_subcommand("convert-labels", "Convert a label PNG to trainIds");
  convert->add_option("--in", cl_in, "Input label PNG")->required();
  convert->add_option("--out", cl_out, "Output 8-bit trainId PNG")->required();
  convert->add_option("--source", cl_source, "Source taxonomy name")->capture_default_str();
  convert->add_option("--data-dir", cl_data, "Taxonomy/mapping directory");
  convert->add_option("--stats", cl_stats, "Write per-class pixel counts (JSON)");
  convert->callback([&] {
    char* stats = nullptr;
    const s2r_status s = s2r_convert_labels(cl_in.c_str(), cl_out.c_str(), cl_source.c_str(),
                                            OrNull(cl_data), cl_stats.empty() ? nullptr : &stats);
    rc = stats ? Emit(s, stats, cl_stats) : Report(s);
  });

  // sample-shift
  std::string ss_root, ss_out, ss_tax = "carla";
  std::uint64_t ss_seed = 0;
  auto* sample = app.add_subcommand("sample-shift", "Pick one frame per scenario");
  sample->add_option("--root", ss_root, "Directory of scenario subdirectories")->required();
  sample->add_option("--seed", ss_seed, "PRNG seed")->required();
  sample->add_option("--out", ss_out, "Output manifest")->required();
  sample->add_option("--taxonomy", ss_tax, "Label taxonomy of the frames")->capture_default_str();
  sample->callback([&] {
    rc = Report(s2r_sample_shift(ss_root.c_str(), ss_seed, ss_tax.c_str(), ss_out.c_str()));
  });

  // assemble
  std::string as_manifest, as_out, as_data;
  int as_w = 1024, as_h = 512;
  auto* assemble = app.add_subcommand("assemble", "Resize and normalize a dataset");
  assemble->add_option("--manifest", as_manifest, "Input manifest")->required();
  assemble->add_option("--out", as_out, "Output directory")->required();
  assemble->add_option("--width", as_w, "Target width")->capture_default_str();
  assemble->add_option("--height", as_h, "Target height")->capture_default_str();
  assemble->add_option("--data-dir", as_data, "Taxonomy/mapping directory");
  assemble->callback([&] {
    rc = Report(s2r_assemble(as_manifest.c_str(), as_out.c_str(), as_w, as_h, OrNull(as_data)));
  });

  // iqa
  std::string iq_ref, iq_test, iq_brisque, iq_niqe, iq_lpips, iq_out;
  std::vector<std::string> iq_metrics;
  int iq_threads = 0;
  auto* iqa = app.add_subcommand("iqa", "Per-image quality metrics and FID");
  iqa->add_option("--ref", iq_ref, "Reference manifest");
  iqa->add_option("--test", iq_test, "Test manifest")->required();
  iqa->add_option("--metrics", iq_metrics, "psnr,ssim,ms_ssim,cw_ssim,fsim,lpips,brisque,niqe,fid")
      ->required();
  iqa->add_option("--brisque-model", iq_brisque, "BRISQUE model JSON (default: shipped)");
  iqa->add_option("--niqe-model", iq_niqe, "NIQE model JSON (see fit-niqe)");
  iqa->add_option("--lpips-weights", iq_lpips, "LPIPS linear weights JSON");
  iqa->add_option("--threads", iq_threads, "Worker threads (default: SIM2REAL_THREADS or all)");
  iqa->add_option("--out", iq_out, "Report path (default: stdout)");
  iqa->callback([&] {
    json opt = {{"metrics", SplitList(iq_metrics)}, {"threads", iq_threads}};
    if (!iq_brisque.empty()) opt["brisque_model"] = iq_brisque;
    if (!iq_niqe.empty()) opt["niqe_model"] = iq_niqe;
    if (!iq_lpips.empty()) opt["lpips_weights"] = iq_lpips;
    char* report = nullptr;
    const s2r_status s =
        s2r_run_iqa(OrNull(iq_ref), iq_test.c_str(), opt.dump().c_str(), &report);
    rc = Emit(s, report, iq_out);
  });

  // fid
  std::string fid_a, fid_b;
  auto* fid = app.add_subcommand("fid", "FID between two FVEC feature files");
  fid->add_option("--a", fid_a, "First FVEC file")->required();
  fid->add_option("--b", fid_b, "Second FVEC file")->required();
  fid->callback([&] {
    double v = 0.0;
    const s2r_status s = s2r_fid_files(fid_a.c_str(), fid_b.c_str(), &v);
    if (s == S2R_OK) std::printf("%.17g\n", v);
    rc = Report(s);
  });

  // seg-eval
  std::string se_gt, se_pred, se_data, se_out;
  std::vector<std::string> se_tasks;
  int se_threads = 0;
  auto* seg = app.add_subcommand("seg-eval", "mIoU, PQ and instance AP");
  seg->add_option("--gt", se_gt, "Ground-truth manifest")->required();
  seg->add_option("--pred", se_pred, "Prediction manifest")->required();
  seg->add_option("--tasks", se_tasks, "miou,pq,ap")->required();
  seg->add_option("--threads", se_threads, "Worker threads");
  seg->add_option("--data-dir", se_data, "Taxonomy directory");
  seg->add_option("--out", se_out, "Report path (default: stdout)");
  seg->callback([&] {
    json opt = {{"tasks", SplitList(se_tasks)}, {"threads", se_threads}};
    if (!se_data.empty()) opt["data_dir"] = se_data;
    char* report = nullptr;
    const s2r_status s =
        s2r_run_seg_eval(se_gt.c_str(), se_pred.c_str(), opt.dump().c_str(), &report);
    rc = Emit(s, report, se_out);
  });

  // fit-niqe
  std::string fn_corpus, fn_out;
  int fn_patch = 96;
  double fn_quantile = 0.75;
  auto* fit = app.add_subcommand("fit-niqe", "Fit a NIQE model on pristine images");
  fit->add_option("--corpus", fn_corpus, "Directory of PNG images")->required();
  fit->add_option("--out", fn_out, "Model JSON")->required();
  fit->add_option("--patch", fn_patch, "Patch size")->capture_default_str();
  fit->add_option("--quantile", fn_quantile, "Sharpness selection fraction")->capture_default_str();
  fit->callback([&] {
    rc = Report(s2r_fit_niqe(fn_corpus.c_str(), fn_patch, fn_quantile, fn_out.c_str()));
  });

  // report
  std::string rp_format = "markdown", rp_out;
  std::vector<std::string> rp_inputs;
  bool rp_mixed = false;
  auto* report = app.add_subcommand("report", "Combine metric reports into a table");
  report->add_option("inputs", rp_inputs, "Report files (JSON or CSV)")->required();
  report->add_option("--format", rp_format, "json, csv or markdown")->capture_default_str();
  report->add_flag("--allow-mixed-resolution", rp_mixed, "Accept reports at different resolutions");
  report->add_option("--out", rp_out, "Output path (default: stdout)");
  report->callback([&] {
    std::vector<const char*> paths;
    for (const std::string& p : rp_inputs) paths.push_back(p.c_str());
    char* doc = nullptr;
    const s2r_status s = s2r_emit_report(paths.data(), paths.size(), rp_format.c_str(),
                                         rp_mixed ? 1 : 0, &doc);
    rc = Emit(s, doc, rp_out);
  });

  // convert-brisque-model
  std::string cb_model, cb_range, cb_out;
  auto* cbm = app.add_subcommand("convert-brisque-model",
                                 "Convert a LIBSVM BRISQUE model to JSON");
  cbm->add_option("--model", cb_model, "LIBSVM model file")->required();
  cbm->add_option("--range", cb_range, "svm-scale range file")->required();
  cbm->add_option("--out", cb_out, "Output JSON")->required();
  cbm->callback([&] {
    rc = Report(s2r_convert_brisque_model(cb_model.c_str(), cb_range.c_str(), cb_out.c_str()));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  return rc;
}
