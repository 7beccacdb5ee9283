#include <algorithm>
#include <map>
#include <optional>
#include <set>

#include "harness/parallel.hpp"
#include "sim2real/error.hpp"
#include "sim2real/harness.hpp"
#include "sim2real/png_io.hpp"
#include "sim2real/segmetrics.hpp"
#include "sim2real/taxonomy.hpp"

namespace sim2real::harness {
using nlohmann::json;

namespace {

struct EntryWork {
  std::optional<segmetrics::ConfusionMatrix> cm;
  std::optional<segmetrics::PanopticAccumulator> pq;
  std::optional<segmetrics::ApImageData> ap;
  std::vector<Failure> failures;
  int width = 0;
  int height = 0;
};

const std::string& FirstNonEmpty(const std::string& a, const std::string& b) {
  return a.empty() ? b : a;
}

taxonomy::LabelMap LoadIdMap(const std::string& path, const taxonomy::Taxonomy& tax) {
  try {
    return taxonomy::FromIdImage(LoadPng(path), tax);
  } catch (const Error& e) {
    Fail(e.kind(), path + ": " + e.what());
  }
}

void CheckSize(int w, int h, int ew, int eh, const char* what) {
  if (w != ew || h != eh) {
    Fail(ErrorKind::kData, std::string(what) + " is " + std::to_string(w) + "x" +
                               std::to_string(h) + ", ground truth is " + std::to_string(ew) +
                               "x" + std::to_string(eh));
  }
}

}  // namespace

MetricReport RunSegEval(const Manifest& gt, const Manifest& pred, const SegOptions& opt) {
  std::set<std::string> tasks;
  for (const std::string& t : opt.tasks) {
    if (t != "miou" && t != "pq" && t != "ap") {
      Fail(ErrorKind::kInvalidArgument, "unknown segmentation task '" + t + "'");
    }
    tasks.insert(t);
  }
  if (tasks.empty()) Fail(ErrorKind::kInvalidArgument, "no segmentation tasks requested");
  if ((tasks.count("pq") || tasks.count("ap")) &&
      (IsShiftRole(gt.role) || IsShiftRole(pred.role))) {
    Fail(ErrorKind::kCapability,
         "panoptic annotations not provided for SHIFT-derived roles (manifest role " +
             std::string(RoleName(IsShiftRole(pred.role) ? pred.role : gt.role)) +
             " allows miou only)");
  }
  gt.Validate(false);
  pred.Validate(false);

  std::map<std::string, const ManifestEntry*> pred_by_id;
  for (const ManifestEntry& e : pred.entries) pred_by_id[e.id] = &e;
  for (const ManifestEntry& e : gt.entries) {
    if (!pred_by_id.count(e.id)) {
      Fail(ErrorKind::kData, "entry correspondence mismatch: '" + e.id +
                                 "' has no prediction entry");
    }
  }
  if (pred.entries.size() != gt.entries.size()) {
    Fail(ErrorKind::kData, "entry correspondence mismatch: prediction manifest has " +
                               std::to_string(pred.entries.size()) + " entries, ground truth " +
                               std::to_string(gt.entries.size()));
  }

  const std::string data_dir = opt.data_dir.empty() ? DefaultDataDir() : opt.data_dir;
  const taxonomy::Taxonomy tax = taxonomy::LoadTaxonomyByName(gt.taxonomy, data_dir);
  const std::vector<int> eval_ids = tax.EvalIds();

  const std::vector<const ManifestEntry*> order = gt.SortedEntries();
  std::vector<EntryWork> work(order.size());
  ParallelFor(order.size(), ResolveThreads(opt.threads), [&](std::size_t i) {
    const ManifestEntry& g = *order[i];
    const ManifestEntry& p = *pred_by_id.at(g.id);
    EntryWork& out = work[i];
    if (tasks.count("miou")) {
      try {
        if (g.label_path.empty()) Fail(ErrorKind::kData, "label_path missing");
        const auto gl = LoadIdMap(gt.Resolve(g.label_path), tax);
        const std::string& pp = FirstNonEmpty(p.pred_sem_path, p.label_path);
        if (pp.empty()) Fail(ErrorKind::kData, "pred_sem_path missing");
        const auto pl = LoadIdMap(pred.Resolve(pp), tax);
        CheckSize(pl.width, pl.height, gl.width, gl.height, "semantic prediction");
        segmetrics::ConfusionMatrix cm(eval_ids);
        segmetrics::AccumulateConfusion(gl, pl, cm);
        out.cm = std::move(cm);
        out.width = gl.width;
        out.height = gl.height;
      } catch (const std::exception& e) {
        out.failures.push_back({g.id, "miou", e.what()});
      }
    }
    std::optional<segmetrics::InstanceMap> gi;
    if (tasks.count("pq") || tasks.count("ap")) {
      try {
        if (g.instance_path.empty()) Fail(ErrorKind::kData, "instance_path missing");
        gi = segmetrics::LoadInstanceMap(gt.Resolve(g.instance_path));
        out.width = gi->width;
        out.height = gi->height;
      } catch (const std::exception& e) {
        for (const char* t : {"pq", "ap"})
          if (tasks.count(t)) out.failures.push_back({g.id, t, e.what()});
      }
    }
    if (gi && tasks.count("pq")) {
      try {
        const std::string& pp = FirstNonEmpty(p.pred_panoptic_path, p.instance_path);
        if (pp.empty()) Fail(ErrorKind::kData, "pred_panoptic_path missing");
        const auto pi = segmetrics::LoadInstanceMap(pred.Resolve(pp));
        CheckSize(pi.width, pi.height, gi->width, gi->height, "panoptic prediction");
        segmetrics::PanopticAccumulator acc;
        acc.Add(*gi, pi);
        out.pq = std::move(acc);
      } catch (const std::exception& e) {
        out.failures.push_back({g.id, "pq", e.what()});
      }
    }
    if (gi && tasks.count("ap")) {
      try {
        if (p.pred_inst_path.empty()) Fail(ErrorKind::kData, "pred_inst_path missing");
        const auto inst =
            segmetrics::LoadInstancePredictions(pred.Resolve(p.pred_inst_path), gi->width, gi->height);
        out.ap = segmetrics::PrepareApImage(*gi, inst);
      } catch (const std::exception& e) {
        out.failures.push_back({g.id, "ap", e.what()});
      }
    }
  });

  MetricReport report;
  report.role = RoleName(pred.role);
  report.width = gt.width;
  report.height = gt.height;
  segmetrics::ConfusionMatrix cm(eval_ids);
  segmetrics::PanopticAccumulator pq;
  std::vector<segmetrics::ApImageData> ap_images;
  std::size_t n_miou = 0, n_pq = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    EntryWork& w = work[i];
    const std::string& id = order[i]->id;
    if (w.width > 0) {
      if (report.width == 0) {
        report.width = w.width;
        report.height = w.height;
      } else if (w.width != report.width || w.height != report.height) {
        report.failures.push_back(
            {id, "*", "resolution " + std::to_string(w.width) + "x" + std::to_string(w.height) +
                          " differs from the set resolution " + std::to_string(report.width) +
                          "x" + std::to_string(report.height)});
        continue;
      }
    }
    for (Failure& f : w.failures) report.failures.push_back(std::move(f));
    if (w.cm) {
      cm.Merge(*w.cm);
      ++n_miou;
    }
    if (w.pq) {
      pq.Merge(*w.pq);
      ++n_pq;
    }
    if (w.ap) ap_images.push_back(std::move(*w.ap));
  }

  json echo = {{"tasks", std::vector<std::string>(tasks.begin(), tasks.end())},
               {"taxonomy", tax.name()}};
  if (tasks.count("miou") && n_miou > 0) {
    const auto r = segmetrics::Miou(cm);
    report.dataset_level["miou"] = r.miou;
    json per = json::object();
    for (std::size_t k = 0; k < eval_ids.size(); ++k) {
      const auto* def = tax.Find(eval_ids[k]);
      const std::string name = def ? def->name : std::to_string(eval_ids[k]);
      per[name] = r.per_class[k] ? json(*r.per_class[k]) : json(nullptr);
    }
    report.details["miou_per_class"] = std::move(per);
    report.details["miou_images"] = n_miou;
    echo["miou"] = {{"eval_classes", eval_ids.size()}, {"ignore_id", tax.ignore_id()},
                    {"out_of_list_predictions", "false_negative"}};
  }
  if (tasks.count("pq") && n_pq > 0) {
    const auto r = pq.Result();
    report.dataset_level["pq"] = r.pq;
    report.dataset_level["sq"] = r.sq;
    report.dataset_level["rq"] = r.rq;
    report.dataset_level["pq_class_mean"] = r.pq_class_mean;
    json per = json::object();
    for (const auto& [cls, s] : r.per_class) {
      per[std::to_string(cls)] = {{"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn},
                                  {"pq", s.pq()}, {"sq", s.sq()}, {"rq", s.rq()}};
    }
    report.details["pq_per_class"] = std::move(per);
    report.details["pq_images"] = n_pq;
    echo["pq"] = {{"match_iou", "> 0.5"}, {"label_divisor", segmetrics::InstanceMap::kLabelDivisor},
                  {"void_id", 255}, {"unmatched_pred_void_fraction", 0.5},
                  {"overall", "pooled over classes"}};
  }
  if (tasks.count("ap") && !ap_images.empty()) {
    const auto r = segmetrics::InstanceApFromPrepared(ap_images);
    report.dataset_level["ap"] = r.ap;
    json per = json::object();
    for (const auto& [cls, v] : r.per_class) per[std::to_string(cls)] = v;
    report.details["ap_per_class"] = std::move(per);
    report.details["ap_images"] = ap_images.size();
    echo["ap"] = {{"thresholds", r.thresholds},
                  {"interpolation", "101-point"},
                  {"matching", "greedy by descending score, highest unmatched IoU"},
                  {"classes", "mean over classes with ground truth instances"},
                  {"note", "protocol chosen by this tool, not taken from the reference results"}};
  }
  report.config_echo = std::move(echo);
  return report;
}

}  // namespace sim2real::harness
