#include <map>
#include <set>
#include <string>
#include <utility>

#include "sim2real/error.hpp"
#include "sim2real/segmetrics.hpp"

namespace sim2real::segmetrics {

double PqClassStats::sq() const { return tp ? iou_sum / static_cast<double>(tp) : 0.0; }

double PqClassStats::rq() const {
  const double d = static_cast<double>(tp) + 0.5 * static_cast<double>(fp + fn);
  return d > 0.0 ? static_cast<double>(tp) / d : 0.0;
}

double PqClassStats::pq() const {
  const double d = static_cast<double>(tp) + 0.5 * static_cast<double>(fp + fn);
  return d > 0.0 ? iou_sum / d : 0.0;
}

void PanopticAccumulator::Add(const InstanceMap& gt, const InstanceMap& pred) {
  if (gt.width != pred.width || gt.height != pred.height ||
      gt.ids.size() != pred.ids.size()) {
    Fail(ErrorKind::kData, "panoptic: dimension mismatch (" + std::to_string(gt.width) +
                               "x" + std::to_string(gt.height) + " vs " +
                               std::to_string(pred.width) + "x" +
                               std::to_string(pred.height) + ")");
  }
  std::map<std::int32_t, std::uint64_t> gt_area, pred_area, pred_void;
  std::map<std::pair<std::int32_t, std::int32_t>, std::uint64_t> inter;
  for (std::size_t i = 0; i < gt.ids.size(); ++i) {
    const std::int32_t g = gt.ids[i];
    const std::int32_t p = pred.ids[i];
    const bool g_void = g == gt.void_id;
    const bool p_void = p == pred.void_id;
    if (!g_void) ++gt_area[g];
    if (!p_void) {
      ++pred_area[p];
      if (g_void) ++pred_void[p];
    }
    if (!g_void && !p_void) ++inter[{g, p}];
  }

  std::set<std::int32_t> gt_matched, pred_matched;
  for (const auto& [key, n] : inter) {
    const auto [g, p] = key;
    if (InstanceMap::SemanticOf(g) != InstanceMap::SemanticOf(p)) continue;
    const std::uint64_t void_p = pred_void.count(p) ? pred_void.at(p) : 0;
    const double uni = static_cast<double>(gt_area.at(g) + pred_area.at(p) - n - void_p);
    const double iou = static_cast<double>(n) / uni;
    if (iou > 0.5) {
      PqClassStats& s = stats_[InstanceMap::SemanticOf(g)];
      ++s.tp;
      s.iou_sum += iou;
      gt_matched.insert(g);
      pred_matched.insert(p);
    }
  }
  for (const auto& [g, area] : gt_area) {
    if (!gt_matched.count(g)) ++stats_[InstanceMap::SemanticOf(g)].fn;
  }
  for (const auto& [p, area] : pred_area) {
    if (pred_matched.count(p)) continue;
    const std::uint64_t void_p = pred_void.count(p) ? pred_void.at(p) : 0;
    // Predictions lying mostly on unlabeled ground are not penalized.
    if (2 * void_p > area) continue;
    ++stats_[InstanceMap::SemanticOf(p)].fp;
  }
}

void PanopticAccumulator::Merge(const PanopticAccumulator& other) {
  for (const auto& [c, s] : other.stats_) {
    PqClassStats& d = stats_[c];
    d.tp += s.tp;
    d.fp += s.fp;
    d.fn += s.fn;
    d.iou_sum += s.iou_sum;
  }
}

PanopticResult PanopticAccumulator::Result() const {
  PanopticResult r;
  r.per_class = stats_;
  PqClassStats pooled;
  double class_sum = 0.0;
  int n = 0;
  for (const auto& [c, s] : stats_) {
    if (s.tp + s.fp + s.fn == 0) continue;
    pooled.tp += s.tp;
    pooled.fp += s.fp;
    pooled.fn += s.fn;
    pooled.iou_sum += s.iou_sum;
    class_sum += s.pq();
    ++n;
  }
  r.pq = 100.0 * pooled.pq();
  r.sq = 100.0 * pooled.sq();
  r.rq = 100.0 * pooled.rq();
  r.pq_class_mean = n ? 100.0 * class_sum / n : 0.0;
  return r;
}

PanopticResult PanopticQuality(const InstanceMap& gt, const InstanceMap& pred) {
  PanopticAccumulator acc;
  acc.Add(gt, pred);
  return acc.Result();
}

}  // namespace sim2real::segmetrics
