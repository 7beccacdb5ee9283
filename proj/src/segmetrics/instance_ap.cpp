#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "sim2real/error.hpp"
#include "sim2real/segmetrics.hpp"

namespace sim2real::segmetrics {
namespace {

struct PredRef {
  std::size_t image;
  std::size_t index;
  double score;
};

// 101-point interpolated precision over the recall axis.
double InterpolatedAp(const std::vector<bool>& is_tp, std::size_t n_gt) {
  const std::size_t n = is_tp.size();
  std::vector<double> precision(n), recall(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += is_tp[i];
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(n_gt);
  }
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[it - recall.begin()];
  }
  return sum / 101.0;
}

}  // namespace

std::vector<double> ApThresholds() {
  std::vector<double> t;
  for (int k = 0; k < 10; ++k) t.push_back((50 + 5 * k) / 100.0);
  return t;
}

ApImageData PrepareApImage(const InstanceMap& gt, const ImageInstances& pred) {
  const std::size_t n = gt.ids.size();
  std::map<std::int32_t, std::vector<std::uint32_t>> segs;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t id = gt.ids[i];
    if (id != gt.void_id && InstanceMap::IsThing(id)) {
      segs[id].push_back(static_cast<std::uint32_t>(i));
    }
  }
  ApImageData out;
  std::map<int, std::vector<const std::vector<std::uint32_t>*>> by_class;
  for (const auto& [id, px] : segs) {
    const int c = InstanceMap::SemanticOf(id);
    by_class[c].push_back(&px);
    ++out.gt_count[c];
  }
  for (const InstancePrediction& ip : pred.instances) {
    if (ip.mask.size() != n) {
      Fail(ErrorKind::kData, "ap: prediction mask has " + std::to_string(ip.mask.size()) +
                                 " pixels, image has " + std::to_string(n));
    }
    ApImageData::Pred p{ip.class_id, ip.score, {}};
    const auto it = by_class.find(ip.class_id);
    if (it != by_class.end()) {
      std::uint64_t area = 0;
      for (auto v : ip.mask) area += v != 0;
      for (const auto* px : it->second) {
        std::uint64_t inter = 0;
        for (std::uint32_t i : *px) inter += ip.mask[i] != 0;
        const std::uint64_t uni = px->size() + area - inter;
        p.ious.push_back(uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0);
      }
    }
    out.preds.push_back(std::move(p));
  }
  return out;
}

ApResult InstanceApFromPrepared(const std::vector<ApImageData>& images) {
  std::map<int, std::size_t> gt_count;
  for (const ApImageData& im : images)
    for (const auto& [c, n] : im.gt_count) gt_count[c] += n;

  ApResult r;
  r.thresholds = ApThresholds();
  double class_sum = 0.0;
  for (const auto& [c, n_gt] : gt_count) {
    std::vector<PredRef> order;
    for (std::size_t im = 0; im < images.size(); ++im)
      for (std::size_t k = 0; k < images[im].preds.size(); ++k)
        if (images[im].preds[k].class_id == c)
          order.push_back({im, k, images[im].preds[k].score});
    std::stable_sort(order.begin(), order.end(),
                     [](const PredRef& a, const PredRef& b) { return a.score > b.score; });

    double thr_sum = 0.0;
    for (double t : r.thresholds) {
      std::map<std::size_t, std::vector<bool>> used;
      std::vector<bool> is_tp(order.size(), false);
      for (std::size_t o = 0; o < order.size(); ++o) {
        const auto& ious = images[order[o].image].preds[order[o].index].ious;
        auto& u = used[order[o].image];
        u.resize(ious.size(), false);
        int best = -1;
        double best_iou = -1.0;
        for (std::size_t gi = 0; gi < ious.size(); ++gi) {
          if (!u[gi] && ious[gi] >= t && ious[gi] > best_iou) {
            best = static_cast<int>(gi);
            best_iou = ious[gi];
          }
        }
        if (best >= 0) {
          u[best] = true;
          is_tp[o] = true;
        }
      }
      thr_sum += InterpolatedAp(is_tp, n_gt);
    }
    const double ap = 100.0 * thr_sum / static_cast<double>(r.thresholds.size());
    r.per_class[c] = ap;
    class_sum += ap;
  }
  r.ap = r.per_class.empty() ? 0.0 : class_sum / static_cast<double>(r.per_class.size());
  return r;
}

ApResult InstanceAp(const std::vector<InstanceMap>& gts,
                    const std::vector<ImageInstances>& preds) {
  if (gts.size() != preds.size()) {
    Fail(ErrorKind::kData, "ap: " + std::to_string(preds.size()) +
                               " prediction sets for " + std::to_string(gts.size()) +
                               " ground-truth images");
  }
  std::vector<ApImageData> prepared;
  prepared.reserve(gts.size());
  for (std::size_t i = 0; i < gts.size(); ++i) prepared.push_back(PrepareApImage(gts[i], preds[i]));
  return InstanceApFromPrepared(prepared);
}

}  // namespace sim2real::segmetrics
