#include <algorithm>
#include <string>

#include "sim2real/error.hpp"
#include "sim2real/segmetrics.hpp"

namespace sim2real::segmetrics {

ConfusionMatrix::ConfusionMatrix(std::vector<int> class_ids)
    : class_ids_(std::move(class_ids)) {
  if (class_ids_.empty()) {
    Fail(ErrorKind::kInvalidArgument, "confusion matrix needs at least one class");
  }
  int max_id = 0;
  for (int id : class_ids_) {
    if (id < 0) Fail(ErrorKind::kInvalidArgument, "class ids must be non-negative");
    max_id = std::max(max_id, id);
  }
  index_.assign(static_cast<std::size_t>(max_id) + 1, -1);
  for (std::size_t i = 0; i < class_ids_.size(); ++i) {
    if (index_[class_ids_[i]] != -1) {
      Fail(ErrorKind::kInvalidArgument, "duplicate class id " + std::to_string(class_ids_[i]));
    }
    index_[class_ids_[i]] = static_cast<int>(i);
  }
  counts_.assign(class_ids_.size() * class_ids_.size(), 0);
  missed_.assign(class_ids_.size(), 0);
}

int ConfusionMatrix::IndexOf(int class_id) const noexcept {
  if (class_id < 0 || class_id >= static_cast<int>(index_.size())) return -1;
  return index_[class_id];
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  for (auto c : missed_) t += c;
  return t;
}

void ConfusionMatrix::AddPixel(int gt_index, int pred_index, std::uint64_t n) {
  counts_[static_cast<std::size_t>(gt_index) * class_ids_.size() + pred_index] += n;
}

void ConfusionMatrix::AddMissed(int gt_index, std::uint64_t n) { missed_[gt_index] += n; }

void ConfusionMatrix::Merge(const ConfusionMatrix& other) {
  if (other.class_ids_ != class_ids_) {
    Fail(ErrorKind::kInvalidArgument, "cannot merge confusion matrices over different classes");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  for (std::size_t i = 0; i < missed_.size(); ++i) missed_[i] += other.missed_[i];
}

void AccumulateConfusion(const taxonomy::LabelMap& gt, const taxonomy::LabelMap& pred,
                         ConfusionMatrix& cm) {
  if (gt.width != pred.width || gt.height != pred.height) {
    Fail(ErrorKind::kData, "confusion: dimension mismatch (" + std::to_string(gt.width) +
                               "x" + std::to_string(gt.height) + " vs " +
                               std::to_string(pred.width) + "x" +
                               std::to_string(pred.height) + ")");
  }
  if (gt.taxonomy != pred.taxonomy) {
    Fail(ErrorKind::kData, "confusion: taxonomy mismatch (" + gt.taxonomy + " vs " +
                               pred.taxonomy + ")");
  }
  for (std::size_t i = 0; i < gt.ids.size(); ++i) {
    const int g = cm.IndexOf(gt.ids[i]);
    if (g < 0) continue;
    const int p = cm.IndexOf(pred.ids[i]);
    if (p < 0) {
      cm.AddMissed(g);
    } else {
      cm.AddPixel(g, p);
    }
  }
}

MiouResult Miou(const ConfusionMatrix& cm) {
  if (cm.total() == 0) {
    Fail(ErrorKind::kData, "miou: confusion matrix is empty");
  }
  const int k = cm.size();
  MiouResult r;
  r.per_class.resize(k);
  double sum = 0.0;
  int n = 0;
  for (int c = 0; c < k; ++c) {
    const double tp = static_cast<double>(cm.at(c, c));
    double fp = 0.0;
    double fn = static_cast<double>(cm.missed(c));
    for (int o = 0; o < k; ++o) {
      if (o == c) continue;
      fp += static_cast<double>(cm.at(o, c));
      fn += static_cast<double>(cm.at(c, o));
    }
    const double denom = tp + fp + fn;
    if (denom == 0.0) continue;
    const double iou = 100.0 * tp / denom;
    r.per_class[c] = iou;
    sum += iou;
    ++n;
  }
  r.miou = sum / n;
  return r;
}

}  // namespace sim2real::segmetrics
