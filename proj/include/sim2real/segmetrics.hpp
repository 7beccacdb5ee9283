#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sim2real/taxonomy.hpp"

namespace sim2real::segmetrics {

// K x K pixel counts over evaluation classes. Rows are ground truth, columns
// predictions. Ground-truth pixels whose prediction falls outside the class
// list are tallied per row in `missed` so they still count as false negatives.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<int> class_ids);

  const std::vector<int>& class_ids() const noexcept { return class_ids_; }
  int size() const noexcept { return static_cast<int>(class_ids_.size()); }
  std::uint64_t at(int gt_index, int pred_index) const {
    return counts_[static_cast<std::size_t>(gt_index) * class_ids_.size() + pred_index];
  }
  std::uint64_t missed(int gt_index) const { return missed_[gt_index]; }
  std::uint64_t total() const noexcept;

  // Index of a class id, or -1.
  int IndexOf(int class_id) const noexcept;
  void AddPixel(int gt_index, int pred_index, std::uint64_t n = 1);
  void AddMissed(int gt_index, std::uint64_t n = 1);
  void Merge(const ConfusionMatrix& other);

 private:
  std::vector<int> class_ids_;
  std::vector<int> index_;  // id -> index lookup, -1 for absent ids
  std::vector<std::uint64_t> counts_;
  std::vector<std::uint64_t> missed_;
};

// Accumulates one image pair. Ground-truth pixels outside the class list
// (ignore, or classes not evaluated) are skipped.
void AccumulateConfusion(const taxonomy::LabelMap& gt, const taxonomy::LabelMap& pred,
                         ConfusionMatrix& cm);

struct MiouResult {
  double miou = 0.0;  // percent
  // Percent IoU per class; nullopt when the class has neither GT nor
  // predictions.
  std::vector<std::optional<double>> per_class;
};

MiouResult Miou(const ConfusionMatrix& cm);

// Panoptic ids: semantic_id * 1000 + instance for things, semantic_id for
// stuff, void_id for unlabeled pixels.
struct InstanceMap {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> ids;
  std::int32_t void_id = 255;

  static constexpr std::int32_t kLabelDivisor = 1000;
  static int SemanticOf(std::int32_t id) noexcept {
    return id >= kLabelDivisor ? id / kLabelDivisor : id;
  }
  static bool IsThing(std::int32_t id) noexcept { return id >= kLabelDivisor; }
};

struct PqClassStats {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  double iou_sum = 0.0;

  double pq() const;
  double sq() const;
  double rq() const;
};

struct PanopticResult {
  double pq = 0.0;  // percent, pooled over classes
  double sq = 0.0;
  double rq = 0.0;
  double pq_class_mean = 0.0;  // unweighted mean over classes with any segment
  std::map<int, PqClassStats> per_class;
};

class PanopticAccumulator {
 public:
  void Add(const InstanceMap& gt, const InstanceMap& pred);
  void Merge(const PanopticAccumulator& other);
  PanopticResult Result() const;
  const std::map<int, PqClassStats>& stats() const noexcept { return stats_; }

 private:
  std::map<int, PqClassStats> stats_;
};

PanopticResult PanopticQuality(const InstanceMap& gt, const InstanceMap& pred);

struct InstancePrediction {
  int class_id = 0;
  double score = 0.0;
  std::vector<std::uint8_t> mask;  // width * height, non-zero = foreground
};

struct ImageInstances {
  int width = 0;
  int height = 0;
  std::vector<InstancePrediction> instances;
};

struct ApResult {
  double ap = 0.0;  // percent
  std::map<int, double> per_class;  // percent AP@[.5:.95]
  std::vector<double> thresholds;
};

// Per-image matching inputs: ground-truth counts per class and, for every
// prediction, its IoU against each same-class ground-truth instance.
struct ApImageData {
  struct Pred {
    int class_id = 0;
    double score = 0.0;
    std::vector<double> ious;
  };
  std::map<int, std::size_t> gt_count;
  std::vector<Pred> preds;
};

ApImageData PrepareApImage(const InstanceMap& gt, const ImageInstances& pred);

// Images are ranked in vector order when prediction scores tie.
ApResult InstanceApFromPrepared(const std::vector<ApImageData>& images);

// Ground-truth instances are the thing segments of each InstanceMap; images
// are paired by position.
ApResult InstanceAp(const std::vector<InstanceMap>& gts,
                    const std::vector<ImageInstances>& preds);

// 0.50, 0.55, ..., 0.95
std::vector<double> ApThresholds();

// Row-major run lengths alternating background/foreground, starting with
// background.
std::vector<std::uint32_t> EncodeRle(const std::vector<std::uint8_t>& mask);
std::vector<std::uint8_t> DecodeRle(const std::vector<std::uint32_t>& runs,
                                    std::size_t pixel_count);

// {instances:[{class_id, score, mask_rle}]}
ImageInstances LoadInstancePredictions(const std::string& path, int width, int height);
void SaveInstancePredictions(const ImageInstances& inst, const std::string& path);

// 8- or 16-bit gray PNG holding panoptic ids.
InstanceMap LoadInstanceMap(const std::string& path);
void SaveInstanceMap(const InstanceMap& m, const std::string& path);

}  // namespace sim2real::segmetrics
