#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "sim2real/image.hpp"

namespace sim2real::taxonomy {

using Rgb = std::array<std::uint8_t, 3>;

struct ClassDef {
  int id = 0;
  std::string name;
  Rgb color{};
  bool ignore_in_eval = false;
};

// A named, immutable class list. Construction validates id/color uniqueness
// and that the ignore id is not claimed by an evaluated class.
class Taxonomy {
 public:
  Taxonomy(std::string name, std::vector<ClassDef> classes, int ignore_id = 255,
           int id_channel = 0);

  const std::string& name() const noexcept { return name_; }
  const std::vector<ClassDef>& classes() const noexcept { return classes_; }
  int ignore_id() const noexcept { return ignore_id_; }
  // Channel of a raw simulator map carrying the class id (0 = red).
  int id_channel() const noexcept { return id_channel_; }

  bool Contains(int id) const noexcept;
  // True for declared ids and the ignore id.
  bool Accepts(int id) const noexcept { return id == ignore_id_ || Contains(id); }
  const ClassDef* Find(int id) const noexcept;
  const ClassDef* FindByColor(const Rgb& color) const noexcept;
  // Ids of classes that take part in evaluation, ascending.
  std::vector<int> EvalIds() const;

  static Taxonomy FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;

 private:
  std::string name_;
  std::vector<ClassDef> classes_;
  int ignore_id_;
  int id_channel_;
  std::map<int, std::size_t> by_id_;
  std::map<Rgb, std::size_t> by_color_;
};

struct TaxonomyMapping {
  std::string source;
  std::string target;
  std::string version;
  std::map<int, int> pairs;
  int target_ignore_id = 255;

  static TaxonomyMapping FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

// Checks totality over the source classes and that every target id is valid.
void ValidateMapping(const TaxonomyMapping& m, const Taxonomy& source,
                     const Taxonomy& target);

struct LabelMap {
  int width = 0;
  int height = 0;
  std::string taxonomy;
  std::vector<std::int32_t> ids;

  std::size_t size() const noexcept { return ids.size(); }
  std::int32_t at(int x, int y) const {
    return ids[static_cast<std::size_t>(y) * width + x];
  }
  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

LabelMap DecodeSimulatorLabels(const ImageBuffer& raw, const Taxonomy& tax);

struct MappingResult {
  LabelMap labels;
  std::size_t unmapped_pixels = 0;
};

MappingResult ApplyMapping(const LabelMap& lm, const TaxonomyMapping& m);

ImageBuffer EncodeColor(const LabelMap& lm, const Taxonomy& tax);
LabelMap DecodeColor(const ImageBuffer& img, const Taxonomy& tax);

// Single-channel id image (e.g. an 8-bit trainId PNG) to a validated map.
LabelMap FromIdImage(const ImageBuffer& img, const Taxonomy& tax);
ImageBuffer ToIdImage(const LabelMap& lm);

// Per-id pixel counts.
std::map<int, std::size_t> Histogram(const LabelMap& lm);

Taxonomy LoadTaxonomy(const std::string& path);
TaxonomyMapping LoadMapping(const std::string& path);

// `<data_dir>/taxonomies/<name>.json`
Taxonomy LoadTaxonomyByName(const std::string& name, const std::string& data_dir);
// `<data_dir>/mappings/<source>_to_<target>.json`, if present.
std::optional<TaxonomyMapping> FindMapping(const std::string& source,
                                           const std::string& target,
                                           const std::string& data_dir);

inline constexpr const char* kCityscapesTrainId = "cityscapes_trainid";

}  // namespace sim2real::taxonomy
