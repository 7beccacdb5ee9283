#include "sim2real/taxonomy.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sim2real/error.hpp"

namespace sim2real::taxonomy {

using nlohmann::json;

namespace {

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, path + ": cannot open");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    Fail(ErrorKind::kFormat, path + ": invalid JSON (" + e.what() + ")");
  }
}

std::string ColorString(const Rgb& c) {
  std::ostringstream os;
  os << "(" << int(c[0]) << "," << int(c[1]) << "," << int(c[2]) << ")";
  return os.str();
}

void RequireShape(const ImageBuffer& img, int channels, const char* op) {
  if (img.channels() != channels) {
    Fail(ErrorKind::kInvalidArgument,
         std::string(op) + " expects " + std::to_string(channels) +
             "-channel input, got " + std::to_string(img.channels()));
  }
}

// "unknown <what> 250 (1 px), 251 (3 px)"
template <typename Key, typename Fmt>
std::string DescribeUnknown(const std::string& one, const std::string& many,
                            const std::map<Key, std::size_t>& unknown, Fmt fmt) {
  std::ostringstream os;
  os << "unknown " << (unknown.size() > 1 ? many : one) << " ";
  bool first = true;
  for (const auto& [k, n] : unknown) {
    if (!first) os << ", ";
    first = false;
    os << fmt(k) << " (" << n << " px)";
  }
  return os.str();
}

}  // namespace

Taxonomy::Taxonomy(std::string name, std::vector<ClassDef> classes,
                   int ignore_id, int id_channel)
    : name_(std::move(name)), classes_(std::move(classes)),
      ignore_id_(ignore_id), id_channel_(id_channel) {
  if (id_channel_ < 0 || id_channel_ > 2) {
    Fail(ErrorKind::kInvalidArgument, "taxonomy " + name_ + ": id_channel must be 0..2");
  }
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    const ClassDef& c = classes_[i];
    if (!by_id_.emplace(c.id, i).second) {
      Fail(ErrorKind::kInvalidArgument,
           "taxonomy " + name_ + ": duplicate class id " + std::to_string(c.id));
    }
    if (!by_color_.emplace(c.color, i).second) {
      Fail(ErrorKind::kInvalidArgument,
           "taxonomy " + name_ + ": duplicate class color " + ColorString(c.color));
    }
    if (c.id == ignore_id_ && !c.ignore_in_eval) {
      Fail(ErrorKind::kInvalidArgument,
           "taxonomy " + name_ + ": ignore id " + std::to_string(ignore_id_) +
               " used by evaluated class " + c.name);
    }
  }
}

bool Taxonomy::Contains(int id) const noexcept { return by_id_.contains(id); }

const ClassDef* Taxonomy::Find(int id) const noexcept {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &classes_[it->second];
}

const ClassDef* Taxonomy::FindByColor(const Rgb& color) const noexcept {
  auto it = by_color_.find(color);
  return it == by_color_.end() ? nullptr : &classes_[it->second];
}

std::vector<int> Taxonomy::EvalIds() const {
  std::vector<int> ids;
  for (const auto& [id, idx] : by_id_)
    if (!classes_[idx].ignore_in_eval) ids.push_back(id);
  return ids;
}

Taxonomy Taxonomy::FromJson(const json& j) {
  try {
    std::vector<ClassDef> classes;
    for (const json& c : j.at("classes")) {
      ClassDef def;
      def.id = c.at("id").get<int>();
      def.name = c.at("name").get<std::string>();
      const auto rgb = c.at("color").get<std::vector<int>>();
      if (rgb.size() != 3) Fail(ErrorKind::kFormat, "class color needs 3 components");
      for (int k = 0; k < 3; ++k) {
        if (rgb[k] < 0 || rgb[k] > 255) Fail(ErrorKind::kFormat, "class color out of range");
        def.color[k] = static_cast<std::uint8_t>(rgb[k]);
      }
      def.ignore_in_eval = c.value("ignore_in_eval", false);
      classes.push_back(std::move(def));
    }
    int channel = 0;
    if (j.contains("id_channel")) {
      const std::string ch = j.at("id_channel").get<std::string>();
      if (ch == "r") channel = 0;
      else if (ch == "g") channel = 1;
      else if (ch == "b") channel = 2;
      else Fail(ErrorKind::kFormat, "id_channel must be one of r, g, b");
    }
    return Taxonomy(j.at("name").get<std::string>(), std::move(classes),
                    j.value("ignore_id", 255), channel);
  } catch (const json::exception& e) {
    Fail(ErrorKind::kFormat, std::string("taxonomy JSON: ") + e.what());
  }
}

json Taxonomy::ToJson() const {
  json classes = json::array();
  for (const ClassDef& c : classes_) {
    classes.push_back({{"id", c.id},
                       {"name", c.name},
                       {"color", {c.color[0], c.color[1], c.color[2]}},
                       {"ignore_in_eval", c.ignore_in_eval}});
  }
  static constexpr const char* kChannels[] = {"r", "g", "b"};
  return {{"name", name_}, {"ignore_id", ignore_id_},
          {"id_channel", kChannels[id_channel_]}, {"classes", classes}};
}

TaxonomyMapping TaxonomyMapping::FromJson(const json& j) {
  try {
    TaxonomyMapping m;
    m.source = j.at("source").get<std::string>();
    m.target = j.at("target").get<std::string>();
    m.version = j.value("version", "");
    m.target_ignore_id = j.value("target_ignore_id", 255);
    const json& pairs = j.at("pairs");
    if (pairs.is_object()) {
      for (const auto& [k, v] : pairs.items()) m.pairs[std::stoi(k)] = v.get<int>();
    } else {
      for (const json& p : pairs) m.pairs[p.at(0).get<int>()] = p.at(1).get<int>();
    }
    return m;
  } catch (const json::exception& e) {
    Fail(ErrorKind::kFormat, std::string("mapping JSON: ") + e.what());
  } catch (const std::logic_error& e) {
    Fail(ErrorKind::kFormat, std::string("mapping JSON: bad source id (") + e.what() + ")");
  }
}

json TaxonomyMapping::ToJson() const {
  json pairs = json::object();
  for (const auto& [s, t] : this->pairs) pairs[std::to_string(s)] = t;
  return {{"source", source}, {"target", target}, {"version", version},
          {"target_ignore_id", target_ignore_id}, {"pairs", pairs}};
}

void ValidateMapping(const TaxonomyMapping& m, const Taxonomy& source,
                     const Taxonomy& target) {
  if (m.source != source.name() || m.target != target.name()) {
    Fail(ErrorKind::kInvalidArgument,
         "mapping " + m.source + "->" + m.target + " does not connect " +
             source.name() + "->" + target.name());
  }
  for (const ClassDef& c : source.classes()) {
    auto it = m.pairs.find(c.id);
    if (it == m.pairs.end()) {
      Fail(ErrorKind::kData, "mapping " + m.source + "->" + m.target +
                                 " is not total: source class " +
                                 std::to_string(c.id) + " (" + c.name + ") unmapped");
    }
    if (!target.Accepts(it->second)) {
      Fail(ErrorKind::kData, "mapping sends " + std::to_string(c.id) +
                                 " to undeclared target id " +
                                 std::to_string(it->second));
    }
  }
}

LabelMap DecodeSimulatorLabels(const ImageBuffer& raw, const Taxonomy& tax) {
  RequireShape(raw, 3, "decode_simulator_labels");
  LabelMap lm{raw.width(), raw.height(), tax.name(), {}};
  lm.ids.resize(raw.pixel_count());
  std::map<int, std::size_t> unknown;
  auto src = raw.data();
  for (std::size_t i = 0; i < lm.ids.size(); ++i) {
    const int id = static_cast<int>(src[3 * i + tax.id_channel()]);
    if (!tax.Accepts(id)) ++unknown[id];
    lm.ids[i] = id;
  }
  if (!unknown.empty()) {
    Fail(ErrorKind::kData, DescribeUnknown("simulator class", "simulator classes", unknown,
                                           [](int id) { return std::to_string(id); }));
  }
  return lm;
}

MappingResult ApplyMapping(const LabelMap& lm, const TaxonomyMapping& m) {
  if (lm.taxonomy != m.source) {
    Fail(ErrorKind::kInvalidArgument, "label map taxonomy " + lm.taxonomy +
                                          " does not match mapping source " + m.source);
  }
  MappingResult r{LabelMap{lm.width, lm.height, m.target, {}}, 0};
  r.labels.ids.resize(lm.ids.size());
  for (std::size_t i = 0; i < lm.ids.size(); ++i) {
    const int id = lm.ids[i];
    auto it = m.pairs.find(id);
    if (it != m.pairs.end()) {
      r.labels.ids[i] = it->second;
    } else {
      r.labels.ids[i] = m.target_ignore_id;
      ++r.unmapped_pixels;
    }
  }
  return r;
}

ImageBuffer EncodeColor(const LabelMap& lm, const Taxonomy& tax) {
  ImageBuffer out(lm.width, lm.height, 3);
  auto dst = out.data();
  for (std::size_t i = 0; i < lm.ids.size(); ++i) {
    const int id = lm.ids[i];
    const ClassDef* c = id == tax.ignore_id() ? nullptr : tax.Find(id);
    if (c == nullptr && id != tax.ignore_id()) {
      Fail(ErrorKind::kData,
           "label id " + std::to_string(id) + " not in taxonomy " + tax.name());
    }
    for (int k = 0; k < 3; ++k) dst[3 * i + k] = c ? c->color[k] : 0.0;
  }
  return out;
}

LabelMap DecodeColor(const ImageBuffer& img, const Taxonomy& tax) {
  RequireShape(img, 3, "decode_color");
  LabelMap lm{img.width(), img.height(), tax.name(), {}};
  lm.ids.resize(img.pixel_count());
  std::map<Rgb, std::size_t> unknown;
  auto src = img.data();
  for (std::size_t i = 0; i < lm.ids.size(); ++i) {
    const Rgb color{static_cast<std::uint8_t>(src[3 * i]),
                    static_cast<std::uint8_t>(src[3 * i + 1]),
                    static_cast<std::uint8_t>(src[3 * i + 2])};
    if (const ClassDef* c = tax.FindByColor(color)) {
      lm.ids[i] = c->id;
    } else if (color == Rgb{0, 0, 0}) {
      lm.ids[i] = tax.ignore_id();
    } else {
      ++unknown[color];
      lm.ids[i] = tax.ignore_id();
    }
  }
  if (!unknown.empty()) {
    Fail(ErrorKind::kData, DescribeUnknown("color", "colors", unknown, ColorString));
  }
  return lm;
}

LabelMap FromIdImage(const ImageBuffer& img, const Taxonomy& tax) {
  RequireShape(img, 1, "label map");
  LabelMap lm{img.width(), img.height(), tax.name(), {}};
  lm.ids.resize(img.pixel_count());
  std::map<int, std::size_t> unknown;
  auto src = img.data();
  for (std::size_t i = 0; i < lm.ids.size(); ++i) {
    const int id = static_cast<int>(src[i]);
    if (!tax.Accepts(id)) ++unknown[id];
    lm.ids[i] = id;
  }
  if (!unknown.empty()) {
    Fail(ErrorKind::kData, DescribeUnknown("class id", "class ids", unknown,
                                           [](int id) { return std::to_string(id); }) +
                               " for taxonomy " + tax.name());
  }
  return lm;
}

ImageBuffer ToIdImage(const LabelMap& lm) {
  std::vector<double> data(lm.ids.begin(), lm.ids.end());
  return ImageBuffer(lm.width, lm.height, 1, std::move(data));
}

std::map<int, std::size_t> Histogram(const LabelMap& lm) {
  std::map<int, std::size_t> h;
  for (std::int32_t id : lm.ids) ++h[id];
  return h;
}

Taxonomy LoadTaxonomy(const std::string& path) {
  return Taxonomy::FromJson(ReadJsonFile(path));
}

TaxonomyMapping LoadMapping(const std::string& path) {
  return TaxonomyMapping::FromJson(ReadJsonFile(path));
}

Taxonomy LoadTaxonomyByName(const std::string& name, const std::string& data_dir) {
  const auto path = std::filesystem::path(data_dir) / "taxonomies" / (name + ".json");
  if (!std::filesystem::exists(path)) {
    Fail(ErrorKind::kData, "unknown taxonomy '" + name + "' (looked for " +
                               path.string() + ")");
  }
  return LoadTaxonomy(path.string());
}

std::optional<TaxonomyMapping> FindMapping(const std::string& source,
                                           const std::string& target,
                                           const std::string& data_dir) {
  const auto path = std::filesystem::path(data_dir) / "mappings" /
                    (source + "_to_" + target + ".json");
  if (!std::filesystem::exists(path)) return std::nullopt;
  return LoadMapping(path.string());
}

}  // namespace sim2real::taxonomy
