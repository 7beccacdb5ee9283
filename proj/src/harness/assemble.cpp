#include <filesystem>

#include "sim2real/error.hpp"
#include "sim2real/harness.hpp"
#include "sim2real/png_io.hpp"
#include "sim2real/segmetrics.hpp"
#include "sim2real/taxonomy.hpp"

namespace sim2real::harness {
namespace fs = std::filesystem;

namespace {

taxonomy::LabelMap LoadLabels(const std::string& path, const taxonomy::Taxonomy& tax) {
  const ImageBuffer raw = LoadPng(path);
  try {
    if (raw.channels() == 1) return taxonomy::FromIdImage(raw, tax);
    if (tax.name() == taxonomy::kCityscapesTrainId) return taxonomy::DecodeColor(raw, tax);
    return taxonomy::DecodeSimulatorLabels(raw, tax);
  } catch (const Error& e) {
    Fail(e.kind(), path + ": " + e.what());
  }
}

taxonomy::LabelMap ResizeLabels(const taxonomy::LabelMap& lm, const taxonomy::Taxonomy& tax,
                                int w, int h) {
  if (lm.width == w && lm.height == h) return lm;
  return taxonomy::FromIdImage(
      Resize(taxonomy::ToIdImage(lm), w, h, ResizeMode::kNearest), tax);
}

}  // namespace

Manifest Assemble(const Manifest& in, const std::string& out_dir, const AssembleOptions& opt) {
  if (opt.width < 1 || opt.height < 1) {
    Fail(ErrorKind::kInvalidArgument, "assemble: target resolution must be positive");
  }
  in.Validate(true);
  const std::string data_dir = opt.data_dir.empty() ? DefaultDataDir() : opt.data_dir;
  const taxonomy::Taxonomy source = taxonomy::LoadTaxonomyByName(in.taxonomy, data_dir);
  const taxonomy::Taxonomy target =
      taxonomy::LoadTaxonomyByName(taxonomy::kCityscapesTrainId, data_dir);
  std::optional<taxonomy::TaxonomyMapping> mapping;
  if (source.name() != target.name()) {
    mapping = taxonomy::FindMapping(source.name(), target.name(), data_dir);
    if (!mapping) {
      Fail(ErrorKind::kData, "assemble: no mapping from taxonomy '" + source.name() +
                                 "' to '" + target.name() + "'");
    }
    taxonomy::ValidateMapping(*mapping, source, target);
  }

  const fs::path out(out_dir);
  fs::create_directories(out / "images");
  Manifest m = in;
  m.base_dir = out_dir;
  m.taxonomy = target.name();
  m.width = opt.width;
  m.height = opt.height;
  if (!m.provenance.is_object()) m.provenance = nlohmann::json::object();
  for (std::string* p : {&m.fid_features, &m.lpips_shapes}) {
    if (!p->empty()) *p = fs::absolute(in.Resolve(*p)).lexically_normal().string();
  }
  if (!m.provenance.contains("resize_stage")) m.provenance["resize_stage"] = "assemble";

  for (ManifestEntry& e : m.entries) {
    // Carried-over paths keep pointing at the source files.
    for (std::string* p : {&e.pred_sem_path, &e.pred_inst_path, &e.pred_panoptic_path,
                           &e.feature_path, &e.lpips_path}) {
      if (!p->empty()) *p = fs::absolute(in.Resolve(*p)).lexically_normal().string();
    }
    if (!e.image_path.empty()) {
      const ImageBuffer img = LoadPng(in.Resolve(e.image_path));
      const std::string rel = "images/" + e.id + ".png";
      SavePng(Resize(img, opt.width, opt.height, ResizeMode::kLanczos3), (out / rel).string());
      e.image_path = rel;
    }
    if (!e.label_path.empty()) {
      const std::string src = in.Resolve(e.label_path);
      taxonomy::LabelMap lm = ResizeLabels(LoadLabels(src, source), source, opt.width, opt.height);
      if (mapping) {
        auto r = taxonomy::ApplyMapping(lm, *mapping);
        if (r.unmapped_pixels) {
          Fail(ErrorKind::kData, src + ": " + std::to_string(r.unmapped_pixels) +
                                     " pixels carry classes without a mapping");
        }
        lm = std::move(r.labels);
      }
      fs::create_directories(out / "labels");
      const std::string rel = "labels/" + e.id + ".png";
      SavePng(taxonomy::ToIdImage(lm), (out / rel).string());
      e.label_path = rel;
    }
    if (!e.instance_path.empty()) {
      segmetrics::InstanceMap im = segmetrics::LoadInstanceMap(in.Resolve(e.instance_path));
      if (im.width != opt.width || im.height != opt.height) {
        std::vector<double> v(im.ids.begin(), im.ids.end());
        const ImageBuffer r = Resize(ImageBuffer(im.width, im.height, 1, std::move(v)),
                                     opt.width, opt.height, ResizeMode::kNearest);
        im.width = opt.width;
        im.height = opt.height;
        im.ids.resize(r.pixel_count());
        for (std::size_t i = 0; i < im.ids.size(); ++i)
          im.ids[i] = static_cast<std::int32_t>(r.data()[i]);
      }
      fs::create_directories(out / "instances");
      const std::string rel = "instances/" + e.id + ".png";
      segmetrics::SaveInstanceMap(im, (out / rel).string());
      e.instance_path = rel;
    }
  }
  m.Save((out / "manifest.json").string());
  return m;
}

}  // namespace sim2real::harness
