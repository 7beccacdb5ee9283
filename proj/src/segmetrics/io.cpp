#include <cmath>
#include <string>

#include "sim2real/error.hpp"
#include "sim2real/png_io.hpp"
#include "sim2real/segmetrics.hpp"
#include "util/files.hpp"

namespace sim2real::segmetrics {

std::vector<std::uint32_t> EncodeRle(const std::vector<std::uint8_t>& mask) {
  std::vector<std::uint32_t> runs;
  bool fg = false;
  std::uint32_t run = 0;
  for (std::uint8_t v : mask) {
    if ((v != 0) != fg) {
      runs.push_back(run);
      run = 0;
      fg = !fg;
    }
    ++run;
  }
  runs.push_back(run);
  return runs;
}

std::vector<std::uint8_t> DecodeRle(const std::vector<std::uint32_t>& runs,
                                    std::size_t pixel_count) {
  std::uint64_t total = 0;
  for (auto r : runs) total += r;
  if (total != pixel_count) {
    Fail(ErrorKind::kFormat, "mask_rle runs sum to " + std::to_string(total) +
                                 ", image has " + std::to_string(pixel_count) + " pixels");
  }
  std::vector<std::uint8_t> mask;
  mask.reserve(pixel_count);
  bool fg = false;
  for (auto r : runs) {
    mask.insert(mask.end(), r, fg ? 1 : 0);
    fg = !fg;
  }
  return mask;
}

ImageInstances LoadInstancePredictions(const std::string& path, int width, int height) {
  const nlohmann::json j = util::ReadJsonFile(path);
  ImageInstances out;
  out.width = width;
  out.height = height;
  const std::size_t n = static_cast<std::size_t>(width) * height;
  try {
    std::size_t k = 0;
    for (const auto& inst : j.at("instances")) {
      InstancePrediction p;
      p.class_id = inst.at("class_id").get<int>();
      p.score = inst.at("score").get<double>();
      if (!std::isfinite(p.score) || p.score < 0.0 || p.score > 1.0) {
        Fail(ErrorKind::kFormat, path + ": instance " + std::to_string(k) +
                                     " score outside [0,1]");
      }
      try {
        p.mask = DecodeRle(inst.at("mask_rle").get<std::vector<std::uint32_t>>(), n);
      } catch (const Error& e) {
        Fail(ErrorKind::kFormat, path + ": instance " + std::to_string(k) + ": " + e.what());
      }
      bool any = false;
      for (auto v : p.mask) any = any || v;
      if (!any) {
        Fail(ErrorKind::kFormat, path + ": instance " + std::to_string(k) + " has an empty mask");
      }
      out.instances.push_back(std::move(p));
      ++k;
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kFormat, path + ": " + e.what());
  }
  return out;
}

void SaveInstancePredictions(const ImageInstances& inst, const std::string& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const InstancePrediction& p : inst.instances) {
    arr.push_back({{"class_id", p.class_id}, {"score", p.score}, {"mask_rle", EncodeRle(p.mask)}});
  }
  util::WriteTextFile(path, nlohmann::json{{"instances", arr}}.dump() + "\n");
}

InstanceMap LoadInstanceMap(const std::string& path) {
  const ImageBuffer img = LoadPng(path, PngMode::kInstanceIds);
  if (img.channels() != 1) {
    Fail(ErrorKind::kFormat, path + ": instance maps must be single-channel");
  }
  InstanceMap m;
  m.width = img.width();
  m.height = img.height();
  m.ids.resize(img.pixel_count());
  for (std::size_t i = 0; i < m.ids.size(); ++i) {
    m.ids[i] = static_cast<std::int32_t>(img.data()[i]);
  }
  return m;
}

void SaveInstanceMap(const InstanceMap& m, const std::string& path) {
  std::vector<double> data(m.ids.begin(), m.ids.end());
  for (double v : data) {
    if (v < 0 || v > 65535) {
      Fail(ErrorKind::kInvalidArgument, path + ": instance id out of 16-bit range");
    }
  }
  SavePng(ImageBuffer(m.width, m.height, 1, std::move(data)), path, 16);
}

}  // namespace sim2real::segmetrics
