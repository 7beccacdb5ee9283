#include <cmath>
#include <string>

#include "sim2real/distmetrics.hpp"
#include "sim2real/error.hpp"
#include "sim2real/friqa.hpp"
#include "util/files.hpp"

namespace sim2real::friqa {
namespace {

constexpr double kNormEps = 1e-10;

std::string ShapeString(const LayerShape& s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" +
         std::to_string(s.width);
}

void ValidateLayer(const Layer& l, std::size_t index) {
  if (l.shape.channels < 1 || l.shape.height < 1 || l.shape.width < 1 ||
      l.data.size() != l.shape.size()) {
    Fail(ErrorKind::kData, "lpips: layer " + std::to_string(index) + " data length " +
                               std::to_string(l.data.size()) + " does not match shape " +
                               ShapeString(l.shape));
  }
}

}  // namespace

LpipsWeights LpipsWeights::FromJson(const nlohmann::json& j) {
  LpipsWeights w;
  try {
    for (const auto& layer : j.at("layers")) {
      const int channels = layer.at("channels").get<int>();
      auto taps = layer.at("weights").get<std::vector<double>>();
      if (static_cast<int>(taps.size()) != channels) {
        Fail(ErrorKind::kFormat, "lpips weights: layer declares " +
                                     std::to_string(channels) + " channels but lists " +
                                     std::to_string(taps.size()) + " weights");
      }
      w.per_layer.push_back(std::move(taps));
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kFormat, std::string("lpips weights: ") + e.what());
  }
  return w;
}

LpipsWeights LpipsWeights::Load(const std::string& path) {
  return FromJson(util::ReadJsonFile(path));
}

FRScore LpipsFromFeatures(const LayerFeatures& a, const LayerFeatures& b,
                          const LpipsWeights& weights) {
  if (a.layers.size() != b.layers.size()) {
    Fail(ErrorKind::kData, "lpips: layer count mismatch (" +
                               std::to_string(a.layers.size()) + " vs " +
                               std::to_string(b.layers.size()) + ")");
  }
  if (weights.per_layer.size() != a.layers.size()) {
    Fail(ErrorKind::kData, "lpips: weights cover " +
                               std::to_string(weights.per_layer.size()) +
                               " layers, features have " + std::to_string(a.layers.size()));
  }
  double total = 0.0;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    const Layer& la = a.layers[l];
    const Layer& lb = b.layers[l];
    ValidateLayer(la, l);
    ValidateLayer(lb, l);
    if (!(la.shape == lb.shape)) {
      Fail(ErrorKind::kData, "lpips: layer " + std::to_string(l) + " shape mismatch (" +
                                 ShapeString(la.shape) + " vs " + ShapeString(lb.shape) + ")");
    }
    const std::vector<double>& w = weights.per_layer[l];
    if (static_cast<int>(w.size()) != la.shape.channels) {
      Fail(ErrorKind::kData, "lpips: layer " + std::to_string(l) + " has " +
                                 std::to_string(la.shape.channels) + " channels, weights " +
                                 std::to_string(w.size()));
    }
    for (double v : w) {
      if (!(v >= 0.0)) {
        Fail(ErrorKind::kData, "lpips: negative weight in layer " + std::to_string(l));
      }
    }
    const int c = la.shape.channels;
    const std::size_t hw = static_cast<std::size_t>(la.shape.height) * la.shape.width;
    double layer_sum = 0.0;
    for (std::size_t p = 0; p < hw; ++p) {
      double na = 0.0;
      double nb = 0.0;
      for (int k = 0; k < c; ++k) {
        const double va = la.data[k * hw + p];
        const double vb = lb.data[k * hw + p];
        na += va * va;
        nb += vb * vb;
      }
      na = std::sqrt(na) + kNormEps;
      nb = std::sqrt(nb) + kNormEps;
      double acc = 0.0;
      for (int k = 0; k < c; ++k) {
        const double d = la.data[k * hw + p] / na - lb.data[k * hw + p] / nb;
        acc += w[k] * d * d;
      }
      layer_sum += acc;
    }
    total += layer_sum / static_cast<double>(hw);
  }
  return {Metric::kLpips, total, false};
}

std::vector<LayerShape> LoadLayerShapes(const std::string& path) {
  const nlohmann::json j = util::ReadJsonFile(path);
  std::vector<LayerShape> shapes;
  try {
    for (const auto& l : j.at("layers")) {
      LayerShape s{l.at("channels").get<int>(), l.at("height").get<int>(),
                   l.at("width").get<int>()};
      if (s.channels < 1 || s.height < 1 || s.width < 1) {
        Fail(ErrorKind::kFormat, path + ": layer dimensions must be positive");
      }
      shapes.push_back(s);
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kFormat, path + ": " + e.what());
  }
  if (shapes.empty()) Fail(ErrorKind::kFormat, path + ": no layers declared");
  return shapes;
}

LayerFeatures LoadLayerFeatures(const std::string& fvec_path,
                                const std::vector<LayerShape>& shapes) {
  const distmetrics::FeatureSet fs = distmetrics::ReadFvec(fvec_path);
  std::size_t total = 0;
  for (const LayerShape& s : shapes) total += s.size();
  if (fs.count != 1 || fs.dim != total) {
    Fail(ErrorKind::kFormat, fvec_path + ": expected 1x" + std::to_string(total) +
                                 " feature record per the layer shapes, got " +
                                 std::to_string(fs.count) + "x" + std::to_string(fs.dim));
  }
  LayerFeatures out;
  std::size_t offset = 0;
  for (const LayerShape& s : shapes) {
    Layer l{s, std::vector<float>(fs.data.begin() + offset,
                                  fs.data.begin() + offset + s.size())};
    offset += s.size();
    out.layers.push_back(std::move(l));
  }
  return out;
}

}  // namespace sim2real::friqa
