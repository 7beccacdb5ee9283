#include <algorithm>
#include <filesystem>
#include <limits>

#include "sim2real/error.hpp"
#include "sim2real/harness.hpp"

namespace sim2real::harness {
namespace fs = std::filesystem;

namespace {

std::uint64_t SplitMix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

bool IsFrame(const fs::path& p) {
  const std::string name = p.filename().string();
  return p.extension() == ".png" && name.find("_img") != std::string::npos;
}

std::string LabelNameFor(const std::string& frame) {
  std::string label = frame;
  label.replace(label.find("_img"), 4, "_semseg");
  return label;
}

}  // namespace

Xorshift64Star::Xorshift64Star(std::uint64_t seed) {
  std::uint64_t s = seed;
  state_ = SplitMix64(s);
  if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;  // all-zero state is a fixed point
}

std::uint64_t Xorshift64Star::Next() noexcept {
  state_ ^= state_ >> 12;
  state_ ^= state_ << 25;
  state_ ^= state_ >> 27;
  return state_ * 0x2545F4914F6CDD1DULL;
}

std::uint64_t Xorshift64Star::Below(std::uint64_t n) {
  if (n == 0) Fail(ErrorKind::kInvalidArgument, "Below(0)");
  // Reject the low partial block so every residue is equally likely.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = Next();
    if (r >= threshold) return r % n;
  }
}

Manifest SampleShift(const std::string& scenario_root, std::uint64_t seed,
                     const std::string& taxonomy) {
  if (!fs::is_directory(scenario_root)) {
    Fail(ErrorKind::kIo, scenario_root + ": not a directory");
  }
  std::vector<fs::path> scenarios;
  for (const auto& d : fs::directory_iterator(scenario_root))
    if (d.is_directory()) scenarios.push_back(d.path());
  std::sort(scenarios.begin(), scenarios.end());
  if (scenarios.empty()) {
    Fail(ErrorKind::kData, scenario_root + ": no scenario subdirectories");
  }

  Manifest m;
  m.role = Role::kCustom;
  m.taxonomy = taxonomy;
  m.base_dir = scenario_root;
  m.provenance = {{"source", "shift"}, {"sampling_seed", seed},
                  {"sampler", "xorshift64star_splitmix64"}};
  Xorshift64Star rng(seed);
  for (const fs::path& dir : scenarios) {
    std::vector<std::string> frames;
    for (const auto& f : fs::directory_iterator(dir))
      if (f.is_regular_file() && IsFrame(f.path())) frames.push_back(f.path().filename().string());
    std::sort(frames.begin(), frames.end());
    const std::string scenario = dir.filename().string();
    if (frames.empty()) {
      Fail(ErrorKind::kData, "scenario '" + scenario + "' has no frames");
    }
    const std::string& frame = frames[rng.Below(frames.size())];
    const std::string label = LabelNameFor(frame);
    if (!fs::exists(dir / label)) {
      Fail(ErrorKind::kData, "scenario '" + scenario + "': missing label " + label +
                                 " for frame " + frame);
    }
    ManifestEntry e;
    e.id = scenario + "_" + fs::path(frame).stem().string();
    e.image_path = scenario + "/" + frame;
    e.label_path = scenario + "/" + label;
    m.entries.push_back(std::move(e));
  }
  return m;
}

}  // namespace sim2real::harness
