#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sim2real/report.hpp"

namespace sim2real::harness {

enum class Role { kVi, kVpc, kVoc, kVcc, kVps, kVos, kVcs, kCustom };

const char* RoleName(Role r) noexcept;
Role ParseRole(const std::string& s);
// Sets derived from SHIFT carry no panoptic annotations.
bool IsShiftRole(Role r) noexcept;

struct ManifestEntry {
  std::string id;
  std::string image_path;
  std::string label_path;
  std::string instance_path;
  std::string pred_sem_path;
  std::string pred_inst_path;
  std::string pred_panoptic_path;
  std::string feature_path;
  std::string lpips_path;
};

// Paths inside a manifest are relative to the manifest's directory unless
// absolute.
struct Manifest {
  Role role = Role::kCustom;
  std::string taxonomy = "cityscapes_trainid";
  int width = 0;  // declared resolution, 0 if unspecified
  int height = 0;
  nlohmann::json provenance = nlohmann::json::object();
  std::string fid_features;
  std::string lpips_shapes;
  std::vector<ManifestEntry> entries;
  std::string base_dir = ".";

  std::string Resolve(const std::string& path) const;

  static Manifest FromJson(const nlohmann::json& j, const std::string& base_dir);
  // Paths are written relative to `base_dir`.
  nlohmann::json ToJson(const std::string& base_dir) const;
  static Manifest Load(const std::string& path);
  void Save(const std::string& path) const;

  // Structural checks; with `check_files` also that referenced files exist.
  void Validate(bool check_files) const;

  // Entries sorted by id.
  std::vector<const ManifestEntry*> SortedEntries() const;
};

// xorshift64* with a splitmix64-expanded seed.
class Xorshift64Star {
 public:
  explicit Xorshift64Star(std::uint64_t seed);
  std::uint64_t Next() noexcept;
  // Uniform in [0, n), rejection-sampled.
  std::uint64_t Below(std::uint64_t n);

 private:
  std::uint64_t state_;
};

// One frame per scenario subdirectory. Frames are files named *_img*.png;
// the label is the same name with "img" replaced by "semseg".
Manifest SampleShift(const std::string& scenario_root, std::uint64_t seed,
                     const std::string& taxonomy = "carla");

struct AssembleOptions {
  int width = 1024;
  int height = 512;
  std::string data_dir;  // empty: DefaultDataDir()
};

// Writes images/, labels/ and (if present) instances/ under `out_dir`, plus
// out_dir/manifest.json, and returns the new manifest.
Manifest Assemble(const Manifest& in, const std::string& out_dir,
                  const AssembleOptions& opt = {});

struct IqaOptions {
  std::vector<std::string> metrics;
  std::string brisque_model;  // empty: shipped model
  std::string niqe_model;
  std::string lpips_weights;
  int threads = 0;  // 0: SIM2REAL_THREADS or hardware concurrency
};

std::vector<std::string> KnownIqaMetrics();

MetricReport RunIqa(const Manifest* ref, const Manifest& test, const IqaOptions& opt);

struct SegOptions {
  std::vector<std::string> tasks;  // miou, pq, ap
  int threads = 0;
  std::string data_dir;
};

MetricReport RunSegEval(const Manifest& gt, const Manifest& pred, const SegOptions& opt);

struct NiqeFitOptions {
  int patch = 96;
  double quantile = 0.75;
};

// Fits a NIQE model on every PNG in `corpus_dir` (sorted by name) and
// returns it as JSON.
nlohmann::json FitNiqeCorpus(const std::string& corpus_dir, const NiqeFitOptions& opt);

// Pool width: explicit value, else SIM2REAL_THREADS, else hardware threads.
int ResolveThreads(int requested);

// Shipped data directory, overridable with SIM2REAL_DATA_DIR.
std::string DefaultDataDir();

}  // namespace sim2real::harness
