#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <thread>

#include "sim2real/error.hpp"
#include "sim2real/harness.hpp"
#include "sim2real/taxonomy.hpp"
#include "util/files.hpp"

#ifndef SIM2REAL_DEFAULT_DATA_DIR
#define SIM2REAL_DEFAULT_DATA_DIR "data"
#endif

namespace sim2real::harness {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::pair<Role, const char*> kRoleNames[] = {
    {Role::kVi, "V_i"},   {Role::kVpc, "V_pc"}, {Role::kVoc, "V_oc"},
    {Role::kVcc, "V_cc"}, {Role::kVps, "V_ps"}, {Role::kVos, "V_os"},
    {Role::kVcs, "V_cs"}, {Role::kCustom, "custom"},
};

// Field name and member pointer for every optional entry path.
constexpr std::pair<const char*, std::string ManifestEntry::*> kEntryPaths[] = {
    {"image_path", &ManifestEntry::image_path},
    {"label_path", &ManifestEntry::label_path},
    {"instance_path", &ManifestEntry::instance_path},
    {"pred_sem_path", &ManifestEntry::pred_sem_path},
    {"pred_inst_path", &ManifestEntry::pred_inst_path},
    {"pred_panoptic_path", &ManifestEntry::pred_panoptic_path},
    {"feature_path", &ManifestEntry::feature_path},
    {"lpips_path", &ManifestEntry::lpips_path},
};

std::string RelativeTo(const std::string& path, const std::string& base) {
  const fs::path abs = fs::absolute(path).lexically_normal();
  const fs::path rel = abs.lexically_relative(fs::absolute(base).lexically_normal());
  return rel.empty() ? abs.generic_string() : rel.generic_string();
}

}  // namespace

const char* RoleName(Role r) noexcept {
  for (const auto& [role, name] : kRoleNames)
    if (role == r) return name;
  return "custom";
}

Role ParseRole(const std::string& s) {
  for (const auto& [role, name] : kRoleNames)
    if (s == name) return role;
  Fail(ErrorKind::kFormat, "unknown dataset role '" + s + "'");
}

bool IsShiftRole(Role r) noexcept {
  return r == Role::kVps || r == Role::kVos || r == Role::kVcs;
}

std::string Manifest::Resolve(const std::string& path) const {
  if (path.empty()) return path;
  const fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(base_dir) / p).lexically_normal().string();
}

Manifest Manifest::FromJson(const json& j, const std::string& base_dir) {
  Manifest m;
  m.base_dir = base_dir.empty() ? "." : base_dir;
  try {
    m.role = ParseRole(j.value("role", "custom"));
    m.taxonomy = j.value("taxonomy", std::string(taxonomy::kCityscapesTrainId));
    if (j.contains("resolution")) {
      const auto r = j.at("resolution").get<std::vector<int>>();
      if (r.size() != 2 || r[0] < 1 || r[1] < 1) {
        Fail(ErrorKind::kFormat, "manifest: resolution must be [width, height]");
      }
      m.width = r[0];
      m.height = r[1];
    }
    if (j.contains("provenance")) m.provenance = j.at("provenance");
    m.fid_features = j.value("fid_features", "");
    m.lpips_shapes = j.value("lpips_shapes", "");
    for (const auto& e : j.at("entries")) {
      ManifestEntry entry;
      for (const auto& [key, member] : kEntryPaths) entry.*member = e.value(key, "");
      entry.id = e.value("id", "");
      if (entry.id.empty()) entry.id = fs::path(entry.image_path).stem().string();
      m.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    Fail(ErrorKind::kFormat, std::string("manifest: ") + e.what());
  }
  m.Validate(false);
  return m;
}

json Manifest::ToJson(const std::string& out_dir) const {
  json entries = json::array();
  for (const ManifestEntry& e : this->entries) {
    json je = {{"id", e.id}};
    for (const auto& [key, member] : kEntryPaths) {
      if (!(e.*member).empty()) je[key] = RelativeTo(Resolve(e.*member), out_dir);
    }
    entries.push_back(std::move(je));
  }
  json j = {{"role", RoleName(role)},
            {"taxonomy", taxonomy},
            {"provenance", provenance},
            {"entries", std::move(entries)}};
  if (width > 0) j["resolution"] = {width, height};
  if (!fid_features.empty()) j["fid_features"] = RelativeTo(Resolve(fid_features), out_dir);
  if (!lpips_shapes.empty()) j["lpips_shapes"] = RelativeTo(Resolve(lpips_shapes), out_dir);
  return j;
}

Manifest Manifest::Load(const std::string& path) {
  const json j = util::ReadJsonFile(path);
  const std::string dir = fs::path(path).parent_path().string();
  try {
    return FromJson(j, dir.empty() ? "." : dir);
  } catch (const Error& e) {
    Fail(e.kind(), path + ": " + e.what());
  }
}

void Manifest::Save(const std::string& path) const {
  std::string dir = fs::path(path).parent_path().string();
  if (dir.empty()) dir = ".";
  fs::create_directories(dir);
  util::WriteTextFile(path, util::DumpJson(ToJson(dir)));
}

void Manifest::Validate(bool check_files) const {
  std::set<std::string> ids;
  for (const ManifestEntry& e : entries) {
    if (e.id.empty()) Fail(ErrorKind::kFormat, "manifest: entry without id or image_path");
    if (!ids.insert(e.id).second) {
      Fail(ErrorKind::kFormat, "manifest: duplicate entry id '" + e.id + "'");
    }
    if (IsShiftRole(role) && (!e.instance_path.empty() || !e.pred_panoptic_path.empty())) {
      Fail(ErrorKind::kCapability, std::string("manifest: role ") + RoleName(role) +
                                       " cannot carry panoptic annotations (entry '" +
                                       e.id + "')");
    }
    if (!check_files) continue;
    for (const auto& [key, member] : kEntryPaths) {
      const std::string& p = e.*member;
      if (!p.empty() && !fs::exists(Resolve(p))) {
        Fail(ErrorKind::kIo, "manifest: entry '" + e.id + "' " + key + " not found: " +
                                 Resolve(p));
      }
    }
  }
  if (check_files) {
    for (const std::string* p : {&fid_features, &lpips_shapes}) {
      if (!p->empty() && !fs::exists(Resolve(*p))) {
        Fail(ErrorKind::kIo, "manifest: file not found: " + Resolve(*p));
      }
    }
  }
}

std::vector<const ManifestEntry*> Manifest::SortedEntries() const {
  std::vector<const ManifestEntry*> out;
  for (const ManifestEntry& e : entries) out.push_back(&e);
  std::sort(out.begin(), out.end(),
            [](const ManifestEntry* a, const ManifestEntry* b) { return a->id < b->id; });
  return out;
}

int ResolveThreads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SIM2REAL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 1024) return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string DefaultDataDir() {
  if (const char* env = std::getenv("SIM2REAL_DATA_DIR")) {
    if (*env) return env;
  }
  return SIM2REAL_DEFAULT_DATA_DIR;
}

}  // namespace sim2real::harness
