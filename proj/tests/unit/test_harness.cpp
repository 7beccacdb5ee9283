#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "sim2real/distmetrics.hpp"
#include "sim2real/error.hpp"
#include "sim2real/harness.hpp"
#include "sim2real/nriqa.hpp"
#include "sim2real/png_io.hpp"
#include "sim2real/report.hpp"
#include "sim2real/segmetrics.hpp"
#include "sim2real/taxonomy.hpp"
#include "test_support.hpp"

using namespace sim2real;
using namespace sim2real::harness;
using nlohmann::json;
using testing_support::AddNoise;
using testing_support::ImageSet;
using testing_support::SceneImage;
using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

std::vector<ImageBuffer> Scenes(int n, int w, int h, std::uint64_t seed) {
  std::vector<ImageBuffer> out;
  for (int i = 0; i < n; ++i) out.push_back(SceneImage(w, h, 3, seed + i));
  return out;
}

void AttachFeatures(Manifest& m, const std::string& dir, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  for (ManifestEntry& e : m.entries) {
    distmetrics::FeatureSet fs{1, 8, std::vector<float>(8)};
    for (float& v : fs.data) v = g(rng);
    distmetrics::WriteFvec(fs, dir + "/" + e.id + ".fvec");
    e.feature_path = e.id + ".fvec";
  }
  m.Save(dir + "/manifest.json");
}

MetricReport Fixture(const std::string& role, std::map<std::string, double> values,
                     int w = 1024, int h = 512) {
  MetricReport r;
  r.role = role;
  r.width = w;
  r.height = h;
  r.dataset_level = std::move(values);
  return r;
}

// Writes a segmentation set: trainId labels and panoptic maps per entry.
Manifest SegSet(const std::string& dir, int n, std::uint64_t seed, Role role) {
  fs::create_directories(dir);
  std::mt19937_64 rng(seed);
  Manifest m;
  m.role = role;
  m.base_dir = dir;
  for (int i = 0; i < n; ++i) {
    const std::string id = "s" + std::to_string(i);
    const int w = 32, h = 16;
    segmetrics::InstanceMap inst{w, h, std::vector<std::int32_t>(w * h, 0), 255};
    ImageBuffer sem(w, h, 1, 0.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        int cls = y < 6 ? 10 : (x < 16 ? 0 : 1);  // sky / road / sidewalk
        std::int32_t pid = cls;
        if (x >= 4 + static_cast<int>(rng() % 2) && x < 12 && y >= 8 && y < 14) {
          cls = 13;
          pid = 13000 + 1;
        } else if (x >= 20 && x < 28 && y >= 7 && y < 15) {
          cls = 11;
          pid = 11000 + 2;
        }
        sem.at(x, y) = cls;
        inst.ids[y * w + x] = pid;
      }
    SavePng(sem, dir + "/" + id + "_sem.png");
    ManifestEntry e;
    e.id = id;
    e.label_path = id + "_sem.png";
    if (!IsShiftRole(role)) {
      segmetrics::SaveInstanceMap(inst, dir + "/" + id + "_inst.png");
      e.instance_path = id + "_inst.png";
      segmetrics::ImageInstances preds{w, h, {}};
      for (std::int32_t thing : {13001, 11002}) {
        segmetrics::InstancePrediction p{thing / 1000, 0.9, std::vector<std::uint8_t>(w * h)};
        for (int k = 0; k < w * h; ++k) p.mask[k] = inst.ids[k] == thing;
        preds.instances.push_back(p);
      }
      segmetrics::SaveInstancePredictions(preds, dir + "/" + id + "_pred.json");
      e.pred_inst_path = id + "_pred.json";
    }
    m.entries.push_back(e);
  }
  m.Save(dir + "/manifest.json");
  return Manifest::Load(dir + "/manifest.json");
}

}  // namespace

TEST(Manifest, RoundTripAndRelativePaths) {
  TempDir dir;
  Manifest m;
  m.role = Role::kVpc;
  m.width = 64;
  m.height = 32;
  m.provenance = {{"generator", "x"}, {"seed", 3}};
  ManifestEntry e;
  e.id = "a";
  e.image_path = "imgs/a.png";
  e.label_path = "/abs/a_label.png";
  m.entries.push_back(e);
  m.base_dir = dir.path().string();
  m.Save(dir / "m.json");
  const Manifest back = Manifest::Load(dir / "m.json");
  EXPECT_EQ(back.role, Role::kVpc);
  EXPECT_EQ(back.width, 64);
  EXPECT_EQ(back.provenance["seed"], 3);
  ASSERT_EQ(back.entries.size(), 1u);
  EXPECT_EQ(back.Resolve(back.entries[0].image_path), (dir.path() / "imgs/a.png").string());
  EXPECT_EQ(back.Resolve(back.entries[0].label_path), "/abs/a_label.png");
  EXPECT_EQ(std::string(RoleName(ParseRole("V_os"))), "V_os");
  EXPECT_THROW(ParseRole("V_zz"), Error);
}

TEST(Manifest, Validation) {
  Manifest m;
  m.entries = {ManifestEntry{"a", "a.png"}, ManifestEntry{"a", "b.png"}};
  EXPECT_THROW(m.Validate(false), Error);
  m.entries = {ManifestEntry{"a", "missing.png"}};
  m.Validate(false);
  try {
    m.Validate(true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
  Manifest shift;
  shift.role = Role::kVos;
  ManifestEntry e{"x", "x.png"};
  e.instance_path = "x_inst.png";
  shift.entries = {e};
  try {
    shift.Validate(false);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::kCapability);
  }
  EXPECT_TRUE(IsShiftRole(Role::kVps));
  EXPECT_TRUE(IsShiftRole(Role::kVcs));
  EXPECT_FALSE(IsShiftRole(Role::kVi));
}

TEST(SampleShift, UniformOverFrames) {
  TempDir dir;
  fs::create_directories(dir.path() / "scene");
  for (const char* n : {"0001_img_front.png", "0002_img_front.png"}) {
    SavePng(ImageBuffer(4, 4, 3), (dir.path() / "scene" / n).string());
    std::string label = n;
    label.replace(label.find("_img"), 4, "_semseg");
    SavePng(ImageBuffer(4, 4, 3), (dir.path() / "scene" / label).string());
  }
  int first = 0;
  const int seeds = 10000;
  for (int s = 0; s < seeds; ++s) {
    const Manifest m = SampleShift(dir.path().string(), s);
    ASSERT_EQ(m.entries.size(), 1u);
    first += m.entries[0].image_path.find("0001") != std::string::npos;
  }
  EXPECT_NEAR(first / static_cast<double>(seeds), 0.5, 0.02);
}

TEST(SampleShift, OnePerScenarioAndDeterministic) {
  TempDir dir;
  for (int s = 0; s < 5; ++s) {
    const fs::path sc = dir.path() / ("sc" + std::to_string(s));
    fs::create_directories(sc);
    for (int f = 0; f < 3 + s; ++f) {
      const std::string stem = "f" + std::to_string(f);
      SavePng(ImageBuffer(4, 4, 3), (sc / (stem + "_img.png")).string());
      SavePng(ImageBuffer(4, 4, 3), (sc / (stem + "_semseg.png")).string());
    }
  }
  const Manifest a = SampleShift(dir.path().string(), 42);
  const Manifest b = SampleShift(dir.path().string(), 42);
  EXPECT_EQ(a.entries.size(), 5u);
  EXPECT_EQ(a.ToJson(dir.path().string()), b.ToJson(dir.path().string()));
  EXPECT_EQ(a.provenance["sampling_seed"], 42);
  a.Validate(true);
  // Missing label is a data error.
  fs::remove(dir.path() / "sc0" / "f0_semseg.png");
  fs::remove(dir.path() / "sc0" / "f1_semseg.png");
  fs::remove(dir.path() / "sc0" / "f2_semseg.png");
  EXPECT_THROW(SampleShift(dir.path().string(), 42), Error);
}

TEST(Xorshift, BelowInRangeAndSeedSensitive) {
  Xorshift64Star a(1), b(2);
  EXPECT_NE(a.Next(), b.Next());
  Xorshift64Star r(0);
  for (int i = 0; i < 1000; ++i) ASSERT_LT(r.Below(7), 7u);
  EXPECT_THROW(r.Below(0), Error);
}

TEST(Assemble, ResizesMapsAndIsIdempotent) {
  TempDir dir;
  const std::string src = dir / "src";
  fs::create_directories(src);
  // Carla raw labels: class id in the red channel.
  Manifest m;
  m.taxonomy = "carla";
  m.base_dir = src;
  for (int i = 0; i < 2; ++i) {
    const std::string id = "e" + std::to_string(i);
    SavePng(SceneImage(96, 40, 3, i), src + "/" + id + ".png");
    ImageBuffer raw(96, 40, 3, 0.0);
    for (int y = 0; y < 40; ++y)
      for (int x = 0; x < 96; ++x) raw.at(x, y, 0) = y < 20 ? 7 : (x < 48 ? 6 : 10);  // road, road line, vehicle
    SavePng(raw, src + "/" + id + "_label.png");
    m.entries.push_back(ManifestEntry{id, id + ".png", id + "_label.png"});
  }
  m.Save(src + "/manifest.json");
  AssembleOptions opt;
  opt.width = 64;
  opt.height = 32;
  opt.data_dir = SIM2REAL_DATA;
  const Manifest out = Assemble(Manifest::Load(src + "/manifest.json"), dir / "out", opt);
  EXPECT_EQ(out.taxonomy, "cityscapes_trainid");
  EXPECT_EQ(out.width, 64);
  const Manifest reloaded = Manifest::Load(dir / "out/manifest.json");
  for (const ManifestEntry& e : reloaded.entries) {
    const ImageBuffer img = LoadPng(reloaded.Resolve(e.image_path));
    EXPECT_EQ(img.width(), 64);
    EXPECT_EQ(img.height(), 32);
    const ImageBuffer lab = LoadPng(reloaded.Resolve(e.label_path));
    EXPECT_EQ(lab.channels(), 1);
    std::set<double> values(lab.data().begin(), lab.data().end());
    // road (0) and car (13) only: road lines fold into road.
    EXPECT_EQ(values, (std::set<double>{0.0, 13.0}));
  }
  const Manifest again = Assemble(reloaded, dir / "again", opt);
  for (std::size_t i = 0; i < again.entries.size(); ++i) {
    EXPECT_EQ(testing_support::ReadText(again.Resolve(again.entries[i].image_path)),
              testing_support::ReadText(reloaded.Resolve(reloaded.entries[i].image_path)));
    EXPECT_EQ(testing_support::ReadText(again.Resolve(again.entries[i].label_path)),
              testing_support::ReadText(reloaded.Resolve(reloaded.entries[i].label_path)));
  }
}

TEST(RunIqa, IdenticalSetsHitIdentityValues) {
  TempDir dir;
  const auto imgs = Scenes(3, 192, 192, 1);
  Manifest ref = ImageSet(dir / "ref", imgs, Role::kVi);
  Manifest test = ImageSet(dir / "test", imgs, Role::kVpc);
  AttachFeatures(ref, dir / "ref", 9);
  AttachFeatures(test, dir / "test", 9);
  IqaOptions opt;
  opt.metrics = {"psnr", "ssim", "ms_ssim", "cw_ssim", "fsim", "fid"};
  opt.threads = 2;
  const MetricReport r = RunIqa(&ref, test, opt);
  EXPECT_EQ(r.role, "V_pc");
  EXPECT_EQ(r.width, 192);
  EXPECT_TRUE(r.failures.empty());
  EXPECT_EQ(r.aggregate.at("psnr").mean, 100.0);
  EXPECT_EQ(r.aggregate.at("psnr").n, 3u);
  for (const char* m : {"ssim", "ms_ssim", "cw_ssim", "fsim"})
    EXPECT_NEAR(r.aggregate.at(m).mean, 1.0, 1e-6) << m;
  EXPECT_NEAR(r.dataset_level.at("fid"), 0.0, 1e-8);
  EXPECT_EQ(r.config_echo["ssim"]["window"], 11);
}

TEST(RunIqa, AggregatesMatchPerImageValues) {
  TempDir dir;
  const auto imgs = Scenes(4, 64, 48, 5);
  std::vector<ImageBuffer> noisy;
  for (std::size_t i = 0; i < imgs.size(); ++i) noisy.push_back(AddNoise(imgs[i], 2.0 + 3.0 * i, i));
  const Manifest ref = ImageSet(dir / "ref", imgs, Role::kVi);
  const Manifest test = ImageSet(dir / "test", noisy, Role::kVoc);
  IqaOptions opt;
  opt.metrics = {"psnr", "ssim", "brisque"};
  opt.threads = 1;
  const MetricReport r = RunIqa(&ref, test, opt);
  for (const auto& [metric, agg] : r.aggregate) {
    double sum = 0, sq = 0;
    for (const auto& [id, vals] : r.per_image) sum += vals.at(metric);
    const double mean = sum / r.per_image.size();
    for (const auto& [id, vals] : r.per_image) sq += (vals.at(metric) - mean) * (vals.at(metric) - mean);
    EXPECT_NEAR(agg.mean, mean, 1e-9) << metric;
    EXPECT_NEAR(agg.std, std::sqrt(sq / r.per_image.size()), 1e-9) << metric;
    EXPECT_EQ(agg.n, 4u);
  }
  EXPECT_LT(r.per_image.at("f003").at("psnr"), r.per_image.at("f000").at("psnr"));
}

TEST(RunIqa, CorruptEntryIsIsolated) {
  TempDir dir;
  const auto imgs = Scenes(10, 48, 48, 20);
  const Manifest ref = ImageSet(dir / "ref", imgs, Role::kVi);
  const Manifest test = ImageSet(dir / "test", imgs, Role::kVcc);
  testing_support::WriteText(dir / "test/f004.png", "not a png");
  IqaOptions opt;
  opt.metrics = {"psnr", "ssim"};
  opt.threads = 3;
  const MetricReport r = RunIqa(&ref, test, opt);
  EXPECT_EQ(r.aggregate.at("psnr").n, 9u);
  EXPECT_EQ(r.aggregate.at("ssim").n, 9u);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].id, "f004");
  EXPECT_EQ(r.failures[0].metric, "*");
  EXPECT_NE(r.failures[0].error.find("f004.png"), std::string::npos);
  EXPECT_EQ(r.per_image.count("f004"), 0u);
}

TEST(RunIqa, ByteIdenticalAcrossThreadCounts) {
  TempDir dir;
  const auto imgs = Scenes(6, 64, 64, 30);
  std::vector<ImageBuffer> noisy;
  for (std::size_t i = 0; i < imgs.size(); ++i) noisy.push_back(AddNoise(imgs[i], 5.0, 100 + i));
  const Manifest ref = ImageSet(dir / "ref", imgs, Role::kVi);
  const Manifest test = ImageSet(dir / "test", noisy, Role::kVpc);
  IqaOptions opt;
  opt.metrics = {"psnr", "ssim", "fsim", "brisque"};
  std::string first;
  for (int t : {1, 2, 4, 8}) {
    opt.threads = t;
    const std::string dump = RunIqa(&ref, test, opt).ToJson().dump();
    if (first.empty()) first = dump;
    EXPECT_EQ(dump, first) << "threads " << t;
  }
}

TEST(RunIqa, ArgumentAndModelErrors) {
  TempDir dir;
  const auto imgs = Scenes(2, 48, 48, 1);
  const Manifest ref = ImageSet(dir / "ref", imgs, Role::kVi);
  const Manifest test = ImageSet(dir / "test", imgs, Role::kVpc);
  IqaOptions opt;
  opt.metrics = {"psnr"};
  auto kind_of = [&](const Manifest* r, const Manifest& t, const IqaOptions& o) {
    try {
      RunIqa(r, t, o);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kCapability;  // sentinel: nothing thrown
  };
  EXPECT_EQ(kind_of(nullptr, test, opt), ErrorKind::kInvalidArgument);
  IqaOptions bogus = opt;
  bogus.metrics = {"vif"};
  EXPECT_EQ(kind_of(&ref, test, bogus), ErrorKind::kInvalidArgument);
  IqaOptions niqe = opt;
  niqe.metrics = {"niqe"};
  EXPECT_EQ(kind_of(nullptr, test, niqe), ErrorKind::kModelMissing);
  IqaOptions lpips = opt;
  lpips.metrics = {"lpips"};
  lpips.lpips_weights = dir / "nope.json";
  EXPECT_EQ(kind_of(&ref, test, lpips), ErrorKind::kModelMissing);
  Manifest other = test;
  other.entries[0].id = "zzz";
  EXPECT_EQ(kind_of(&ref, other, opt), ErrorKind::kData);
}

TEST(RunIqa, LpipsFromFeatureFiles) {
  TempDir dir;
  const auto imgs = Scenes(2, 48, 48, 1);
  Manifest ref = ImageSet(dir / "ref", imgs, Role::kVi);
  Manifest test = ImageSet(dir / "test", imgs, Role::kVpc);
  testing_support::WriteText(
      dir / "shapes.json",
      R"({"backbone":"toy","layers":[{"channels":3,"height":2,"width":2},{"channels":2,"height":1,"width":1}]})");
  testing_support::WriteText(
      dir / "w.json",
      R"({"layers":[{"channels":3,"weights":[1,1,1]},{"channels":2,"weights":[0.5,0.5]}]})");
  std::mt19937_64 rng(3);
  std::normal_distribution<float> g;
  for (Manifest* m : {&ref, &test}) {
    m->lpips_shapes = dir / "shapes.json";
    for (ManifestEntry& e : m->entries) {
      distmetrics::FeatureSet fs{1, 14, std::vector<float>(14)};
      std::mt19937_64 per_entry(std::hash<std::string>{}(e.id));
      for (float& v : fs.data) v = g(per_entry);
      distmetrics::WriteFvec(fs, m->base_dir + "/" + e.id + ".lp");
      e.lpips_path = e.id + ".lp";
    }
  }
  IqaOptions opt;
  opt.metrics = {"lpips"};
  opt.lpips_weights = dir / "w.json";
  const MetricReport r = RunIqa(&ref, test, opt);
  EXPECT_NEAR(r.aggregate.at("lpips").mean, 0.0, 1e-9);
  EXPECT_EQ(r.config_echo["lpips"]["backbone"], "toy");
}

TEST(FitNiqeCorpus, WritesUsableModel) {
  TempDir dir;
  const auto imgs = Scenes(10, 128, 128, 90);
  ImageSet(dir / "corpus", imgs, Role::kCustom);
  const json j = FitNiqeCorpus(dir / "corpus", NiqeFitOptions{32, 0.75});
  const nriqa::NiqeModel m = nriqa::NiqeModel::FromJson(j);
  EXPECT_EQ(m.patch, 32);
  testing_support::WriteText(dir / "niqe.json", j.dump());
  const Manifest test = ImageSet(dir / "test", Scenes(2, 128, 128, 300), Role::kVpc);
  IqaOptions opt;
  opt.metrics = {"niqe"};
  opt.niqe_model = dir / "niqe.json";
  const MetricReport r = RunIqa(nullptr, test, opt);
  EXPECT_EQ(r.aggregate.at("niqe").n, 2u);
  EXPECT_GT(r.aggregate.at("niqe").mean, 0.0);
}

TEST(SegEval, PerfectPredictionsScoreHundred) {
  TempDir dir;
  const Manifest gt = SegSet(dir / "gt", 3, 1, Role::kVi);
  Manifest pred = gt;
  for (ManifestEntry& e : pred.entries) e.pred_sem_path = e.label_path;
  SegOptions opt;
  opt.tasks = {"miou", "pq", "ap"};
  opt.data_dir = SIM2REAL_DATA;
  const MetricReport r = RunSegEval(gt, pred, opt);
  EXPECT_TRUE(r.failures.empty());
  EXPECT_NEAR(r.dataset_level.at("miou"), 100.0, 1e-9);
  EXPECT_NEAR(r.dataset_level.at("pq"), 100.0, 1e-9);
  EXPECT_NEAR(r.dataset_level.at("ap"), 100.0, 1e-9);
  EXPECT_TRUE(r.details["miou_per_class"]["road"].is_number());
  EXPECT_TRUE(r.details["miou_per_class"]["train"].is_null());
  EXPECT_EQ(r.config_echo["ap"]["interpolation"].is_null(), false);
}

TEST(SegEval, ShiftRolesAllowMiouOnly) {
  TempDir dir;
  const Manifest gt = SegSet(dir / "gt", 2, 1, Role::kVos);
  SegOptions opt;
  opt.tasks = {"miou", "pq"};
  opt.data_dir = SIM2REAL_DATA;
  try {
    RunSegEval(gt, gt, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCapability);
    EXPECT_NE(std::string(e.what()).find("V_os"), std::string::npos);
  }
  opt.tasks = {"miou"};
  EXPECT_NEAR(RunSegEval(gt, gt, opt).dataset_level.at("miou"), 100.0, 1e-9);
  opt.tasks = {"boundary_f"};
  EXPECT_THROW(RunSegEval(gt, gt, opt), Error);
}

TEST(SegEval, DeterministicAcrossThreads) {
  TempDir dir;
  const Manifest gt = SegSet(dir / "gt", 5, 1, Role::kVi);
  const Manifest pred = SegSet(dir / "pred", 5, 2, Role::kVpc);
  SegOptions opt;
  opt.tasks = {"miou", "pq", "ap"};
  opt.data_dir = SIM2REAL_DATA;
  std::string first;
  for (int t : {1, 3, 8}) {
    opt.threads = t;
    const std::string dump = RunSegEval(gt, pred, opt).ToJson().dump();
    if (first.empty()) first = dump;
    EXPECT_EQ(dump, first);
  }
}

TEST(Report, BestAndWorstFlags) {
  const std::vector<MetricReport> reports = {Fixture("V_pc", {{"psnr", 16.142}, {"fid", 162.690}}),
                                             Fixture("V_oc", {{"psnr", 14.816}, {"fid", 112.405}}),
                                             Fixture("V_cc", {{"psnr", 12.461}, {"fid", 131.423}})};
  const std::string md = EmitReport(reports, ReportFormat::kMarkdown);
  EXPECT_NE(md.find("| PSNR ↑ | **16.142** (best) | 14.816 | _12.461_ (worst) |"), std::string::npos)
      << md;
  EXPECT_NE(md.find("| FID ↓ | _162.690_ (worst) | **112.405** (best) | 131.423 |"), std::string::npos)
      << md;
  const json j = json::parse(EmitReport(reports, ReportFormat::kJson));
  EXPECT_EQ(j["table"]["columns"], json({"V_pc", "V_oc", "V_cc"}));
}

TEST(Report, SingleColumnAndBaselineUnflagged) {
  const std::string one = EmitReport({Fixture("V_pc", {{"psnr", 16.0}})}, ReportFormat::kMarkdown);
  EXPECT_EQ(one.find("(best)"), std::string::npos);
  const std::string two = EmitReport({Fixture("V_i", {{"pq", 68.5}}), Fixture("V_pc", {{"pq", 20.0}})},
                                     ReportFormat::kMarkdown);
  EXPECT_EQ(two.find("(best)"), std::string::npos);
  EXPECT_NE(two.find("| 68.5 | 20.0 |"), std::string::npos) << two;
}

TEST(Report, MixedResolutionNeedsOverride) {
  const std::vector<MetricReport> r = {Fixture("V_pc", {{"psnr", 1}}, 1024, 512),
                                       Fixture("V_oc", {{"psnr", 2}}, 2048, 1024)};
  try {
    EmitReport(r, ReportFormat::kJson);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
  EmitOptions opt;
  opt.allow_mixed_resolution = true;
  EXPECT_NO_THROW(EmitReport(r, ReportFormat::kJson, opt));
}

TEST(Report, JsonCsvJsonRoundTripIsExact) {
  MetricReport r;
  r.role = "V_oc";
  r.width = 1024;
  r.height = 512;
  r.per_image["a,1"]["psnr"] = 0.1 + 0.2;
  r.per_image["b\"q"]["psnr"] = 1.0 / 3.0;
  r.per_image["b\"q"]["ssim"] = 0.987654321012345;
  Reaggregate(r);
  r.dataset_level["fid"] = 112.40500000000001;
  r.failures.push_back({"c", "*", "line1\nline2, \"quoted\""});
  r.details = {{"miou_per_class", {{"road", 97.5}, {"train", nullptr}}}};
  r.config_echo = {{"ssim", {{"window", 11}}}};
  MetricReport other = Fixture("V_i", {{"pq", 68.5}});
  const std::vector<MetricReport> in = {r, other};
  const auto from_json = ParseReportJson(EmitReport(in, ReportFormat::kJson));
  const auto from_csv = ParseReportCsv(EmitReport(from_json, ReportFormat::kCsv));
  const auto back = ParseReportJson(EmitReport(from_csv, ReportFormat::kJson));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], r);
  EXPECT_EQ(back[1], other);
  EXPECT_EQ(EmitReport(back, ReportFormat::kJson), EmitReport(in, ReportFormat::kJson));
}

TEST(Report, AggregateRecomputation) {
  MetricReport r;
  r.per_image["x"]["psnr"] = 10;
  r.per_image["y"]["psnr"] = 20;
  r.per_image["y"]["ssim"] = 0.5;
  Reaggregate(r);
  EXPECT_EQ(r.aggregate.at("psnr").mean, 15.0);
  EXPECT_EQ(r.aggregate.at("psnr").std, 5.0);
  EXPECT_EQ(r.aggregate.at("ssim").n, 1u);
  EXPECT_EQ(*r.Value("psnr"), 15.0);
  EXPECT_EQ(r.Value("fid"), nullptr);
  EXPECT_TRUE(MetricHigherIsBetter("miou"));
  EXPECT_FALSE(MetricHigherIsBetter("brisque"));
  EXPECT_FALSE(MetricHigherIsBetter("lpips"));
  EXPECT_EQ(ParseReportFormat("md"), ReportFormat::kMarkdown);
  EXPECT_THROW(ParseReportFormat("xml"), Error);
}

TEST(Threads, ResolveThreads) {
  EXPECT_EQ(ResolveThreads(3), 3);
  setenv("SIM2REAL_THREADS", "5", 1);
  EXPECT_EQ(ResolveThreads(0), 5);
  unsetenv("SIM2REAL_THREADS");
  EXPECT_GE(ResolveThreads(0), 1);
}
