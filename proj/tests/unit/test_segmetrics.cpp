#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "sim2real/error.hpp"
#include "sim2real/segmetrics.hpp"
#include "test_support.hpp"

using namespace sim2real;
using namespace sim2real::segmetrics;
using taxonomy::LabelMap;
using testing_support::TempDir;

namespace {

const char* kTax = "cityscapes_trainid";

std::vector<int> EvalIds() {
  std::vector<int> ids(19);
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

LabelMap Labels(int w, int h, std::vector<std::int32_t> ids) {
  return LabelMap{w, h, kTax, std::move(ids)};
}

InstanceMap Instances(int w, int h, std::vector<std::int32_t> ids) {
  return InstanceMap{w, h, std::move(ids), 255};
}

// 8x8 map: rows [r0, r0 + 4) hold `inside`, the rest `outside`.
InstanceMap Band(int r0, std::int32_t inside, std::int32_t outside) {
  std::vector<std::int32_t> ids(64, outside);
  for (int y = r0; y < r0 + 4; ++y)
    for (int x = 0; x < 8; ++x) ids[y * 8 + x] = inside;
  return Instances(8, 8, ids);
}

std::vector<std::uint8_t> MaskOf(const InstanceMap& m, std::int32_t id) {
  std::vector<std::uint8_t> mask(m.ids.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = m.ids[i] == id;
  return mask;
}

// Random panoptic map: a few rectangles of stuff and thing segments.
InstanceMap RandomPanoptic(int w, int h, std::mt19937_64& rng, bool with_void) {
  std::uniform_int_distribution<int> coord(0, std::max(w, h) - 1), cls(0, 3), pick(0, 5);
  InstanceMap m = Instances(w, h, std::vector<std::int32_t>(w * h, 0));
  int next_instance = 1;
  for (int k = 0; k < 6; ++k) {
    int x0 = coord(rng) % w, x1 = coord(rng) % w, y0 = coord(rng) % h, y1 = coord(rng) % h;
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    std::int32_t id;
    const int kind = pick(rng);
    if (with_void && kind == 0) id = 255;
    else if (kind < 3) id = cls(rng);            // stuff 0..3
    else id = (11 + cls(rng) % 2) * 1000 + next_instance++;  // things of class 11/12
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) m.ids[y * w + x] = id;
  }
  return m;
}

// ---- exhaustive AP oracle -------------------------------------------------

struct TinyPred {
  int image;
  int cls;
  double score;
  std::vector<std::uint8_t> mask;
};

double MaskIou(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  int inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += a[i] && b[i];
    uni += a[i] || b[i];
  }
  return uni ? static_cast<double>(inter) / uni : 0.0;
}

// Best (lexicographically by score rank) set of true positives over every
// injective assignment of predictions to same-image ground truth.
std::vector<bool> BestAssignment(const std::vector<std::vector<int>>& cand, std::size_t o,
                                 std::set<int>& used) {
  if (o == cand.size()) return {};
  std::vector<bool> best;
  bool have = false;
  auto consider = [&](bool tp, int g) {
    if (tp) used.insert(g);
    std::vector<bool> rest = BestAssignment(cand, o + 1, used);
    if (tp) used.erase(g);
    rest.insert(rest.begin(), tp);
    if (!have || rest > best) {
      best = rest;
      have = true;
    }
  };
  for (int g : cand[o])
    if (!used.count(g)) consider(true, g);
  consider(false, -1);
  return best;
}

double OracleInterpolatedAp(const std::vector<bool>& tp, int n_gt) {
  std::vector<double> prec, rec;
  int hits = 0;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    hits += tp[i];
    prec.push_back(static_cast<double>(hits) / (i + 1));
    rec.push_back(static_cast<double>(hits) / n_gt);
  }
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    double p = 0.0;
    for (std::size_t i = 0; i < prec.size(); ++i)
      if (rec[i] >= k / 100.0 - 1e-12) p = std::max(p, prec[i]);
    sum += p;
  }
  return sum / 101.0;
}

double OracleAp(const std::vector<InstanceMap>& gts, const std::vector<TinyPred>& preds) {
  std::map<int, std::vector<std::pair<int, std::vector<std::uint8_t>>>> gt_by_class;
  for (int im = 0; im < static_cast<int>(gts.size()); ++im) {
    std::set<std::int32_t> ids(gts[im].ids.begin(), gts[im].ids.end());
    for (std::int32_t id : ids)
      if (id != 255 && id >= 1000) gt_by_class[id / 1000].push_back({im, MaskOf(gts[im], id)});
  }
  double class_sum = 0.0;
  for (const auto& [c, gt] : gt_by_class) {
    std::vector<TinyPred> ps;
    for (const auto& p : preds)
      if (p.cls == c) ps.push_back(p);
    std::sort(ps.begin(), ps.end(), [](auto& a, auto& b) { return a.score > b.score; });
    double thr = 0.0;
    for (int k = 0; k < 10; ++k) {
      const double t = 0.5 + 0.05 * k;
      std::vector<std::vector<int>> cand(ps.size());
      for (std::size_t o = 0; o < ps.size(); ++o)
        for (std::size_t g = 0; g < gt.size(); ++g)
          if (gt[g].first == ps[o].image && MaskIou(gt[g].second, ps[o].mask) >= t - 1e-12)
            cand[o].push_back(static_cast<int>(g));
      std::set<int> used;
      thr += OracleInterpolatedAp(BestAssignment(cand, 0, used), static_cast<int>(gt.size()));
    }
    class_sum += 100.0 * thr / 10.0;
  }
  return gt_by_class.empty() ? 0.0 : class_sum / gt_by_class.size();
}

}  // namespace

TEST(Confusion, Counts) {
  ConfusionMatrix cm(EvalIds());
  AccumulateConfusion(Labels(10, 10, std::vector<std::int32_t>(100, 0)),
                      Labels(10, 10, std::vector<std::int32_t>(100, 0)), cm);
  EXPECT_EQ(cm.at(0, 0), 100u);
  ConfusionMatrix cm2(EvalIds());
  AccumulateConfusion(Labels(10, 1, std::vector<std::int32_t>(10, 0)),
                      Labels(10, 1, std::vector<std::int32_t>(10, 1)), cm2);
  EXPECT_EQ(cm2.at(0, 1), 10u);
  ConfusionMatrix cm3(EvalIds());
  AccumulateConfusion(Labels(4, 1, std::vector<std::int32_t>(4, 255)),
                      Labels(4, 1, {0, 1, 2, 3}), cm3);
  EXPECT_EQ(cm3.total(), 0u);
  // A prediction of ignore still costs the ground-truth class.
  ConfusionMatrix cm4(EvalIds());
  AccumulateConfusion(Labels(2, 1, {5, 5}), Labels(2, 1, {5, 255}), cm4);
  EXPECT_EQ(cm4.total(), 2u);
  EXPECT_EQ(cm4.missed(5), 1u);
  EXPECT_NEAR(Miou(cm4).miou, 50.0, 1e-9);
}

TEST(Confusion, Errors) {
  ConfusionMatrix cm(EvalIds());
  EXPECT_THROW(AccumulateConfusion(Labels(2, 1, {0, 0}), Labels(1, 2, {0, 0}), cm), Error);
  EXPECT_THROW(AccumulateConfusion(Labels(1, 1, {0}), LabelMap{1, 1, "carla", {0}}, cm), Error);
  EXPECT_THROW(Miou(cm), Error);
  EXPECT_THROW(ConfusionMatrix({1, 1}), Error);
}

TEST(Miou, HandFixtures) {
  ConfusionMatrix perfect(EvalIds());
  AccumulateConfusion(Labels(4, 1, {0, 1, 2, 3}), Labels(4, 1, {0, 1, 2, 3}), perfect);
  EXPECT_NEAR(Miou(perfect).miou, 100.0, 1e-9);

  // gt A:100 predicted half A, half B -> IoU_A = 50/100, IoU_B = 0/50.
  std::vector<std::int32_t> pred(100, 0);
  std::fill(pred.begin() + 50, pred.end(), 1);
  ConfusionMatrix half(EvalIds());
  AccumulateConfusion(Labels(100, 1, std::vector<std::int32_t>(100, 0)), Labels(100, 1, pred), half);
  EXPECT_NEAR(Miou(half).miou, 25.0, 1e-9);

  // Add 50 gt-B pixels predicted as A: TP_A 50, FP_A 50, FN_A 50 -> 50/150;
  // TP_B 0 -> 0. Mean 16.67.
  std::vector<std::int32_t> g2(150, 0), p2 = pred;
  std::fill(g2.begin() + 100, g2.end(), 1);
  p2.resize(150, 0);
  ConfusionMatrix cm(EvalIds());
  AccumulateConfusion(Labels(150, 1, g2), Labels(150, 1, p2), cm);
  const MiouResult r = Miou(cm);
  EXPECT_NEAR(r.miou, (100.0 * 50.0 / 150.0 + 0.0) / 2.0, 1e-9);
  EXPECT_NEAR(r.miou, 16.67, 0.005);
  EXPECT_NEAR(*r.per_class[0], 100.0 / 3.0, 1e-9);
  EXPECT_NEAR(*r.per_class[1], 0.0, 1e-9);
  EXPECT_FALSE(r.per_class[2].has_value());

  ConfusionMatrix disjoint(EvalIds());
  AccumulateConfusion(Labels(2, 1, {0, 0}), Labels(2, 1, {1, 1}), disjoint);
  EXPECT_NEAR(Miou(disjoint).miou, 0.0, 1e-9);
}

TEST(Miou, InvariantUnderClassPermutation) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> cls(0, 18);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> perm = EvalIds();
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::int32_t> g(256), p(256), gp(256), pp(256);
    for (int i = 0; i < 256; ++i) {
      g[i] = cls(rng);
      p[i] = rng() % 3 ? g[i] : cls(rng);
      gp[i] = perm[g[i]];
      pp[i] = perm[p[i]];
    }
    ConfusionMatrix a(EvalIds()), b(EvalIds());
    AccumulateConfusion(Labels(16, 16, g), Labels(16, 16, p), a);
    AccumulateConfusion(Labels(16, 16, gp), Labels(16, 16, pp), b);
    const MiouResult ra = Miou(a), rb = Miou(b);
    EXPECT_NEAR(ra.miou, rb.miou, 1e-9);
    for (int c = 0; c < 19; ++c) EXPECT_EQ(ra.per_class[c], rb.per_class[perm[c]]);
  }
}

TEST(Miou, MergeEqualsSingleAccumulation) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> cls(0, 18);
  ConfusionMatrix whole(EvalIds()), part1(EvalIds()), part2(EvalIds());
  for (int k = 0; k < 4; ++k) {
    std::vector<std::int32_t> g(64), p(64);
    for (int i = 0; i < 64; ++i) g[i] = cls(rng), p[i] = cls(rng);
    AccumulateConfusion(Labels(8, 8, g), Labels(8, 8, p), whole);
    AccumulateConfusion(Labels(8, 8, g), Labels(8, 8, p), k % 2 ? part1 : part2);
  }
  part1.Merge(part2);
  for (int i = 0; i < 19; ++i)
    for (int j = 0; j < 19; ++j) ASSERT_EQ(part1.at(i, j), whole.at(i, j));
}

TEST(Panoptic, HandFixtures) {
  const InstanceMap one = Band(0, 26001, 0);
  EXPECT_NEAR(PanopticQuality(one, one).pq, 100.0, 1e-9);

  // Thing: gt rows 0-3, pred rows 1-4 -> 24 / 40. Road fills the rest of
  // both maps and overlaps the same way.
  const PanopticResult r = PanopticQuality(Band(0, 26001, 0), Band(1, 26001, 0));
  EXPECT_NEAR(r.pq, 60.0, 1e-9);
  EXPECT_NEAR(r.sq, 60.0, 1e-9);
  EXPECT_NEAR(r.rq, 100.0, 1e-9);
  EXPECT_EQ(r.per_class.at(26).tp, 1u);
  EXPECT_NEAR(r.per_class.at(26).pq(), 0.6, 1e-12);

  const InstanceMap empty = Instances(8, 8, std::vector<std::int32_t>(64, 255));
  const PanopticResult miss = PanopticQuality(Band(0, 26001, 255), empty);
  EXPECT_NEAR(miss.pq, 0.0, 1e-9);
  EXPECT_EQ(miss.per_class.at(26).fn, 1u);
}

TEST(Panoptic, VoidHandling) {
  // Prediction lying mostly on void: dropped without penalty.
  const InstanceMap gt = Band(0, 26001, 255);
  InstanceMap pred = Band(0, 26001, 255);
  for (int i = 48; i < 64; ++i) pred.ids[i] = 24002;  // class 24 on void only
  const PanopticResult r = PanopticQuality(gt, pred);
  EXPECT_EQ(r.per_class.count(24), 0u);
  EXPECT_NEAR(r.pq, 100.0, 1e-9);
  // Void pixels of the prediction are removed from the union.
  const PanopticResult s = PanopticQuality(Band(0, 26001, 255), Band(1, 26001, 255));
  EXPECT_NEAR(s.per_class.at(26).iou_sum, 24.0 / 32.0, 1e-12);
  EXPECT_THROW(PanopticQuality(Band(0, 1, 0), Instances(4, 4, std::vector<std::int32_t>(16))), Error);
}

TEST(Panoptic, ProductAndUniquenessOnRandomMaps) {
  std::mt19937_64 rng(2024);
  for (int seed = 0; seed < 100; ++seed) {
    const InstanceMap gt = RandomPanoptic(16, 16, rng, true);
    const InstanceMap pred = RandomPanoptic(16, 16, rng, true);
    const PanopticResult r = PanopticQuality(gt, pred);
    EXPECT_NEAR(r.pq, r.sq * r.rq / 100.0, 1e-10);
    for (const auto& [c, s] : r.per_class) EXPECT_NEAR(s.pq(), s.sq() * s.rq(), 1e-10);

    // Independent count of segment pairs with void-corrected IoU > 0.5.
    std::map<std::int32_t, int> ga, pa, pv;
    std::map<std::pair<std::int32_t, std::int32_t>, int> inter;
    for (int i = 0; i < 256; ++i) {
      const auto g = gt.ids[i], p = pred.ids[i];
      if (g != 255) ++ga[g];
      if (p != 255) {
        ++pa[p];
        if (g == 255) ++pv[p];
      }
      if (g != 255 && p != 255) ++inter[{g, p}];
    }
    std::map<int, int> tp_by_class;
    std::map<std::int32_t, int> g_uses, p_uses;
    for (const auto& [k, n] : inter) {
      if (InstanceMap::SemanticOf(k.first) != InstanceMap::SemanticOf(k.second)) continue;
      if (2.0 * n > ga[k.first] + pa[k.second] - n - pv[k.second]) {
        ++tp_by_class[InstanceMap::SemanticOf(k.first)];
        ++g_uses[k.first];
        ++p_uses[k.second];
      }
    }
    for (const auto& [id, n] : g_uses) EXPECT_EQ(n, 1) << "gt segment matched twice";
    for (const auto& [id, n] : p_uses) EXPECT_EQ(n, 1) << "pred segment matched twice";
    std::map<int, int> gt_segments;
    for (const auto& [id, n] : ga) ++gt_segments[InstanceMap::SemanticOf(id)];
    for (const auto& [c, s] : r.per_class) {
      EXPECT_EQ(static_cast<int>(s.tp), tp_by_class[c]) << "class " << c;
      EXPECT_EQ(static_cast<int>(s.tp + s.fn), gt_segments[c]) << "class " << c;
    }
  }
}

TEST(Panoptic, AccumulatorMergeIsAssociative) {
  std::mt19937_64 rng(5);
  PanopticAccumulator whole, a, b;
  for (int k = 0; k < 6; ++k) {
    const InstanceMap g = RandomPanoptic(16, 16, rng, true), p = RandomPanoptic(16, 16, rng, true);
    whole.Add(g, p);
    (k < 3 ? a : b).Add(g, p);
  }
  a.Merge(b);
  EXPECT_EQ(a.Result().pq, whole.Result().pq);
  EXPECT_EQ(a.Result().pq_class_mean, whole.Result().pq_class_mean);
}

TEST(Ap, HandFixtures) {
  EXPECT_EQ(ApThresholds().size(), 10u);
  // Prediction shifted down one row: IoU 24 / 40 = 0.6, so it matches at
  // thresholds 0.50, 0.55 and 0.60 only.
  const InstanceMap gt = Band(0, 26001, 0);
  ImageInstances pred{8, 8, {{26, 0.9, MaskOf(Band(1, 26001, 0), 26001)}}};
  ApResult r = InstanceAp({gt}, {pred});
  EXPECT_NEAR(r.ap, 30.0, 1e-9);
  EXPECT_NEAR(r.per_class.at(26), 30.0, 1e-9);

  ImageInstances perfect{8, 8, {{26, 0.5, MaskOf(gt, 26001)}}};
  EXPECT_NEAR(InstanceAp({gt}, {perfect}).ap, 100.0, 1e-9);
  EXPECT_NEAR(InstanceAp({gt}, {ImageInstances{8, 8, {}}}).ap, 0.0, 1e-9);
  EXPECT_THROW(InstanceAp({gt}, {}), Error);
}

TEST(Ap, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<InstanceMap> gts;
    std::vector<ImageInstances> preds;
    std::vector<TinyPred> flat;
    std::vector<double> scores;
    for (int k = 0; k < 40; ++k) scores.push_back((k + 1) / 41.0);
    std::shuffle(scores.begin(), scores.end(), rng);
    std::size_t next_score = 0;
    for (int im = 0; im < 2; ++im) {
      // Up to 3 thing instances on an 8x8 stuff background.
      InstanceMap gt = Instances(8, 8, std::vector<std::int32_t>(64, 0));
      const int n_inst = rng() % 4;
      for (int k = 0; k < n_inst; ++k) {
        const int cls = 11 + static_cast<int>(rng() % 2);
        const int x0 = rng() % 6, y0 = rng() % 6, w = 2 + rng() % 3, h = 2 + rng() % 3;
        for (int y = y0; y < std::min(8, y0 + h); ++y)
          for (int x = x0; x < std::min(8, x0 + w); ++x) gt.ids[y * 8 + x] = cls * 1000 + k + 1;
      }
      gts.push_back(gt);
      ImageInstances ii{8, 8, {}};
      const int n_pred = rng() % 4;
      std::set<std::int32_t> present(gt.ids.begin(), gt.ids.end());
      std::vector<std::int32_t> things;
      for (auto id : present)
        if (id >= 1000) things.push_back(id);
      for (int k = 0; k < n_pred; ++k) {
        InstancePrediction p;
        p.score = scores[next_score++];
        if (!things.empty() && u(rng) < 0.8) {
          const std::int32_t target = things[rng() % things.size()];
          p.class_id = u(rng) < 0.85 ? target / 1000 : 23 - target / 1000;
          p.mask = MaskOf(gt, target);
          for (auto& v : p.mask)
            if (u(rng) < 0.12) v = !v;
        } else {
          p.class_id = 11 + static_cast<int>(rng() % 2);
          p.mask.assign(64, 0);
          const int x0 = rng() % 6, y0 = rng() % 6;
          for (int y = y0; y < y0 + 3; ++y)
            for (int x = x0; x < x0 + 3; ++x) p.mask[y * 8 + x] = 1;
        }
        if (std::count(p.mask.begin(), p.mask.end(), 1) == 0) p.mask[0] = 1;
        flat.push_back({im, p.class_id, p.score, p.mask});
        ii.instances.push_back(std::move(p));
      }
      preds.push_back(std::move(ii));
    }
    ASSERT_NEAR(InstanceAp(gts, preds).ap, OracleAp(gts, flat), 1e-9) << "trial " << trial;
  }
}

TEST(Rle, RoundTripAndConvention) {
  EXPECT_EQ(EncodeRle({1, 1, 0}), (std::vector<std::uint32_t>{0, 2, 1}));
  EXPECT_EQ(EncodeRle({0, 0, 1}), (std::vector<std::uint32_t>{2, 1}));
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::uint8_t> m(1 + rng() % 200);
    for (auto& v : m) v = rng() % 3 == 0;
    EXPECT_EQ(DecodeRle(EncodeRle(m), m.size()), m);
  }
  EXPECT_THROW(DecodeRle({2, 2}, 5), Error);
}

TEST(SegIo, InstanceFilesRoundTrip) {
  TempDir dir;
  InstanceMap m = Instances(3, 2, {0, 26001, 26002, 255, 11000, 18999});
  SaveInstanceMap(m, dir / "i.png");
  const InstanceMap back = LoadInstanceMap(dir / "i.png");
  EXPECT_EQ(back.ids, m.ids);
  EXPECT_EQ(back.width, 3);

  ImageInstances inst{3, 2, {{26, 0.75, {0, 1, 1, 0, 0, 1}}, {11, 0.5, {1, 0, 0, 0, 0, 0}}}};
  SaveInstancePredictions(inst, dir / "p.json");
  const ImageInstances got = LoadInstancePredictions(dir / "p.json", 3, 2);
  ASSERT_EQ(got.instances.size(), 2u);
  EXPECT_EQ(got.instances[0].class_id, 26);
  EXPECT_EQ(got.instances[0].score, 0.75);
  EXPECT_EQ(got.instances[0].mask, inst.instances[0].mask);
  EXPECT_EQ(got.instances[1].mask, inst.instances[1].mask);

  testing_support::WriteText(dir / "e.json",
                             R"({"instances":[{"class_id":26,"score":0.5,"mask_rle":[6]}]})");
  EXPECT_THROW(LoadInstancePredictions(dir / "e.json", 3, 2), Error);
  testing_support::WriteText(dir / "s.json",
                             R"({"instances":[{"class_id":26,"score":0.5,"mask_rle":[1,2]}]})");
  EXPECT_THROW(LoadInstancePredictions(dir / "s.json", 3, 2), Error);
}
