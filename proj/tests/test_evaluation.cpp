#include <catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "odtk/evaluation.hpp"
#include "oracles.hpp"

using namespace odtk;
using Catch::Approx;

namespace {

std::vector<ScoredPrediction> scored(const std::vector<double>& pos, const std::vector<double>& neg) {
  std::vector<ScoredPrediction> out;
  int i = 0;
  for (double s : pos) out.push_back({"p" + std::to_string(i++), "glaucoma", s, std::nullopt});
  for (double s : neg) out.push_back({"n" + std::to_string(i++), "healthy", s, std::nullopt});
  return out;
}

std::vector<LabeledItem> labeled(std::size_t healthy, std::size_t glaucoma) {
  std::vector<LabeledItem> items;
  for (std::size_t i = 0; i < healthy; ++i) items.push_back({"h" + std::to_string(i), "healthy"});
  for (std::size_t i = 0; i < glaucoma; ++i) items.push_back({"g" + std::to_string(i), "glaucoma"});
  return items;
}

ConfusionMatrix origa_matrix() {
  ConfusionMatrix cm;
  cm.add("healthy", "healthy", 391);
  cm.add("healthy", "glaucoma", 21);
  cm.add("glaucoma", "healthy", 91);
  cm.add("glaucoma", "glaucoma", 48);
  return cm;
}

}  // namespace

TEST_CASE("box overlap", "[evaluation][overlap]") {
  const BoundingBox a{0, 0, 10, 10}, b{5, 5, 10, 10};
  CHECK(iou(a, b) == Approx(25.0 / 175.0));
  CHECK(gt_coverage(a, b) == Approx(0.25));
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, BoundingBox{20, 20, 5, 5}) == 0.0);
  CHECK(iou(a, BoundingBox{10, 0, 5, 5}) == 0.0);  // touching edges share no area
  CHECK(gt_coverage(BoundingBox{0, 0, 100, 100}, a) == 1.0);
  CHECK_THROWS_AS(iou(a, BoundingBox{0, 0, 0, 5}), Error);

  std::mt19937 gen(7);
  std::uniform_int_distribution<int> pos(0, 39), len(1, 20);
  for (int i = 0; i < 300; ++i) {
    const BoundingBox p{pos(gen), pos(gen), len(gen), len(gen)};
    const BoundingBox t{pos(gen), pos(gen), len(gen), len(gen)};
    const auto g = oracle::rasterize(p, t, 60, 60);
    REQUIRE(iou(p, t) == double(g.inter) / double(g.uni));
    REQUIRE(gt_coverage(p, t) == double(g.inter) / double(g.truth));
    REQUIRE(iou(p, t) == iou(t, p));
  }
}

TEST_CASE("localization accuracy table", "[evaluation][overlap]") {
  // IOU values 0.6, 0.3 and 0.9 built from 10x10 truths.
  const BoundingBox truth{0, 0, 10, 10};
  const std::vector<LocalizationPair> pairs{
      {"a", BoundingBox{0, 0, 6, 10}, truth},
      {"b", BoundingBox{0, 0, 3, 10}, truth},
      {"c", BoundingBox{0, 0, 9, 10}, truth},
  };
  CHECK(iou(*pairs[0].predicted, truth) == Approx(0.6));
  const auto rows = localization_accuracy(pairs, {0.5, 0.0, 0.6, 0.95}, OverlapMetric::iou);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].percent == Approx(200.0 / 3.0));
  CHECK(rows[0].hits == 2);
  CHECK(rows[1].percent == Approx(100.0));
  CHECK(rows[2].hits == 1);  // 0.6 is not strictly above 0.6
  CHECK(rows[3].hits == 0);
  CHECK(mean_overlap(pairs, OverlapMetric::iou) == Approx(60.0));

  SECTION("missing predictions count as failures") {
    auto with_gap = pairs;
    with_gap.push_back({"d", std::nullopt, truth});
    with_gap[1].predicted = BoundingBox{0, 0, 8, 10};
    const auto r = localization_accuracy(with_gap, {0.5}, OverlapMetric::iou);
    CHECK(r[0].percent == Approx(75.0));
    CHECK(mean_overlap(with_gap, OverlapMetric::iou) == Approx((60.0 + 80.0 + 90.0) / 4.0));
    CHECK(localization_accuracy(with_gap, {0.0}, OverlapMetric::iou)[0].hits == 3);
  }

  SECTION("coverage metric") {
    const std::vector<LocalizationPair> big{{"x", BoundingBox{0, 0, 40, 40}, truth}};
    CHECK(localization_accuracy(big, {0.5}, OverlapMetric::gt_coverage)[0].hits == 1);
    CHECK(localization_accuracy(big, {0.5}, OverlapMetric::iou)[0].hits == 0);
  }

  SECTION("invalid input") {
    CHECK_THROWS_AS(localization_accuracy({}, {0.5}, OverlapMetric::iou), Error);
    CHECK_THROWS_AS(localization_accuracy(pairs, {1.0}, OverlapMetric::iou), Error);
    CHECK_THROWS_AS(localization_accuracy(pairs, {-0.1}, OverlapMetric::iou), Error);
    CHECK_THROWS_AS(parse_overlap_metric("dice"), Error);
  }
}

TEST_CASE("classification scores on the ORIGA confusion matrix", "[evaluation][classification]") {
  const auto cm = origa_matrix();
  const auto rep = classification_report(cm);
  REQUIRE(rep.per_class.size() == 2);
  const auto& h = rep.per_class[0];
  const auto& g = rep.per_class[1];

  // Exact ratios, then the published two-decimal figures.
  CHECK(h.precision.value == Approx(100.0 * 391 / 482));
  CHECK(h.recall.value == Approx(100.0 * 391 / 412));
  CHECK(g.precision.value == Approx(100.0 * 48 / 69));
  CHECK(g.recall.value == Approx(100.0 * 48 / 139));
  CHECK(std::abs(h.precision.value - 81.12) < 0.005);
  CHECK(std::abs(h.recall.value - 94.90) < 0.005);
  CHECK(std::abs(h.f1.value - 0.8747) < 0.00005);
  CHECK(std::abs(g.precision.value - 69.57) < 0.005);
  CHECK(std::abs(g.recall.value - 34.53) < 0.005);
  CHECK(std::abs(g.f1.value - 0.4615) < 0.00005);
  CHECK(h.support == 412);
  CHECK(g.support == 139);
  CHECK(std::abs(rep.weighted_precision - 78.21) < 0.005);
  CHECK(std::abs(rep.weighted_recall - 79.67) < 0.005);
  CHECK(std::abs(rep.weighted_f1 - 0.7705) < 0.00005);
  CHECK(std::abs(rep.accuracy - 79.67) < 0.005);
  CHECK(rep.total == 551);
  CHECK(g.specificity.value == Approx(h.recall.value));
}

TEST_CASE("classification edge cases", "[evaluation][classification]") {
  SECTION("perfect diagonal") {
    ConfusionMatrix cm;
    cm.add("healthy", "healthy", 10);
    cm.add("glaucoma", "glaucoma", 5);
    const auto rep = classification_report(cm);
    for (const auto& c : rep.per_class) {
      CHECK(c.precision.value == 100.0);
      CHECK(c.recall.value == 100.0);
      CHECK(c.f1.value == 1.0);
    }
    CHECK(rep.accuracy == 100.0);
  }

  SECTION("class never predicted") {
    ConfusionMatrix cm;
    cm.add("healthy", "healthy", 10);
    cm.add("glaucoma", "healthy", 5);
    const auto rep = classification_report(cm);
    CHECK(rep.per_class[1].precision.degenerate);
    CHECK(rep.per_class[1].precision.value == 0.0);
    CHECK(rep.per_class[1].f1.degenerate);
    CHECK(!rep.per_class[0].precision.degenerate);
  }

  SECTION("empty and unknown") {
    CHECK_THROWS_AS(classification_report(ConfusionMatrix{}), Error);
    ConfusionMatrix cm;
    CHECK_THROWS_AS(cm.add("healthy", "cataract"), Error);
  }
}

TEST_CASE("ROC curve", "[evaluation][roc]") {
  const auto preds = scored({0.9, 0.4}, {0.6, 0.1});
  const auto pts = roc_curve(preds, "glaucoma");
  const auto expect = oracle::enumerate_thresholds({0.9, 0.4}, {0.6, 0.1});
  REQUIRE(pts.size() == expect.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(pts[i].threshold == expect[i].threshold);
    CHECK(pts[i].sensitivity == Approx(expect[i].sensitivity));
    CHECK(pts[i].specificity == Approx(expect[i].specificity));
  }
  CHECK(pts.front().sensitivity == 1.0);
  CHECK(pts.front().specificity == 0.0);
  CHECK(std::isinf(pts.back().threshold));
  CHECK(pts.back().sensitivity == 0.0);
  CHECK(auc(preds, "glaucoma") == Approx(0.75));

  SECTION("ties collapse to one step") {
    const auto t = roc_curve(scored({0.5, 0.5}, {0.5, 0.2}), "glaucoma");
    CHECK(t.size() == 3);
    CHECK(auc(scored({0.5, 0.5}, {0.5, 0.2}), "glaucoma") == Approx(0.75));
  }

  SECTION("degenerate inputs") {
    CHECK_THROWS_MATCHES(roc_curve(scored({0.3, 0.4}, {}), "glaucoma"), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == ErrorCode::UndefinedROC;
                         }));
    CHECK_THROWS_AS(roc_curve(scored({1.5}, {0.2}), "glaucoma"), Error);
  }
}

TEST_CASE("AUC agrees with the pairwise statistic", "[evaluation][roc]") {
  std::mt19937 gen(11);
  std::uniform_int_distribution<int> count(1, 25), grid(0, 20);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> pos, neg;
    const int np = count(gen), nn = count(gen);
    for (int i = 0; i < np; ++i) pos.push_back(grid(gen) / 20.0);
    for (int i = 0; i < nn; ++i) neg.push_back(grid(gen) / 20.0);
    const auto preds = scored(pos, neg);
    const double a = auc(preds, "glaucoma");
    REQUIRE(a == Approx(oracle::pair_auc(pos, neg)).margin(1e-12));
    REQUIRE(a >= 0.0);
    REQUIRE(a <= 1.0);

    // Swapping roles mirrors the curve.
    std::vector<double> fp, fn;
    for (double v : pos) fp.push_back(1.0 - v);
    for (double v : neg) fn.push_back(1.0 - v);
    REQUIRE(auc(scored(fp, fn), "glaucoma") == Approx(1.0 - a).margin(1e-12));

    // Any strictly increasing rescoring leaves the area unchanged.
    std::vector<double> sp, sn;
    for (double v : pos) sp.push_back(v * v);
    for (double v : neg) sn.push_back(v * v);
    REQUIRE(auc(scored(sp, sn), "glaucoma") == Approx(a).margin(1e-12));
  }
  CHECK(auc(scored({0.9, 0.8}, {0.1, 0.2}), "glaucoma") == 1.0);
  CHECK(auc(scored({0.5, 0.5}, {0.5}), "glaucoma") == 0.5);
}

TEST_CASE("sensitivity at a target specificity", "[evaluation][roc]") {
  // Thresholds 0.8 and 0.85 both reach specificity 0.75; 0.8 keeps more positives.
  const auto preds = scored({0.9, 0.8, 0.5}, {0.85, 0.7, 0.4, 0.3});
  const auto op = sensitivity_at_specificity(preds, "glaucoma", 0.75);
  CHECK(op.threshold == 0.8);
  CHECK(op.specificity == Approx(0.75));
  CHECK(op.sensitivity == Approx(2.0 / 3.0));
  CHECK(op.reachable);

  const auto low = sensitivity_at_specificity(preds, "glaucoma", 0.0);
  CHECK(low.sensitivity == 1.0);
  CHECK(low.specificity == 0.0);

  const auto top = sensitivity_at_specificity(preds, "glaucoma", 1.0);
  CHECK(top.threshold == 0.9);
  CHECK(top.sensitivity == Approx(1.0 / 3.0));

  SECTION("all scores tied") {
    const auto tied = sensitivity_at_specificity(scored({0.5, 0.5}, {0.5, 0.5}), "glaucoma", 0.85);
    CHECK_FALSE(tied.reachable);
    CHECK(tied.sensitivity == 0.0);
    CHECK(tied.specificity == 1.0);
  }

  SECTION("matches brute force") {
    std::mt19937 gen(3);
    std::uniform_int_distribution<int> grid(0, 10);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> pos, neg;
      for (int i = 0; i < 8; ++i) pos.push_back(grid(gen) / 10.0);
      for (int i = 0; i < 9; ++i) neg.push_back(grid(gen) / 10.0);
      const double target = grid(gen) / 10.0;
      const auto got = sensitivity_at_specificity(scored(pos, neg), "glaucoma", target);
      double best_spec = 2.0, best_sens = -1.0;
      for (const auto& p : oracle::enumerate_thresholds(pos, neg)) {
        if (p.specificity + 1e-12 < target) continue;
        if (p.specificity < best_spec - 1e-12 ||
            (std::abs(p.specificity - best_spec) <= 1e-12 && p.sensitivity > best_sens)) {
          best_spec = p.specificity;
          best_sens = p.sensitivity;
        }
      }
      REQUIRE(got.specificity == Approx(best_spec));
      REQUIRE(got.sensitivity == Approx(best_sens));
    }
  }

  CHECK_THROWS_AS(sensitivity_at_specificity(preds, "glaucoma", 1.5), Error);
}

TEST_CASE("stratified k-fold", "[evaluation][split]") {
  const auto items = labeled(482, 168);
  const auto fa = stratified_kfold(items, 10, 42);
  REQUIRE(fa.fold_of.size() == 650);
  std::map<int, std::map<std::string, int>> per_fold;
  for (const auto& it : items) per_fold[fa.fold_of.at(it.id)][it.label] += 1;
  REQUIRE(per_fold.size() == 10);
  for (auto& [fold, counts] : per_fold) {
    CHECK(counts["healthy"] >= 48);
    CHECK(counts["healthy"] <= 49);
    CHECK(counts["glaucoma"] >= 16);
    CHECK(counts["glaucoma"] <= 17);
    CHECK(counts["healthy"] + counts["glaucoma"] == 65);
  }

  SECTION("reproducible and seed dependent") {
    CHECK(stratified_kfold(items, 10, 42).fold_of == fa.fold_of);
    CHECK(stratified_kfold(items, 10, 43).fold_of != fa.fold_of);
  }

  SECTION("leave one out") {
    const auto small = labeled(3, 3);
    const auto loo = stratified_kfold(small, 3, 1);
    std::map<int, int> sizes;
    for (const auto& [id, f] : loo.fold_of) sizes[f] += 1;
    for (const auto& [f, n] : sizes) CHECK(n == 2);
  }

  SECTION("impossible stratification") {
    CHECK_THROWS_MATCHES(stratified_kfold(labeled(20, 4), 5, 1), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == ErrorCode::StratificationImpossible;
                         }));
    CHECK_THROWS_AS(stratified_kfold(items, 1, 1), Error);
    CHECK_THROWS_AS(stratified_kfold({}, 3, 1), Error);
    CHECK_THROWS_AS(stratified_kfold({{"a", "healthy"}, {"a", "healthy"}}, 2, 1), Error);
  }
}

TEST_CASE("stratified subsample", "[evaluation][split]") {
  const auto items = labeled(482, 168);
  const auto s = stratified_subsample(items, 99, 5);
  REQUIRE(s.train.size() == 99);
  REQUIRE(s.test.size() == 551);
  const auto glaucoma = std::count_if(s.train.begin(), s.train.end(), [](const std::string& id) {
    return id[0] == 'g';
  });
  CHECK(glaucoma == 26);  // 99 * 168 / 650 = 25.59
  CHECK_FALSE(s.degraded);

  std::set<std::string> all(s.train.begin(), s.train.end());
  for (const auto& id : s.test) CHECK(all.insert(id).second);
  CHECK(all.size() == 650);

  CHECK(stratified_subsample(items, 99, 5).train == s.train);
  CHECK(stratified_subsample(items, 99, 6).train != s.train);

  SECTION("largest sizes") {
    const auto big = stratified_subsample(items, 649, 5);
    CHECK(big.test.size() == 1);
  }

  SECTION("every class is represented") {
    const auto r = stratified_subsample(labeled(98, 2), 5, 1);
    CHECK(std::count_if(r.train.begin(), r.train.end(), [](const std::string& id) { return id[0] == 'g'; }) == 1);
    CHECK(r.train.size() == 5);
    CHECK_FALSE(r.degraded);

    const auto d = stratified_subsample(labeled(98, 2), 1, 1);
    CHECK(d.degraded);
  }

  CHECK_THROWS_AS(stratified_subsample(items, 0, 1), Error);
  CHECK_THROWS_AS(stratified_subsample(items, 650, 1), Error);
}
