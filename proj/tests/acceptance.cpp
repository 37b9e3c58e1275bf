// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "odtk/annotation.hpp"
#include "odtk/evaluation.hpp"
#include "odtk/imaging.hpp"
#include "odtk/localizer.hpp"
#include "odtk/synthetic.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace odtk;
using SteadyClock = std::chrono::steady_clock;

namespace {

double seconds_since(SteadyClock::time_point t0) {
  return std::chrono::duration<double>(SteadyClock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << std::endl;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome metric_fidelity() {
  ConfusionMatrix cm;
  cm.add("healthy", "healthy", 391);
  cm.add("healthy", "glaucoma", 21);
  cm.add("glaucoma", "healthy", 91);
  cm.add("glaucoma", "glaucoma", 48);

  const auto t0 = SteadyClock::now();
  const auto rep = classification_report(cm);
  const double elapsed = seconds_since(t0);

  // Published table values; percentages compared as ratios.
  const auto& h = rep.per_class[0];
  const auto& g = rep.per_class[1];
  const std::vector<std::pair<double, double>> checks{
      {h.precision.value / 100, 0.8112}, {g.precision.value / 100, 0.6957}, {h.recall.value / 100, 0.9490},
      {g.recall.value / 100, 0.3453},    {h.f1.value, 0.8747},              {g.f1.value, 0.4615},
      {rep.weighted_precision / 100, 0.7821}, {rep.weighted_recall / 100, 0.7967}, {rep.weighted_f1, 0.7705},
      {rep.accuracy / 100, 0.7967}};
  double worst = 0;
  for (const auto& [got, want] : checks) worst = std::max(worst, std::abs(got - want));
  const bool ok = worst <= 0.0005 && elapsed < 1e-3;
  return {ok, "max deviation " + fmt("%.6f", worst) + " (<= 0.0005), " + fmt("%.1f", elapsed * 1e6) + " us (< 1 ms)"};
}

Outcome otsu_equivalence() {
  std::mt19937_64 rng(20240611);
  std::vector<Histogram> hists;
  for (int i = 0; i < 1000; ++i) {
    Histogram h{};
    switch (i % 5) {
      case 0:  // dense
        for (auto& c : h) c = rng() % 5000;
        break;
      case 1:  // a few occupied bins
        for (int k = 0; k < 2 + int(rng() % 6); ++k) h[rng() % 256] += 1 + rng() % 100000;
        break;
      case 2: {  // two Gaussian-ish modes
        const int m0 = int(rng() % 128), m1 = 128 + int(rng() % 128);
        for (int v = 0; v < 256; ++v)
          h[size_t(v)] = std::uint64_t(4000 * std::exp(-std::pow(v - m0, 2) / 200.0) +
                                       3000 * std::exp(-std::pow(v - m1, 2) / 300.0));
        break;
      }
      case 3: {  // symmetric pairs, which produce exact ties
        const int a = int(rng() % 200), gap = 1 + int(rng() % 50);
        const std::uint64_t c = 1 + rng() % 1000000;
        h[size_t(a)] = c;
        h[size_t(a + gap)] = c;
        break;
      }
      default:  // near the 2^32 pixel limit, or a single bin
        if (rng() % 4 == 0) {
          h[rng() % 256] = 1000;
        } else {
          for (auto& c : h) c = rng() % (std::uint64_t(1) << 24);
        }
    }
    hists.push_back(h);
  }

  std::vector<int> got(hists.size());
  const auto t0 = SteadyClock::now();
  for (std::size_t i = 0; i < hists.size(); ++i) {
    try {
      got[i] = otsu_threshold(std::span<const std::uint64_t, 256>(hists[i]));
    } catch (const Error& e) {
      got[i] = e.code() == ErrorCode::DegenerateHistogram ? -1 : -2;
    }
  }
  const double elapsed = seconds_since(t0);

  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < hists.size(); ++i)
    if (got[i] != oracle::otsu(hists[i])) ++mismatches;
  return {mismatches == 0 && elapsed < 1.0,
          std::to_string(mismatches) + " mismatches of 1000, " + fmt("%.4f", elapsed) + " s (< 1 s)"};
}

Outcome auc_equivalence() {
  std::mt19937_64 rng(777);
  double worst = 0, worst_sym = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int np = 1 + int(rng() % 50), nn = 1 + int(rng() % 50);
    // Coarse grids make ties common; every fourth set uses fine scores.
    const int levels = trial % 4 == 3 ? 1000000 : 2 + int(rng() % 20);
    const auto draw = [&] { return double(rng() % std::uint64_t(levels + 1)) / levels; };
    std::vector<double> pos, neg;
    for (int i = 0; i < np; ++i) pos.push_back(draw());
    for (int i = 0; i < nn; ++i) neg.push_back(draw());
    if (trial % 2 == 0 && !neg.empty()) pos[0] = neg[0];  // at least one cross-class tie

    std::vector<ScoredPrediction> s, flipped;
    for (double v : pos) {
      s.push_back({"", "glaucoma", v, std::nullopt});
      flipped.push_back({"", "glaucoma", 1.0 - v, std::nullopt});
    }
    for (double v : neg) {
      s.push_back({"", "healthy", v, std::nullopt});
      flipped.push_back({"", "healthy", 1.0 - v, std::nullopt});
    }
    const double a = auc(s, "glaucoma");
    worst = std::max(worst, std::abs(a - oracle::pair_auc(pos, neg)));
    worst_sym = std::max(worst_sym, std::abs(a + auc(flipped, "glaucoma") - 1.0));
  }
  return {worst <= 1e-9 && worst_sym <= 1e-9,
          "max |auc - pairs| " + fmt("%.2e", worst) + ", max |auc(s)+auc(1-s)-1| " + fmt("%.2e", worst_sym) +
              " (<= 1e-9)"};
}

Outcome iou_equivalence() {
  std::mt19937_64 rng(4242);
  const auto random_box = [&] {
    const int x0 = int(rng() % 100), x1 = int(rng() % 100), y0 = int(rng() % 100), y1 = int(rng() % 100);
    return BoundingBox{std::min(x0, x1), std::min(y0, y1), std::abs(x1 - x0) + 1, std::abs(y1 - y0) + 1};
  };
  std::size_t mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_box(), t = random_box();
    const auto g = oracle::rasterize(p, t, 100, 100);
    const auto c = overlap_counts(p, t);
    if (c.intersection != g.inter || c.union_area != g.uni || c.truth_area != g.truth) ++mismatches;
    else if (iou(p, t) != double(g.inter) / double(g.uni) || gt_coverage(p, t) != double(g.inter) / double(g.truth))
      ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches of 1000 box pairs"};
}

Outcome morphology_properties() {
  std::mt19937_64 rng(31337);
  std::map<std::string, std::size_t> violations{{"anti-extensivity", 0}, {"extensivity", 0}, {"monotonicity", 0},
                                               {"opening idempotence", 0}, {"interior duality", 0},
                                               {"oracle", 0}};
  for (int trial = 0; trial < 500; ++trial) {
    const int r = 1 + trial % 3;
    const auto se = StructuringElement::disk(r);
    BinaryMask a(32, 32);
    const auto density = 20 + rng() % 70;
    for (auto& b : a.bits()) b = rng() % 100 < density;
    BinaryMask sup = a;
    for (auto& b : sup.bits()) b = b || rng() % 6 == 0;

    const auto e = erode(a, se), d = dilate(a, se);
    if (!e.subset_of(a)) ++violations["anti-extensivity"];
    if (!a.subset_of(d)) ++violations["extensivity"];
    if (!e.subset_of(erode(sup, se)) || !d.subset_of(dilate(sup, se))) ++violations["monotonicity"];
    const auto o = open(a, se);
    if (open(o, se) != o) ++violations["opening idempotence"];
    const auto dual = dilate(a.complement(), se).complement();
    bool dual_ok = true;
    for (int y = r; y < 32 - r; ++y)
      for (int x = r; x < 32 - r; ++x) dual_ok = dual_ok && e.get(x, y) == dual.get(x, y);
    if (!dual_ok) ++violations["interior duality"];
    if (e != oracle::erode(a, se) || d != oracle::dilate(a, se)) ++violations["oracle"];
  }
  std::ostringstream detail;
  std::size_t total = 0;
  const char* sep = "";
  for (const auto& [k, v] : violations) {
    detail << sep << k << " " << v;
    sep = ", ";
    total += v;
  }
  return {total == 0, "violations on 500 masks: " + detail.str()};
}

Outcome localization_desk_scale() {
  const std::size_t n = 200;
  const std::uint64_t seed = 2019;
  const SynthParams params;
  const auto plan = plan_artifacts(n, seed, params);
  const LocalizerConfig cfg;
  std::size_t hits = 0;
  double sum_iou = 0, max_s = 0, total_s = 0;
  std::size_t errors = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto f = generate_fundus(seed, i, params, plan.fringe[i], plan.reflections[i]);
    const auto t0 = SteadyClock::now();
    double v = 0;
    try {
      v = iou(localize_disc(f.image, cfg).box, f.gt_box);
    } catch (const Error&) {
      ++errors;
    }
    const double s = seconds_since(t0);
    max_s = std::max(max_s, s);
    total_s += s;
    hits += v > 0.5;
    sum_iou += v;
  }
  const double acc = 100.0 * double(hits) / double(n), mean = 100.0 * sum_iou / double(n);
  return {acc >= 95.0 && mean >= 70.0 && max_s < 1.0,
          fmt("%.1f", acc) + "% at IOU>0.5 (>= 95%), mean IOU " + fmt("%.2f", mean) + "% (>= 70%), " +
              fmt("%.3f", total_s / double(n)) + " s/image mean, " + fmt("%.3f", max_s) + " s max (< 1 s), " +
              std::to_string(errors) + " localizer errors"};
}

Outcome stratified_splitting() {
  std::vector<LabeledItem> items;
  for (int i = 0; i < 482; ++i) items.push_back({"h" + std::to_string(i), "healthy"});
  for (int i = 0; i < 168; ++i) items.push_back({"g" + std::to_string(i), "glaucoma"});

  bool ok = true;
  int min_g = 1 << 30, max_g = 0, min_h = 1 << 30, max_h = 0;
  for (std::uint64_t seed : {0ULL, 1ULL, 7ULL, 2019ULL, 0xDEADBEEFULL}) {
    const auto fa = stratified_kfold(items, 10, seed);
    ok = ok && fa.fold_of.size() == items.size();
    std::map<int, std::pair<int, int>> counts;
    for (const auto& it : items) {
      const auto f = fa.fold_of.find(it.id);
      if (f == fa.fold_of.end() || f->second < 0 || f->second >= 10) {
        ok = false;
        continue;
      }
      (it.label == "glaucoma" ? counts[f->second].first : counts[f->second].second) += 1;
    }
    ok = ok && counts.size() == 10;
    for (const auto& [f, c] : counts) {
      min_g = std::min(min_g, c.first), max_g = std::max(max_g, c.first);
      min_h = std::min(min_h, c.second), max_h = std::max(max_h, c.second);
    }
    ok = ok && stratified_kfold(items, 10, seed).fold_of == fa.fold_of;
  }
  ok = ok && min_g >= 16 && max_g <= 17 && min_h >= 48 && max_h <= 49;

  int min_sub = 1 << 30, max_sub = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = stratified_subsample(items, 99, seed);
    const int g = int(std::count_if(s.train.begin(), s.train.end(), [](const std::string& id) { return id[0] == 'g'; }));
    min_sub = std::min(min_sub, g), max_sub = std::max(max_sub, g);
    ok = ok && s.train.size() == 99 && s.test.size() == 551 && stratified_subsample(items, 99, seed).train == s.train;
  }
  ok = ok && min_sub >= 25 && max_sub <= 26;
  return {ok, "glaucoma/fold " + std::to_string(min_g) + "-" + std::to_string(max_g) + ", healthy/fold " +
                  std::to_string(min_h) + "-" + std::to_string(max_h) + ", 99-subsample glaucoma " +
                  std::to_string(min_sub) + "-" + std::to_string(max_sub) + ", reproducible"};
}

Outcome annotation_durability() {
  testing_support::TempDir dir;
  const auto log = dir / "review.jsonl";
  const int n_records = 250, n_ops = 10000;

  std::vector<AnnotationRecord> recs;
  for (int i = 0; i < n_records; ++i) {
    AnnotationRecord r;
    r.image_id = "img" + std::to_string(i);
    r.width = 500;
    r.height = 400;
    if (i % 10 != 0) r.proposed_box = BoundingBox{100, 100, 60, 60};
    else r.status = ReviewStatus::rejected;
    recs.push_back(r);
  }

  // Independent model of what each record should look like.
  struct Expected {
    ReviewStatus status;
    std::optional<BoundingBox> final_box;
    std::uint64_t version = 0;
  };
  std::map<std::string, Expected> model;
  for (const auto& r : recs) model[r.image_id] = {r.status, std::nullopt, 0};

  std::mt19937_64 rng(99);
  int tick = 0;
  const Clock clock = [&tick] { return "t" + std::to_string(tick++); };
  auto store = std::make_unique<AnnotationStore>(AnnotationStore::create(recs, log));
  std::size_t replays = 0, mismatches = 0, rejected_ops = 0;

  const auto matches_model = [&](const AnnotationStore& s) {
    if (s.size() != model.size()) return false;
    for (const auto& r : s.records()) {
      const auto& m = model.at(r.image_id);
      if (r.status != m.status || r.final_box != m.final_box || r.version != m.version) return false;
    }
    return true;
  };

  for (int op = 0; op < n_ops; ++op) {
    const std::string id = "img" + std::to_string(rng() % n_records);
    auto& m = model.at(id);
    const auto& cur = store->get(id);
    Decision d;
    d.reviewer = "r" + std::to_string(rng() % 3);
    const auto kind = rng() % 3;
    std::optional<std::uint64_t> version;
    if (rng() % 4 == 0) version = rng() % 2 == 0 ? m.version : m.version + 1;

    if (kind == 0) d.kind = DecisionKind::accept;
    if (kind == 1) d.kind = DecisionKind::reject;
    if (kind == 2) {
      d.kind = DecisionKind::correct;
      // Mostly valid boxes, sometimes out of bounds, sometimes equal to the proposal.
      const auto pick = rng() % 10;
      if (pick == 0) d.box = BoundingBox{450, 0, 100, 10};
      else if (pick == 1) d.box = BoundingBox{100, 100, 60, 60};
      else d.box = BoundingBox{std::int64_t(rng() % 400), std::int64_t(rng() % 300), 1 + std::int64_t(rng() % 99), 1 + std::int64_t(rng() % 99)};
    }

    // Expected effect, derived from the decision rules.
    Decision eff = d;
    bool valid = true;
    if (eff.kind == DecisionKind::correct) {
      if (!eff.box->within(500, 400)) valid = false;
      else if (cur.proposed_box && *eff.box == *cur.proposed_box) eff.kind = DecisionKind::accept;
    }
    if (valid && eff.kind == DecisionKind::accept && !cur.proposed_box) valid = false;
    bool noop = false;
    if (valid) {
      noop = (eff.kind == DecisionKind::accept && m.status == ReviewStatus::accepted) ||
             (eff.kind == DecisionKind::reject && m.status == ReviewStatus::rejected && !m.final_box) ||
             (eff.kind == DecisionKind::correct && m.status == ReviewStatus::corrected && m.final_box == eff.box);
      if (!noop && version && *version != m.version) valid = false;
    }

    bool threw = false;
    try {
      store->apply_review(id, d, version, clock);
    } catch (const Error&) {
      threw = true;
    }
    if (threw != !valid) ++mismatches;
    if (!valid) ++rejected_ops;
    if (valid && !noop) {
      switch (eff.kind) {
        case DecisionKind::accept: m = {ReviewStatus::accepted, cur.proposed_box, m.version + 1}; break;
        case DecisionKind::reject: m = {ReviewStatus::rejected, std::nullopt, m.version + 1}; break;
        case DecisionKind::correct: m = {ReviewStatus::corrected, eff.box, m.version + 1}; break;
      }
    }

    // Periodic interruption: drop the process state, leave a torn write
    // behind, and rebuild from the log.
    if (op % 997 == 996) {
      const auto before = store->records();
      store.reset();
      {
        std::ofstream tail(log, std::ios::app | std::ios::binary);
        tail << R"({"event":"review","image_id":")" << id << R"(","decision":"acc)";
      }
      store = std::make_unique<AnnotationStore>(AnnotationStore::open(log));
      ++replays;
      if (store->records() != before || !matches_model(*store)) ++mismatches;
    }
  }

  const auto final_records = store->records();
  store.reset();
  const auto replayed = AnnotationStore::open(log, false);
  ++replays;
  bool state_ok = replayed.records() == final_records && matches_model(replayed);

  std::set<std::pair<std::string, std::string>> expected_export, got_export;
  for (const auto& [id, m] : model)
    if (m.status == ReviewStatus::accepted || m.status == ReviewStatus::corrected)
      expected_export.insert({id, to_json_value(*m.final_box).dump()});
  for (const auto& line : replayed.export_ground_truth().lines)
    got_export.insert({line.at("image_id").get<std::string>(), line.at("box").dump()});
  const bool export_ok = expected_export == got_export;

  return {state_ok && export_ok && mismatches == 0,
          std::to_string(n_ops) + " ops (" + std::to_string(rejected_ops) + " refused), " + std::to_string(replays) +
              " interrupted replays, " + std::to_string(mismatches) + " state mismatches, export " +
              std::to_string(got_export.size()) + " lines " + (export_ok ? "matches" : "DIFFERS from") +
              " accepted+corrected"};
}

}  // namespace

int main() {
  report("metric fidelity (ORIGA confusion matrix)", metric_fidelity);
  report("Otsu oracle equivalence", otsu_equivalence);
  report("AUC oracle equivalence", auc_equivalence);
  report("IOU oracle equivalence", iou_equivalence);
  report("morphology property suite", morphology_properties);
  report("stratified splitting", stratified_splitting);
  report("annotation durability", annotation_durability);
  report("localization on 200 synthetic images", localization_desk_scale);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion/criteria failed")
            << std::endl;
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
