#pragma once

// Evaluation metrics: box overlap, localization accuracy tables, confusion
// matrix derived scores, ROC/AUC, sensitivity at a target specificity and
// stratified fold/subsample bookkeeping.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "odtk/error.hpp"
#include "odtk/geometry.hpp"
#include "odtk/synthetic.hpp"

namespace odtk {

// ---------------------------------------------------------------------------
// Box overlap
// ---------------------------------------------------------------------------

struct OverlapCounts {
  std::int64_t intersection = 0;
  std::int64_t union_area = 0;
  std::int64_t truth_area = 0;
};

inline OverlapCounts overlap_counts(const BoundingBox& pred, const BoundingBox& truth) {
  if (!pred.valid() || !truth.valid()) fail(ErrorCode::InvalidBox, "boxes must have positive area");
  const std::int64_t inter = intersection_area(pred, truth);
  return {inter, pred.area() + truth.area() - inter, truth.area()};
}

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const auto c = overlap_counts(a, b);
  return double(c.intersection) / double(c.union_area);
}

/// Fraction of the ground-truth box covered by the prediction.
inline double gt_coverage(const BoundingBox& pred, const BoundingBox& truth) {
  const auto c = overlap_counts(pred, truth);
  return double(c.intersection) / double(c.truth_area);
}

enum class OverlapMetric { iou, gt_coverage };

inline std::string_view to_string(OverlapMetric m) { return m == OverlapMetric::iou ? "iou" : "coverage"; }

inline OverlapMetric parse_overlap_metric(std::string_view s) {
  if (s == "iou") return OverlapMetric::iou;
  if (s == "coverage" || s == "gt_coverage") return OverlapMetric::gt_coverage;
  fail(ErrorCode::ParseError, "unknown overlap metric '" + std::string(s) + "'");
}

struct LocalizationPair {
  std::string image_id;
  std::optional<BoundingBox> predicted;
  BoundingBox truth;
};

/// Metric value for one pair; a missing prediction scores 0.
inline double pair_overlap(const LocalizationPair& p, OverlapMetric m) {
  if (!p.predicted) return 0.0;
  return m == OverlapMetric::iou ? iou(*p.predicted, p.truth) : gt_coverage(*p.predicted, p.truth);
}

struct AccuracyRow {
  double threshold = 0.0;
  double percent = 0.0;
  std::size_t hits = 0;
};

/// Percentage of pairs whose metric is strictly above each threshold.
/// Threshold 0 therefore means "any overlap at all".
inline std::vector<AccuracyRow> localization_accuracy(const std::vector<LocalizationPair>& pairs,
                                                      const std::vector<double>& thresholds, OverlapMetric m) {
  if (pairs.empty()) fail(ErrorCode::EmptyInput, "no localization pairs");
  std::vector<double> values;
  values.reserve(pairs.size());
  for (const auto& p : pairs) values.push_back(p.predicted ? pair_overlap(p, m) : -1.0);
  std::vector<AccuracyRow> rows;
  for (double t : thresholds) {
    if (!(t >= 0.0 && t < 1.0)) fail(ErrorCode::InvalidArgument, "thresholds must lie in [0,1)");
    const auto hits = std::size_t(std::count_if(values.begin(), values.end(), [t](double v) { return v > t; }));
    rows.push_back({t, 100.0 * double(hits) / double(pairs.size()), hits});
  }
  return rows;
}

/// Mean overlap in percent; missing predictions contribute 0.
inline double mean_overlap(const std::vector<LocalizationPair>& pairs, OverlapMetric m) {
  if (pairs.empty()) fail(ErrorCode::EmptyInput, "no localization pairs");
  double sum = 0.0;
  for (const auto& p : pairs) sum += pair_overlap(p, m);
  return 100.0 * sum / double(pairs.size());
}

// ---------------------------------------------------------------------------
// Confusion matrix and per-class scores
// ---------------------------------------------------------------------------

/// Counts indexed by (true class, predicted class).
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<std::string> classes = {"healthy", "glaucoma"})
      : classes_(std::move(classes)), cells_(classes_.size() * classes_.size(), 0) {
    if (classes_.empty()) fail(ErrorCode::InvalidArgument, "confusion matrix needs at least one class");
  }

  std::size_t size() const noexcept { return classes_.size(); }
  const std::vector<std::string>& classes() const noexcept { return classes_; }

  std::size_t index_of(std::string_view cls) const {
    for (std::size_t i = 0; i < classes_.size(); ++i)
      if (classes_[i] == cls) return i;
    fail(ErrorCode::NotFound, "unknown class '" + std::string(cls) + "'");
  }

  std::uint64_t& at(std::size_t truth, std::size_t pred) { return cells_[truth * size() + pred]; }
  std::uint64_t at(std::size_t truth, std::size_t pred) const { return cells_[truth * size() + pred]; }
  std::uint64_t& at(std::string_view truth, std::string_view pred) { return at(index_of(truth), index_of(pred)); }

  void add(std::string_view truth, std::string_view pred, std::uint64_t n = 1) { at(truth, pred) += n; }

  std::uint64_t total() const { return std::accumulate(cells_.begin(), cells_.end(), std::uint64_t{0}); }

  std::uint64_t true_positives(std::size_t c) const { return at(c, c); }
  std::uint64_t false_positives(std::size_t c) const {
    std::uint64_t s = 0;
    for (std::size_t t = 0; t < size(); ++t)
      if (t != c) s += at(t, c);
    return s;
  }
  std::uint64_t false_negatives(std::size_t c) const {
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < size(); ++p)
      if (p != c) s += at(c, p);
    return s;
  }
  std::uint64_t true_negatives(std::size_t c) const {
    return total() - true_positives(c) - false_positives(c) - false_negatives(c);
  }
  std::uint64_t support(std::size_t c) const { return true_positives(c) + false_negatives(c); }

 private:
  std::vector<std::string> classes_;
  std::vector<std::uint64_t> cells_;
};

/// A score with a flag set when its denominator was zero (value is then 0).
struct Metric {
  double value = 0.0;
  bool degenerate = false;
};

namespace detail {
inline Metric ratio(std::uint64_t num, std::uint64_t den, double scale) {
  if (den == 0) return {0.0, true};
  return {scale * double(num) / double(den), false};
}
}  // namespace detail

/// TP / (TP + FP), percent.
inline Metric precision(const ConfusionMatrix& cm, std::size_t c) {
  return detail::ratio(cm.true_positives(c), cm.true_positives(c) + cm.false_positives(c), 100.0);
}
/// TP / (TP + FN), percent.
inline Metric recall(const ConfusionMatrix& cm, std::size_t c) {
  return detail::ratio(cm.true_positives(c), cm.true_positives(c) + cm.false_negatives(c), 100.0);
}
/// TN / (TN + FP), percent.
inline Metric specificity(const ConfusionMatrix& cm, std::size_t c) {
  return detail::ratio(cm.true_negatives(c), cm.true_negatives(c) + cm.false_positives(c), 100.0);
}
/// Harmonic mean of precision and recall, as a ratio in [0,1].
inline Metric f1(const ConfusionMatrix& cm, std::size_t c) {
  const auto p = precision(cm, c), r = recall(cm, c);
  if (p.degenerate || r.degenerate || p.value + r.value == 0.0) return {0.0, true};
  const double pr = p.value / 100.0, rr = r.value / 100.0;
  return {2.0 * pr * rr / (pr + rr), false};
}

struct ClassMetrics {
  std::string name;
  Metric precision;
  Metric recall;
  Metric f1;
  Metric specificity;
  std::uint64_t support = 0;
};

struct ClassificationReport {
  std::vector<ClassMetrics> per_class;
  double weighted_precision = 0.0;  // percent
  double weighted_recall = 0.0;     // percent
  double weighted_f1 = 0.0;         // ratio
  double accuracy = 0.0;            // percent
  std::uint64_t total = 0;
};

/// Per-class scores plus support-weighted totals.
inline ClassificationReport classification_report(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) fail(ErrorCode::EmptyInput, "confusion matrix is empty");
  ClassificationReport rep;
  rep.total = total;
  std::uint64_t diag = 0;
  for (std::size_t c = 0; c < cm.size(); ++c) {
    ClassMetrics m{cm.classes()[c], precision(cm, c), recall(cm, c), f1(cm, c), specificity(cm, c), cm.support(c)};
    const double w = double(m.support) / double(total);
    rep.weighted_precision += w * m.precision.value;
    rep.weighted_recall += w * m.recall.value;
    rep.weighted_f1 += w * m.f1.value;
    diag += cm.true_positives(c);
    rep.per_class.push_back(std::move(m));
  }
  rep.accuracy = 100.0 * double(diag) / double(total);
  return rep;
}

// ---------------------------------------------------------------------------
// ROC / AUC
// ---------------------------------------------------------------------------

struct ScoredPrediction {
  std::string image_id;
  std::string true_label;
  double score = 0.0;
  std::optional<int> fold;
};

struct RocPoint {
  double threshold = 0.0;  // predicted positive iff score >= threshold; +inf rejects all
  double specificity = 0.0;
  double sensitivity = 0.0;
  std::uint64_t true_positives = 0;
  std::uint64_t false_positives = 0;
};

/// ROC points ordered by ascending threshold: the first point accepts every
/// instance (sensitivity 1, specificity 0), the last rejects all (threshold
/// +inf). Equal scores form a single step.
inline std::vector<RocPoint> roc_curve(const std::vector<ScoredPrediction>& preds, std::string_view positive) {
  std::vector<std::pair<double, bool>> s;
  s.reserve(preds.size());
  std::uint64_t P = 0, N = 0;
  for (const auto& p : preds) {
    if (!(p.score >= 0.0 && p.score <= 1.0)) fail(ErrorCode::InvalidArgument, "scores must lie in [0,1]");
    const bool pos = p.true_label == positive;
    s.emplace_back(p.score, pos);
    (pos ? P : N) += 1;
  }
  if (P == 0 || N == 0) fail(ErrorCode::UndefinedROC, "ROC needs at least one positive and one negative");
  std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  // Sweep thresholds from high to low, then reverse.
  std::vector<RocPoint> pts;
  pts.push_back({std::numeric_limits<double>::infinity(), 1.0, 0.0, 0, 0});
  std::uint64_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < s.size();) {
    const double v = s[i].first;
    for (; i < s.size() && s[i].first == v; ++i) (s[i].second ? tp : fp) += 1;
    pts.push_back({v, double(N - fp) / double(N), double(tp) / double(P), tp, fp});
  }
  std::reverse(pts.begin(), pts.end());
  return pts;
}

/// Trapezoidal area under the tie-grouped ROC curve.
inline double auc(const std::vector<ScoredPrediction>& preds, std::string_view positive) {
  const auto pts = roc_curve(preds, positive);
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double fpr0 = 1.0 - pts[i - 1].specificity, fpr1 = 1.0 - pts[i].specificity;
    area += (fpr0 - fpr1) * (pts[i - 1].sensitivity + pts[i].sensitivity) * 0.5;
  }
  return area;
}

struct OperatingPoint {
  double sensitivity = 0.0;
  double specificity = 0.0;
  double threshold = 0.0;
  // False when the only point meeting the target is the reject-all endpoint.
  bool reachable = true;
};

/// Sensitivity at the ROC point whose specificity is the smallest one still
/// >= target; among equal specificities the higher sensitivity wins.
inline OperatingPoint sensitivity_at_specificity(const std::vector<ScoredPrediction>& preds,
                                                 std::string_view positive, double target = 0.85) {
  if (!(target >= 0.0 && target <= 1.0)) fail(ErrorCode::InvalidArgument, "target specificity must lie in [0,1]");
  const auto pts = roc_curve(preds, positive);
  const RocPoint* best = nullptr;
  for (const auto& p : pts) {
    if (p.specificity < target) continue;
    if (!best || p.specificity < best->specificity ||
        (p.specificity == best->specificity && p.sensitivity > best->sensitivity))
      best = &p;
  }
  // The reject-all point always has specificity 1, so best is never null.
  OperatingPoint op{best->sensitivity, best->specificity, best->threshold, true};
  op.reachable = std::isfinite(best->threshold);
  return op;
}

// ---------------------------------------------------------------------------
// Stratified splitting
// ---------------------------------------------------------------------------

struct LabeledItem {
  std::string id;
  std::string label;
};

struct FoldAssignment {
  int k = 0;
  std::map<std::string, int> fold_of;
};

namespace detail {

// Items grouped by label (labels in sorted order), each group in input order.
inline std::map<std::string, std::vector<std::string>> group_by_label(const std::vector<LabeledItem>& items) {
  std::map<std::string, std::vector<std::string>> groups;
  std::map<std::string, bool> seen;
  for (const auto& it : items) {
    if (seen[it.id]) fail(ErrorCode::InvalidArgument, "duplicate image id '" + it.id + "'");
    seen[it.id] = true;
    groups[it.label].push_back(it.id);
  }
  return groups;
}

inline SeededRng class_rng(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a over the label
  for (char ch : label) h = (h ^ std::uint8_t(ch)) * 0x100000001B3ULL;
  return SeededRng(splitmix64(seed ^ h));
}

}  // namespace detail

/// Stratified k-fold assignment. Each class is shuffled with a generator keyed
/// by (seed, label) and dealt round-robin; the dealing position carries over
/// from one class to the next so total fold sizes also stay within one.
inline FoldAssignment stratified_kfold(const std::vector<LabeledItem>& items, int k, std::uint64_t seed) {
  if (k < 2) fail(ErrorCode::InvalidArgument, "k must be >= 2");
  if (items.empty()) fail(ErrorCode::EmptyDataset, "nothing to split");
  auto groups = detail::group_by_label(items);
  for (const auto& [label, ids] : groups)
    if (ids.size() < std::size_t(k))
      fail(ErrorCode::StratificationImpossible,
           "class '" + label + "' has " + std::to_string(ids.size()) + " members, fewer than k=" + std::to_string(k));

  FoldAssignment fa;
  fa.k = k;
  std::size_t cursor = 0;
  for (auto& [label, ids] : groups) {
    auto rng = detail::class_rng(seed, label);
    rng.shuffle(ids);
    for (const auto& id : ids) fa.fold_of[id] = int(cursor++ % std::size_t(k));
  }
  return fa;
}

struct SubsampleSplit {
  std::vector<std::string> train;
  std::vector<std::string> test;
  bool degraded = false;  // quota could not give every class one training image within n
};

/// Seeded stratified train/test split with n training images. Per-class quotas
/// use largest-remainder apportionment of n; every class gets at least one.
inline SubsampleSplit stratified_subsample(const std::vector<LabeledItem>& items, std::size_t n,
                                           std::uint64_t seed) {
  if (items.empty()) fail(ErrorCode::EmptyDataset, "nothing to split");
  if (n == 0 || n >= items.size())
    fail(ErrorCode::InvalidArgument, "training size must lie strictly between 0 and the dataset size");
  auto groups = detail::group_by_label(items);
  const double total = double(items.size());

  struct Quota {
    std::string label;
    std::size_t size;
    std::size_t take;
    double remainder;
  };
  std::vector<Quota> q;
  std::size_t assigned = 0;
  for (const auto& [label, ids] : groups) {
    const double exact = double(n) * double(ids.size()) / total;
    const auto base = std::size_t(std::floor(exact));
    q.push_back({label, ids.size(), base, exact - double(base)});
    assigned += base;
  }
  std::vector<std::size_t> order(q.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return q[a].remainder > q[b].remainder;
  });
  for (std::size_t i = 0; assigned < n; i = (i + 1) % order.size()) {
    auto& e = q[order[i]];
    if (e.take < e.size) {
      ++e.take;
      ++assigned;
    }
  }

  SubsampleSplit out;
  // Every class gets at least one training image, taken from the largest quotas.
  for (auto& e : q) {
    if (e.take > 0) continue;
    auto donor = std::max_element(q.begin(), q.end(), [](const Quota& a, const Quota& b) { return a.take < b.take; });
    if (donor->take > 1) {
      --donor->take;
    } else {
      out.degraded = true;
    }
    e.take = 1;
  }

  for (auto& e : q) {
    auto ids = groups[e.label];
    auto rng = detail::class_rng(seed, e.label);
    rng.shuffle(ids);
    for (std::size_t i = 0; i < ids.size(); ++i) (i < e.take ? out.train : out.test).push_back(ids[i]);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

}  // namespace odtk
