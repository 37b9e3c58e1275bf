#pragma once

// `odtk` command-line entry point. Exit codes: 0 success, 1 per-item
// failures (listed on stderr), 2 usage or configuration errors.

#include <csignal>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <pthread.h>

#include <CLI11.hpp>

#include "odtk/annotation.hpp"
#include "odtk/config.hpp"
#include "odtk/evaluation.hpp"
#include "odtk/image_io.hpp"
#include "odtk/json_io.hpp"
#include "odtk/localizer.hpp"
#include "odtk/review_server.hpp"
#include "odtk/synthetic.hpp"

namespace odtk::cli {

namespace fs = std::filesystem;

inline constexpr int kOk = 0;
inline constexpr int kItemFailures = 1;
inline constexpr int kUsage = 2;

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

inline std::string fmt_fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

inline LocalizerConfig config_or_default(const std::string& path) {
  return path.empty() ? LocalizerConfig{} : load_localizer_config(path);
}

inline int report_failures(const std::vector<ItemFailure>& failures, Streams io) {
  if (failures.empty()) return kOk;
  io.err << failures.size() << " item(s) failed:\n";
  for (const auto& f : failures) io.err << "  " << f.image_id << ": " << f.reason << '\n';
  return kItemFailures;
}

// ---------------------------------------------------------------------------

inline int cmd_localize(const std::string& manifest_path, const std::string& config_path, const std::string& out_path,
                        unsigned jobs, Streams io) {
  const auto manifest = load_manifest(manifest_path);
  const auto cfg = config_or_default(config_path);
  std::vector<ItemFailure> failures;
  const auto results = map_manifest_images<DiscLocalization>(
      manifest, jobs, [&](const ManifestEntry&, const RasterImage& img) { return localize_disc(img, cfg); },
      failures);
  std::vector<json> rows;
  for (std::size_t i = 0; i < results.size(); ++i)
    if (results[i]) rows.push_back(localization_to_json(manifest.images[i].image_id, *results[i]));
  write_file_atomic(out_path, to_jsonl(rows));
  io.out << "localized " << rows.size() << " of " << manifest.images.size() << " image(s) -> " << out_path << '\n';
  return report_failures(failures, io);
}

inline int cmd_propose(const std::string& manifest_path, const std::string& config_path, const std::string& out_path,
                       unsigned jobs, Streams io) {
  const auto manifest = load_manifest(manifest_path);
  const auto cfg = config_or_default(config_path);
  std::vector<ItemFailure> failures;
  auto records = generate_proposals(manifest, cfg, jobs, utc_now, &failures);
  // Build the log beside the target, then move it into place.
  fs::path tmp = out_path;
  tmp += ".tmp";
  fs::remove(tmp);
  {
    auto store = AnnotationStore::create(std::move(records), tmp);
    const auto c = store.progress();
    io.out << "proposed " << c.proposed << ", routed to review without a box " << c.rejected << " -> " << out_path
           << '\n';
  }
  fs::rename(tmp, out_path);
  // Localizer failures are part of the workflow, not command failures.
  for (const auto& f : failures) io.err << "  no proposal for " << f.image_id << ": " << f.reason << '\n';
  return kOk;
}

inline int cmd_serve(const std::string& listen, const std::string& manifest_path, const std::string& store_path,
                     Streams io) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) fail(ErrorCode::ParseError, "--listen must be HOST:PORT");
  const std::string host = listen.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(listen.substr(colon + 1));
  } catch (const std::exception&) {
    fail(ErrorCode::ParseError, "bad port in --listen");
  }
  const auto manifest = load_manifest(manifest_path);
  auto store = AnnotationStore::open(store_path);
  for (const auto& e : manifest.images)
    if (!store.contains(e.image_id)) fail(ErrorCode::ParseError, "store has no record for manifest image " + e.image_id);
  if (store.size() != manifest.images.size()) fail(ErrorCode::ParseError, "store and manifest disagree on image count");

  ReviewService service(std::move(store), manifest);
  ReviewServer server(service);

  // Shut down cleanly on SIGINT/SIGTERM; signals are handled by one waiter thread.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  const int bound = server.bind(host, port);
  io.out << "serving review API on " << host << ':' << bound << '\n' << std::flush;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  server.serve();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return kOk;
}

inline int cmd_export_gt(const std::string& store_path, const std::string& manifest_path, const std::string& out_path,
                         Streams io) {
  const auto store = AnnotationStore::open(store_path, false);
  const auto gt = store.export_ground_truth();
  if (!manifest_path.empty()) {
    const auto manifest = load_manifest(manifest_path);
    for (const auto& line : gt.lines) {
      const auto* e = manifest.find(line.at("image_id").get<std::string>());
      if (!e) fail(ErrorCode::ParseError, "exported image not in manifest: " + line.at("image_id").dump());
      if (!parse_box(line.at("box")).within(e->width, e->height))
        fail(ErrorCode::InvalidBox, "exported box outside image " + e->image_id);
    }
  }
  write_file_atomic(out_path, to_jsonl(gt.lines));
  io.out << json{{"summary", progress_to_json(gt.summary)}, {"exported", gt.lines.size()}}.dump() << '\n';
  return kOk;
}

/// Joins ground truth and predictions on image_id; every GT line yields a pair.
inline std::vector<LocalizationPair> join_localization(const std::vector<json>& gt, const std::vector<json>& pred) {
  std::map<std::string, BoundingBox> predicted;
  for (const auto& p : pred) {
    if (!p.contains("image_id")) continue;
    predicted[p.at("image_id").get<std::string>()] = parse_box(p.at("box"));
  }
  std::vector<LocalizationPair> pairs;
  std::set<std::string> seen;
  for (const auto& g : gt) {
    if (!g.contains("image_id")) continue;
    LocalizationPair lp;
    lp.image_id = g.at("image_id").get<std::string>();
    if (!seen.insert(lp.image_id).second) fail(ErrorCode::ParseError, "duplicate ground truth for " + lp.image_id);
    lp.truth = parse_box(g.at("box"));
    if (auto it = predicted.find(lp.image_id); it != predicted.end()) lp.predicted = it->second;
    pairs.push_back(std::move(lp));
  }
  return pairs;
}

inline std::vector<double> parse_threshold_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorCode::ParseError, "bad threshold '" + item + "'");
    }
  }
  if (out.empty()) fail(ErrorCode::ParseError, "no thresholds given");
  return out;
}

inline json localization_report(const std::vector<LocalizationPair>& pairs, const std::vector<double>& thresholds,
                                 OverlapMetric metric) {
  json rows = json::array();
  for (const auto& r : localization_accuracy(pairs, thresholds, metric))
    rows.push_back({{"threshold", r.threshold}, {"percent", r.percent}, {"hits", r.hits}});
  std::size_t missing = 0;
  for (const auto& p : pairs) missing += !p.predicted;
  return json{{"metric", to_string(metric)},
              {"pairs", pairs.size()},
              {"missing_predictions", missing},
              {"accuracy", rows},
              {"mean_overlap_percent", mean_overlap(pairs, metric)}};
}

inline int cmd_eval_loc(const std::string& gt_path, const std::string& pred_path, const std::string& metric_name,
                        const std::string& thresholds_s, const std::string& out_path, Streams io) {
  const auto metric = parse_overlap_metric(metric_name);
  const auto thresholds = parse_threshold_list(thresholds_s);
  const auto pairs = join_localization(read_jsonl(gt_path), read_jsonl(pred_path));
  const auto rep = localization_report(pairs, thresholds, metric);

  io.out << "Localization accuracy (" << (metric == OverlapMetric::iou ? "IOU" : "GT coverage") << " > t), "
         << pairs.size() << " image(s), " << rep["missing_predictions"].get<std::size_t>() << " without prediction\n";
  io.out << std::left << std::setw(18) << "Overlap (%)";
  for (double t : thresholds) io.out << std::right << std::setw(8) << fmt_fixed(100.0 * t, 0);
  io.out << '\n' << std::left << std::setw(18) << "Accuracy (%)";
  for (const auto& r : rep["accuracy"]) io.out << std::right << std::setw(8) << fmt_fixed(r["percent"].get<double>(), 2);
  io.out << "\nMean overlap: " << fmt_fixed(rep["mean_overlap_percent"].get<double>(), 2) << "%\n";
  if (!out_path.empty()) write_file_atomic(out_path, rep.dump(2) + "\n");
  return kOk;
}

inline std::vector<ScoredPrediction> parse_scored_predictions(const std::vector<json>& rows) {
  std::vector<ScoredPrediction> out;
  for (const auto& r : rows) {
    try {
      ScoredPrediction p;
      p.image_id = r.at("image_id").get<std::string>();
      p.true_label = r.at("true_label").get<std::string>();
      p.score = r.at("score").get<double>();
      if (r.contains("fold") && !r["fold"].is_null()) p.fold = r["fold"].get<int>();
      if (!(p.score >= 0.0 && p.score <= 1.0)) fail(ErrorCode::ParseError, "score outside [0,1] for " + p.image_id);
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      fail(ErrorCode::ParseError, std::string("prediction line: ") + e.what());
    }
  }
  if (out.empty()) fail(ErrorCode::EmptyInput, "no predictions");
  return out;
}

inline json metric_json(const Metric& m) { return json{{"value", m.value}, {"degenerate", m.degenerate}}; }

inline json classification_json(const std::vector<ScoredPrediction>& preds, const std::string& positive,
                                 const std::string& negative, double threshold, std::optional<double> at_spec) {
  ConfusionMatrix cm({negative, positive});
  for (const auto& p : preds) {
    if (p.true_label != positive && p.true_label != negative)
      fail(ErrorCode::ParseError, "label '" + p.true_label + "' is neither " + positive + " nor " + negative);
    cm.add(p.true_label, p.score >= threshold ? positive : negative);
  }
  const auto rep = classification_report(cm);
  json classes = json::array();
  for (const auto& c : rep.per_class)
    classes.push_back({{"class", c.name},
                       {"precision_percent", metric_json(c.precision)},
                       {"recall_percent", metric_json(c.recall)},
                       {"f1", metric_json(c.f1)},
                       {"specificity_percent", metric_json(c.specificity)},
                       {"support", c.support}});
  json matrix = json::array();
  for (std::size_t t = 0; t < cm.size(); ++t) {
    json row = json::array();
    for (std::size_t p = 0; p < cm.size(); ++p) row.push_back(cm.at(t, p));
    matrix.push_back(row);
  }
  json out{{"positive_class", positive},
           {"decision_threshold", threshold},
           {"classes", cm.classes()},
           {"confusion_matrix", matrix},
           {"per_class", classes},
           {"weighted", {{"precision_percent", rep.weighted_precision},
                         {"recall_percent", rep.weighted_recall},
                         {"f1", rep.weighted_f1}}},
           {"accuracy_percent", rep.accuracy},
           {"total", rep.total}};

  try {
    out["auc_pooled"] = auc(preds, positive);
  } catch (const Error& e) {
    out["auc_pooled"] = nullptr;
    out["auc_note"] = e.what();
  }

  std::map<int, std::vector<ScoredPrediction>> by_fold;
  for (const auto& p : preds)
    if (p.fold) by_fold[*p.fold].push_back(p);
  if (!by_fold.empty()) {
    json per_fold = json::object();
    double sum = 0.0;
    std::size_t counted = 0;
    for (const auto& [fold, fp] : by_fold) {
      try {
        const double a = auc(fp, positive);
        per_fold[std::to_string(fold)] = a;
        sum += a;
        ++counted;
      } catch (const Error&) {
        per_fold[std::to_string(fold)] = nullptr;
      }
    }
    out["auc_per_fold"] = per_fold;
    out["auc_fold_mean"] = counted ? json(sum / double(counted)) : json(nullptr);
  }

  if (at_spec) {
    const auto op = sensitivity_at_specificity(preds, positive, *at_spec);
    out["at_specificity"] = {{"target", *at_spec},
                             {"sensitivity", op.sensitivity},
                             {"achieved_specificity", op.specificity},
                             {"threshold", std::isfinite(op.threshold) ? json(op.threshold) : json("inf")},
                             {"reachable", op.reachable}};
  }
  return out;
}

inline int cmd_eval_clf(const std::string& pred_path, const std::string& positive, const std::string& negative,
                        double threshold, std::optional<double> at_spec, const std::string& out_path, Streams io) {
  const auto preds = parse_scored_predictions(read_jsonl(pred_path));
  const auto rep = classification_json(preds, positive, negative, threshold, at_spec);

  io.out << std::left << std::setw(12) << "Class" << std::right << std::setw(14) << "Precision (%)" << std::setw(12)
         << "Recall (%)" << std::setw(10) << "F1" << std::setw(10) << "Support" << '\n';
  for (const auto& c : rep["per_class"]) {
    io.out << std::left << std::setw(12) << c["class"].get<std::string>() << std::right << std::setw(14)
           << fmt_fixed(c["precision_percent"]["value"].get<double>(), 2) << std::setw(12)
           << fmt_fixed(c["recall_percent"]["value"].get<double>(), 2) << std::setw(10)
           << fmt_fixed(c["f1"]["value"].get<double>(), 4) << std::setw(10) << c["support"].get<std::uint64_t>()
           << '\n';
  }
  io.out << std::left << std::setw(12) << "Total" << std::right << std::setw(14)
         << fmt_fixed(rep["weighted"]["precision_percent"].get<double>(), 2) << std::setw(12)
         << fmt_fixed(rep["weighted"]["recall_percent"].get<double>(), 2) << std::setw(10)
         << fmt_fixed(rep["weighted"]["f1"].get<double>(), 4) << std::setw(10) << rep["total"].get<std::uint64_t>()
         << '\n';
  io.out << "Accuracy: " << fmt_fixed(rep["accuracy_percent"].get<double>(), 2) << "%\n";
  if (!rep["auc_pooled"].is_null()) io.out << "AUC (pooled): " << fmt_fixed(rep["auc_pooled"].get<double>(), 4) << '\n';
  if (rep.contains("auc_fold_mean") && !rep["auc_fold_mean"].is_null())
    io.out << "AUC (mean of folds): " << fmt_fixed(rep["auc_fold_mean"].get<double>(), 4) << '\n';
  if (rep.contains("at_specificity")) {
    const auto& s = rep["at_specificity"];
    io.out << "Sensitivity at specificity >= " << fmt_fixed(s["target"].get<double>(), 2) << ": "
           << fmt_fixed(s["sensitivity"].get<double>(), 4) << " (achieved specificity "
           << fmt_fixed(s["achieved_specificity"].get<double>(), 4) << ")"
           << (s["reachable"].get<bool>() ? "" : " [unreachable: only the reject-all point qualifies]") << '\n';
  }
  if (!out_path.empty()) write_file_atomic(out_path, rep.dump(2) + "\n");
  return kOk;
}

inline int cmd_split(const std::string& manifest_path, std::optional<int> k, std::optional<std::size_t> train_n,
                     std::uint64_t seed, const std::string& out_path, Streams io) {
  if (k.has_value() == train_n.has_value()) fail(ErrorCode::ParseError, "split needs exactly one of --k or --train-n");
  const auto manifest = load_manifest(manifest_path);
  const auto items = manifest.labeled_items();
  std::map<std::string, std::string> label_of;
  for (const auto& it : items) label_of[it.id] = it.label;

  json out;
  if (k) {
    const auto fa = stratified_kfold(items, *k, seed);
    json folds = json::object();
    std::map<int, std::map<std::string, int>> counts;
    for (const auto& e : manifest.images) {
      const int f = fa.fold_of.at(e.image_id);
      folds[e.image_id] = f;
      ++counts[f][e.label];
    }
    out = json{{"k", *k}, {"seed", seed}, {"folds", folds}};
    for (const auto& [f, per] : counts) {
      io.out << "fold " << f << ':';
      for (const auto& [label, n] : per) io.out << ' ' << label << '=' << n;
      io.out << '\n';
    }
  } else {
    const auto split = stratified_subsample(items, *train_n, seed);
    std::map<std::string, int> train_counts;
    for (const auto& id : split.train) ++train_counts[label_of[id]];
    out = json{{"seed", seed}, {"train", split.train}, {"test", split.test}, {"degraded", split.degraded}};
    io.out << "train " << split.train.size() << ':';
    for (const auto& [label, n] : train_counts) io.out << ' ' << label << '=' << n;
    io.out << "\ntest " << split.test.size() << '\n';
    if (split.degraded) io.err << "warning: training size below class count; one image per class forced\n";
  }
  if (!out_path.empty()) write_file_atomic(out_path, out.dump(2) + "\n");
  return kOk;
}

inline int cmd_synth(std::size_t n, std::uint64_t seed, const std::string& out_dir, const SynthParams& params,
                     unsigned jobs, Streams io) {
  if (n == 0) fail(ErrorCode::ParseError, "--n must be positive");
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir / "images", ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + (dir / "images").string() + ": " + ec.message());

  const auto plan = plan_artifacts(n, seed, params);
  std::vector<ManifestEntry> entries(n);
  std::vector<json> gt(n), log(n);
  parallel_for_index(n, jobs, [&](std::size_t i) {
    const auto f = generate_fundus(seed, i, params, plan.fringe[i], plan.reflections[i]);
    const std::string rel = "images/" + f.image_id + ".png";
    const auto png = encode_png(f.image);
    write_file_atomic(dir / rel, std::string(png.begin(), png.end()));
    entries[i] = {f.image_id, rel, f.image.width(), f.image.height(), "unlabeled"};
    gt[i] = json{{"image_id", f.image_id}, {"box", to_json_value(f.gt_box)}};
    log[i] = json{{"image_id", f.image_id},
                  {"fringe", f.has_fringe()},
                  {"reflection_spots", f.scene.reflections.size()},
                  {"disc", to_json_value(f.scene.disc)},
                  {"retina", to_json_value(f.scene.retina)}};
  });
  DatasetManifest m{"synthetic", entries, dir};
  write_file_atomic(dir / "manifest.json", manifest_to_json(m).dump(2) + "\n");
  write_file_atomic(dir / "gt.jsonl", to_jsonl(gt));
  write_file_atomic(dir / "generator_log.jsonl", to_jsonl(log));
  std::size_t fringe = 0;
  for (bool b : plan.fringe) fringe += b;
  io.out << "wrote " << n << " image(s), " << fringe << " with fringe artefacts, to " << dir.string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

/// Parses argv and dispatches to one subcommand.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Streams io{out, err};
  CLI::App app{"Optic disc localization, ground-truth review and evaluation toolkit", "odtk"};
  app.require_subcommand(1);

  std::string manifest, config, out_path, store, gt, pred, listen = "127.0.0.1:8080";
  std::string metric = "iou", thresholds = "0,0.2,0.5,0.6,0.7,0.8";
  std::string positive = "glaucoma", negative = "healthy";
  unsigned jobs = 1;
  std::uint64_t seed = 0;
  double decision_threshold = 0.5;
  std::optional<double> at_spec;
  std::optional<int> k;
  std::optional<std::size_t> train_n;
  std::size_t n = 0;
  SynthParams synth;

  const auto common = [&](CLI::App* sc, bool need_manifest, bool need_out) {
    auto* m = sc->add_option("--manifest", manifest, "Dataset manifest (JSON)");
    if (need_manifest) m->required();
    auto* o = sc->add_option("--out", out_path, "Output path");
    if (need_out) o->required();
  };

  auto* loc = app.add_subcommand("localize", "Localize the optic disc in every manifest image");
  common(loc, true, true);
  loc->add_option("--config", config, "Localizer config (key = value)");
  loc->add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1u, 1024u));

  auto* prop = app.add_subcommand("propose", "Create an annotation store from heuristic proposals");
  common(prop, true, true);
  prop->add_option("--config", config, "Localizer config (key = value)");
  prop->add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1u, 1024u));

  auto* serve = app.add_subcommand("serve", "Serve the review HTTP API");
  serve->add_option("--listen", listen, "HOST:PORT");
  serve->add_option("--manifest", manifest, "Dataset manifest (JSON)")->required();
  serve->add_option("--store", store, "Annotation store (decision log)")->required();

  auto* exp = app.add_subcommand("export-gt", "Export reviewed ground truth");
  exp->add_option("--store", store, "Annotation store (decision log)")->required();
  exp->add_option("--manifest", manifest, "Manifest to check box bounds against");
  exp->add_option("--out", out_path, "Ground-truth JSON-lines output")->required();

  auto* eloc = app.add_subcommand("eval-loc", "Localization accuracy against ground truth");
  eloc->add_option("--gt", gt, "Ground truth JSON-lines")->required();
  eloc->add_option("--pred", pred, "Predictions JSON-lines")->required();
  eloc->add_option("--metric", metric, "iou | coverage")->check(CLI::IsMember({"iou", "coverage"}));
  eloc->add_option("--thresholds", thresholds, "Comma-separated fractions");
  eloc->add_option("--out", out_path, "JSON report");

  auto* eclf = app.add_subcommand("eval-clf", "Classification metrics, ROC AUC");
  eclf->add_option("--pred", pred, "Scored predictions JSON-lines")->required();
  eclf->add_option("--positive", positive, "Positive class label");
  eclf->add_option("--negative", negative, "Negative class label");
  eclf->add_option("--threshold", decision_threshold, "Decision threshold on score")->check(CLI::Range(0.0, 1.0));
  eclf->add_option("--at-specificity", at_spec, "Report sensitivity at this specificity")->check(CLI::Range(0.0, 1.0));
  eclf->add_option("--out", out_path, "JSON report");

  auto* split = app.add_subcommand("split", "Stratified k-fold or train subsample");
  common(split, true, false);
  split->add_option("--k", k, "Fold count")->check(CLI::Range(2, 1 << 30));
  split->add_option("--train-n", train_n, "Training images per run");
  split->add_option("--seed", seed, "64-bit seed");

  auto* syn = app.add_subcommand("synth", "Generate a synthetic fundus corpus");
  syn->add_option("--n", n, "Image count")->required();
  syn->add_option("--seed", seed, "64-bit seed");
  syn->add_option("--out", out_path, "Output directory")->required();
  syn->add_option("--fringe-rate", synth.fringe_rate, "Fraction with fringe artefacts")->check(CLI::Range(0.0, 1.0));
  syn->add_option("--reflection-rate", synth.reflection_rate, "Fraction with reflections")->check(CLI::Range(0.0, 1.0));
  syn->add_option("--min-size", synth.min_size, "Smallest image side")->check(CLI::Range(64, 8192));
  syn->add_option("--max-size", synth.max_size, "Largest image side")->check(CLI::Range(64, 8192));
  syn->add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1u, 1024u));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0) err << app.help();
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*loc) return cmd_localize(manifest, config, out_path, jobs, io);
    if (*prop) return cmd_propose(manifest, config, out_path, jobs, io);
    if (*serve) return cmd_serve(listen, manifest, store, io);
    if (*exp) return cmd_export_gt(store, manifest, out_path, io);
    if (*eloc) return cmd_eval_loc(gt, pred, metric, thresholds, out_path, io);
    if (*eclf) return cmd_eval_clf(pred, positive, negative, decision_threshold, at_spec, out_path, io);
    if (*split) return cmd_split(manifest, k, train_n, seed, out_path, io);
    if (*syn) {
      if (synth.min_size > synth.max_size) fail(ErrorCode::ParseError, "--min-size exceeds --max-size");
      return cmd_synth(n, seed, out_path, synth, jobs, io);
    }
  } catch (const Error& e) {
    err << "odtk: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "odtk: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace odtk::cli
