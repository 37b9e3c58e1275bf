#pragma once

// Semi-automatic ground truth: heuristic proposals are persisted as an
// append-only JSON-lines decision log, reviewed by a human (accept, reject or
// correct), and the verified boxes are exported. The in-memory store is always
// the replay of its log.

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include "odtk/error.hpp"
#include "odtk/evaluation.hpp"
#include "odtk/image_io.hpp"
#include "odtk/json_io.hpp"
#include "odtk/localizer.hpp"
#include "odtk/parallel.hpp"

namespace odtk {

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct ManifestEntry {
  std::string image_id;
  std::string path;  // relative to the manifest's directory
  int width = 0;
  int height = 0;
  std::string label = "unlabeled";
};

struct DatasetManifest {
  std::string dataset_name;
  std::vector<ManifestEntry> images;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const ManifestEntry& e) const { return base_dir / e.path; }

  const ManifestEntry* find(std::string_view id) const {
    for (const auto& e : images)
      if (e.image_id == id) return &e;
    return nullptr;
  }

  std::vector<LabeledItem> labeled_items() const {
    std::vector<LabeledItem> out;
    out.reserve(images.size());
    for (const auto& e : images) out.push_back({e.image_id, e.label});
    return out;
  }
};

inline bool valid_label(std::string_view l) { return l == "healthy" || l == "glaucoma" || l == "unlabeled"; }

inline DatasetManifest manifest_from_json(const json& j, std::filesystem::path base_dir = {}) {
  DatasetManifest m;
  m.base_dir = std::move(base_dir);
  try {
    m.dataset_name = j.at("dataset_name").get<std::string>();
    std::map<std::string, bool> seen;
    for (const auto& e : j.at("images")) {
      ManifestEntry me;
      me.image_id = e.at("image_id").get<std::string>();
      me.path = e.at("path").get<std::string>();
      me.width = e.at("width").get<int>();
      me.height = e.at("height").get<int>();
      me.label = e.value("label", std::string("unlabeled"));
      if (me.image_id.empty()) fail(ErrorCode::ParseError, "empty image_id");
      if (me.width <= 0 || me.height <= 0) fail(ErrorCode::ParseError, "non-positive size for " + me.image_id);
      if (!valid_label(me.label)) fail(ErrorCode::ParseError, "bad label '" + me.label + "' for " + me.image_id);
      if (seen[me.image_id]) fail(ErrorCode::ParseError, "duplicate image_id '" + me.image_id + "'");
      seen[me.image_id] = true;
      m.images.push_back(std::move(me));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("manifest: ") + e.what());
  }
  return m;
}

inline json manifest_to_json(const DatasetManifest& m) {
  json images = json::array();
  for (const auto& e : m.images)
    images.push_back(
        {{"image_id", e.image_id}, {"path", e.path}, {"width", e.width}, {"height", e.height}, {"label", e.label}});
  return json{{"dataset_name", m.dataset_name}, {"images", images}};
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  return manifest_from_json(read_json(path), path.parent_path());
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

enum class ReviewStatus { proposed, accepted, corrected, rejected };

inline std::string_view to_string(ReviewStatus s) {
  switch (s) {
    case ReviewStatus::proposed: return "proposed";
    case ReviewStatus::accepted: return "accepted";
    case ReviewStatus::corrected: return "corrected";
    case ReviewStatus::rejected: return "rejected";
  }
  return "proposed";
}

inline ReviewStatus parse_review_status(std::string_view s) {
  if (s == "proposed") return ReviewStatus::proposed;
  if (s == "accepted") return ReviewStatus::accepted;
  if (s == "corrected") return ReviewStatus::corrected;
  if (s == "rejected") return ReviewStatus::rejected;
  fail(ErrorCode::ParseError, "unknown status '" + std::string(s) + "'");
}

struct AnnotationRecord {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::optional<BoundingBox> proposed_box;
  ReviewStatus status = ReviewStatus::proposed;
  std::optional<BoundingBox> final_box;
  std::optional<std::string> reviewer;
  std::optional<std::string> reviewed_at;
  std::string source = "heuristic";
  std::optional<std::string> note;  // localizer failure reason, if any
  std::uint64_t version = 0;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

inline json record_to_json(const AnnotationRecord& r) {
  const auto opt_box = [](const std::optional<BoundingBox>& b) { return b ? to_json_value(*b) : json(nullptr); };
  const auto opt_str = [](const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); };
  return json{{"image_id", r.image_id},
              {"width", r.width},
              {"height", r.height},
              {"proposed_box", opt_box(r.proposed_box)},
              {"status", to_string(r.status)},
              {"final_box", opt_box(r.final_box)},
              {"reviewer", opt_str(r.reviewer)},
              {"reviewed_at", opt_str(r.reviewed_at)},
              {"source", r.source},
              {"note", opt_str(r.note)},
              {"version", r.version}};
}

enum class DecisionKind { accept, reject, correct };

inline DecisionKind parse_decision_kind(std::string_view s) {
  if (s == "accept") return DecisionKind::accept;
  if (s == "reject") return DecisionKind::reject;
  if (s == "correct") return DecisionKind::correct;
  fail(ErrorCode::InvalidArgument, "decision must be accept, reject or correct");
}

inline std::string_view to_string(DecisionKind k) {
  switch (k) {
    case DecisionKind::accept: return "accept";
    case DecisionKind::reject: return "reject";
    case DecisionKind::correct: return "correct";
  }
  return "accept";
}

struct Decision {
  DecisionKind kind = DecisionKind::accept;
  std::optional<BoundingBox> box;  // required for correct
  std::string reviewer;
};

struct ProgressCounts {
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  std::size_t corrected = 0;
  std::size_t rejected = 0;
  std::size_t total() const { return proposed + accepted + corrected + rejected; }
  friend bool operator==(const ProgressCounts&, const ProgressCounts&) = default;
};

inline json progress_to_json(const ProgressCounts& c) {
  return json{{"proposed", c.proposed},
              {"accepted", c.accepted},
              {"corrected", c.corrected},
              {"rejected", c.rejected},
              {"total", c.total()}};
}

using Clock = std::function<std::string()>;

/// Current UTC time as ISO-8601 with millisecond precision.
inline std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, int(ms));
  return buf;
}

// ---------------------------------------------------------------------------
// Decision log
// ---------------------------------------------------------------------------

/// Append-only JSON-lines file. Every append is flushed and fsync'ed before
/// returning.
class DecisionLog {
 public:
  DecisionLog() = default;
  explicit DecisionLog(const std::filesystem::path& path) : path_(path) {
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) fail(ErrorCode::IoError, "cannot open log " + path.string());
  }
  DecisionLog(const DecisionLog&) = delete;
  DecisionLog& operator=(const DecisionLog&) = delete;
  DecisionLog(DecisionLog&& o) noexcept : path_(std::move(o.path_)), fd_(std::exchange(o.fd_, -1)) {}
  DecisionLog& operator=(DecisionLog&& o) noexcept {
    if (this != &o) {
      close();
      path_ = std::move(o.path_);
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~DecisionLog() { close(); }

  bool attached() const noexcept { return fd_ >= 0; }
  const std::filesystem::path& path() const noexcept { return path_; }

  void append(const json& event) {
    if (fd_ < 0) return;
    std::string line = event.dump();
    line += '\n';
    const char* p = line.data();
    std::size_t left = line.size();
    while (left > 0) {
      const ssize_t n = ::write(fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::IoError, "log write failed: " + path_.string());
      }
      p += n;
      left -= std::size_t(n);
    }
    if (::fsync(fd_) != 0) fail(ErrorCode::IoError, "log fsync failed: " + path_.string());
  }

 private:
  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  std::filesystem::path path_;
  int fd_ = -1;
};

// ---------------------------------------------------------------------------
// Store
// ---------------------------------------------------------------------------

struct ReviewOutcome {
  AnnotationRecord record;
  bool changed = false;
};

struct GroundTruthExport {
  std::vector<json> lines;  // {"image_id","box"} for accepted and corrected records
  ProgressCounts summary;
};

/// Records keyed by image id (insertion order preserved), rebuilt from and
/// persisted to a decision log. Not internally synchronised.
class AnnotationStore {
 public:
  AnnotationStore() = default;

  /// Creates a store from freshly proposed records. With a log path the file
  /// is created (it must not exist) and receives one propose event per record.
  static AnnotationStore create(std::vector<AnnotationRecord> records, const std::filesystem::path& log_path = {}) {
    AnnotationStore s;
    if (!log_path.empty()) {
      if (std::filesystem::exists(log_path)) fail(ErrorCode::IoError, "log already exists: " + log_path.string());
      s.log_ = DecisionLog(log_path);
    }
    for (auto& r : records) {
      const json ev = propose_event(r);
      s.apply_event(ev);
      s.log_.append(ev);
    }
    return s;
  }

  /// Rebuilds a store by replaying a log. A torn final line (from an
  /// interrupted write) is dropped and truncated away; any other malformed line
  /// is an error. With `attach` the log stays open for further appends.
  static AnnotationStore open(const std::filesystem::path& log_path, bool attach = true) {
    AnnotationStore s;
    std::ifstream in(log_path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open log " + log_path.string());
    std::string content((std::istreambuf_iterator<char>(in)), {});
    in.close();

    std::size_t pos = 0, valid_end = 0;
    std::size_t lineno = 0;
    while (pos < content.size()) {
      const auto nl = content.find('\n', pos);
      ++lineno;
      if (nl == std::string::npos) break;  // torn tail
      const std::string_view line(content.data() + pos, nl - pos);
      if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
        json ev;
        try {
          ev = json::parse(line);
        } catch (const json::exception& e) {
          fail(ErrorCode::ParseError, log_path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        s.apply_event(ev);
      }
      pos = nl + 1;
      valid_end = pos;
    }
    if (valid_end < content.size()) std::filesystem::resize_file(log_path, valid_end);
    if (attach) s.log_ = DecisionLog(log_path);
    return s;
  }

  std::size_t size() const noexcept { return order_.size(); }
  const std::vector<std::string>& ids() const noexcept { return order_; }
  bool contains(std::string_view id) const { return records_.find(std::string(id)) != records_.end(); }

  const AnnotationRecord& get(std::string_view id) const {
    auto it = records_.find(std::string(id));
    if (it == records_.end()) fail(ErrorCode::NotFound, "no record for '" + std::string(id) + "'");
    return it->second;
  }

  std::vector<AnnotationRecord> records() const {
    std::vector<AnnotationRecord> out;
    out.reserve(order_.size());
    for (const auto& id : order_) out.push_back(records_.at(id));
    return out;
  }

  ProgressCounts progress() const {
    ProgressCounts c;
    for (const auto& [id, r] : records_) {
      switch (r.status) {
        case ReviewStatus::proposed: ++c.proposed; break;
        case ReviewStatus::accepted: ++c.accepted; break;
        case ReviewStatus::corrected: ++c.corrected; break;
        case ReviewStatus::rejected: ++c.rejected; break;
      }
    }
    return c;
  }

  /// Applies a reviewer decision. Re-applying the decision that produced the
  /// current state is a no-op (nothing logged, timestamps untouched). When
  /// `expected_version` is given and differs from the record's version, the
  /// write is refused with VersionConflict. A correction equal to the proposed
  /// box is recorded as an accept.
  ReviewOutcome apply_review(std::string_view id, const Decision& d,
                             std::optional<std::uint64_t> expected_version = std::nullopt,
                             const Clock& clock = utc_now) {
    const AnnotationRecord& cur = get(id);
    Decision eff = d;
    if (eff.kind == DecisionKind::correct) {
      if (!eff.box) fail(ErrorCode::InvalidBox, "correct decision requires a box");
      if (!eff.box->within(cur.width, cur.height))
        fail(ErrorCode::InvalidBox, "box " + to_string(*eff.box) + " is empty or outside the " +
                                        std::to_string(cur.width) + "x" + std::to_string(cur.height) + " image");
      if (cur.proposed_box && *eff.box == *cur.proposed_box) eff.kind = DecisionKind::accept;
    }
    if (eff.kind == DecisionKind::accept && !cur.proposed_box)
      fail(ErrorCode::InvalidBox, "record has no proposed box to accept");
    if (eff.kind != DecisionKind::correct) eff.box.reset();
    if (eff.reviewer.empty()) fail(ErrorCode::InvalidArgument, "reviewer is required");

    if (is_current(cur, eff)) return {cur, false};
    if (expected_version && *expected_version != cur.version)
      fail(ErrorCode::VersionConflict, "record '" + std::string(id) + "' is at version " +
                                           std::to_string(cur.version) + ", not " +
                                           std::to_string(*expected_version));

    json ev{{"event", "review"},
            {"image_id", std::string(id)},
            {"decision", to_string(eff.kind)},
            {"reviewer", eff.reviewer},
            {"at", clock()}};
    if (eff.box) ev["box"] = to_json_value(*eff.box);
    log_.append(ev);  // durable before the in-memory state changes
    apply_event(ev);
    return {get(id), true};
  }

  GroundTruthExport export_ground_truth() const {
    GroundTruthExport out;
    out.summary = progress();
    for (const auto& id : order_) {
      const auto& r = records_.at(id);
      if ((r.status == ReviewStatus::accepted || r.status == ReviewStatus::corrected) && r.final_box)
        out.lines.push_back(json{{"image_id", r.image_id}, {"box", to_json_value(*r.final_box)}});
    }
    return out;
  }

  friend bool operator==(const AnnotationStore& a, const AnnotationStore& b) {
    return a.order_ == b.order_ && a.records_ == b.records_;
  }

  static json propose_event(const AnnotationRecord& r) {
    json ev{{"event", "propose"},
            {"image_id", r.image_id},
            {"width", r.width},
            {"height", r.height},
            {"status", to_string(r.status)},
            {"source", r.source}};
    if (r.proposed_box) ev["box"] = to_json_value(*r.proposed_box);
    if (r.note) ev["note"] = *r.note;
    if (r.reviewer) ev["reviewer"] = *r.reviewer;
    if (r.reviewed_at) ev["at"] = *r.reviewed_at;
    return ev;
  }

 private:
  static bool is_current(const AnnotationRecord& r, const Decision& d) {
    switch (d.kind) {
      case DecisionKind::accept: return r.status == ReviewStatus::accepted;
      case DecisionKind::reject: return r.status == ReviewStatus::rejected && !r.final_box;
      case DecisionKind::correct: return r.status == ReviewStatus::corrected && r.final_box == d.box;
    }
    return false;
  }

  void apply_event(const json& ev) {
    try {
      const auto kind = ev.at("event").get<std::string>();
      const auto id = ev.at("image_id").get<std::string>();
      if (kind == "propose") {
        if (records_.count(id)) fail(ErrorCode::ParseError, "duplicate propose for '" + id + "'");
        AnnotationRecord r;
        r.image_id = id;
        r.width = ev.at("width").get<int>();
        r.height = ev.at("height").get<int>();
        r.status = parse_review_status(ev.at("status").get<std::string>());
        r.source = ev.value("source", std::string("heuristic"));
        if (ev.contains("box")) r.proposed_box = parse_box(ev["box"]);
        if (ev.contains("note")) r.note = ev["note"].get<std::string>();
        if (ev.contains("reviewer")) r.reviewer = ev["reviewer"].get<std::string>();
        if (ev.contains("at")) r.reviewed_at = ev["at"].get<std::string>();
        records_.emplace(id, std::move(r));
        order_.push_back(id);
      } else if (kind == "review") {
        auto it = records_.find(id);
        if (it == records_.end()) fail(ErrorCode::ParseError, "review of unknown image '" + id + "'");
        auto& r = it->second;
        const auto decision = parse_decision_kind(ev.at("decision").get<std::string>());
        switch (decision) {
          case DecisionKind::accept:
            r.status = ReviewStatus::accepted;
            r.final_box = r.proposed_box;
            break;
          case DecisionKind::reject:
            r.status = ReviewStatus::rejected;
            r.final_box.reset();
            break;
          case DecisionKind::correct:
            r.status = ReviewStatus::corrected;
            r.final_box = parse_box(ev.at("box"));
            break;
        }
        r.reviewer = ev.at("reviewer").get<std::string>();
        r.reviewed_at = ev.at("at").get<std::string>();
        ++r.version;
      } else {
        fail(ErrorCode::ParseError, "unknown log event '" + kind + "'");
      }
    } catch (const json::exception& e) {
      fail(ErrorCode::ParseError, std::string("bad log event: ") + e.what());
    }
  }

  std::vector<std::string> order_;
  std::map<std::string, AnnotationRecord> records_;
  DecisionLog log_;
};

// ---------------------------------------------------------------------------
// Proposal generation
// ---------------------------------------------------------------------------

struct ItemFailure {
  std::string image_id;
  std::string reason;
};

/// Runs `fn(entry, image)` over every manifest image with up to `jobs`
/// threads. Decode errors and dimension mismatches are reported as failures;
/// results keep manifest order.
template <typename Result, typename Fn>
std::vector<std::optional<Result>> map_manifest_images(const DatasetManifest& manifest, unsigned jobs, Fn&& fn,
                                                       std::vector<ItemFailure>& failures) {
  const std::size_t n = manifest.images.size();
  std::vector<std::optional<Result>> results(n);
  std::vector<std::optional<std::string>> errors(n);
  parallel_for_index(n, jobs, [&](std::size_t i) {
    const auto& e = manifest.images[i];
    try {
      const RasterImage img = load_image(manifest.resolve(e));
      if (img.width() != e.width || img.height() != e.height)
        fail(ErrorCode::InvalidArgument, "decoded size " + std::to_string(img.width()) + "x" +
                                             std::to_string(img.height()) + " differs from manifest " +
                                             std::to_string(e.width) + "x" + std::to_string(e.height));
      results[i] = fn(e, img);
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
    }
  });
  for (std::size_t i = 0; i < n; ++i)
    if (errors[i]) failures.push_back({manifest.images[i].image_id, *errors[i]});
  return results;
}

/// One record per manifest image. Images the localizer cannot handle become
/// rejected records without a box so the reviewer can draw one from scratch.
inline std::vector<AnnotationRecord> generate_proposals(const DatasetManifest& manifest, const LocalizerConfig& cfg,
                                                        unsigned jobs = 1, const Clock& clock = utc_now,
                                                        std::vector<ItemFailure>* failures_out = nullptr) {
  if (manifest.images.empty()) fail(ErrorCode::EmptyDataset, "manifest has no images");
  std::vector<ItemFailure> failures;
  const auto boxes = map_manifest_images<BoundingBox>(
      manifest, jobs, [&](const ManifestEntry&, const RasterImage& img) { return localize_disc(img, cfg).box; },
      failures);
  std::map<std::string, std::string> reasons;
  for (const auto& f : failures) reasons[f.image_id] = f.reason;

  std::vector<AnnotationRecord> out;
  out.reserve(manifest.images.size());
  for (std::size_t i = 0; i < manifest.images.size(); ++i) {
    const auto& e = manifest.images[i];
    AnnotationRecord r;
    r.image_id = e.image_id;
    r.width = e.width;
    r.height = e.height;
    if (boxes[i]) {
      r.proposed_box = *boxes[i];
    } else {
      r.status = ReviewStatus::rejected;
      r.note = reasons[e.image_id];
      r.reviewer = "localizer";
      r.reviewed_at = clock();
    }
    out.push_back(std::move(r));
  }
  if (failures_out) *failures_out = std::move(failures);
  return out;
}

}  // namespace odtk
