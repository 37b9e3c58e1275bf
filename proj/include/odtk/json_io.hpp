#pragma once

// JSON and JSON-lines helpers shared by the file formats and the review API.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "odtk/error.hpp"
#include "odtk/geometry.hpp"
#include "odtk/localizer.hpp"

namespace odtk {

using json = nlohmann::json;

inline json to_json_value(const BoundingBox& b) { return json{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

inline json to_json_value(const Circle& c) { return json{{"cx", c.cx}, {"cy", c.cy}, {"r", c.r}}; }

/// Strict box parse: an object with integer x, y, w, h and w, h > 0.
inline BoundingBox parse_box(const json& j) {
  if (!j.is_object()) fail(ErrorCode::InvalidBox, "box must be an object");
  BoundingBox b;
  const auto field = [&](const char* k) -> std::int64_t {
    auto it = j.find(k);
    if (it == j.end() || !it->is_number_integer())
      fail(ErrorCode::InvalidBox, std::string("box field '") + k + "' must be an integer");
    return it->get<std::int64_t>();
  };
  b.x = field("x");
  b.y = field("y");
  b.w = field("w");
  b.h = field("h");
  if (!b.valid()) fail(ErrorCode::InvalidBox, "box must have positive width and height");
  return b;
}

inline Circle parse_circle(const json& j) {
  try {
    return {j.at("cx").get<double>(), j.at("cy").get<double>(), j.at("r").get<double>()};
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad circle: ") + e.what());
  }
}

inline json localization_to_json(const std::string& image_id, const DiscLocalization& d) {
  return json{{"image_id", image_id},
              {"box", to_json_value(d.box)},
              {"circle", to_json_value(d.circle)},
              {"retina", to_json_value(d.retina)}};
}

/// Reads a JSON-lines file; blank lines are skipped.
inline std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

/// Writes via a sibling temp file and rename so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(content.data(), std::streamsize(content.size()));
    if (!out) fail(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

inline std::string to_jsonl(const std::vector<json>& rows) {
  std::string s;
  for (const auto& r : rows) {
    s += r.dump();
    s += '\n';
  }
  return s;
}

}  // namespace odtk
