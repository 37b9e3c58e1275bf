#pragma once

// Flat key = value configuration for the localizer.
//
//   # comment
//   working_size = 1500
//   channel_mode = luminance
//   erode_se = disk:5
//
// Keys are LocalizerConfig field names; unknown or repeated keys are errors.

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "odtk/error.hpp"
#include "odtk/localizer.hpp"

namespace odtk {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_number(std::string_view key, std::string_view v) {
  const std::string s(v);
  try {
    size_t used = 0;
    const double d = std::stod(s, &used);
    if (used == s.size()) return d;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::ParseError, "value of '" + std::string(key) + "' is not a number: '" + s + "'");
}

inline std::uint64_t parse_count(std::string_view key, std::string_view v) {
  const double d = parse_number(key, v);
  if (d < 0 || d != std::floor(d)) fail(ErrorCode::ParseError, "value of '" + std::string(key) + "' must be a whole number");
  return std::uint64_t(d);
}

}  // namespace detail

inline LocalizerConfig parse_localizer_config(std::string_view text) {
  LocalizerConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (!seen.insert(std::string(key)).second)
      fail(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": duplicate key '" + std::string(key) + "'");

    if (key == "working_size") {
      cfg.working_size = int(detail::parse_count(key, value));
    } else if (key == "channel_mode") {
      cfg.channel_mode = parse_channel_mode(value);
    } else if (key == "fringe_margin") {
      cfg.fringe_margin = detail::parse_number(key, value);
    } else if (key == "top_percentile") {
      cfg.top_percentile = detail::parse_number(key, value);
    } else if (key == "erode_se") {
      cfg.erode_se = parse_structuring_element(value);
    } else if (key == "dilate_se") {
      cfg.dilate_se = parse_structuring_element(value);
    } else if (key == "min_blob_area") {
      cfg.min_blob_area = detail::parse_count(key, value);
    } else if (key == "radius_expansion") {
      cfg.radius_expansion = detail::parse_number(key, value);
    } else {
      fail(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": unknown key '" + std::string(key) + "'");
    }
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    fail(ErrorCode::ParseError, e.what());
  }
  return cfg;
}

inline LocalizerConfig load_localizer_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_localizer_config(ss.str());
}

inline std::string format_localizer_config(const LocalizerConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  out << "working_size = " << cfg.working_size << '\n'
      << "channel_mode = " << to_string(cfg.channel_mode) << '\n'
      << "fringe_margin = " << cfg.fringe_margin << '\n'
      << "top_percentile = " << cfg.top_percentile << '\n'
      << "erode_se = " << to_string(cfg.erode_se) << '\n'
      << "dilate_se = " << to_string(cfg.dilate_se) << '\n'
      << "min_blob_area = " << cfg.min_blob_area << '\n'
      << "radius_expansion = " << cfg.radius_expansion << '\n';
  return out.str();
}

}  // namespace odtk
