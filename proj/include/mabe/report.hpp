// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

// Output plumbing for experiment runs: CSV text, SHA-256 checksums, the run
// manifest and hand-rolled SVG line charts.

#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace mabe {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// 9 significant digits; infinities become "inf" / "-inf".
std::string format_real(double v);

/// Comma-separated rows with a header and LF line endings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& row(const std::vector<std::string>& cells);
  std::string str() const { return text_; }
  std::size_t rows() const noexcept { return rows_; }

 private:
  std::size_t width_;
  std::size_t rows_ = 0;
  std::string text_;
};

/// Minimal CSV reader for files written by CsvTable (no quoting).
struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name, or throws.
  std::size_t column(const std::string& name) const;
};
CsvData parse_csv(const std::string& text);

std::string sha256_hex(const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

/// A run directory whose manifest.json tracks every file written through it.
/// The manifest is written with status "incomplete" on construction, then
/// "complete" by finish() or "failed" by fail(). Files are listed with their
/// SHA-256 and size.
class RunDirectory {
 public:
  RunDirectory(std::filesystem::path dir, std::string command, std::string config_json);

  const std::filesystem::path& path() const noexcept { return dir_; }

  /// Writes (or overwrites) a file relative to the run directory.
  void write(const std::string& name, const std::string& content);
  void finish();
  void fail(const std::string& error);

 private:
  struct Entry {
    std::string name;
    std::string sha256;
    std::size_t bytes = 0;
  };

  void write_manifest(const std::string& status, const std::string& error) const;

  std::filesystem::path dir_;
  std::string command_;
  std::string config_hash_;
  std::string started_at_;
  std::vector<Entry> files_;
};

struct ChartSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // non-finite points break the line
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<ChartSeries> series;
};

/// Deterministic SVG with axes, ticks, one polyline per series and a legend.
std::string render_svg(const LineChart& chart);

}  // namespace mabe
