#pragma once

// Result files: long-form and aggregate CSV, an SVG line plot and a YAML
// manifest. Numbers use the shortest round-trip decimal form, so identical
// inputs give byte-identical files.

#include <filesystem>
#include <string>
#include <vector>

#include "dynaboost/harness/config.hpp"
#include "dynaboost/harness/episode.hpp"
#include "dynaboost/harness/stats.hpp"

namespace dynaboost::harness {

struct AlgorithmSeries {
  std::string algorithm;
  SeriesStats stats;
  int diverged_runs = 0;
};

// One entry per algorithm that has at least one complete run; diverged
// (truncated) runs are left out of the statistics and counted instead.
std::vector<AlgorithmSeries> summarize(const std::vector<RunResult>& runs);

std::string format_number(double v);

std::string raw_csv(const std::string& experiment, const std::vector<RunResult>& runs);
std::string aggregate_csv(const std::vector<AlgorithmSeries>& series);
// SVG 1.1: one polyline per algorithm plus a translucent CI band when the
// statistics have one. Empty input yields an empty string.
std::string render_svg(const std::string& title, const std::vector<AlgorithmSeries>& series);
std::string manifest_yaml(const ExperimentConfig& config, const std::string& config_text,
                          const std::vector<RunResult>& runs);

struct OutputFiles {
  std::filesystem::path raw;
  std::filesystem::path aggregate;
  std::filesystem::path svg;  // empty when no plot was written
  std::filesystem::path manifest;
};

// Writes <name>_raw.csv, <name>_aggregate.csv, <name>.svg and
// <name>_manifest.yaml into out_dir, creating it if needed. Throws
// std::runtime_error naming the path on I/O failure.
OutputFiles write_outputs(const ExperimentConfig& config, const std::string& config_text,
                          const std::vector<RunResult>& runs, const std::filesystem::path& out_dir);

}  // namespace dynaboost::harness
