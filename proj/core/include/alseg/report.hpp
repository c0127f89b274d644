#pragma once

#include <alseg/config.hpp>
#include <alseg/runner.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace alseg {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population (divide by n)
};
MeanStd mean_std(std::span<const double> values);

// Seed-aggregated results for one (variant, budget) cell.
struct SummaryRow {
  std::string method;
  int budget = 0;
  int runs = 0;
  MeanStd miou;
  MeanStd entropy;
  // Per-class mean over runs where the class was present; absent classes
  // stay unset.
  std::vector<std::optional<double>> per_class;
  std::vector<double> frequencies;  // element-wise mean over runs
};

std::vector<SummaryRow> summarize(std::span<const VariantRun> runs);

void write_curves_csv(std::ostream& out, std::span<const VariantRun> runs);
void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);
void write_entropy_csv(std::ostream& out, std::span<const VariantRun> runs);
void write_frequencies_csv(std::ostream& out, std::span<const VariantRun> runs);

// Minimal self-contained SVG charts; the CSVs stay the exact record.
void write_curves_svg(std::ostream& out, std::span<const SummaryRow> rows);
void write_entropy_svg(std::ostream& out, std::span<const SummaryRow> rows);
void write_frequencies_svg(std::ostream& out, std::span<const SummaryRow> rows);

// The run directory is self-describing: manifest.json carries the config,
// seeds, version, and full results, and every CSV/SVG can be regenerated
// from it alone.
nlohmann::json experiment_manifest(const RunConfig& config, const ExperimentResult& result);
struct ParsedManifest {
  RunConfig config;
  ExperimentResult result;
  std::string version;
};
ParsedManifest parse_manifest(const nlohmann::json& j);

// Writes manifest.json plus all derived CSVs and SVGs.
void write_run_dir(const std::filesystem::path& dir, const RunConfig& config,
                   const ExperimentResult& result);
// Regenerates the derived files from an existing manifest.
void render_run_dir(const std::filesystem::path& dir);

// Policy-training artifacts: a manifest with per-step logs (enough to check
// a replay bit-exactly), episodes.csv, and the best-agent checkpoint.
nlohmann::json training_manifest(const RunConfig& config, const TrainPolicyResult& result);
void write_episodes_csv(std::ostream& out, std::span<const EpisodeLog> episodes);
void write_training_run_dir(const std::filesystem::path& dir, const RunConfig& config,
                            const TrainPolicyResult& result);

}  // namespace alseg
