#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "impact_game/experiment.hpp"

namespace impact {

// Strict JSON config: lower_snake_case keys, unknown keys rejected, missing
// keys keep their defaults. Errors are ConfigError naming the source and key.
// `fallback_seed` replaces the built-in default when the document has no "seed".
ExperimentConfig parse_config(const std::filesystem::path& path,
                              std::optional<std::uint64_t> fallback_seed = std::nullopt);
ExperimentConfig parse_config_text(const std::string& text, const std::string& source = "<config>",
                                   std::optional<std::uint64_t> fallback_seed = std::nullopt);
// Every key, so parse_config_text(config_to_json(c)) == c.
std::string config_to_json(const ExperimentConfig& config, int indent = 2);

// %.12g
std::string format_number(double x);

struct ManifestEntry {
  std::string file;
  std::size_t rows = 0;  // data rows, header excluded; 0 for non-tabular files
};

struct Manifest {
  std::vector<ManifestEntry> files;
};

// iterations.csv, strategies.csv, centroids.csv, front.csv, training_log.csv,
// refs.json, scatter.svg, strategies.svg and manifest.json. Creates `dir`.
Manifest write_bundle(const ScenarioReport& report, const std::filesystem::path& dir);

void write_front_csv(const std::vector<ParetoFrontPoint>& front, const std::filesystem::path& path);

// Rebuilds what the figures need from a bundle directory.
ScenarioReport read_bundle(const std::filesystem::path& dir);

// SVG renderers. Throw EmptyInputError for a report without test points.
std::string scatter_svg(const ScenarioReport& report);
std::string strategies_svg(const ScenarioReport& report);
void render_scatter(const ScenarioReport& report, const std::filesystem::path& path);
void render_strategies(const ScenarioReport& report, const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace impact
