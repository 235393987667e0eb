#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cei/aligner.hpp"
#include "cei/funcrep.hpp"
#include "cei/obs_synth.hpp"
#include "cei/robot_model.hpp"

namespace cei {

inline constexpr int kReportSchemaVersion = 1;

/// Robot description plus the template drawn on its pads. Without an explicit
/// manifest, `<stem>.manifest.json` next to the description is used if present.
struct EmbodimentSpec {
  std::filesystem::path description;
  std::optional<std::filesystem::path> manifest;
  std::optional<std::vector<std::string>> pad_links;  // overrides the manifest
  std::size_t template_count = kDefaultPadSamples;
  std::uint64_t template_seed = 0;
  TemplateOptions template_options;
};

enum class InitMode { mid_range, eis, source, explicit_config };

struct InitSpec {
  InitMode mode = InitMode::mid_range;
  std::size_t eis_samples = 1000;
  double eis_fraction = 0.10;
  std::vector<double> config;  // explicit_config
};

struct AugmentSpec {
  std::vector<Vec3> anchors{Vec3::Zero()};
  std::size_t grid_n = 10;
  double grid_range = 0.08;
  double knee = 0.8;
  std::optional<Aabb> object_box;
};

struct RunManifest {
  EmbodimentSpec source;
  EmbodimentSpec target;
  std::filesystem::path input;
  std::filesystem::path output;
  std::optional<std::filesystem::path> report;  // default: <output>.report.json
  std::uint64_t seed = 0;
  unsigned workers = 1;
  AlignmentConfig alignment;
  SynthConfig synthesis;
  std::optional<Aabb> workspace;  // overrides the source manifest's workspace
  InitSpec init;
  AugmentSpec augment;
};

/// Relative paths are resolved against `base_dir`.
RunManifest parse_run_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunManifest load_run_manifest(const std::filesystem::path& path);
std::vector<Vec3> load_anchors(const std::filesystem::path& path);

struct LoadedEmbodiment {
  Embodiment embodiment;
  EmbodimentManifest manifest;
  FunctionalTemplate tmpl;
};

LoadedEmbodiment load_embodiment_spec(const EmbodimentSpec& spec);

struct CommandResult {
  int exit_code = 0;
  nlohmann::json report;
};

/// Reads the input dataset, aligns and synthesizes every demo on the target,
/// writes the output dataset and the report. Failed demos are skipped.
CommandResult cmd_retarget(const RunManifest& manifest);
/// As cmd_retarget, once per (demo, grid transform).
CommandResult cmd_augment(const RunManifest& manifest);

struct ValidateOptions {
  std::optional<std::filesystem::path> embodiment;  // enables limit and dof checks
  std::optional<std::filesystem::path> embodiment_manifest;
  std::size_t expected_points = 1024;
  std::optional<std::filesystem::path> report;
};
CommandResult cmd_validate(const std::filesystem::path& dataset, const ValidateOptions& options);

struct InspectOptions {
  std::filesystem::path demo;
  std::size_t frame = 0;
  std::filesystem::path out;
  std::optional<EmbodimentSpec> target;  // embodiment of the demo
  std::optional<EmbodimentSpec> source;
  std::optional<std::filesystem::path> source_demo;
  double lambda = 0.5;
};
/// Writes the frame cloud, the representations and their correspondences as PLY.
CommandResult cmd_inspect(const InspectOptions& options);

struct IngestOptions {
  std::filesystem::path log;
  EmbodimentSpec embodiment;
  std::filesystem::path out;  // dataset root; the demo is appended to its index
  std::optional<Aabb> workspace;
  std::uint64_t seed = 0;
};
CommandResult cmd_ingest(const IngestOptions& options);

/// Output id for an augmented demo.
std::string augmented_demo_id(const std::string& id, std::size_t anchor, std::size_t gx, std::size_t gy);

}  // namespace cei
