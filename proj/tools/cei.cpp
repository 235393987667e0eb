#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cei/errors.hpp"
#include "cei/pipeline.hpp"

namespace {

struct RunFlags {
  std::string manifest, source, target, input, out, report, anchors_file;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  double lambda = 0.5, w1 = 1.0, w2 = 1.0, tau = 0.005, eis_frac = 0.1, grid_range = 0.08;
  int max_steps = 300, patience = 10;
  std::size_t points = 1024, eis_samples = 1000, grid_n = 10;
  bool eis = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool augment) {
  cmd->add_option("--manifest", f.manifest, "Run manifest (JSON)");
  cmd->add_option("--source", f.source, "Source embodiment description");
  cmd->add_option("--target", f.target, "Target embodiment description");
  cmd->add_option("--input", f.input, "Input dataset directory");
  cmd->add_option("--out", f.out, "Output dataset directory");
  cmd->add_option("--report", f.report, "Report path (default <out>.report.json)");
  cmd->add_option("--seed", f.seed, "Global seed");
  cmd->add_option("--workers", f.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--lambda", f.lambda, "Direction weight of the chamfer distance");
  cmd->add_option("--w1", f.w1, "Weight of the chamfer term");
  cmd->add_option("--w2", f.w2, "Weight of the joint-limit penalty");
  cmd->add_option("--max-steps", f.max_steps, "Optimizer steps per frame");
  cmd->add_option("--patience", f.patience, "Non-improving steps before stopping");
  cmd->add_option("--tau", f.tau, "Robot masking distance (m)");
  cmd->add_option("--points", f.points, "Points per synthesized frame");
  cmd->add_flag("--eis", f.eis, "Elite-based initialization of frame 0");
  cmd->add_option("--eis-samples", f.eis_samples, "Candidates drawn for elite initialization");
  cmd->add_option("--eis-frac", f.eis_frac, "Elite fraction");
  if (augment) {
    cmd->add_option("--anchors-file", f.anchors_file, "JSON list of anchor offsets");
    cmd->add_option("--grid-n", f.grid_n, "Grid cells per axis");
    cmd->add_option("--grid-range", f.grid_range, "Grid half-width (m)");
  }
}

bool given(CLI::App* cmd, const char* flag) { return cmd->count(flag) > 0; }

cei::RunManifest build_manifest(CLI::App* cmd, const RunFlags& f, bool augment) {
  cei::RunManifest m;
  if (!f.manifest.empty()) m = cei::load_run_manifest(f.manifest);
  if (given(cmd, "--source")) m.source = cei::EmbodimentSpec{f.source};
  if (given(cmd, "--target")) m.target = cei::EmbodimentSpec{f.target};
  if (given(cmd, "--input")) m.input = f.input;
  if (given(cmd, "--out")) m.output = f.out;
  if (given(cmd, "--report")) m.report = f.report;
  if (given(cmd, "--seed")) m.seed = f.seed;
  if (given(cmd, "--workers")) m.workers = f.workers;
  if (given(cmd, "--lambda")) m.alignment.metric.lambda = f.lambda;
  if (given(cmd, "--w1")) m.alignment.w1 = f.w1;
  if (given(cmd, "--w2")) m.alignment.w2 = f.w2;
  if (given(cmd, "--max-steps")) m.alignment.max_steps = f.max_steps;
  if (given(cmd, "--patience")) m.alignment.patience = f.patience;
  if (given(cmd, "--tau")) m.synthesis.tau = f.tau;
  if (given(cmd, "--points")) m.synthesis.output_size = f.points;
  if (f.eis) m.init.mode = cei::InitMode::eis;
  if (given(cmd, "--eis-samples")) m.init.eis_samples = f.eis_samples;
  if (given(cmd, "--eis-frac")) m.init.eis_fraction = f.eis_frac;
  if (augment) {
    if (given(cmd, "--anchors-file")) m.augment.anchors = cei::load_anchors(f.anchors_file);
    if (given(cmd, "--grid-n")) m.augment.grid_n = f.grid_n;
    if (given(cmd, "--grid-range")) m.augment.grid_range = f.grid_range;
  }
  if (m.input.empty()) throw cei::ValidationError("no input dataset (--input or manifest)");
  if (m.output.empty()) throw cei::ValidationError("no output dataset (--out or manifest)");
  return m;
}

void print_summary(const cei::CommandResult& r) {
  if (r.report.contains("summary")) {
    std::cout << r.report["summary"].dump() << "\n";
  } else {
    std::cout << r.report.dump(2) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-embodiment demonstration retargeting"};
  app.require_subcommand(1);

  RunFlags retarget_flags;
  auto* retarget = app.add_subcommand("retarget", "Retarget a dataset to the target embodiment");
  add_run_flags(retarget, retarget_flags, false);

  RunFlags augment_flags;
  auto* augment = app.add_subcommand("augment", "Spatially augment and retarget a dataset");
  add_run_flags(augment, augment_flags, true);

  std::string validate_dataset, validate_target, validate_report;
  std::size_t validate_points = 1024;
  auto* validate = app.add_subcommand("validate", "Check a dataset's invariants");
  validate->add_option("dataset", validate_dataset, "Dataset directory")->required();
  validate->add_option("--target", validate_target, "Embodiment of the dataset (enables limit checks)");
  validate->add_option("--points", validate_points, "Expected points per frame");
  validate->add_option("--report", validate_report, "Write the report here as well as to stdout");

  std::string inspect_demo, inspect_out, inspect_target, inspect_source, inspect_source_demo;
  std::size_t inspect_frame = 0;
  double inspect_lambda = 0.5;
  auto* inspect = app.add_subcommand("inspect", "Dump one frame as a PLY file");
  inspect->add_option("demo", inspect_demo, "Demo directory")->required();
  inspect->add_option("--frame", inspect_frame, "Frame index");
  inspect->add_option("--out", inspect_out, "Output .ply path")->required();
  inspect->add_option("--target", inspect_target, "Embodiment of the demo");
  inspect->add_option("--source", inspect_source, "Source embodiment");
  inspect->add_option("--source-demo", inspect_source_demo, "Source demo directory");
  inspect->add_option("--lambda", inspect_lambda, "Direction weight used for correspondences");

  std::string ingest_log, ingest_source, ingest_out;
  std::uint64_t ingest_seed = 0;
  auto* ingest = app.add_subcommand("ingest", "Convert a recorded JSON log into a dataset demo");
  ingest->add_option("log", ingest_log, "Recorded log")->required();
  ingest->add_option("--source", ingest_source, "Embodiment that recorded the log")->required();
  ingest->add_option("--out", ingest_out, "Dataset directory")->required();
  ingest->add_option("--seed", ingest_seed, "Seed recorded with the demo");

  CLI11_PARSE(app, argc, argv);

  try {
    cei::CommandResult result;
    if (*retarget) {
      result = cei::cmd_retarget(build_manifest(retarget, retarget_flags, false));
      print_summary(result);
    } else if (*augment) {
      result = cei::cmd_augment(build_manifest(augment, augment_flags, true));
      print_summary(result);
    } else if (*validate) {
      cei::ValidateOptions opt;
      if (!validate_target.empty()) opt.embodiment = validate_target;
      if (!validate_report.empty()) opt.report = validate_report;
      opt.expected_points = validate_points;
      result = cei::cmd_validate(validate_dataset, opt);
      std::cout << result.report.dump(2) << "\n";
    } else if (*inspect) {
      cei::InspectOptions opt;
      opt.demo = inspect_demo;
      opt.frame = inspect_frame;
      opt.out = inspect_out;
      opt.lambda = inspect_lambda;
      if (!inspect_target.empty()) opt.target = cei::EmbodimentSpec{inspect_target};
      if (!inspect_source.empty()) opt.source = cei::EmbodimentSpec{inspect_source};
      if (!inspect_source_demo.empty()) opt.source_demo = inspect_source_demo;
      result = cei::cmd_inspect(opt);
      std::cout << result.report.dump(2) << "\n";
    } else if (*ingest) {
      cei::IngestOptions opt;
      opt.log = ingest_log;
      opt.embodiment = cei::EmbodimentSpec{ingest_source};
      opt.out = ingest_out;
      opt.seed = ingest_seed;
      result = cei::cmd_ingest(opt);
      std::cout << result.report.dump(2) << "\n";
    }
    return result.exit_code;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
}
