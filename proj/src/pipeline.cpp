#include "cei/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include "cei/chamfer.hpp"
#include "cei/dataset_io.hpp"
#include "cei/errors.hpp"
#include "cei/log.hpp"
#include "cei/parallel.hpp"
#include "cei/ply.hpp"
#include "cei/random.hpp"
#include "cei/spatial_aug.hpp"

namespace cei {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute()) return p;
  return base / p;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& err) {
    throw ParseError(path.string() + ": " + err.what());
  }
}

void write_json_file(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << doc.dump(2) << "\n";
}

Vec3 vec3_of(const json& j) { return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()); }

Aabb box_of(const json& j) {
  Aabb box{vec3_of(j.at("min")), vec3_of(j.at("max"))};
  if (!box.valid()) throw ValidationError("box needs min < max on every axis");
  return box;
}

json box_to_json(const Aabb& b) {
  return {{"min", {b.min.x(), b.min.y(), b.min.z()}}, {"max", {b.max.x(), b.max.y(), b.max.z()}}};
}

EmbodimentSpec embodiment_spec_of(const json& j, const fs::path& base) {
  EmbodimentSpec spec;
  if (j.is_string()) {
    spec.description = resolve(base, j.get<std::string>());
    return spec;
  }
  spec.description = resolve(base, j.at("description").get<std::string>());
  if (j.contains("manifest")) spec.manifest = resolve(base, j["manifest"].get<std::string>());
  if (j.contains("template")) {
    const auto& t = j["template"];
    if (t.contains("pad_links")) spec.pad_links = t["pad_links"].get<std::vector<std::string>>();
    spec.template_count = t.value("count", spec.template_count);
    spec.template_seed = t.value("seed", spec.template_seed);
    if (t.contains("variant")) spec.template_options.variant = template_variant_from_string(t["variant"].get<std::string>());
    spec.template_options.drop_fraction = t.value("drop_fraction", spec.template_options.drop_fraction);
    spec.template_options.reduced_radius = t.value("reduced_radius", spec.template_options.reduced_radius);
  }
  return spec;
}

InitMode init_mode_of(const std::string& s) {
  if (s == "mid-range") return InitMode::mid_range;
  if (s == "eis") return InitMode::eis;
  if (s == "source") return InitMode::source;
  if (s == "explicit") return InitMode::explicit_config;
  throw ValidationError("unknown init mode '" + s + "'");
}

std::string to_string(InitMode m) {
  switch (m) {
    case InitMode::mid_range: return "mid-range";
    case InitMode::eis: return "eis";
    case InitMode::source: return "source";
    case InitMode::explicit_config: return "explicit";
  }
  return "unknown";
}

fs::path report_path(const RunManifest& m) {
  if (m.report) return *m.report;
  fs::path out = m.output;
  if (!out.has_filename()) out = out.parent_path();
  return fs::path(out.string() + ".report.json");
}

json alignment_config_json(const RunManifest& m) {
  const auto& a = m.alignment;
  return {{"lambda", a.metric.lambda},
          {"epsilon", a.metric.epsilon},
          {"w1", a.w1},
          {"w2", a.w2},
          {"max_steps", a.max_steps},
          {"patience", a.patience},
          {"step_size", a.step_size},
          {"optimizer", a.optimizer == OptimizerKind::adaptive_moments ? "adaptive-moments" : "plain-gradient"},
          {"tolerance", a.improvement_tolerance},
          {"clamp", a.clamp_to_limits},
          {"tau", m.synthesis.tau},
          {"robot_samples", m.synthesis.robot_samples},
          {"points", m.synthesis.output_size},
          {"init", to_string(m.init.mode)}};
}

// Everything shared by the demos of one run.
struct RunContext {
  const RunManifest& manifest;
  LoadedEmbodiment source;
  LoadedEmbodiment target;
  SynthConfig synth;

  explicit RunContext(const RunManifest& m)
      : manifest(m), source(load_embodiment_spec(m.source)), target(load_embodiment_spec(m.target)), synth(m.synthesis) {
    validate(m.alignment);
    if (m.workspace) {
      synth.workspace = *m.workspace;
    } else if (source.manifest.workspace) {
      synth.workspace = *source.manifest.workspace;
    } else {
      throw ValidationError("no workspace box: set one in the source manifest or the run manifest");
    }
    synth.seed = m.seed;
    validate(synth);
  }
};

struct LoadedDemo {
  std::string id;
  std::optional<Demonstration> demo;
  FuncRepTrajectory reps;
  std::string error;
  double load_s = 0.0;
  double represent_s = 0.0;
};

LoadedDemo load_source_demo(const RunContext& ctx, const fs::path& root, const IndexEntry& entry) {
  LoadedDemo out;
  out.id = entry.id;
  try {
    auto start = Clock::now();
    Demonstration demo = read_demonstration(root / entry.path);
    demo.id = entry.id;
    check_demonstration(demo, ctx.source.embodiment);
    out.load_s = seconds_since(start);
    start = Clock::now();
    std::vector<JointConfiguration> qs;
    qs.reserve(demo.size());
    for (const auto& f : demo.frames) qs.push_back(observed_configuration(ctx.source.embodiment, f));
    out.reps = template_trajectory(ctx.source.embodiment, ctx.source.tmpl, qs);
    out.represent_s = seconds_since(start);
    out.demo = std::move(demo);
  } catch (const std::exception& err) {
    out.error = err.what();
  }
  return out;
}

JointConfiguration initial_configuration(const RunContext& ctx, const Demonstration& demo, const WorldFuncRep& x0,
                                         const std::string& out_id) {
  const auto& target = ctx.target.embodiment;
  const auto& init = ctx.manifest.init;
  switch (init.mode) {
    case InitMode::mid_range:
      return mid_range_configuration(target);
    case InitMode::eis:
      return eis_initialize(target, ctx.target.tmpl, x0, init.eis_samples, init.eis_fraction,
                            derive_demo_seed(ctx.manifest.seed, out_id), ctx.manifest.alignment)
          .config;
    case InitMode::source: {
      JointConfiguration q = observed_configuration(ctx.source.embodiment, demo.frames.front());
      check_configuration(target, q);
      return q;
    }
    case InitMode::explicit_config: {
      JointConfiguration q(Eigen::Map<const Eigen::VectorXd>(init.config.data(), static_cast<Eigen::Index>(init.config.size())));
      check_configuration(target, q);
      return q;
    }
  }
  return mid_range_configuration(target);
}

struct DemoOutcome {
  json report;
  std::optional<IndexEntry> entry;
};

// Aligns one (possibly augmented) representation trajectory and writes the
// synthesized demo to <output>/<out_id>.
DemoOutcome produce_demo(const RunContext& ctx, const LoadedDemo& loaded, const std::string& out_id,
                         const FuncRepTrajectory& reps, const Demonstration& scene_demo) {
  DemoOutcome outcome;
  json& r = outcome.report;
  r["id"] = out_id;
  r["source_id"] = loaded.id;
  json wall = {{"load", loaded.load_s}, {"represent", loaded.represent_s}};
  const auto total_start = Clock::now();
  const fs::path dir = ctx.manifest.output / out_id;
  try {
    auto start = Clock::now();
    const JointConfiguration q0 = initial_configuration(ctx, *loaded.demo, reps.frames.front(), out_id);
    wall["init"] = seconds_since(start);

    start = Clock::now();
    const AlignedTrajectory aligned =
        align_trajectory(reps, ctx.target.embodiment, ctx.target.tmpl, q0, ctx.manifest.alignment);
    wall["align"] = seconds_since(start);

    start = Clock::now();
    // Frame seeds hash the output id, so augmented variants of one demo differ.
    Demonstration scene = scene_demo;
    scene.id = out_id;
    Demonstration out = synthesize_demonstration(scene, ctx.source.embodiment, ctx.target.embodiment,
                                                 aligned.configs, ctx.synth);
    out.initial_state["source_demo"] = loaded.id;
    wall["synthesize"] = seconds_since(start);

    start = Clock::now();
    const std::string checksum = write_demonstration(out, dir);
    wall["write"] = seconds_since(start);

    json frames = json::array();
    std::size_t early = 0, steps = 0;
    for (const auto& f : aligned.frames) {
      frames.push_back(frame_diagnostics_to_json(f));
      early += f.early_stopped ? 1 : 0;
      steps += static_cast<std::size_t>(f.steps_used);
    }
    r["status"] = "ok";
    r["length"] = out.size();
    r["total_steps"] = steps;
    r["early_stopped_frames"] = early;
    r["frames"] = std::move(frames);
    outcome.entry = IndexEntry{out_id, out_id, out.embodiment, out.size(), checksum};
  } catch (const std::exception& err) {
    std::error_code ec;
    fs::remove_all(dir, ec);
    r["status"] = "failed";
    r["error"] = err.what();
  }
  wall["total"] = seconds_since(total_start) + loaded.load_s + loaded.represent_s;
  r["wall_clock_s"] = std::move(wall);
  return outcome;
}

json failed_demo_report(const LoadedDemo& loaded, const std::string& out_id) {
  return {{"id", out_id}, {"source_id", loaded.id}, {"status", "failed"}, {"error", loaded.error}};
}

CommandResult finish_run(const RunManifest& m, const std::string& command, std::vector<DemoOutcome>& outcomes,
                         Clock::time_point start, json extra = json::object()) {
  DatasetIndex index;
  json demos = json::array();
  std::size_t failed = 0, frames = 0;
  json stage_totals = json::object();
  for (auto& o : outcomes) {
    if (o.entry) {
      index.demos.push_back(*o.entry);
      frames += o.entry->length;
    } else {
      ++failed;
    }
    if (o.report.contains("wall_clock_s")) {
      for (const auto& [stage, value] : o.report["wall_clock_s"].items()) {
        stage_totals[stage] = stage_totals.value(stage, 0.0) + value.get<double>();
      }
    }
    demos.push_back(std::move(o.report));
  }
  write_index(index, m.output);

  CommandResult result;
  result.exit_code = failed > 0 ? 1 : 0;
  json& r = result.report;
  r["schema_version"] = kReportSchemaVersion;
  r["command"] = command;
  r["seed"] = m.seed;
  r["workers"] = m.workers;
  r["input"] = m.input.string();
  r["output"] = m.output.string();
  r["config"] = alignment_config_json(m);
  for (const auto& [k, v] : extra.items()) r[k] = v;
  r["demos"] = std::move(demos);
  r["summary"] = {{"demos", outcomes.size()},
                  {"succeeded", outcomes.size() - failed},
                  {"failed", failed},
                  {"frames", frames},
                  {"stage_totals_s", stage_totals},
                  {"wall_clock_s", seconds_since(start)}};
  write_json_file(report_path(m), r);
  return result;
}

std::vector<LoadedDemo> load_inputs(const RunContext& ctx, const DatasetIndex& index) {
  std::vector<LoadedDemo> loaded(index.demos.size());
  parallel_for(index.demos.size(), ctx.manifest.workers,
               [&](std::size_t k) { loaded[k] = load_source_demo(ctx, ctx.manifest.input, index.demos[k]); });
  return loaded;
}

}  // namespace

std::string augmented_demo_id(const std::string& id, std::size_t anchor, std::size_t gx, std::size_t gy) {
  return id + "__a" + std::to_string(anchor) + "_" + std::to_string(gx) + "_" + std::to_string(gy);
}

RunManifest parse_run_manifest(const json& doc, const fs::path& base) {
  RunManifest m;
  try {
    if (doc.contains("source")) m.source = embodiment_spec_of(doc["source"], base);
    if (doc.contains("target")) m.target = embodiment_spec_of(doc["target"], base);
    if (doc.contains("input")) m.input = resolve(base, doc["input"].get<std::string>());
    if (doc.contains("output")) m.output = resolve(base, doc["output"].get<std::string>());
    if (doc.contains("report")) m.report = resolve(base, doc["report"].get<std::string>());
    m.seed = doc.value("seed", m.seed);
    m.workers = doc.value("workers", m.workers);
    if (doc.contains("alignment")) {
      const auto& a = doc["alignment"];
      auto& c = m.alignment;
      c.metric.lambda = a.value("lambda", c.metric.lambda);
      c.metric.epsilon = a.value("epsilon", c.metric.epsilon);
      c.w1 = a.value("w1", c.w1);
      c.w2 = a.value("w2", c.w2);
      c.max_steps = a.value("max_steps", c.max_steps);
      c.patience = a.value("patience", c.patience);
      c.step_size = a.value("step_size", c.step_size);
      c.improvement_tolerance = a.value("tolerance", c.improvement_tolerance);
      c.clamp_to_limits = a.value("clamp", c.clamp_to_limits);
      if (a.contains("optimizer")) {
        const auto name = a["optimizer"].get<std::string>();
        if (name == "adaptive-moments") c.optimizer = OptimizerKind::adaptive_moments;
        else if (name == "plain-gradient") c.optimizer = OptimizerKind::plain_gradient;
        else throw ValidationError("unknown optimizer '" + name + "'");
      }
    }
    if (doc.contains("synthesis")) {
      const auto& s = doc["synthesis"];
      m.synthesis.tau = s.value("tau", m.synthesis.tau);
      m.synthesis.robot_samples = s.value("robot_samples", m.synthesis.robot_samples);
      m.synthesis.output_size = s.value("points", m.synthesis.output_size);
      if (s.contains("workspace")) m.workspace = box_of(s["workspace"]);
    }
    if (doc.contains("init")) {
      const auto& i = doc["init"];
      if (i.contains("mode")) m.init.mode = init_mode_of(i["mode"].get<std::string>());
      m.init.eis_samples = i.value("samples", m.init.eis_samples);
      m.init.eis_fraction = i.value("fraction", m.init.eis_fraction);
      if (i.contains("config")) m.init.config = i["config"].get<std::vector<double>>();
    }
    if (doc.contains("augment")) {
      const auto& a = doc["augment"];
      if (a.contains("anchors")) {
        m.augment.anchors.clear();
        for (const auto& v : a["anchors"]) m.augment.anchors.push_back(vec3_of(v));
      }
      m.augment.grid_n = a.value("grid_n", m.augment.grid_n);
      m.augment.grid_range = a.value("grid_range", m.augment.grid_range);
      m.augment.knee = a.value("knee", m.augment.knee);
      if (a.contains("object_box")) m.augment.object_box = box_of(a["object_box"]);
    }
  } catch (const json::exception& err) {
    throw ParseError(std::string("run manifest: ") + err.what());
  }
  return m;
}

RunManifest load_run_manifest(const fs::path& path) {
  return parse_run_manifest(read_json_file(path), path.parent_path());
}

std::vector<Vec3> load_anchors(const fs::path& path) {
  const json doc = read_json_file(path);
  const json& list = doc.is_object() ? doc.at("anchors") : doc;
  std::vector<Vec3> anchors;
  try {
    for (const auto& v : list) anchors.push_back(vec3_of(v));
  } catch (const json::exception& err) {
    throw ParseError(path.string() + ": " + err.what());
  }
  if (anchors.empty()) throw ValidationError(path.string() + ": no anchors");
  return anchors;
}

LoadedEmbodiment load_embodiment_spec(const EmbodimentSpec& spec) {
  if (spec.description.empty()) throw ValidationError("embodiment description path is missing");
  std::optional<fs::path> manifest_path = spec.manifest;
  if (!manifest_path) {
    fs::path sidecar = spec.description;
    sidecar.replace_extension(".manifest.json");
    if (fs::exists(sidecar)) manifest_path = sidecar;
  }
  LoadedEmbodiment out;
  out.embodiment = load_embodiment(spec.description);
  if (manifest_path) {
    out.manifest = load_manifest(*manifest_path);
    apply_manifest(out.embodiment, out.manifest);
  }
  const auto pads = spec.pad_links ? *spec.pad_links : out.manifest.pad_links;
  if (pads.empty()) throw ValidationError("embodiment '" + out.embodiment.name + "' declares no pad links");
  out.tmpl = build_template(out.embodiment, pads, spec.template_count, spec.template_seed, spec.template_options);
  return out;
}

CommandResult cmd_retarget(const RunManifest& m) {
  const auto start = Clock::now();
  const RunContext ctx(m);
  const DatasetIndex index = read_index(m.input);
  if (index.demos.empty()) warn("input dataset '" + m.input.string() + "' has no demonstrations");
  fs::create_directories(m.output);

  const auto loaded = load_inputs(ctx, index);
  std::vector<DemoOutcome> outcomes(loaded.size());
  parallel_for(loaded.size(), m.workers, [&](std::size_t k) {
    const auto& l = loaded[k];
    if (!l.demo) {
      outcomes[k].report = failed_demo_report(l, l.id);
      return;
    }
    outcomes[k] = produce_demo(ctx, l, l.id, l.reps, *l.demo);
  });
  return finish_run(m, "retarget", outcomes, start);
}

CommandResult cmd_augment(const RunManifest& m) {
  const auto start = Clock::now();
  const RunContext ctx(m);
  const DatasetIndex index = read_index(m.input);
  if (index.demos.empty()) warn("input dataset '" + m.input.string() + "' has no demonstrations");
  if (!m.augment.object_box) warn("no object box given: scene clouds are not transformed");
  fs::create_directories(m.output);

  const auto transforms = grid_transforms(m.augment.anchors, m.augment.grid_n, m.augment.grid_range);
  const AugmentationSchedule schedule{m.augment.knee};
  const auto loaded = load_inputs(ctx, index);
  const std::size_t per_demo = transforms.size();
  std::vector<DemoOutcome> outcomes(loaded.size() * per_demo);
  parallel_for(outcomes.size(), m.workers, [&](std::size_t job) {
    const auto& l = loaded[job / per_demo];
    const auto& g = transforms[job % per_demo];
    const std::string out_id = augmented_demo_id(l.id, g.anchor, g.gx, g.gy);
    if (!l.demo) {
      outcomes[job].report = failed_demo_report(l, out_id);
      return;
    }
    FuncRepTrajectory reps;
    Demonstration scene = *l.demo;
    try {
      reps = augment_rep_trajectory(l.reps, g.transform, schedule);
      if (m.augment.object_box) {
        for (std::size_t t = 0; t < scene.size(); ++t) {
          auto& cloud = scene.frames[t].observation.cloud;
          std::vector<bool> mask(cloud.size());
          for (std::size_t i = 0; i < cloud.size(); ++i) mask[i] = m.augment.object_box->contains(cloud.points[i]);
          cloud = augment_scene_cloud(cloud, mask, g.transform, clipped_growth(t, scene.size(), schedule.knee));
        }
      }
    } catch (const std::exception& err) {
      LoadedDemo failed = l;
      failed.error = err.what();
      outcomes[job].report = failed_demo_report(failed, out_id);
      return;
    }
    outcomes[job] = produce_demo(ctx, l, out_id, reps, scene);
    outcomes[job].report["anchor"] = g.anchor;
    outcomes[job].report["grid"] = {g.gx, g.gy};
  });
  write_json_file(m.output / "transforms.json", transforms_to_json(transforms));
  json extra = {{"augment",
                 {{"anchors", m.augment.anchors.size()},
                  {"grid_n", m.augment.grid_n},
                  {"grid_range", m.augment.grid_range},
                  {"knee", m.augment.knee},
                  {"object_box", m.augment.object_box ? box_to_json(*m.augment.object_box) : json(nullptr)}}}};
  return finish_run(m, "augment", outcomes, start, extra);
}

CommandResult cmd_validate(const fs::path& dataset, const ValidateOptions& options) {
  CommandResult result;
  json findings = json::array();
  auto finding = [&](const std::string& demo, const std::string& check, const std::string& message,
                     json extra = json::object()) {
    json f = {{"demo", demo}, {"check", check}, {"message", message}};
    for (const auto& [k, v] : extra.items()) f[k] = v;
    findings.push_back(std::move(f));
  };

  std::optional<Embodiment> e;
  if (options.embodiment) {
    e = load_embodiment(*options.embodiment);
    std::optional<fs::path> manifest = options.embodiment_manifest;
    if (!manifest) {
      fs::path sidecar = *options.embodiment;
      sidecar.replace_extension(".manifest.json");
      if (fs::exists(sidecar)) manifest = sidecar;
    }
    if (manifest) apply_manifest(*e, load_manifest(*manifest));
  }

  std::size_t checked = 0;
  try {
    const DatasetIndex index = read_index(dataset);
    for (const auto& entry : index.demos) {
      ++checked;
      Demonstration demo;
      try {
        demo = read_demonstration(dataset / entry.path);
      } catch (const DatasetError& err) {
        finding(entry.id, to_string(err.kind()), err.what());
        continue;
      } catch (const std::exception& err) {
        finding(entry.id, "io", err.what());
        continue;
      }
      if (demo.size() != entry.length) {
        finding(entry.id, "length", "index length " + std::to_string(entry.length) + " != " + std::to_string(demo.size()));
      }
      if (!entry.checksum.empty()) {
        const std::string frames = encode_frames(demo);
        const std::string actual = format_checksum(fnv1a64(frames.data(), frames.size()));
        if (actual != entry.checksum) finding(entry.id, "checksum", "index checksum " + entry.checksum + " != " + actual);
      }
      for (std::size_t t = 0; t < demo.size(); ++t) {
        const auto& f = demo.frames[t];
        if (f.observation.cloud.size() != options.expected_points) {
          finding(entry.id, "point count",
                  "frame " + std::to_string(t) + " has " + std::to_string(f.observation.cloud.size()) + " points",
                  {{"frame", t}});
        }
      }
      if (!e) continue;
      if (demo.embodiment != e->name) {
        finding(entry.id, "embodiment", "demo is for '" + demo.embodiment + "', checked against '" + e->name + "'");
      }
      try {
        check_demonstration(demo, *e);
      } catch (const std::exception& err) {
        finding(entry.id, "dof split", err.what());
        continue;
      }
      for (std::size_t t = 0; t < demo.size(); ++t) {
        const auto& f = demo.frames[t];
        const JointConfiguration q = observed_configuration(*e, f);
        const JointConfiguration a = join_configuration(*e, f.action.arm, f.action.ee);
        for (std::size_t d = 0; d < e->dof(); ++d) {
          const auto& spec = e->dof_spec(d);
          // Values went through float32 on disk, so limits are compared at float32 too.
          const double lo = static_cast<float>(spec.lower), hi = static_cast<float>(spec.upper);
          for (const auto& [what, v] : {std::pair{"proprioception", q[d]}, std::pair{"action", a[d]}}) {
            if (v < lo || v > hi) {
              finding(entry.id, "joint limits",
                      std::string(what) + " of joint '" + spec.name + "' at frame " + std::to_string(t) + " is " +
                          std::to_string(v) + ", limits [" + std::to_string(spec.lower) + ", " +
                          std::to_string(spec.upper) + "]",
                      {{"frame", t}, {"joint", spec.name}});
            }
          }
        }
      }
    }
  } catch (const DatasetError& err) {
    finding("", to_string(err.kind()), err.what());
  }

  result.exit_code = findings.empty() ? 0 : 1;
  result.report = {{"schema_version", kReportSchemaVersion},
                   {"command", "validate"},
                   {"dataset", dataset.string()},
                   {"demos_checked", checked},
                   {"limits_checked", e.has_value()},
                   {"passed", findings.empty()},
                   {"findings", findings}};
  if (options.report) write_json_file(*options.report, result.report);
  return result;
}

CommandResult cmd_inspect(const InspectOptions& options) {
  const Demonstration demo = read_demonstration(options.demo);
  if (options.frame >= demo.size()) {
    throw ValidationError("frame " + std::to_string(options.frame) + " out of range: demo '" + demo.id + "' has " +
                          std::to_string(demo.size()) + " frames");
  }
  const auto& frame = demo.frames[options.frame];
  GeometryDump dump;
  for (std::size_t i = 0; i < frame.observation.cloud.size(); ++i) {
    const DumpKind kind = frame.observation.cloud.tags[i] == PointTag::robot ? DumpKind::robot : DumpKind::scene;
    dump.vertices.push_back({frame.observation.cloud.points[i], Vec3::Zero(), kind});
  }
  auto add_rep = [&](const WorldFuncRep& rep, DumpKind kind) {
    const std::size_t first = dump.vertices.size();
    for (std::size_t i = 0; i < rep.size(); ++i) {
      const auto c = static_cast<Eigen::Index>(i);
      dump.vertices.push_back({rep.points.col(c), rep.directions.col(c), kind});
    }
    return first;
  };

  json r = {{"schema_version", kReportSchemaVersion}, {"command", "inspect"}, {"demo", demo.id},
            {"frame", options.frame}, {"cloud_points", frame.observation.cloud.size()}};
  std::optional<WorldFuncRep> source_rep, target_rep;
  if (options.source && options.source_demo) {
    const LoadedEmbodiment src = load_embodiment_spec(*options.source);
    const Demonstration sd = read_demonstration(*options.source_demo);
    if (options.frame >= sd.size()) throw ValidationError("frame out of range in the source demo");
    source_rep = eval_template(src.embodiment, src.tmpl, observed_configuration(src.embodiment, sd.frames[options.frame]));
  }
  if (options.target) {
    const LoadedEmbodiment tgt = load_embodiment_spec(*options.target);
    check_demonstration(demo, tgt.embodiment);
    target_rep = eval_template(tgt.embodiment, tgt.tmpl, observed_configuration(tgt.embodiment, frame));
  }
  std::size_t source_first = 0, target_first = 0;
  if (source_rep) source_first = add_rep(*source_rep, DumpKind::source_rep);
  if (target_rep) target_first = add_rep(*target_rep, DumpKind::target_rep);
  if (source_rep && target_rep) {
    const DcdResult matches = dcd_with_matches(*source_rep, *target_rep, MetricConfig{options.lambda, 0.0});
    for (std::size_t i = 0; i < matches.forward.size(); ++i) {
      dump.edges.emplace_back(source_first + i, target_first + matches.forward[i]);
    }
    r["dcd"] = matches.value;
  }
  write_ply(dump, options.out);
  r["source_rep_points"] = source_rep ? source_rep->size() : 0;
  r["target_rep_points"] = target_rep ? target_rep->size() : 0;
  r["edges"] = dump.edges.size();
  r["output"] = options.out.string();
  return {0, r};
}

CommandResult cmd_ingest(const IngestOptions& options) {
  const LoadedEmbodiment e = load_embodiment_spec(options.embodiment);
  std::optional<Aabb> box = options.workspace ? options.workspace : e.manifest.workspace;
  if (!box) throw ValidationError("no workspace box for ingestion");
  ScopedWarningCapture warnings;
  Demonstration demo = ingest_recorded_log(options.log, e.embodiment, *box);
  demo.seed = options.seed;
  for (const auto& w : warnings.messages()) std::cerr << "warning: " << w << "\n";

  DatasetIndex index;
  if (fs::exists(options.out / kIndexFile)) index = read_index(options.out);
  const std::string checksum = write_demonstration(demo, options.out / demo.id);
  IndexEntry entry{demo.id, demo.id, demo.embodiment, demo.size(), checksum};
  if (auto k = find_demo(index, demo.id)) {
    index.demos[*k] = entry;
  } else {
    index.demos.push_back(entry);
  }
  write_index(index, options.out);
  return {0,
          {{"schema_version", kReportSchemaVersion},
           {"command", "ingest"},
           {"demo", demo.id},
           {"length", demo.size()},
           {"warnings", warnings.messages()},
           {"checksum", checksum}}};
}

}  // namespace cei
