#include "cei/funcrep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cei/errors.hpp"
#include "cei/parallel.hpp"
#include "cei/random.hpp"

namespace cei {

std::string to_string(TemplateVariant v) {
  switch (v) {
    case TemplateVariant::standard: return "standard";
    case TemplateVariant::reduced: return "reduced";
    case TemplateVariant::random_dropped: return "random-dropped";
  }
  return "standard";
}

TemplateVariant template_variant_from_string(const std::string& s) {
  if (s == "standard") return TemplateVariant::standard;
  if (s == "reduced") return TemplateVariant::reduced;
  if (s == "random-dropped") return TemplateVariant::random_dropped;
  throw ValidationError("unknown template variant '" + s + "'");
}

FunctionalTemplate build_template(const Embodiment& e, const std::vector<std::string>& pad_links,
                                  std::size_t count_per_link, std::uint64_t seed, const TemplateOptions& options) {
  if (pad_links.empty()) throw ValidationError("functional template needs at least one pad link");
  if (count_per_link == 0) throw ValidationError("functional template needs a positive count per link");

  FunctionalTemplate tmpl;
  tmpl.source = {pad_links, count_per_link, seed, options};
  for (std::size_t k = 0; k < pad_links.size(); ++k) {
    const std::size_t link = e.link_index(pad_links[k]);
    const auto samples = sample_link_surface(e, pad_links[k], count_per_link, combine_seed(seed, k));
    Vec3 centroid = Vec3::Zero();
    if (options.variant == TemplateVariant::reduced) {
      centroid = triangulate_geometry(*e.links[link].geometry).centroid;
    }
    for (const auto& s : samples) {
      if (options.variant == TemplateVariant::reduced && (s.point - centroid).norm() > options.reduced_radius) continue;
      tmpl.entries.push_back({link, s.point, s.normal});
    }
  }

  if (options.variant == TemplateVariant::random_dropped) {
    if (!(options.drop_fraction >= 0.0 && options.drop_fraction < 1.0)) {
      throw ValidationError("drop fraction must lie in [0, 1)");
    }
    const std::size_t n = tmpl.entries.size();
    const auto drop = static_cast<std::size_t>(std::llround(options.drop_fraction * static_cast<double>(n)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(combine_seed(seed, 0xD809ULL));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    std::vector<bool> dropped(n, false);
    for (std::size_t i = 0; i < drop; ++i) dropped[order[i]] = true;
    std::vector<AttachedPoint> kept;
    for (std::size_t i = 0; i < n; ++i) {
      if (!dropped[i]) kept.push_back(tmpl.entries[i]);
    }
    tmpl.entries = std::move(kept);
  }
  if (tmpl.entries.empty()) throw ValidationError("functional template is empty after variant selection");
  return tmpl;
}

WorldFuncRep eval_template(const Embodiment& e, const FunctionalTemplate& tmpl, const JointConfiguration& q) {
  return evaluate_world_set(e, q, tmpl.entries);
}

FuncRepTrajectory template_trajectory(const Embodiment& e, const FunctionalTemplate& tmpl,
                                      const std::vector<JointConfiguration>& trajectory, unsigned workers) {
  if (trajectory.empty()) throw ValidationError("cannot evaluate a template along an empty trajectory");
  FuncRepTrajectory out;
  out.frames.resize(trajectory.size());
  parallel_for(trajectory.size(), workers,
               [&](std::size_t t) { out.frames[t] = eval_template(e, tmpl, trajectory[t]); });
  return out;
}

nlohmann::json template_to_json(const Embodiment& e, const FunctionalTemplate& tmpl) {
  nlohmann::ordered_json doc;
  doc["format"] = "cei-template";
  doc["version"] = 1;
  doc["embodiment"] = e.name;
  doc["provenance"] = {{"pad_links", tmpl.source.pad_links},
                       {"count_per_link", tmpl.source.count_per_link},
                       {"seed", tmpl.source.seed},
                       {"variant", to_string(tmpl.source.options.variant)},
                       {"drop_fraction", tmpl.source.options.drop_fraction},
                       {"reduced_radius", tmpl.source.options.reduced_radius}};
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& a : tmpl.entries) {
    entries.push_back({{"link", e.links[a.link].name},
                       {"point", {a.point.x(), a.point.y(), a.point.z()}},
                       {"normal", {a.normal.x(), a.normal.y(), a.normal.z()}}});
  }
  doc["entries"] = std::move(entries);
  return nlohmann::json(doc);
}

FunctionalTemplate template_from_json(const Embodiment& e, const nlohmann::json& doc) {
  FunctionalTemplate tmpl;
  try {
    const auto& prov = doc.at("provenance");
    tmpl.source.pad_links = prov.at("pad_links").get<std::vector<std::string>>();
    tmpl.source.count_per_link = prov.at("count_per_link").get<std::size_t>();
    tmpl.source.seed = prov.at("seed").get<std::uint64_t>();
    tmpl.source.options.variant = template_variant_from_string(prov.at("variant").get<std::string>());
    tmpl.source.options.drop_fraction = prov.value("drop_fraction", 0.5);
    tmpl.source.options.reduced_radius = prov.value("reduced_radius", 0.01);
    for (const auto& entry : doc.at("entries")) {
      const auto p = entry.at("point").get<std::vector<double>>();
      const auto n = entry.at("normal").get<std::vector<double>>();
      if (p.size() != 3 || n.size() != 3) throw ParseError("template entry needs 3-vectors");
      const Vec3 normal(n[0], n[1], n[2]);
      if (std::abs(normal.norm() - 1.0) > 1e-9) throw ValidationError("template normal is not unit length");
      tmpl.entries.push_back({e.link_index(entry.at("link").get<std::string>()), Vec3(p[0], p[1], p[2]), normal});
    }
  } catch (const nlohmann::json::exception& err) {
    throw ParseError(std::string("template JSON: ") + err.what());
  }
  if (tmpl.entries.empty()) throw ValidationError("template JSON has no entries");
  return tmpl;
}

}  // namespace cei
