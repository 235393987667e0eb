#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cei/kinematics.hpp"

namespace cei {

enum class TemplateVariant { standard, reduced, random_dropped };

std::string to_string(TemplateVariant v);
TemplateVariant template_variant_from_string(const std::string& s);

struct TemplateOptions {
  TemplateVariant variant = TemplateVariant::standard;
  double drop_fraction = 0.5;     // random_dropped
  double reduced_radius = 0.01;   // reduced, meters from the pad centroid
};

struct TemplateProvenance {
  std::vector<std::string> pad_links;
  std::size_t count_per_link = 0;
  std::uint64_t seed = 0;
  TemplateOptions options;
};

/// Point-direction pairs on an embodiment's contact pads, in link frames.
struct FunctionalTemplate {
  std::vector<AttachedPoint> entries;
  TemplateProvenance source;

  std::size_t size() const { return entries.size(); }
};

inline constexpr std::size_t kDefaultPadSamples = 64;

/// Samples `count_per_link` pairs per pad link. The reduced and random-dropped
/// variants are subsets of the standard sample drawn with the same seed.
FunctionalTemplate build_template(const Embodiment& e, const std::vector<std::string>& pad_links,
                                  std::size_t count_per_link, std::uint64_t seed, const TemplateOptions& options = {});

WorldFuncRep eval_template(const Embodiment& e, const FunctionalTemplate& tmpl, const JointConfiguration& q);

/// Frames of a functional-representation trajectory; all share one size.
struct FuncRepTrajectory {
  std::vector<WorldFuncRep> frames;

  std::size_t size() const { return frames.size(); }
};

FuncRepTrajectory template_trajectory(const Embodiment& e, const FunctionalTemplate& tmpl,
                                      const std::vector<JointConfiguration>& trajectory, unsigned workers = 1);

nlohmann::json template_to_json(const Embodiment& e, const FunctionalTemplate& tmpl);
/// Link names are resolved against `e`; throws ValidationError on unknown links.
FunctionalTemplate template_from_json(const Embodiment& e, const nlohmann::json& doc);

}  // namespace cei
