#pragma once

#include <cstddef>
#include <vector>

#include "cei/kinematics.hpp"

namespace cei {

/// lambda weights the directional term (meters per unit cosine); epsilon
/// smooths the norm as sqrt(d^2 + eps^2) - eps.
struct MetricConfig {
  double lambda = 0.5;
  double epsilon = 0.0;
};

void validate(const MetricConfig& cfg);

enum class MatchStrategy { automatic, brute_force, grid };

/// Reference sets up to this size are matched by exhaustive search.
inline constexpr std::size_t kBruteForceMatchLimit = 512;

/// sqrt(|a - b|^2 + eps^2) - eps; the plain Euclidean norm when eps == 0.
double smoothed_distance(const Vec3& a, const Vec3& b, double epsilon);

/// Cost of matching (p, n) to (q, m): smoothed |p - q| - lambda <n, m>.
double pair_cost(const Vec3& p, const Vec3& n, const Vec3& q, const Vec3& m, const MetricConfig& cfg);

/// For every pair of `from`, the pair of `to` with minimal combined cost
/// (lowest index on ties) and that cost.
struct DirectionalMatches {
  std::vector<std::size_t> index;
  std::vector<double> cost;
};

DirectionalMatches match_directional(const WorldFuncRep& from, const WorldFuncRep& to, const MetricConfig& cfg,
                                     MatchStrategy strategy = MatchStrategy::automatic);

/// Directional Chamfer Distance with the argmin correspondences:
/// forward[i] matches x_i into x', backward[j] matches x'_j into x.
struct DcdResult {
  double value = 0.0;
  std::vector<std::size_t> forward;
  std::vector<std::size_t> backward;
};

DcdResult dcd_with_matches(const WorldFuncRep& x, const WorldFuncRep& x_prime, const MetricConfig& cfg,
                           MatchStrategy strategy = MatchStrategy::automatic);
double dcd(const WorldFuncRep& x, const WorldFuncRep& x_prime, const MetricConfig& cfg);
/// -dcd(x, x', cfg).
double functional_similarity(const WorldFuncRep& x, const WorldFuncRep& x_prime, const MetricConfig& cfg);

/// dcd value and its gradient with respect to the points and (ambient)
/// directions of x', with correspondences held fixed.
struct DcdGradient {
  double value = 0.0;
  GradientCotangent cotangent;
};

DcdGradient dcd_cotangent(const WorldFuncRep& x, const WorldFuncRep& x_prime, const MetricConfig& cfg);

}  // namespace cei
