#include "cei/chamfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cei/errors.hpp"
#include "cei/spatial_index.hpp"

namespace cei {

void validate(const MetricConfig& cfg) {
  if (!(cfg.lambda >= 0.0) || !std::isfinite(cfg.lambda)) throw ValidationError("metric lambda must be >= 0");
  if (!(cfg.epsilon >= 0.0) || !std::isfinite(cfg.epsilon)) throw ValidationError("metric epsilon must be >= 0");
}

double smoothed_distance(const Vec3& a, const Vec3& b, double epsilon) {
  return std::sqrt((a - b).squaredNorm() + epsilon * epsilon) - epsilon;
}

double pair_cost(const Vec3& p, const Vec3& n, const Vec3& q, const Vec3& m, const MetricConfig& cfg) {
  return smoothed_distance(p, q, cfg.epsilon) - cfg.lambda * n.dot(m);
}

namespace {

void check_sets(const WorldFuncRep& a, const WorldFuncRep& b) {
  for (const auto* s : {&a, &b}) {
    if (s->size() == 0) throw DimensionError("directional chamfer distance needs non-empty sets");
    if (s->directions.cols() != s->points.cols()) throw DimensionError("point and direction counts differ");
  }
}

void match_brute_force(const WorldFuncRep& from, const WorldFuncRep& to, const MetricConfig& cfg,
                       DirectionalMatches& out) {
  const Eigen::Index m = to.points.cols();
  for (Eigen::Index i = 0; i < from.points.cols(); ++i) {
    const Vec3 p = from.points.col(i), n = from.directions.col(i);
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index best_j = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double c = pair_cost(p, n, to.points.col(j), to.directions.col(j), cfg);
      if (c < best) {
        best = c;
        best_j = j;
      }
    }
    out.index[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best_j);
    out.cost[static_cast<std::size_t>(i)] = best;
  }
}

// Shell search over a sparse grid: after finishing Chebyshev ring r around the
// query cell, every unvisited point is at least r * h away, so its cost is at
// least smoothed(r * h) - lambda. Per-pair arithmetic is shared with the brute
// force path, so both select the same (cost, index) minimum.
void match_grid(const WorldFuncRep& from, const WorldFuncRep& to, const MetricConfig& cfg, DirectionalMatches& out) {
  const Eigen::Index m = to.points.cols();
  std::vector<Vec3> ref(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) ref[static_cast<std::size_t>(j)] = to.points.col(j);
  const Vec3 lo = to.points.rowwise().minCoeff(), hi = to.points.rowwise().maxCoeff();
  const double extent = (hi - lo).maxCoeff();
  double h = extent > 0.0 ? extent / std::cbrt(static_cast<double>(m)) : 1.0;
  h = std::max(h, 1e-9);
  const SparseGrid grid(ref, h);
  const auto& gmin = grid.min_cell();
  const auto& gmax = grid.max_cell();
  constexpr double kMargin = 1e-9;

  for (Eigen::Index i = 0; i < from.points.cols(); ++i) {
    const Vec3 p = from.points.col(i), n = from.directions.col(i);
    const auto c = grid.cell_of(p);
    std::int64_t r_start = 0, r_end = 0;
    for (int a = 0; a < 3; ++a) {
      r_start = std::max(r_start, std::max(gmin[a] - c[a], c[a] - gmax[a]));
      r_end = std::max(r_end, std::max(std::abs(gmin[a] - c[a]), std::abs(gmax[a] - c[a])));
    }
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    auto visit = [&](const SparseGrid::Cell& cell) {
      for (auto j : grid.bucket(cell)) {
        const double cost = pair_cost(p, n, ref[j], to.directions.col(j), cfg);
        if (cost < best || (cost == best && j < best_j)) {
          best = cost;
          best_j = j;
        }
      }
    };
    for (std::int64_t r = r_start; r <= r_end; ++r) {
      const std::int64_t x0 = std::max(gmin[0], c[0] - r), x1 = std::min(gmax[0], c[0] + r);
      const std::int64_t y0 = std::max(gmin[1], c[1] - r), y1 = std::min(gmax[1], c[1] + r);
      const std::int64_t z0 = std::max(gmin[2], c[2] - r), z1 = std::min(gmax[2], c[2] + r);
      for (std::int64_t x = x0; x <= x1; ++x) {
        for (std::int64_t y = y0; y <= y1; ++y) {
          if (std::abs(x - c[0]) == r || std::abs(y - c[1]) == r) {
            for (std::int64_t z = z0; z <= z1; ++z) visit({x, y, z});
          } else {
            if (c[2] - r >= z0) visit({x, y, c[2] - r});
            if (r > 0 && c[2] + r <= z1) visit({x, y, c[2] + r});
          }
        }
      }
      const double bound = std::sqrt(std::pow(static_cast<double>(r) * h, 2) + cfg.epsilon * cfg.epsilon) -
                           cfg.epsilon - cfg.lambda;
      if (best < bound - kMargin) break;
    }
    out.index[static_cast<std::size_t>(i)] = best_j;
    out.cost[static_cast<std::size_t>(i)] = best;
  }
}

double mean(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

DirectionalMatches match_directional(const WorldFuncRep& from, const WorldFuncRep& to, const MetricConfig& cfg,
                                     MatchStrategy strategy) {
  check_sets(from, to);
  DirectionalMatches out;
  out.index.resize(from.size());
  out.cost.resize(from.size());
  if (strategy == MatchStrategy::automatic) {
    strategy = to.size() <= kBruteForceMatchLimit ? MatchStrategy::brute_force : MatchStrategy::grid;
  }
  if (strategy == MatchStrategy::brute_force) {
    match_brute_force(from, to, cfg, out);
  } else {
    match_grid(from, to, cfg, out);
  }
  return out;
}

DcdResult dcd_with_matches(const WorldFuncRep& x, const WorldFuncRep& x_prime, const MetricConfig& cfg,
                           MatchStrategy strategy) {
  validate(cfg);
  DirectionalMatches fwd = match_directional(x, x_prime, cfg, strategy);
  DirectionalMatches bwd = match_directional(x_prime, x, cfg, strategy);
  DcdResult out;
  out.value = mean(fwd.cost) + mean(bwd.cost);
  out.forward = std::move(fwd.index);
  out.backward = std::move(bwd.index);
  return out;
}

double dcd(const WorldFuncRep& x, const WorldFuncRep& x_prime, const MetricConfig& cfg) {
  return dcd_with_matches(x, x_prime, cfg).value;
}

double functional_similarity(const WorldFuncRep& x, const WorldFuncRep& x_prime, const MetricConfig& cfg) {
  return -dcd(x, x_prime, cfg);
}

DcdGradient dcd_cotangent(const WorldFuncRep& x, const WorldFuncRep& x_prime, const MetricConfig& cfg) {
  const DcdResult matches = dcd_with_matches(x, x_prime, cfg);
  DcdGradient out{matches.value, GradientCotangent::zeros(x_prime.size())};
  const double wf = 1.0 / static_cast<double>(x.size());
  const double wb = 1.0 / static_cast<double>(x_prime.size());
  auto accumulate = [&](Eigen::Index i, Eigen::Index j, double weight) {
    const Vec3 diff = x_prime.points.col(j) - x.points.col(i);
    const double r = std::sqrt(diff.squaredNorm() + cfg.epsilon * cfg.epsilon);
    if (r > 0.0) out.cotangent.d_points.col(j) += weight * diff / r;
    out.cotangent.d_directions.col(j) -= weight * cfg.lambda * x.directions.col(i);
  };
  for (std::size_t i = 0; i < matches.forward.size(); ++i) {
    accumulate(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(matches.forward[i]), wf);
  }
  for (std::size_t j = 0; j < matches.backward.size(); ++j) {
    accumulate(static_cast<Eigen::Index>(matches.backward[j]), static_cast<Eigen::Index>(j), wb);
  }
  return out;
}

}  // namespace cei
