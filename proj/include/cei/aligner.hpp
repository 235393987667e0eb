#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "cei/chamfer.hpp"
#include "cei/funcrep.hpp"

namespace cei {

enum class OptimizerKind { plain_gradient, adaptive_moments };

struct AlignmentConfig {
  MetricConfig metric{0.5, 1e-9};
  double w1 = 1.0;  // DCD weight
  double w2 = 1.0;  // joint-limit penalty weight
  int max_steps = 300;
  int patience = 10;
  double step_size = 0.01;
  OptimizerKind optimizer = OptimizerKind::adaptive_moments;
  double improvement_tolerance = 1e-8;
  bool clamp_to_limits = true;
  bool record_trace = false;
};

void validate(const AlignmentConfig& cfg);

/// sum_j max(0, q_j - upper_j)^2 + max(0, lower_j - q_j)^2.
double joint_limit_penalty(const JointConfiguration& q, const Embodiment& e);
Eigen::VectorXd joint_limit_penalty_gradient(const JointConfiguration& q, const Embodiment& e);

/// Loss and gradient at q.
using Objective = std::function<double(const Eigen::VectorXd& q, Eigen::VectorXd& gradient)>;

struct OptimizationResult {
  Eigen::VectorXd best;
  double best_loss = 0.0;
  int steps = 0;
  bool early_stopped = false;
  std::vector<double> best_loss_trace;  // after each step, when recorded
};

/// Gradient iterations with the configured optimizer. Stops after max_steps,
/// or once the best loss has not dropped by more than the tolerance for
/// `patience` consecutive steps. Returns the best iterate seen.
/// Throws NumericalError on a non-finite loss or gradient.
OptimizationResult minimize_with_patience(const Objective& objective, const Eigen::VectorXd& initial,
                                          const AlignmentConfig& cfg);

/// w1 * DCD(source, FK(q)) + w2 * penalty(q) and its analytic gradient.
/// The embodiment, template and source set are captured by reference.
Objective alignment_objective(const Embodiment& target, const FunctionalTemplate& target_template,
                              const WorldFuncRep& source_rep, const AlignmentConfig& cfg);

struct FrameDiagnostics {
  double initial_loss = 0.0;
  double final_loss = 0.0;  // at the returned configuration, epsilon = 0
  double final_dcd = 0.0;
  int steps_used = 0;
  bool early_stopped = false;
  std::vector<double> best_loss_trace;
};

struct FrameAlignment {
  JointConfiguration config;
  FrameDiagnostics diagnostics;
};

/// One frame of w1 * DCD(X_t, FK(q)) + w2 * penalty(q), started at q_init.
FrameAlignment align_frame(const Embodiment& target, const FunctionalTemplate& target_template,
                           const WorldFuncRep& source_rep, const JointConfiguration& q_init,
                           const AlignmentConfig& cfg, std::size_t frame_index = 0);

struct AlignedTrajectory {
  std::vector<JointConfiguration> configs;
  std::vector<FrameDiagnostics> frames;

  std::size_t size() const { return configs.size(); }
};

/// Frame 0 starts at q0; frame t+1 starts at the optimum of frame t.
AlignedTrajectory align_trajectory(const FuncRepTrajectory& source, const Embodiment& target,
                                   const FunctionalTemplate& target_template, const JointConfiguration& q0,
                                   const AlignmentConfig& cfg);

struct EisResult {
  JointConfiguration config;              // mean of the elites
  std::vector<std::size_t> elite_indices;  // into candidates, best first
  std::vector<JointConfiguration> candidates;
  std::vector<double> scores;              // functional similarity per candidate
  std::vector<std::size_t> wide_span_dofs; // elites spread over more than pi
};

/// Elite-based initialization: M uniform samples within limits, ranked by
/// functional similarity against the source frame; returns the mean of the
/// ceil(M * fraction) best.
EisResult eis_initialize(const Embodiment& target, const FunctionalTemplate& target_template,
                         const WorldFuncRep& source_rep, std::size_t samples, double elite_fraction,
                         std::uint64_t seed, const AlignmentConfig& cfg, unsigned workers = 1);

nlohmann::json frame_diagnostics_to_json(const FrameDiagnostics& d);

}  // namespace cei
