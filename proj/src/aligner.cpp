#include "cei/aligner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "cei/errors.hpp"
#include "cei/parallel.hpp"
#include "cei/random.hpp"

namespace cei {

void validate(const AlignmentConfig& cfg) {
  validate(cfg.metric);
  if (!(cfg.w1 >= 0.0) || !(cfg.w2 >= 0.0)) throw ValidationError("alignment weights must be >= 0");
  if (cfg.max_steps < 1) throw ValidationError("max steps must be >= 1");
  if (cfg.patience < 1) throw ValidationError("patience must be >= 1");
  if (!(cfg.step_size > 0.0)) throw ValidationError("step size must be positive");
  if (!(cfg.improvement_tolerance >= 0.0)) throw ValidationError("improvement tolerance must be >= 0");
}

double joint_limit_penalty(const JointConfiguration& q, const Embodiment& e) {
  check_configuration(e, q);
  double total = 0.0;
  for (std::size_t d = 0; d < e.dof(); ++d) {
    const auto& j = e.dof_spec(d);
    const double over = std::max(0.0, q[d] - j.upper);
    const double under = std::max(0.0, j.lower - q[d]);
    total += over * over + under * under;
  }
  return total;
}

Eigen::VectorXd joint_limit_penalty_gradient(const JointConfiguration& q, const Embodiment& e) {
  check_configuration(e, q);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(e.dof()));
  for (std::size_t d = 0; d < e.dof(); ++d) {
    const auto& j = e.dof_spec(d);
    const auto k = static_cast<Eigen::Index>(d);
    if (q[d] > j.upper) g[k] = 2.0 * (q[d] - j.upper);
    if (q[d] < j.lower) g[k] = -2.0 * (j.lower - q[d]);
  }
  return g;
}

OptimizationResult minimize_with_patience(const Objective& objective, const Eigen::VectorXd& initial,
                                          const AlignmentConfig& cfg) {
  validate(cfg);
  constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  auto evaluate = [&](const Eigen::VectorXd& q, Eigen::VectorXd& g, int step) {
    const double loss = objective(q, g);
    if (!std::isfinite(loss) || !g.allFinite()) {
      throw NumericalError("non-finite loss or gradient at step " + std::to_string(step));
    }
    return loss;
  };

  OptimizationResult result;
  Eigen::VectorXd q = initial;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(q.size());
  double loss = evaluate(q, grad, 0);
  result.best = q;
  result.best_loss = loss;

  Eigen::VectorXd m = Eigen::VectorXd::Zero(q.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(q.size());
  double beta1_power = 1.0, beta2_power = 1.0;
  int stalled = 0;
  for (int step = 1; step <= cfg.max_steps; ++step) {
    if (cfg.optimizer == OptimizerKind::adaptive_moments) {
      m = beta1 * m + (1.0 - beta1) * grad;
      v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
      beta1_power *= beta1;
      beta2_power *= beta2;
      const Eigen::VectorXd m_hat = m / (1.0 - beta1_power);
      const Eigen::VectorXd v_hat = v / (1.0 - beta2_power);
      q -= cfg.step_size * (m_hat.array() / (v_hat.array().sqrt() + adam_eps)).matrix();
    } else {
      q -= cfg.step_size * grad;
    }
    loss = evaluate(q, grad, step);
    result.steps = step;
    if (loss < result.best_loss - cfg.improvement_tolerance) {
      result.best_loss = loss;
      result.best = q;
      stalled = 0;
    } else {
      ++stalled;
    }
    if (cfg.record_trace) result.best_loss_trace.push_back(result.best_loss);
    if (stalled >= cfg.patience && step < cfg.max_steps) {
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

namespace {

double alignment_loss(const Embodiment& target, const FunctionalTemplate& tmpl, const WorldFuncRep& source,
                      const JointConfiguration& q, const AlignmentConfig& cfg, const MetricConfig& metric,
                      double* dcd_out) {
  const double d = dcd(source, eval_template(target, tmpl, q), metric);
  if (dcd_out) *dcd_out = d;
  return cfg.w1 * d + cfg.w2 * joint_limit_penalty(q, target);
}

}  // namespace

Objective alignment_objective(const Embodiment& target, const FunctionalTemplate& target_template,
                              const WorldFuncRep& source_rep, const AlignmentConfig& cfg) {
  return [&target, &target_template, &source_rep, cfg](const Eigen::VectorXd& values, Eigen::VectorXd& gradient) {
    const std::span<const AttachedPoint> local(target_template.entries);
    const JointConfiguration q(values);
    const LinkPoseSet poses = forward_kinematics(target, q);
    const WorldFuncRep world = evaluate_world_set(target, poses, local);
    const DcdGradient metric = dcd_cotangent(source_rep, world, cfg.metric);
    gradient = cfg.w1 * pullback_to_joints(target, poses, local, world, metric.cotangent) +
               cfg.w2 * joint_limit_penalty_gradient(q, target);
    return cfg.w1 * metric.value + cfg.w2 * joint_limit_penalty(q, target);
  };
}

FrameAlignment align_frame(const Embodiment& target, const FunctionalTemplate& target_template,
                           const WorldFuncRep& source_rep, const JointConfiguration& q_init,
                           const AlignmentConfig& cfg, std::size_t frame_index) {
  check_configuration(target, q_init);
  const Objective objective = alignment_objective(target, target_template, source_rep, cfg);

  OptimizationResult opt;
  try {
    opt = minimize_with_patience(objective, q_init.values, cfg);
  } catch (const NumericalError& err) {
    throw NumericalError("frame " + std::to_string(frame_index) + ": " + err.what());
  }

  FrameAlignment out;
  out.config = JointConfiguration(opt.best);
  if (cfg.clamp_to_limits) out.config = clamp_to_limits(target, out.config);
  MetricConfig report_metric = cfg.metric;
  report_metric.epsilon = 0.0;
  auto& diag = out.diagnostics;
  diag.initial_loss = alignment_loss(target, target_template, source_rep, q_init, cfg, report_metric, nullptr);
  diag.final_loss = alignment_loss(target, target_template, source_rep, out.config, cfg, report_metric, &diag.final_dcd);
  diag.steps_used = opt.steps;
  diag.early_stopped = opt.early_stopped;
  diag.best_loss_trace = std::move(opt.best_loss_trace);
  return out;
}

AlignedTrajectory align_trajectory(const FuncRepTrajectory& source, const Embodiment& target,
                                   const FunctionalTemplate& target_template, const JointConfiguration& q0,
                                   const AlignmentConfig& cfg) {
  if (source.frames.empty()) throw ValidationError("cannot align an empty trajectory");
  AlignedTrajectory out;
  out.configs.reserve(source.size());
  out.frames.reserve(source.size());
  JointConfiguration init = q0;
  for (std::size_t t = 0; t < source.size(); ++t) {
    FrameAlignment frame = align_frame(target, target_template, source.frames[t], init, cfg, t);
    init = frame.config;
    out.configs.push_back(std::move(frame.config));
    out.frames.push_back(std::move(frame.diagnostics));
  }
  return out;
}

EisResult eis_initialize(const Embodiment& target, const FunctionalTemplate& target_template,
                         const WorldFuncRep& source_rep, std::size_t samples, double elite_fraction,
                         std::uint64_t seed, const AlignmentConfig& cfg, unsigned workers) {
  if (samples < 10) throw ValidationError("elite initialization needs at least 10 samples");
  if (!(elite_fraction > 0.0 && elite_fraction <= 1.0)) throw ValidationError("elite fraction must lie in (0, 1]");
  const std::size_t dof = target.dof();

  EisResult out;
  out.candidates.reserve(samples);
  Rng rng(seed);
  for (std::size_t k = 0; k < samples; ++k) {
    JointConfiguration q = JointConfiguration::zeros(dof);
    for (std::size_t d = 0; d < dof; ++d) {
      const auto& j = target.dof_spec(d);
      q[d] = rng.uniform(j.lower, j.upper);
    }
    out.candidates.push_back(std::move(q));
  }
  out.scores.resize(samples);
  parallel_for(samples, workers, [&](std::size_t k) {
    out.scores[k] = functional_similarity(source_rep, eval_template(target, target_template, out.candidates[k]),
                                          cfg.metric);
  });

  std::vector<std::size_t> order(samples);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return out.scores[a] > out.scores[b]; });
  // ceil(M * fraction), guarding against 0.1 * 1000 = 100.00000000000001-style drift.
  const double raw = static_cast<double>(samples) * elite_fraction;
  std::size_t elites = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  elites = std::clamp<std::size_t>(elites, 1, samples);
  out.elite_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(elites));

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dof));
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dof), INFINITY);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dof), -INFINITY);
  for (auto k : out.elite_indices) {
    sum += out.candidates[k].values;
    lo = lo.cwiseMin(out.candidates[k].values);
    hi = hi.cwiseMax(out.candidates[k].values);
  }
  out.config = JointConfiguration(sum / static_cast<double>(elites));
  if (elites == 1) out.config = out.candidates[out.elite_indices.front()];
  for (std::size_t d = 0; d < dof; ++d) {
    const auto k = static_cast<Eigen::Index>(d);
    if (target.dof_spec(d).kind == JointKind::revolute && hi[k] - lo[k] > std::numbers::pi) {
      out.wide_span_dofs.push_back(d);
    }
  }
  return out;
}

nlohmann::json frame_diagnostics_to_json(const FrameDiagnostics& d) {
  return {{"initial_loss", d.initial_loss}, {"final_loss", d.final_loss}, {"final_dcd", d.final_dcd},
          {"steps", d.steps_used}, {"early_stopped", d.early_stopped}};
}

}  // namespace cei
