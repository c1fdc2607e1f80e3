#pragma once

#include <functional>

#include "strandkit/losses.hpp"

namespace strandkit {

struct OptimSchedule {
  int step_count = 500;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double convergence_tol = 0.0;  // relative loss change; 0 disables early stop
  int log_every = 50;
  // "none" | "cosine": cosine-annealed learning rate. Decay damps the terminal
  // oscillation that step-size-invariant Adam exhibits at hinge boundaries,
  // letting constrained points settle on the feasible side.
  std::string lr_decay = "none";

  void validate() const;
};

struct TraceRecord {
  int step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  std::map<std::string, double> terms;
};

struct OptimTrace {
  std::vector<TraceRecord> records;
  bool aborted = false;  // NaN/Inf encountered
  std::string abort_reason;
  std::vector<std::string> warnings;
};

// Adam over a flat list of 3D points. The objective returns loss value,
// per-point gradient and a term breakdown.
using PointObjective = std::function<LossValue(const std::vector<Vec3>&)>;

OptimTrace adam_minimize(std::vector<Vec3>& points, const PointObjective& objective,
                         const OptimSchedule& sched,
                         const std::vector<bool>* frozen = nullptr);

// Fits `init` toward `target` under the position/orientation/curvature loss.
std::pair<Hairstyle, OptimTrace> fit_hairstyle(const Hairstyle& init,
                                               const Hairstyle& target,
                                               const LossConfig& cfg,
                                               const OptimSchedule& sched,
                                               bool freeze_roots = false);

// Minimizes the regularized hair geometry objective.
std::pair<Hairstyle, OptimTrace> optimize_geometry(const Hairstyle& init,
                                                   const LossConfig& cfg,
                                                   const SdfSources& sources,
                                                   const OptimSchedule& sched,
                                                   bool freeze_roots = true);

}  // namespace strandkit
