#include "strandkit/optimize.hpp"

#include <cmath>
#include <stdexcept>

namespace strandkit {

void OptimSchedule::validate() const {
  if (step_count < 1) throw std::invalid_argument("step_count must be >= 1");
  if (learning_rate <= 0) throw std::invalid_argument("learning_rate must be > 0");
  if (beta1 <= 0 || beta1 >= 1 || beta2 <= 0 || beta2 >= 1)
    throw std::invalid_argument("adam betas must lie in (0, 1)");
  if (adam_eps <= 0) throw std::invalid_argument("adam_eps must be > 0");
  if (lr_decay != "none" && lr_decay != "cosine")
    throw std::invalid_argument("lr_decay must be 'none' or 'cosine'");
}

namespace {

bool finite(const LossValue& lv) {
  if (!std::isfinite(lv.value)) return false;
  for (const auto& g : lv.grad)
    if (!g.allFinite()) return false;
  return true;
}

std::vector<Vec3> flatten(const Hairstyle& hair) {
  std::vector<Vec3> pts;
  pts.reserve(hair.total_points());
  for (int i = 0; i < hair.strand_count(); ++i)
    for (int j = 0; j < hair.point_count(); ++j)
      pts.push_back(hair.strand(i).point(j));
  return pts;
}

Hairstyle unflatten(const Hairstyle& like, const std::vector<Vec3>& pts) {
  std::vector<Strand> strands;
  strands.reserve(like.strand_count());
  const int np = like.point_count();
  for (int i = 0; i < like.strand_count(); ++i) {
    std::vector<Vec3> p(pts.begin() + static_cast<long>(i) * np,
                        pts.begin() + static_cast<long>(i + 1) * np);
    strands.emplace_back(std::move(p));
  }
  return Hairstyle(std::move(strands));
}

std::vector<bool> root_mask(const Hairstyle& hair) {
  std::vector<bool> frozen(hair.total_points(), false);
  for (int i = 0; i < hair.strand_count(); ++i)
    frozen[static_cast<size_t>(i) * hair.point_count()] = true;
  return frozen;
}

}  // namespace

OptimTrace adam_minimize(std::vector<Vec3>& points, const PointObjective& objective,
                         const OptimSchedule& sched,
                         const std::vector<bool>* frozen) {
  sched.validate();
  const size_t n = points.size();
  std::vector<Vec3> m(n, Vec3::Zero()), v(n, Vec3::Zero());
  OptimTrace trace;
  double prev_loss = std::numeric_limits<double>::infinity();

  for (int step = 0; step < sched.step_count; ++step) {
    LossValue lv = objective(points);
    if (lv.grad.size() != n)
      throw std::invalid_argument("objective gradient size mismatch");
    if (!finite(lv)) {
      trace.aborted = true;
      trace.abort_reason = "non-finite loss or gradient at step " + std::to_string(step);
      return trace;
    }

    double gnorm_sq = 0.0;
    for (const auto& g : lv.grad) gnorm_sq += g.squaredNorm();

    TraceRecord rec;
    rec.step = step;
    rec.loss = lv.value;
    rec.grad_norm = std::sqrt(gnorm_sq);
    rec.terms = lv.terms;
    trace.records.push_back(std::move(rec));

    if (sched.convergence_tol > 0 && step > 0) {
      const double rel = std::abs(prev_loss - lv.value) /
                         std::max(std::abs(prev_loss), 1e-30);
      if (rel < sched.convergence_tol) break;
    }
    if (lv.value == 0.0 && rec.grad_norm == 0.0) break;
    prev_loss = lv.value;

    const double bc1 = 1.0 - std::pow(sched.beta1, step + 1);
    const double bc2 = 1.0 - std::pow(sched.beta2, step + 1);
    double lr = sched.learning_rate;
    if (sched.lr_decay == "cosine")
      lr *= 0.5 * (1.0 + std::cos(M_PI * step / sched.step_count));
    for (size_t i = 0; i < n; ++i) {
      if (frozen && (*frozen)[i]) continue;
      m[i] = sched.beta1 * m[i] + (1.0 - sched.beta1) * lv.grad[i];
      v[i] = sched.beta2 * v[i] +
             (1.0 - sched.beta2) * lv.grad[i].cwiseProduct(lv.grad[i]);
      const Vec3 mhat = m[i] / bc1;
      const Vec3 vhat = v[i] / bc2;
      points[i] -=
          lr * (mhat.array() / (vhat.array().sqrt() + sched.adam_eps)).matrix();
    }
  }
  return trace;
}

std::pair<Hairstyle, OptimTrace> fit_hairstyle(const Hairstyle& init,
                                               const Hairstyle& target,
                                               const LossConfig& cfg,
                                               const OptimSchedule& sched,
                                               bool freeze_roots) {
  if (init.strand_count() != target.strand_count() ||
      init.point_count() != target.point_count())
    throw std::invalid_argument("init and target shapes must match");

  std::vector<Vec3> pts = flatten(init);
  const std::vector<bool> frozen = freeze_roots ? root_mask(init) : std::vector<bool>();
  auto objective = [&](const std::vector<Vec3>& p) {
    return loss_fit(unflatten(init, p), target, cfg.lambda_ori_fit,
                    cfg.lambda_cur_fit);
  };
  OptimTrace trace =
      adam_minimize(pts, objective, sched, freeze_roots ? &frozen : nullptr);
  return {unflatten(init, pts), std::move(trace)};
}

std::pair<Hairstyle, OptimTrace> optimize_geometry(const Hairstyle& init,
                                                   const LossConfig& cfg,
                                                   const SdfSources& sources,
                                                   const OptimSchedule& sched,
                                                   bool freeze_roots) {
  cfg.validate();
  std::vector<Vec3> pts = flatten(init);
  const std::vector<bool> frozen = freeze_roots ? root_mask(init) : std::vector<bool>();
  auto objective = [&](const std::vector<Vec3>& p) {
    return loss_hair_geo(unflatten(init, p), cfg, sources);
  };
  OptimTrace trace =
      adam_minimize(pts, objective, sched, freeze_roots ? &frozen : nullptr);
  return {unflatten(init, pts), std::move(trace)};
}

}  // namespace strandkit
