#include "strandkit/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "strandkit/parallel.hpp"

namespace strandkit {

namespace {

constexpr double kNormalizeEps = 1e-9;

Vec3 normalize_vjp(const Vec3& unit, double len, const Vec3& grad) {
  return (grad - unit * unit.dot(grad)) / std::max(len, kNormalizeEps);
}

// Scatters per-segment orientation cotangents back onto strand points.
// pbar has one slot per point of the strand.
void backprop_orientations(const Strand& strand, const std::vector<Vec3>& ori,
                           const std::vector<Vec3>& ori_bar,
                           std::vector<Vec3>& pbar) {
  for (size_t j = 0; j < ori.size(); ++j) {
    if (ori_bar[j].isZero(0.0)) continue;
    const double len = (strand.point(static_cast<int>(j) + 1) -
                        strand.point(static_cast<int>(j)))
                           .norm();
    const Vec3 u_bar = normalize_vjp(ori[j], len, ori_bar[j]);
    pbar[j + 1] += u_bar;
    pbar[j] -= u_bar;
  }
}

void check_uniform(const Hairstyle& hair) {
  if (hair.strand_count() == 0)
    throw std::invalid_argument("hairstyle is empty");
}

// Shared body of the three hinge SDF losses: sum of max(0, sign * s(p)).
LossValue sdf_hinge_loss(const Hairstyle& hair, const SdfSource& sdf,
                         double sign, const std::string& name) {
  const int ns = hair.strand_count();
  const int np = hair.point_count();
  LossValue out;
  out.grad.assign(static_cast<size_t>(ns) * np, Vec3::Zero());

  std::vector<double> partial(ns, 0.0);
  parallel_for(ns, [&](std::size_t i) {
    double acc = 0.0;
    for (int j = 0; j < np; ++j) {
      const Vec3& p = hair.strand(static_cast<int>(i)).point(j);
      const double s = sign * sdf.eval(p);
      if (s > 0.0) {
        acc += s;
        out.grad[i * np + j] = sign * sdf.grad(p);
      }
    }
    partial[i] = acc;
  });
  for (int i = 0; i < ns; ++i) out.value += partial[i];
  out.terms[name] = out.value;
  return out;
}

}  // namespace

void LossConfig::validate() const {
  const double ws[] = {lambda_ori_fit, lambda_cur_fit, lambda_ori, lambda_cur,
                       lambda_bbox,    lambda_face,    lambda_colli,
                       lambda_chamf,   lambda_edge,    lambda_nor,
                       lambda_lap,     lambda_prior};
  for (double w : ws)
    if (w < 0.0) throw std::invalid_argument("loss weights must be non-negative");
  if (c_target < 0.0 || c_target > 2.0)
    throw std::invalid_argument("c_target must lie in [0, 2]");
}

double cs_ori(const Hairstyle& hair) {
  check_uniform(hair);
  const int ns = hair.strand_count();
  const int no = hair.point_count() - 1;
  const auto& adj = hair.neighbors();
  for (int i = 0; i < ns; ++i)
    if (adj[i].empty())
      throw std::invalid_argument("strand " + std::to_string(i) +
                                  " has no neighbors; cs_ori undefined");

  std::vector<std::vector<Vec3>> ori(ns);
  parallel_for(ns, [&](std::size_t i) {
    ori[i] = orientations(hair.strand(static_cast<int>(i)), static_cast<int>(i));
  });

  std::vector<double> partial(ns, 0.0);
  parallel_for(ns, [&](std::size_t i) {
    double acc = 0.0;
    const double inv_deg = 1.0 / adj[i].size();
    for (int j = 0; j < no; ++j)
      for (int k : adj[i]) acc += ori[i][j].dot(ori[k][j]) * inv_deg;
    partial[i] = acc;
  });
  double total = 0.0;
  for (int i = 0; i < ns; ++i) total += partial[i];
  return total / (static_cast<double>(ns) * no);
}

double c_mean(const Hairstyle& hair) {
  check_uniform(hair);
  const int ns = hair.strand_count();
  const int np = hair.point_count();
  std::vector<double> partial(ns, 0.0);
  parallel_for(ns, [&](std::size_t i) {
    double acc = 0.0;
    for (double c : curvatures(hair.strand(static_cast<int>(i)), static_cast<int>(i)))
      acc += c;
    partial[i] = acc;
  });
  double total = 0.0;
  for (int i = 0; i < ns; ++i) total += partial[i];
  return total / (static_cast<double>(ns) * np);
}

double c_mean_interior(const Hairstyle& hair) {
  check_uniform(hair);
  const int ns = hair.strand_count();
  const int np = hair.point_count();
  if (np < 3) return 0.0;
  return c_mean(hair) * np / (np - 2.0);
}

LossValue loss_ori(const Hairstyle& hair) {
  check_uniform(hair);
  const int ns = hair.strand_count();
  const int np = hair.point_count();
  const int no = np - 1;
  const auto& adj = hair.neighbors();

  LossValue out;
  out.value = 1.0 - cs_ori(hair);
  out.terms["ori"] = out.value;
  out.grad.assign(static_cast<size_t>(ns) * np, Vec3::Zero());

  std::vector<std::vector<Vec3>> ori(ns);
  for (int i = 0; i < ns; ++i) ori[i] = orientations(hair.strand(i), i);

  // d(-CS)/do^i_j collects the strand's own neighbor average plus every
  // appearance of strand i in another strand's neighbor list.
  const double scale = -1.0 / (static_cast<double>(ns) * no);
  std::vector<std::vector<Vec3>> ori_bar(ns, std::vector<Vec3>(no, Vec3::Zero()));
  for (int i = 0; i < ns; ++i) {
    const double inv_deg = 1.0 / adj[i].size();
    for (int k : adj[i])
      for (int j = 0; j < no; ++j) {
        ori_bar[i][j] += scale * inv_deg * ori[k][j];
        ori_bar[k][j] += scale * inv_deg * ori[i][j];
      }
  }
  for (int i = 0; i < ns; ++i) {
    std::vector<Vec3> pbar(np, Vec3::Zero());
    backprop_orientations(hair.strand(i), ori[i], ori_bar[i], pbar);
    for (int j = 0; j < np; ++j) out.grad[i * np + j] += pbar[j];
  }
  return out;
}

LossValue loss_cur(const Hairstyle& hair, double c_target) {
  check_uniform(hair);
  const int ns = hair.strand_count();
  const int np = hair.point_count();

  const double cm = c_mean(hair);
  LossValue out;
  out.value = std::abs(cm - c_target);
  out.terms["cur"] = out.value;
  out.grad.assign(static_cast<size_t>(ns) * np, Vec3::Zero());

  const double sign = cm > c_target ? 1.0 : (cm < c_target ? -1.0 : 0.0);
  if (sign == 0.0) return out;

  const double scale = sign / (static_cast<double>(ns) * np);
  for (int i = 0; i < ns; ++i) {
    const auto ori = orientations(hair.strand(i), i);
    std::vector<Vec3> ori_bar(ori.size(), Vec3::Zero());
    for (size_t j = 1; j < ori.size(); ++j) {
      const Vec3 diff = ori[j] - ori[j - 1];
      const double c = diff.norm();
      if (c <= kNormalizeEps) continue;  // subgradient 0 at the kink
      const Vec3 e = scale * diff / c;
      ori_bar[j] += e;
      ori_bar[j - 1] -= e;
    }
    std::vector<Vec3> pbar(np, Vec3::Zero());
    backprop_orientations(hair.strand(i), ori, ori_bar, pbar);
    for (int j = 0; j < np; ++j) out.grad[i * np + j] += pbar[j];
  }
  return out;
}

LossValue loss_fit(const Hairstyle& hair, const Hairstyle& target,
                   double lambda_ori_fit, double lambda_cur_fit) {
  check_uniform(hair);
  if (hair.strand_count() != target.strand_count() ||
      hair.point_count() != target.point_count())
    throw std::invalid_argument("hair and target shapes must match");

  const int ns = hair.strand_count();
  const int np = hair.point_count();
  LossValue out;
  out.grad.assign(static_cast<size_t>(ns) * np, Vec3::Zero());
  double pos_term = 0.0, ori_term = 0.0, cur_term = 0.0;

  for (int i = 0; i < ns; ++i) {
    const Strand& s = hair.strand(i);
    const Strand& t = target.strand(i);
    const auto ori = orientations(s, i);
    const auto ori_t = orientations(t, i);
    const auto cur = curvatures(s, i);
    const auto cur_t = curvatures(t, i);

    std::vector<Vec3> pbar(np, Vec3::Zero());
    std::vector<Vec3> ori_bar(ori.size(), Vec3::Zero());

    for (int j = 0; j < np; ++j) {
      const Vec3 d = s.point(j) - t.point(j);
      const double dist = d.norm();
      pos_term += dist;
      if (dist > kNormalizeEps) pbar[j] += d / dist;
    }
    for (size_t j = 0; j < ori.size(); ++j) {
      ori_term += 1.0 - ori_t[j].dot(ori[j]);
      ori_bar[j] -= lambda_ori_fit * ori_t[j];
    }
    for (int j = 1; j + 1 < np; ++j) {
      const double dc = cur[j] - cur_t[j];
      cur_term += std::abs(dc);
      const double sign = dc > 0 ? 1.0 : (dc < 0 ? -1.0 : 0.0);
      if (sign == 0.0) continue;
      const Vec3 diff = ori[j] - ori[j - 1];
      const double c = diff.norm();
      if (c <= kNormalizeEps) continue;
      const Vec3 e = lambda_cur_fit * sign * diff / c;
      ori_bar[j] += e;
      ori_bar[j - 1] -= e;
    }

    backprop_orientations(s, ori, ori_bar, pbar);
    for (int j = 0; j < np; ++j) out.grad[i * np + j] += pbar[j];
  }

  out.terms["position"] = pos_term;
  out.terms["orientation"] = lambda_ori_fit * ori_term;
  out.terms["curvature"] = lambda_cur_fit * cur_term;
  out.value = pos_term + lambda_ori_fit * ori_term + lambda_cur_fit * cur_term;
  return out;
}

LossValue loss_bbox(const Hairstyle& hair, const SdfSource& bbox) {
  return sdf_hinge_loss(hair, bbox, 1.0, "bbox");
}

LossValue loss_face(const Hairstyle& hair, const SdfSource& face_region) {
  return sdf_hinge_loss(hair, face_region, -1.0, "face");
}

LossValue loss_colli(const Hairstyle& hair, const SdfSource& head) {
  return sdf_hinge_loss(hair, head, -1.0, "colli");
}

LossValue loss_hair_geo(const Hairstyle& hair, const LossConfig& cfg,
                        const SdfSources& sources) {
  check_uniform(hair);
  const size_t n = static_cast<size_t>(hair.total_points());
  LossValue out;
  out.grad.assign(n, Vec3::Zero());

  auto add = [&](const std::string& name, double weight, LossValue term) {
    const double contrib = weight * term.value;
    out.terms[name] = contrib;
    out.value += contrib;
    for (size_t m = 0; m < n; ++m) out.grad[m] += weight * term.grad[m];
  };

  if (cfg.lambda_ori > 0) add("ori", cfg.lambda_ori, loss_ori(hair));
  else out.terms["ori"] = 0.0;
  if (cfg.lambda_cur > 0) add("cur", cfg.lambda_cur, loss_cur(hair, cfg.c_target));
  else out.terms["cur"] = 0.0;

  if (cfg.lambda_bbox > 0) {
    if (!sources.bbox) throw std::invalid_argument("lambda_bbox > 0 but no bbox SDF");
    add("bbox", cfg.lambda_bbox, loss_bbox(hair, *sources.bbox));
  } else out.terms["bbox"] = 0.0;
  if (cfg.lambda_face > 0) {
    if (!sources.face) throw std::invalid_argument("lambda_face > 0 but no face SDF");
    add("face", cfg.lambda_face, loss_face(hair, *sources.face));
  } else out.terms["face"] = 0.0;
  if (cfg.lambda_colli > 0) {
    if (!sources.head) throw std::invalid_argument("lambda_colli > 0 but no head SDF");
    add("colli", cfg.lambda_colli, loss_colli(hair, *sources.head));
  } else out.terms["colli"] = 0.0;

  return out;
}

LossValue loss_sdf_prior(const SdfSource& shape_a, const SdfSource& shape_b,
                         const std::vector<Vec3>& sample_points) {
  LossValue out;
  out.grad.assign(sample_points.size(), Vec3::Zero());
  for (size_t i = 0; i < sample_points.size(); ++i) {
    const Vec3& p = sample_points[i];
    const double diff = shape_a.eval(p) - shape_b.eval(p);
    out.value += diff * diff;
    out.grad[i] = 2.0 * diff * (shape_a.grad(p) - shape_b.grad(p));
  }
  out.terms["prior"] = out.value;
  return out;
}

}  // namespace strandkit
