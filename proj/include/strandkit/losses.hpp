#pragma once

#include <map>
#include <string>

#include "strandkit/sdf.hpp"
#include "strandkit/strand.hpp"

namespace strandkit {

struct LossConfig {
  // Eq-2-style fitting weights.
  double lambda_ori_fit = 5e-2;
  double lambda_cur_fit = 1.0;
  // Hair geometry objective weights.
  double lambda_ori = 1e4;
  double lambda_cur = 1e4;
  double lambda_bbox = 1e3;
  double lambda_face = 1e3;
  double lambda_colli = 1e3;
  double c_target = 5e-2;  // "normal" hairstyle
  // Template-mesh fitting weights.
  double lambda_chamf = 1e2;
  double lambda_edge = 1.0;
  double lambda_nor = 1e-2;
  double lambda_lap = 1e-1;
  double lambda_prior = 1e3;

  void validate() const;
};

// Scalar objective plus its gradient with respect to the optimized variable
// (strand points or mesh vertices, flat layout) and a per-term breakdown.
struct LossValue {
  double value = 0.0;
  std::vector<Vec3> grad;
  std::map<std::string, double> terms;
};

struct SdfSources {
  const SdfSource* bbox = nullptr;
  const SdfSource* face = nullptr;
  const SdfSource* head = nullptr;
};

// Mean cosine similarity of per-segment orientations between each strand and
// its neighbors.
double cs_ori(const Hairstyle& hair);
// Mean curvature over all strand points (boundary curvatures zero-padded).
double c_mean(const Hairstyle& hair);
// Interior-only variant: divides by the number of defined curvature values.
double c_mean_interior(const Hairstyle& hair);

LossValue loss_ori(const Hairstyle& hair);
LossValue loss_cur(const Hairstyle& hair, double c_target);
LossValue loss_fit(const Hairstyle& hair, const Hairstyle& target,
                   double lambda_ori_fit, double lambda_cur_fit);
LossValue loss_bbox(const Hairstyle& hair, const SdfSource& bbox);
LossValue loss_face(const Hairstyle& hair, const SdfSource& face_region);
LossValue loss_colli(const Hairstyle& hair, const SdfSource& head);
LossValue loss_hair_geo(const Hairstyle& hair, const LossConfig& cfg,
                        const SdfSources& sources);

// Squared SDF disagreement between two shapes at the sample points. The
// gradient entries are with respect to the sample positions.
LossValue loss_sdf_prior(const SdfSource& shape_a, const SdfSource& shape_b,
                         const std::vector<Vec3>& sample_points);

}  // namespace strandkit
