#pragma once

#include <cstdint>

#include "strandkit/mesh.hpp"
#include "strandkit/optimize.hpp"
#include "strandkit/sdf.hpp"

namespace strandkit {

// Template mesh with learnable per-vertex offsets; the rest shape is frozen.
struct DeformableMesh {
  std::vector<Vec3> rest_vertices;
  std::vector<Vec3> offsets;
  std::vector<std::array<int, 3>> triangles;

  TriMesh current() const;
  static DeformableMesh from_mesh(const TriMesh& mesh);
};

struct MeshFitWeights {
  double lambda_chamf = 1e2;
  double lambda_edge = 1.0;
  double lambda_nor = 1e-2;
  double lambda_lap = 1e-1;
  int sample_count = 2048;
  std::uint32_t sample_seed = 0;
};

// Chamfer-plus-regularizer fitting objective; gradient is with respect to the
// deformed vertices of mesh_a.
LossValue loss_meshfit(const DeformableMesh& mesh_a, const TriMesh& mesh_b,
                       const MeshFitWeights& weights);

// Deterministic surface samples: sample_count points spread over triangles
// (area-weighted at the given vertex positions), barycentrics from the seed.
struct SurfaceSamples {
  std::vector<int> triangle;
  std::vector<Vec3> barycentric;
};
SurfaceSamples sample_surface(const std::vector<Vec3>& vertices,
                              const std::vector<std::array<int, 3>>& triangles,
                              int count, std::uint32_t seed);

// Evolves the template's offsets to fit a target mesh.
std::pair<DeformableMesh, OptimTrace> evolve_template(const DeformableMesh& tmpl,
                                                      const TriMesh& target,
                                                      const MeshFitWeights& weights,
                                                      const OptimSchedule& sched);

// SDF-target variant: pulls sampled surface points of the template onto the
// target's zero level set, keeping the same regularizers.
std::pair<DeformableMesh, OptimTrace> evolve_template(const DeformableMesh& tmpl,
                                                      const SdfSource& target,
                                                      const MeshFitWeights& weights,
                                                      const OptimSchedule& sched);

}  // namespace strandkit
