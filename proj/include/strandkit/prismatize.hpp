#pragma once

#include "strandkit/mesh.hpp"
#include "strandkit/strand.hpp"

namespace strandkit {

struct PrismParams {
  int k_edges = 4;
  double radius = 0.01;
  Vec3 reference_point = Vec3::Zero();  // the head center
  // Off by default: recompute the initial normal at every point per the
  // cross-product rule. On: transport the first point's normal along the
  // strand by minimal rotation between consecutive orientations.
  bool parallel_transport = false;
};

// Identifies which strand point (and which of the K ring slots) produced a
// prism vertex.
struct VertexOrigin {
  int strand = 0;
  int point = 0;
  int edge = 0;
};

struct PrismMesh {
  TriMesh mesh;
  std::vector<VertexOrigin> strand_of_vertex;
};

// Step 1 of the conversion: normal = normalize(orientation x (reference - point)).
// Falls back to the least-aligned coordinate axis when near collinear.
Vec3 initial_normal(const Vec3& orientation, const Vec3& point, const Vec3& reference_point);

PrismMesh prismatize_strand(const Strand& strand, const PrismParams& params,
                            int strand_index = 0);

PrismMesh prismatize_hairstyle(const Hairstyle& hair, const PrismParams& params);

// R = sqrt(A_scalp / (N_s * pi)).
double default_radius(double scalp_area, int n_strands);

// Vector-Jacobian product of the prismatization map: given dL/dvertex, returns
// dL/dpoint for every strand point (flat layout, strand-major).
std::vector<Vec3> backprop_vertices(const PrismMesh& mesh,
                                    const std::vector<Vec3>& vertex_grads,
                                    const Hairstyle& hair,
                                    const PrismParams& params);

}  // namespace strandkit
