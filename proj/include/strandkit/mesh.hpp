#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <string>
#include <vector>

namespace strandkit {

using Vec3 = Eigen::Vector3d;

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
};

struct ComponentReport {
  int vertex_count = 0;
  int edge_count = 0;
  int face_count = 0;
  int boundary_edges = 0;
  int nonmanifold_edges = 0;
  int euler_characteristic = 0;
  bool winding_consistent = false;
  double signed_volume = 0.0;
  bool watertight = false;
};

struct ValidationReport {
  std::vector<ComponentReport> components;
  int invalid_triangles = 0;  // out-of-range or repeated indices
  bool all_watertight() const;
  std::string summary() const;
};

// Checks each connected component for closedness, manifoldness, Euler
// characteristic, winding consistency and signed volume.
ValidationReport validate_mesh(const TriMesh& mesh);

double mesh_signed_volume(const TriMesh& mesh);
double mesh_surface_area(const TriMesh& mesh);

// Subdivided icosahedron on a sphere. subdivisions=0 gives 20 triangles.
TriMesh make_icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero());

}  // namespace strandkit
