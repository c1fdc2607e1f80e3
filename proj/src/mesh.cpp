#include "strandkit/mesh.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>

namespace strandkit {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

// Union-find over vertex indices.
struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

bool ValidationReport::all_watertight() const {
  if (invalid_triangles > 0) return false;
  if (components.empty()) return true;
  for (const auto& c : components)
    if (!c.watertight) return false;
  return true;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  os << components.size() << " component(s), "
     << (all_watertight() ? "watertight" : "NOT watertight");
  for (size_t i = 0; i < components.size(); ++i) {
    const auto& c = components[i];
    os << "\n  [" << i << "] V=" << c.vertex_count << " E=" << c.edge_count
       << " F=" << c.face_count << " chi=" << c.euler_characteristic
       << " boundary=" << c.boundary_edges
       << " nonmanifold=" << c.nonmanifold_edges
       << " winding=" << (c.winding_consistent ? "ok" : "BAD")
       << " volume=" << c.signed_volume;
  }
  if (invalid_triangles > 0) os << "\n  invalid triangles: " << invalid_triangles;
  os << "\n";
  return os.str();
}

ValidationReport validate_mesh(const TriMesh& mesh) {
  ValidationReport rep;
  const int nv = mesh.vertex_count();

  std::vector<std::array<int, 3>> tris;
  tris.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    const bool in_range = t[0] >= 0 && t[1] >= 0 && t[2] >= 0 && t[0] < nv &&
                          t[1] < nv && t[2] < nv;
    if (!in_range || t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      ++rep.invalid_triangles;
      continue;
    }
    tris.push_back(t);
  }

  DisjointSet ds(nv);
  for (const auto& t : tris) {
    ds.unite(t[0], t[1]);
    ds.unite(t[1], t[2]);
  }

  // Map component roots to dense component ids; skip isolated vertices.
  std::map<int, int> comp_id;
  std::vector<int> vert_comp(nv, -1);
  for (const auto& t : tris) {
    for (int v : t) {
      const int root = ds.find(v);
      auto it = comp_id.find(root);
      if (it == comp_id.end())
        it = comp_id.emplace(root, static_cast<int>(comp_id.size())).first;
      vert_comp[v] = it->second;
    }
  }
  const int ncomp = static_cast<int>(comp_id.size());
  rep.components.resize(ncomp);

  std::vector<bool> vert_seen(nv, false);
  for (const auto& t : tris)
    for (int v : t)
      if (!vert_seen[v]) {
        vert_seen[v] = true;
        ++rep.components[vert_comp[v]].vertex_count;
      }

  // Per-component edge accounting: count per direction to check winding.
  struct EdgeInfo {
    int total = 0;
    int forward = 0;  // occurrences as (min,max)
  };
  std::vector<std::map<std::uint64_t, EdgeInfo>> edges(ncomp);
  for (const auto& t : tris) {
    const int c = vert_comp[t[0]];
    ++rep.components[c].face_count;
    for (int e = 0; e < 3; ++e) {
      const int a = t[e], b = t[(e + 1) % 3];
      auto& info = edges[c][edge_key(a, b)];
      ++info.total;
      if (a < b) ++info.forward;
    }
  }

  for (int c = 0; c < ncomp; ++c) {
    auto& r = rep.components[c];
    r.edge_count = static_cast<int>(edges[c].size());
    r.winding_consistent = true;
    for (const auto& [key, info] : edges[c]) {
      (void)key;
      if (info.total == 1) ++r.boundary_edges;
      if (info.total > 2) ++r.nonmanifold_edges;
      // A consistently wound closed surface traverses each edge once per
      // direction.
      if (info.total == 2 && info.forward != 1) r.winding_consistent = false;
    }
    r.euler_characteristic = r.vertex_count - r.edge_count + r.face_count;
  }

  // Signed volume per component via the divergence theorem.
  for (const auto& t : tris) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& cc = mesh.vertices[t[2]];
    rep.components[vert_comp[t[0]]].signed_volume += a.dot(b.cross(cc)) / 6.0;
  }

  for (auto& r : rep.components)
    r.watertight = r.boundary_edges == 0 && r.nonmanifold_edges == 0 &&
                   r.winding_consistent && r.signed_volume > 0.0;
  return rep;
}

double mesh_signed_volume(const TriMesh& mesh) {
  double v = 0.0;
  for (const auto& t : mesh.triangles)
    v += mesh.vertices[t[0]].dot(mesh.vertices[t[1]].cross(mesh.vertices[t[2]])) / 6.0;
  return v;
}

double mesh_surface_area(const TriMesh& mesh) {
  double a = 0.0;
  for (const auto& t : mesh.triangles)
    a += 0.5 * (mesh.vertices[t[1]] - mesh.vertices[t[0]])
                   .cross(mesh.vertices[t[2]] - mesh.vertices[t[0]])
                   .norm();
  return a;
}

TriMesh make_icosphere(double radius, int subdivisions, const Vec3& center) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  TriMesh m;
  m.vertices = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& v : m.vertices) v.normalize();
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                 {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                 {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                 {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::uint64_t, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = edge_key(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int idx = m.vertex_count();
      m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(m.triangles.size() * 4);
    for (const auto& t : m.triangles) {
      const int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.triangles = std::move(next);
  }

  for (auto& v : m.vertices) v = v * radius + center;
  return m;
}

}  // namespace strandkit
