#include "strandkit/meshfit.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

namespace strandkit {

namespace {

constexpr double kNormalizeEps = 1e-9;

Vec3 normalize_vjp(const Vec3& unit, double len, const Vec3& grad) {
  return (grad - unit * unit.dot(grad)) / std::max(len, kNormalizeEps);
}

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

std::vector<Vec3> sample_positions(const SurfaceSamples& s,
                                   const std::vector<Vec3>& vertices,
                                   const std::vector<std::array<int, 3>>& tris) {
  std::vector<Vec3> pos(s.triangle.size());
  for (size_t i = 0; i < s.triangle.size(); ++i) {
    const auto& t = tris[s.triangle[i]];
    const Vec3& b = s.barycentric[i];
    pos[i] = b[0] * vertices[t[0]] + b[1] * vertices[t[1]] + b[2] * vertices[t[2]];
  }
  return pos;
}

int nearest(const Vec3& p, const std::vector<Vec3>& pts) {
  int best = 0;
  double best_d = std::numeric_limits<double>::max();
  for (size_t i = 0; i < pts.size(); ++i) {
    const double d = (pts[i] - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

TriMesh DeformableMesh::current() const {
  TriMesh m;
  m.vertices.resize(rest_vertices.size());
  for (size_t i = 0; i < rest_vertices.size(); ++i)
    m.vertices[i] = rest_vertices[i] + offsets[i];
  m.triangles = triangles;
  return m;
}

DeformableMesh DeformableMesh::from_mesh(const TriMesh& mesh) {
  DeformableMesh d;
  d.rest_vertices = mesh.vertices;
  d.offsets.assign(mesh.vertices.size(), Vec3::Zero());
  d.triangles = mesh.triangles;
  return d;
}

SurfaceSamples sample_surface(const std::vector<Vec3>& vertices,
                              const std::vector<std::array<int, 3>>& triangles,
                              int count, std::uint32_t seed) {
  if (triangles.empty()) throw std::invalid_argument("cannot sample an empty mesh");
  std::vector<double> cum(triangles.size());
  double total = 0.0;
  for (size_t t = 0; t < triangles.size(); ++t) {
    const auto& tri = triangles[t];
    total += 0.5 * (vertices[tri[1]] - vertices[tri[0]])
                       .cross(vertices[tri[2]] - vertices[tri[0]])
                       .norm();
    cum[t] = total;
  }
  if (total <= 0.0) throw std::invalid_argument("mesh has zero surface area");

  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  SurfaceSamples s;
  s.triangle.reserve(count);
  s.barycentric.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double r = uni(rng) * total;
    const int t = static_cast<int>(
        std::lower_bound(cum.begin(), cum.end(), r) - cum.begin());
    double u = uni(rng), v = uni(rng);
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    s.triangle.push_back(std::min<int>(t, static_cast<int>(triangles.size()) - 1));
    s.barycentric.emplace_back(1.0 - u - v, u, v);
  }
  return s;
}

LossValue loss_meshfit(const DeformableMesh& mesh_a, const TriMesh& mesh_b,
                       const MeshFitWeights& weights) {
  if (mesh_a.rest_vertices.empty() || mesh_a.triangles.empty())
    throw std::invalid_argument("deformable mesh is empty");
  if (mesh_b.vertices.empty() || mesh_b.triangles.empty())
    throw std::invalid_argument("target mesh is empty");
  if (mesh_a.offsets.size() != mesh_a.rest_vertices.size())
    throw std::invalid_argument("offset count must match vertex count");

  const size_t nv = mesh_a.rest_vertices.size();
  std::vector<Vec3> verts(nv);
  for (size_t i = 0; i < nv; ++i)
    verts[i] = mesh_a.rest_vertices[i] + mesh_a.offsets[i];

  LossValue out;
  out.grad.assign(nv, Vec3::Zero());

  // --- Chamfer over sampled surface points (squared distances).
  // Samples on A are placed using the rest shape so the sampling pattern does
  // not move with the offsets; positions follow the deformed vertices.
  double chamf = 0.0;
  if (weights.lambda_chamf > 0) {
    const SurfaceSamples sa = sample_surface(mesh_a.rest_vertices, mesh_a.triangles,
                                             weights.sample_count, weights.sample_seed);
    // Same seed on both sides: when the shapes coincide the sample sets do
    // too, so the loss reaches exactly zero at the optimum.
    const SurfaceSamples sb = sample_surface(mesh_b.vertices, mesh_b.triangles,
                                             weights.sample_count, weights.sample_seed);
    const std::vector<Vec3> xa = sample_positions(sa, verts, mesh_a.triangles);
    const std::vector<Vec3> yb = sample_positions(sb, mesh_b.vertices, mesh_b.triangles);

    auto scatter = [&](size_t sample, const Vec3& g) {
      const auto& t = mesh_a.triangles[sa.triangle[sample]];
      const Vec3& b = sa.barycentric[sample];
      out.grad[t[0]] += weights.lambda_chamf * b[0] * g;
      out.grad[t[1]] += weights.lambda_chamf * b[1] * g;
      out.grad[t[2]] += weights.lambda_chamf * b[2] * g;
    };

    const double inv_ma = 1.0 / xa.size();
    for (size_t i = 0; i < xa.size(); ++i) {
      const int j = nearest(xa[i], yb);
      const Vec3 d = xa[i] - yb[j];
      chamf += inv_ma * d.squaredNorm();
      scatter(i, 2.0 * inv_ma * d);
    }
    const double inv_mb = 1.0 / yb.size();
    for (size_t j = 0; j < yb.size(); ++j) {
      const int i = nearest(yb[j], xa);
      const Vec3 d = xa[i] - yb[j];
      chamf += inv_mb * d.squaredNorm();
      scatter(i, 2.0 * inv_mb * d);
    }
  }

  // --- Edge length deviation from the rest shape (mean over edges).
  double edge = 0.0;
  if (weights.lambda_edge > 0) {
    std::map<std::uint64_t, std::pair<int, int>> edges;
    for (const auto& t : mesh_a.triangles)
      for (int e = 0; e < 3; ++e) {
        const int a = t[e], b = t[(e + 1) % 3];
        edges.emplace(edge_key(a, b), std::make_pair(std::min(a, b), std::max(a, b)));
      }
    const double inv_e = 1.0 / edges.size();
    for (const auto& [key, ab] : edges) {
      (void)key;
      const Vec3 e_vec = verts[ab.second] - verts[ab.first];
      const double len = e_vec.norm();
      const double rest =
          (mesh_a.rest_vertices[ab.second] - mesh_a.rest_vertices[ab.first]).norm();
      const double dev = len - rest;
      edge += inv_e * dev * dev;
      if (len > kNormalizeEps) {
        const Vec3 g = weights.lambda_edge * inv_e * 2.0 * dev * e_vec / len;
        out.grad[ab.second] += g;
        out.grad[ab.first] -= g;
      }
    }
  }

  // --- Normal consistency across interior edges (mean of 1 - n_f . n_g).
  double nor = 0.0;
  if (weights.lambda_nor > 0) {
    std::map<std::uint64_t, std::vector<int>> edge_faces;
    for (size_t f = 0; f < mesh_a.triangles.size(); ++f) {
      const auto& t = mesh_a.triangles[f];
      for (int e = 0; e < 3; ++e)
        edge_faces[edge_key(t[e], t[(e + 1) % 3])].push_back(static_cast<int>(f));
    }
    std::vector<std::pair<int, int>> pairs;
    for (const auto& [key, faces] : edge_faces) {
      (void)key;
      if (faces.size() == 2) pairs.emplace_back(faces[0], faces[1]);
    }
    if (!pairs.empty()) {
      std::vector<Vec3> normals(mesh_a.triangles.size());
      std::vector<double> cross_len(mesh_a.triangles.size());
      for (size_t f = 0; f < mesh_a.triangles.size(); ++f) {
        const auto& t = mesh_a.triangles[f];
        const Vec3 c = (verts[t[1]] - verts[t[0]]).cross(verts[t[2]] - verts[t[0]]);
        cross_len[f] = c.norm();
        normals[f] = cross_len[f] > kNormalizeEps ? Vec3(c / cross_len[f]) : Vec3::Zero();
      }
      std::vector<Vec3> normal_bar(mesh_a.triangles.size(), Vec3::Zero());
      const double inv_p = 1.0 / pairs.size();
      for (const auto& [f, g] : pairs) {
        nor += inv_p * (1.0 - normals[f].dot(normals[g]));
        normal_bar[f] -= inv_p * normals[g];
        normal_bar[g] -= inv_p * normals[f];
      }
      for (size_t f = 0; f < mesh_a.triangles.size(); ++f) {
        if (normal_bar[f].isZero(0.0) || cross_len[f] <= kNormalizeEps) continue;
        const auto& t = mesh_a.triangles[f];
        const Vec3 c_bar = weights.lambda_nor *
                           normalize_vjp(normals[f], cross_len[f], normal_bar[f]);
        const Vec3 e1 = verts[t[1]] - verts[t[0]];
        const Vec3 e2 = verts[t[2]] - verts[t[0]];
        const Vec3 e1_bar = e2.cross(c_bar);
        const Vec3 e2_bar = c_bar.cross(e1);
        out.grad[t[1]] += e1_bar;
        out.grad[t[2]] += e2_bar;
        out.grad[t[0]] -= e1_bar + e2_bar;
      }
    }
  }

  // --- Uniform Laplacian magnitude (mean over vertices).
  double lap = 0.0;
  if (weights.lambda_lap > 0) {
    std::vector<std::vector<int>> nbrs(nv);
    std::map<std::uint64_t, bool> seen;
    for (const auto& t : mesh_a.triangles)
      for (int e = 0; e < 3; ++e) {
        const int a = t[e], b = t[(e + 1) % 3];
        if (seen.emplace(edge_key(a, b), true).second) {
          nbrs[a].push_back(b);
          nbrs[b].push_back(a);
        }
      }
    const double inv_v = 1.0 / nv;
    for (size_t i = 0; i < nv; ++i) {
      if (nbrs[i].empty()) continue;
      Vec3 mean = Vec3::Zero();
      for (int j : nbrs[i]) mean += verts[j];
      mean /= nbrs[i].size();
      const Vec3 delta = verts[i] - mean;
      lap += inv_v * delta.squaredNorm();
      const Vec3 g = weights.lambda_lap * inv_v * 2.0 * delta;
      out.grad[i] += g;
      const Vec3 gn = g / nbrs[i].size();
      for (int j : nbrs[i]) out.grad[j] -= gn;
    }
  }

  out.terms["chamfer"] = weights.lambda_chamf * chamf;
  out.terms["edge"] = weights.lambda_edge * edge;
  out.terms["normal"] = weights.lambda_nor * nor;
  out.terms["laplacian"] = weights.lambda_lap * lap;
  out.value = out.terms["chamfer"] + out.terms["edge"] + out.terms["normal"] +
              out.terms["laplacian"];
  return out;
}

namespace {

double min_triangle_area(const TriMesh& m) {
  double best = std::numeric_limits<double>::max();
  for (const auto& t : m.triangles)
    best = std::min(best, 0.5 * (m.vertices[t[1]] - m.vertices[t[0]])
                                    .cross(m.vertices[t[2]] - m.vertices[t[0]])
                                    .norm());
  return best;
}

std::pair<DeformableMesh, OptimTrace> evolve_impl(
    const DeformableMesh& tmpl, const OptimSchedule& sched,
    const std::function<LossValue(const DeformableMesh&)>& objective) {
  DeformableMesh mesh = tmpl;
  std::vector<Vec3> offsets = mesh.offsets;
  auto obj = [&](const std::vector<Vec3>& o) {
    mesh.offsets = o;
    return objective(mesh);
  };
  OptimTrace trace = adam_minimize(offsets, obj, sched);
  mesh.offsets = offsets;
  if (min_triangle_area(mesh.current()) < 1e-12)
    trace.warnings.push_back("deformation produced near-degenerate triangles");
  return {std::move(mesh), std::move(trace)};
}

}  // namespace

std::pair<DeformableMesh, OptimTrace> evolve_template(const DeformableMesh& tmpl,
                                                      const TriMesh& target,
                                                      const MeshFitWeights& weights,
                                                      const OptimSchedule& sched) {
  return evolve_impl(tmpl, sched, [&](const DeformableMesh& m) {
    return loss_meshfit(m, target, weights);
  });
}

std::pair<DeformableMesh, OptimTrace> evolve_template(const DeformableMesh& tmpl,
                                                      const SdfSource& target,
                                                      const MeshFitWeights& weights,
                                                      const OptimSchedule& sched) {
  return evolve_impl(tmpl, sched, [&](const DeformableMesh& m) {
    // Zero-set pull replaces the Chamfer term; regularizers unchanged.
    MeshFitWeights reg = weights;
    reg.lambda_chamf = 0.0;
    TriMesh cur = m.current();
    LossValue out = loss_meshfit(m, cur /*unused for chamf=0*/, reg);

    const SurfaceSamples sa = sample_surface(m.rest_vertices, m.triangles,
                                             weights.sample_count, weights.sample_seed);
    const std::vector<Vec3> xa = sample_positions(sa, cur.vertices, m.triangles);
    const double inv_m = 1.0 / xa.size();
    double sdf_term = 0.0;
    for (size_t i = 0; i < xa.size(); ++i) {
      const double s = target.eval(xa[i]);
      sdf_term += inv_m * s * s;
      const Vec3 g = weights.lambda_chamf * inv_m * 2.0 * s * target.grad(xa[i]);
      const auto& t = m.triangles[sa.triangle[i]];
      const Vec3& b = sa.barycentric[i];
      out.grad[t[0]] += b[0] * g;
      out.grad[t[1]] += b[1] * g;
      out.grad[t[2]] += b[2] * g;
    }
    out.terms["sdf"] = weights.lambda_chamf * sdf_term;
    out.value += out.terms["sdf"];
    return out;
  });
}

}  // namespace strandkit
