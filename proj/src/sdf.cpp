#include "strandkit/sdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace strandkit {

std::vector<double> SdfSource::eval(const std::vector<Vec3>& points) const {
  std::vector<double> out(points.size());
  for (size_t i = 0; i < points.size(); ++i) out[i] = eval(points[i]);
  return out;
}

std::vector<Vec3> SdfSource::grad(const std::vector<Vec3>& points) const {
  std::vector<Vec3> out(points.size());
  for (size_t i = 0; i < points.size(); ++i) out[i] = grad(points[i]);
  return out;
}

// ---------------------------------------------------------------- BoxSdf

BoxSdf::BoxSdf(const Vec3& center, const Vec3& half_extents,
               const Eigen::Matrix3d& rotation)
    : center_(center), half_(half_extents), rot_(rotation) {
  if ((half_extents.array() <= 0).any())
    throw std::invalid_argument("box half-extents must be positive");
}

double BoxSdf::eval(const Vec3& p) const {
  const Vec3 local = rot_.transpose() * (p - center_);
  const Vec3 q = local.cwiseAbs() - half_;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  return outside + inside;
}

Vec3 BoxSdf::grad(const Vec3& p) const {
  const Vec3 local = rot_.transpose() * (p - center_);
  const Vec3 q = local.cwiseAbs() - half_;
  Vec3 g_local;
  if ((q.array() > 0).any()) {
    const Vec3 clamped = q.cwiseMax(0.0);
    const double len = clamped.norm();
    g_local = len > 0 ? Vec3(clamped / len) : Vec3::Zero();
    for (int a = 0; a < 3; ++a) g_local[a] *= (local[a] < 0 ? -1.0 : 1.0);
  } else {
    int axis;
    q.maxCoeff(&axis);
    g_local = Vec3::Zero();
    g_local[axis] = local[axis] < 0 ? -1.0 : 1.0;
  }
  return rot_ * g_local;
}

// ---------------------------------------------------------- HalfSpaceSdf

HalfSpaceSdf::HalfSpaceSdf(const Vec3& plane_point, const Vec3& outward_normal)
    : point_(plane_point), normal_(outward_normal) {
  const double len = normal_.norm();
  if (std::abs(len - 1.0) > 1e-6)
    throw std::invalid_argument("half-space normal must be unit length");
  normal_ /= len;
}

double HalfSpaceSdf::eval(const Vec3& p) const {
  return (p - point_).dot(normal_);
}

Vec3 HalfSpaceSdf::grad(const Vec3&) const { return normal_; }

// -------------------------------------------------------------- MeshSdf

namespace {

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c) {
  // Ericson, Real-Time Collision Detection, 5.1.5.
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + ab * (d1 / (d1 - d3));

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + ac * (d2 / (d2 - d6));

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));

  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::max());
  void expand(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void expand(const Aabb& o) {
    lo = lo.cwiseMin(o.lo);
    hi = hi.cwiseMax(o.hi);
  }
  double sq_distance(const Vec3& p) const {
    const Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(0.0);
    return d.squaredNorm();
  }
};

}  // namespace

struct MeshSdf::Impl {
  TriMesh mesh;

  struct Node {
    Aabb box;
    int left = -1, right = -1;  // internal
    int first = 0, count = 0;   // leaf triangle range
  };
  std::vector<Node> nodes;
  std::vector<int> tri_order;

  int build(std::vector<int>& tris, int first, int count) {
    Node node;
    for (int i = 0; i < count; ++i)
      for (int v : mesh.triangles[tris[first + i]]) node.box.expand(mesh.vertices[v]);
    const int idx = static_cast<int>(nodes.size());
    nodes.push_back(node);
    if (count <= 4) {
      nodes[idx].first = first;
      nodes[idx].count = count;
      return idx;
    }
    const Vec3 ext = node.box.hi - node.box.lo;
    int axis;
    ext.maxCoeff(&axis);
    std::sort(tris.begin() + first, tris.begin() + first + count,
              [&](int a, int b) {
                auto centroid = [&](int t) {
                  return (mesh.vertices[mesh.triangles[t][0]][axis] +
                          mesh.vertices[mesh.triangles[t][1]][axis] +
                          mesh.vertices[mesh.triangles[t][2]][axis]);
                };
                return centroid(a) < centroid(b);
              });
    const int half = count / 2;
    const int l = build(tris, first, half);
    const int r = build(tris, first + half, count - half);
    nodes[idx].left = l;
    nodes[idx].right = r;
    return idx;
  }

  void closest(const Vec3& p, int node_idx, double& best_sq, Vec3& best_point) const {
    const Node& node = nodes[node_idx];
    if (node.box.sq_distance(p) >= best_sq) return;
    if (node.left < 0) {
      for (int i = 0; i < node.count; ++i) {
        const auto& t = mesh.triangles[tri_order[node.first + i]];
        const Vec3 q = closest_point_on_triangle(p, mesh.vertices[t[0]],
                                                 mesh.vertices[t[1]],
                                                 mesh.vertices[t[2]]);
        const double d = (q - p).squaredNorm();
        if (d < best_sq) {
          best_sq = d;
          best_point = q;
        }
      }
      return;
    }
    const double dl = nodes[node.left].box.sq_distance(p);
    const double dr = nodes[node.right].box.sq_distance(p);
    if (dl < dr) {
      closest(p, node.left, best_sq, best_point);
      closest(p, node.right, best_sq, best_point);
    } else {
      closest(p, node.right, best_sq, best_point);
      closest(p, node.left, best_sq, best_point);
    }
  }

  double winding(const Vec3& p) const {
    // Sum of signed solid angles (van Oosterom & Strackee), normalized by 4pi.
    double total = 0.0;
    for (const auto& t : mesh.triangles) {
      const Vec3 a = mesh.vertices[t[0]] - p;
      const Vec3 b = mesh.vertices[t[1]] - p;
      const Vec3 c = mesh.vertices[t[2]] - p;
      const double la = a.norm(), lb = b.norm(), lc = c.norm();
      const double num = a.dot(b.cross(c));
      const double den =
          la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
      total += 2.0 * std::atan2(num, den);
    }
    return total / (4.0 * M_PI);
  }
};

MeshSdf::MeshSdf(TriMesh mesh) : impl_(std::make_unique<Impl>()) {
  const ValidationReport rep = validate_mesh(mesh);
  if (!rep.all_watertight())
    throw std::invalid_argument("MeshSdf requires a watertight mesh: " +
                                rep.summary());
  impl_->mesh = std::move(mesh);
  impl_->tri_order.resize(impl_->mesh.triangles.size());
  std::iota(impl_->tri_order.begin(), impl_->tri_order.end(), 0);
  impl_->build(impl_->tri_order, 0, static_cast<int>(impl_->tri_order.size()));
}

MeshSdf::~MeshSdf() = default;

const TriMesh& MeshSdf::mesh() const { return impl_->mesh; }

double MeshSdf::unsigned_distance(const Vec3& p, Vec3* closest) const {
  double best_sq = std::numeric_limits<double>::max();
  Vec3 best_point = Vec3::Zero();
  impl_->closest(p, 0, best_sq, best_point);
  if (closest) *closest = best_point;
  return std::sqrt(best_sq);
}

double MeshSdf::winding_number(const Vec3& p) const { return impl_->winding(p); }

double MeshSdf::eval(const Vec3& p) const {
  const double d = unsigned_distance(p);
  return impl_->winding(p) > 0.5 ? -d : d;
}

Vec3 MeshSdf::grad(const Vec3& p) const {
  Vec3 closest;
  const double d = unsigned_distance(p, &closest);
  if (d < 1e-12) return Vec3::Zero();
  const Vec3 dir = (p - closest) / d;
  return impl_->winding(p) > 0.5 ? Vec3(-dir) : dir;
}

}  // namespace strandkit
