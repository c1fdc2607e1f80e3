#include "strandkit/prismatize.hpp"

#include <cmath>
#include <stdexcept>

namespace strandkit {

namespace {

constexpr double kCollinearEps = 1e-7;
constexpr double kNormalizeEps = 1e-9;

// Coordinate axis least aligned with o, used when the reference point is
// collinear with the orientation.
Vec3 fallback_axis(const Vec3& o) {
  int best = 0;
  double best_dot = std::abs(o.x());
  if (std::abs(o.y()) < best_dot) { best = 1; best_dot = std::abs(o.y()); }
  if (std::abs(o.z()) < best_dot) best = 2;
  return Vec3::Unit(best);
}

// Per-point frame inputs recomputed identically in forward and backward.
struct PointFrame {
  int segment;       // segment whose orientation this point uses
  Vec3 u;            // unnormalized segment vector
  double u_len;
  Vec3 o;            // unit orientation
  bool fallback;     // collinear fallback taken
  Vec3 cross_arg;    // (reference - point) or the fallback axis
  Vec3 w;            // o x cross_arg
  double w_len;
  Vec3 n0;           // unit initial normal
};

PointFrame point_frame(const Strand& strand, int j, const PrismParams& params,
                       int strand_index) {
  PointFrame f;
  const int n = strand.size();
  f.segment = std::min(j, n - 2);
  f.u = strand.point(f.segment + 1) - strand.point(f.segment);
  f.u_len = f.u.norm();
  if (f.u_len <= kMinSegmentLength)
    throw DegenerateSegmentError(strand_index, f.segment);
  f.o = f.u / f.u_len;

  const Vec3 d = params.reference_point - strand.point(j);
  Vec3 w = f.o.cross(d);
  if (w.norm() < kCollinearEps) {
    f.fallback = true;
    f.cross_arg = fallback_axis(f.o);
    f.w = f.o.cross(f.cross_arg);
  } else {
    f.fallback = false;
    f.cross_arg = d;
    f.w = w;
  }
  f.w_len = f.w.norm();
  f.n0 = f.w / f.w_len;
  return f;
}

Vec3 rodrigues(const Vec3& n0, const Vec3& axis, double cos_t, double sin_t) {
  return n0 * cos_t + axis.cross(n0) * sin_t +
         axis * (axis.dot(n0) * (1.0 - cos_t));
}

// Adjoint of x -> x/|x| with the denominator clamped.
Vec3 normalize_vjp(const Vec3& unit, double len, const Vec3& grad) {
  return (grad - unit * unit.dot(grad)) / std::max(len, kNormalizeEps);
}

}  // namespace

Vec3 initial_normal(const Vec3& orientation, const Vec3& point,
                    const Vec3& reference_point) {
  Vec3 w = orientation.cross(reference_point - point);
  if (w.norm() < kCollinearEps)
    w = orientation.cross(fallback_axis(orientation));
  return w.normalized();
}

double default_radius(double scalp_area, int n_strands) {
  if (scalp_area <= 0.0) throw std::invalid_argument("scalp area must be positive");
  if (n_strands < 1) throw std::invalid_argument("strand count must be >= 1");
  return std::sqrt(scalp_area / (n_strands * M_PI));
}

PrismMesh prismatize_strand(const Strand& strand, const PrismParams& params,
                            int strand_index) {
  const int K = params.k_edges;
  if (K < 3) throw std::invalid_argument("prism needs at least 3 lateral edges");
  if (params.radius <= 0.0) throw std::invalid_argument("prism radius must be positive");
  const int n = strand.size();

  PrismMesh out;
  out.mesh.vertices.reserve(static_cast<size_t>(K) * n);
  out.strand_of_vertex.reserve(static_cast<size_t>(K) * n);

  Vec3 prev_o, prev_n0;
  for (int j = 0; j < n; ++j) {
    PointFrame f = point_frame(strand, j, params, strand_index);
    Vec3 n0 = f.n0;
    if (params.parallel_transport && j > 0) {
      // Rotate the previous normal by the minimal rotation between
      // consecutive orientations.
      const Vec3 axis = prev_o.cross(f.o);
      const double s = axis.norm();
      const double c = prev_o.dot(f.o);
      if (s > kNormalizeEps) {
        const Vec3 a = axis / s;
        n0 = rodrigues(prev_n0, a, c, s);
        n0.normalize();
      } else {
        n0 = prev_n0;
      }
    }
    prev_o = f.o;
    prev_n0 = n0;

    for (int k = 0; k < K; ++k) {
      const double theta = 2.0 * M_PI * k / K;
      const Vec3 nk = rodrigues(n0, f.o, std::cos(theta), std::sin(theta));
      out.mesh.vertices.push_back(strand.point(j) + params.radius * nk);
      out.strand_of_vertex.push_back({strand_index, j, k});
    }
  }

  auto ring = [K](int j, int k) { return j * K + ((k % K + K) % K); };

  // Lateral faces: two triangles per quad, split along (k,j)->(k+1,j+1).
  for (int j = 0; j + 1 < n; ++j) {
    for (int k = 0; k < K; ++k) {
      const int a = ring(j, k), b = ring(j, k + 1);
      const int c = ring(j + 1, k + 1), d = ring(j + 1, k);
      out.mesh.triangles.push_back({a, b, c});
      out.mesh.triangles.push_back({a, c, d});
    }
  }
  // Caps: fans anchored at ring slot 0. Bottom cap faces against the first
  // orientation, top cap along the last.
  for (int k = 1; k + 1 < K; ++k) {
    out.mesh.triangles.push_back({ring(0, 0), ring(0, k + 1), ring(0, k)});
    out.mesh.triangles.push_back({ring(n - 1, 0), ring(n - 1, k), ring(n - 1, k + 1)});
  }
  return out;
}

PrismMesh prismatize_hairstyle(const Hairstyle& hair, const PrismParams& params) {
  PrismMesh out;
  const int K = params.k_edges;
  const int np = hair.point_count();
  out.mesh.vertices.reserve(static_cast<size_t>(hair.strand_count()) * K * np);
  for (int i = 0; i < hair.strand_count(); ++i) {
    const int base = out.mesh.vertex_count();
    PrismMesh one = prismatize_strand(hair.strand(i), params, i);
    out.mesh.vertices.insert(out.mesh.vertices.end(), one.mesh.vertices.begin(),
                             one.mesh.vertices.end());
    out.strand_of_vertex.insert(out.strand_of_vertex.end(),
                                one.strand_of_vertex.begin(),
                                one.strand_of_vertex.end());
    for (auto t : one.mesh.triangles)
      out.mesh.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  }
  return out;
}

std::vector<Vec3> backprop_vertices(const PrismMesh& mesh,
                                    const std::vector<Vec3>& vertex_grads,
                                    const Hairstyle& hair,
                                    const PrismParams& params) {
  if (vertex_grads.size() != mesh.mesh.vertices.size())
    throw std::invalid_argument("vertex gradient count does not match mesh");
  if (params.parallel_transport)
    throw std::invalid_argument(
        "backprop_vertices supports only the per-point normal construction");

  const int K = params.k_edges;
  const int np = hair.point_count();
  std::vector<Vec3> point_grads(hair.total_points(), Vec3::Zero());

  for (int i = 0; i < hair.strand_count(); ++i) {
    const Strand& strand = hair.strand(i);
    const int vbase = i * K * np;
    for (int j = 0; j < np; ++j) {
      const PointFrame f = point_frame(strand, j, params, i);
      Vec3 n0_bar = Vec3::Zero();
      Vec3 o_bar = Vec3::Zero();

      for (int k = 0; k < K; ++k) {
        const Vec3& g = vertex_grads[vbase + j * K + k];
        if (g.isZero(0.0)) continue;
        // v = p_j + R * rodrigues(n0, o, theta_k)
        point_grads[i * np + j] += g;
        const Vec3 nk_bar = params.radius * g;

        const double theta = 2.0 * M_PI * k / K;
        const double c = std::cos(theta), s = std::sin(theta);
        const double t = f.o.dot(f.n0);
        n0_bar += c * nk_bar + s * nk_bar.cross(f.o) +
                  (1.0 - c) * nk_bar.dot(f.o) * f.o;
        o_bar += s * f.n0.cross(nk_bar) +
                 (1.0 - c) * (t * nk_bar + nk_bar.dot(f.o) * f.n0);
      }

      if (n0_bar.isZero(0.0) && o_bar.isZero(0.0)) continue;

      // n0 = normalize(w), w = o x cross_arg
      const Vec3 w_bar = normalize_vjp(f.n0, f.w_len, n0_bar);
      o_bar += f.cross_arg.cross(w_bar);
      if (!f.fallback) {
        // cross_arg = reference - p_j
        const Vec3 d_bar = w_bar.cross(f.o);
        point_grads[i * np + j] -= d_bar;
      }

      // o = normalize(p_{s+1} - p_s)
      const Vec3 u_bar = normalize_vjp(f.o, f.u_len, o_bar);
      point_grads[i * np + f.segment + 1] += u_bar;
      point_grads[i * np + f.segment] -= u_bar;
    }
  }
  return point_grads;
}

}  // namespace strandkit
