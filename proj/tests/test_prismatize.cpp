#include <doctest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <random>

#include "strandkit/prismatize.hpp"
#include "fd_check.hpp"

using namespace strandkit;

namespace {

Strand straight_z(int n_points) {
  std::vector<Vec3> pts;
  for (int j = 0; j < n_points; ++j) pts.emplace_back(0.0, 0.0, 0.1 * j);
  return Strand(std::move(pts));
}

PrismParams params_for(int k, double r) {
  PrismParams p;
  p.k_edges = k;
  p.radius = r;
  p.reference_point = Vec3(0, 0, 0);
  return p;
}

}  // namespace

TEST_CASE("initial_normal: hand cross product") {
  const Vec3 n = initial_normal(Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, 0, 0));
  CHECK((n - Vec3(0, -1, 0)).norm() < 1e-12);
}

TEST_CASE("initial_normal: collinear fallback stays orthogonal") {
  const Vec3 n = initial_normal(Vec3(0, 0, 1), Vec3(0, 0, 5), Vec3(0, 0, 0));
  CHECK(std::abs(n.norm() - 1.0) < 1e-9);
  CHECK(std::abs(n.dot(Vec3(0, 0, 1))) < 1e-9);
}

TEST_CASE("initial_normal: orthogonality over random draws") {
  std::mt19937 rng(17);
  std::normal_distribution<double> gauss;
  for (int t = 0; t < 1000; ++t) {
    Vec3 o(gauss(rng), gauss(rng), gauss(rng));
    if (o.norm() < 1e-3) continue;
    o.normalize();
    const Vec3 p(gauss(rng), gauss(rng), gauss(rng));
    const Vec3 ref(gauss(rng), gauss(rng), gauss(rng));
    const Vec3 n = initial_normal(o, p, ref);
    CHECK(std::abs(n.dot(o)) < 1e-6);
    CHECK(std::abs(n.norm() - 1.0) < 1e-6);
  }
}

TEST_CASE("prismatize_strand: straight strand is a closed cylinder") {
  const int np = 12, K = 4;
  // Offset from the z axis so the head-center reference is not collinear.
  std::vector<Vec3> pts;
  for (int j = 0; j < np; ++j) pts.emplace_back(0.5, 0.0, 0.1 * j);
  const PrismMesh pm = prismatize_strand(Strand(pts), params_for(K, 0.01));

  CHECK(pm.mesh.vertex_count() == K * np);
  CHECK(pm.mesh.triangle_count() == 2 * K * (np - 1) + 2 * (K - 2));
  for (int j = 0; j < np; ++j)
    for (int k = 0; k < K; ++k) {
      const Vec3& v = pm.mesh.vertices[j * K + k];
      const double axis_dist = (Vec3(v.x(), v.y(), 0) - Vec3(0.5, 0, 0)).norm();
      CHECK(axis_dist == doctest::Approx(0.01).epsilon(1e-9));
    }

  const auto rep = validate_mesh(pm.mesh);
  REQUIRE(rep.components.size() == 1);
  CHECK(rep.components[0].euler_characteristic == 2);
  CHECK(rep.components[0].boundary_edges == 0);
  CHECK(rep.components[0].nonmanifold_edges == 0);
  CHECK(rep.components[0].winding_consistent);
  CHECK(rep.components[0].signed_volume > 0.0);
  // F = 8(N_p-1)+4 for K=4.
  CHECK(rep.components[0].face_count == 8 * (np - 1) + 4);
}

TEST_CASE("prismatize_strand: enclosed volume follows the polygon area ratio") {
  std::vector<Vec3> pts;
  const int np = 40;
  for (int j = 0; j < np; ++j) pts.emplace_back(0.6, 0.0, 0.02 * j);
  const Strand s(pts);
  const double R = 0.05;
  const double length = 0.02 * (np - 1);

  for (int K : {3, 8, 16}) {
    const PrismMesh pm = prismatize_strand(s, params_for(K, R));
    const auto rep = validate_mesh(pm.mesh);
    CHECK(rep.all_watertight());
    // Regular K-gon inscribed in radius R: area = K R^2 sin(2pi/K)/2.
    const double poly_area = K * R * R * std::sin(2.0 * M_PI / K) / 2.0;
    CHECK(rep.components[0].signed_volume ==
          doctest::Approx(poly_area * length).epsilon(0.05));
  }
}

TEST_CASE("prismatize_strand: watertight on synthetic strands, K sweep") {
  auto hair = synth_hairstyle(HairKind::Curly, 3, 25, 9);
  for (int K : {3, 4, 6, 8}) {
    for (int i = 0; i < hair.strand_count(); ++i) {
      auto pm = prismatize_strand(hair.strand(i), params_for(K, 0.005), i);
      const auto rep = validate_mesh(pm.mesh);
      REQUIRE(rep.components.size() == 1);
      CHECK(rep.components[0].boundary_edges == 0);
      CHECK(rep.components[0].nonmanifold_edges == 0);
      CHECK(rep.components[0].euler_characteristic == 2);
      CHECK(rep.components[0].winding_consistent);
    }
  }
}

TEST_CASE("prismatize_strand: K < 3 rejected") {
  CHECK_THROWS_AS(prismatize_strand(straight_z(5), params_for(2, 0.01)),
                  std::invalid_argument);
}

TEST_CASE("prismatize_strand: parallel transport variant is also watertight") {
  auto hair = synth_hairstyle(HairKind::Curly, 2, 30, 21);
  PrismParams p = params_for(4, 0.004);
  p.parallel_transport = true;
  for (int i = 0; i < hair.strand_count(); ++i) {
    auto pm = prismatize_strand(hair.strand(i), p, i);
    CHECK(validate_mesh(pm.mesh).all_watertight());
  }
}

TEST_CASE("prismatize_hairstyle: disjoint components, counts, determinism") {
  auto hair = synth_hairstyle(HairKind::Wavy, 4, 15, 2);
  const PrismParams p = params_for(4, 0.003);
  const PrismMesh pm = prismatize_hairstyle(hair, p);
  CHECK(pm.mesh.vertex_count() == 4 * 4 * 15);
  const auto rep = validate_mesh(pm.mesh);
  CHECK(rep.components.size() == 4);
  for (const auto& c : rep.components) CHECK(c.euler_characteristic == 2);

  // strand_of_vertex layout: strand-major, point-major, edge-minor.
  CHECK(pm.strand_of_vertex[0].strand == 0);
  const auto& last = pm.strand_of_vertex.back();
  CHECK(last.strand == 3);
  CHECK(last.point == 14);
  CHECK(last.edge == 3);

  const PrismMesh again = prismatize_hairstyle(hair, p);
  for (int v = 0; v < pm.mesh.vertex_count(); ++v)
    CHECK(pm.mesh.vertices[v] == again.mesh.vertices[v]);
}

TEST_CASE("prismatize_hairstyle: empty hairstyle gives empty mesh") {
  const PrismMesh pm = prismatize_hairstyle(Hairstyle(), params_for(4, 0.01));
  CHECK(pm.mesh.vertex_count() == 0);
  CHECK(pm.mesh.triangle_count() == 0);
}

TEST_CASE("prismatize: radius scaling doubles vertex offsets, keeps topology") {
  auto hair = synth_hairstyle(HairKind::Wavy, 1, 10, 4);
  const PrismMesh a = prismatize_hairstyle(hair, params_for(4, 0.01));
  const PrismMesh b = prismatize_hairstyle(hair, params_for(4, 0.02));
  CHECK(a.mesh.triangles == b.mesh.triangles);
  for (int v = 0; v < a.mesh.vertex_count(); ++v) {
    const auto& org = a.strand_of_vertex[v];
    const Vec3 p = hair.strand(org.strand).point(org.point);
    CHECK((b.mesh.vertices[v] - p).norm() ==
          doctest::Approx(2.0 * (a.mesh.vertices[v] - p).norm()).epsilon(1e-9));
  }
}

TEST_CASE("prismatize: rigid equivariance") {
  auto hair = synth_hairstyle(HairKind::Curly, 2, 12, 6);
  PrismParams p = params_for(4, 0.01);
  p.reference_point = Vec3(0.1, -0.2, 0.3);
  const PrismMesh base = prismatize_hairstyle(hair, p);

  Eigen::Matrix3d rot =
      Eigen::AngleAxisd(0.6, Vec3(1, -1, 2).normalized()).toRotationMatrix();
  const Vec3 t(0.3, 0.7, -0.1);
  std::vector<Strand> moved;
  for (int i = 0; i < hair.strand_count(); ++i) {
    std::vector<Vec3> pts;
    for (const Vec3& q : hair.strand(i).points()) pts.push_back(rot * q + t);
    moved.emplace_back(std::move(pts));
  }
  PrismParams pm = p;
  pm.reference_point = rot * p.reference_point + t;
  const PrismMesh xf = prismatize_hairstyle(Hairstyle(std::move(moved)), pm);
  for (int v = 0; v < base.mesh.vertex_count(); ++v)
    CHECK((xf.mesh.vertices[v] - (rot * base.mesh.vertices[v] + t)).norm() < 1e-6);
}

TEST_CASE("default_radius formula") {
  CHECK(default_radius(M_PI, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(default_radius(M_PI, 100) == doctest::Approx(0.1).epsilon(1e-12));
  const double area = 0.12;
  CHECK(default_radius(area, 3000) ==
        doctest::Approx(std::sqrt(area / (3000 * M_PI))).epsilon(1e-12));
  CHECK_THROWS_AS(default_radius(-1.0, 10), std::invalid_argument);
}

TEST_CASE("validate_mesh: deleting a triangle exposes 3 boundary edges") {
  auto pm = prismatize_strand(straight_z(8), params_for(4, 0.01));
  pm.mesh.triangles.pop_back();
  const auto rep = validate_mesh(pm.mesh);
  CHECK(rep.components[0].boundary_edges == 3);
  CHECK_FALSE(rep.all_watertight());
}

TEST_CASE("validate_mesh: open quad strip is not watertight") {
  // Two triangle strips along a strand, no caps and no sides.
  auto hair = synth_hairstyle(HairKind::Wavy, 1, 10, 1);
  const Strand& s = hair.strand(0);
  TriMesh strip;
  const Vec3 side(0.01, 0, 0);
  for (int j = 0; j < s.size(); ++j) {
    strip.vertices.push_back(s.point(j) - side);
    strip.vertices.push_back(s.point(j) + side);
  }
  for (int j = 0; j + 1 < s.size(); ++j) {
    const int a = 2 * j, b = 2 * j + 1, c = 2 * j + 3, d = 2 * j + 2;
    strip.triangles.push_back({a, b, c});
    strip.triangles.push_back({a, c, d});
  }
  const auto rep = validate_mesh(strip);
  CHECK_FALSE(rep.all_watertight());
  CHECK(rep.components[0].boundary_edges > 0);
}

TEST_CASE("backprop_vertices: zero grads give zero point grads") {
  auto hair = synth_hairstyle(HairKind::Wavy, 2, 8, 3);
  const PrismParams p = params_for(4, 0.01);
  const PrismMesh pm = prismatize_hairstyle(hair, p);
  const std::vector<Vec3> zeros(pm.mesh.vertices.size(), Vec3::Zero());
  for (const Vec3& g : backprop_vertices(pm, zeros, hair, p))
    CHECK(g.norm() == 0.0);
}

TEST_CASE("backprop_vertices: size mismatch rejected") {
  auto hair = synth_hairstyle(HairKind::Wavy, 1, 5, 3);
  const PrismParams p = params_for(4, 0.01);
  const PrismMesh pm = prismatize_hairstyle(hair, p);
  CHECK_THROWS_AS(backprop_vertices(pm, {Vec3::Zero()}, hair, p),
                  std::invalid_argument);
}

namespace {

// FD oracle for the DP map under an arbitrary linear loss on vertices.
void check_dp_gradient(const Hairstyle& hair, const PrismParams& params,
                       const std::vector<Vec3>& vertex_grads, double tol) {
  const PrismMesh pm = prismatize_hairstyle(hair, params);
  const auto analytic = backprop_vertices(pm, vertex_grads, hair, params);

  auto loss = [&](const std::vector<Vec3>& pts) {
    const Hairstyle h = testing::hairstyle_from_points(hair, pts);
    const PrismMesh m = prismatize_hairstyle(h, params);
    double acc = 0.0;
    for (size_t v = 0; v < m.mesh.vertices.size(); ++v)
      acc += vertex_grads[v].dot(m.mesh.vertices[v]);
    return acc;
  };
  const auto fd = testing::finite_diff(testing::flatten_points(hair), loss, 1e-5);
  CHECK(testing::grad_rel_error(analytic, fd) <= tol);
}

}  // namespace

TEST_CASE("backprop_vertices: cap-vertex z loss matches finite differences") {
  auto hair = synth_hairstyle(HairKind::Straight, 1, 6, 12);
  PrismParams p = params_for(4, 0.01);
  p.reference_point = Vec3(0.05, -0.03, 0.2);
  const PrismMesh pm = prismatize_hairstyle(hair, p);
  std::vector<Vec3> grads(pm.mesh.vertices.size(), Vec3::Zero());
  grads[pm.mesh.vertices.size() - 2] = Vec3(0, 0, 1);  // one cap-ring vertex
  check_dp_gradient(hair, p, grads, 1e-4);
}

TEST_CASE("backprop_vertices: mean-of-vertices loss matches finite differences") {
  auto hair = synth_hairstyle(HairKind::Wavy, 2, 7, 8);
  PrismParams p = params_for(4, 0.02);
  p.reference_point = Vec3(0.01, 0.02, 0.1);
  const PrismMesh pm = prismatize_hairstyle(hair, p);
  const double w = 1.0 / pm.mesh.vertices.size();
  std::vector<Vec3> grads(pm.mesh.vertices.size(), Vec3(w, w, w));
  check_dp_gradient(hair, p, grads, 1e-4);
}

TEST_CASE("backprop_vertices: 20 random instances match finite differences") {
  std::mt19937 rng(2024);
  std::normal_distribution<double> gauss;
  for (int inst = 0; inst < 20; ++inst) {
    const int ns = 1 + static_cast<int>(rng() % 3);
    const int np = 4 + static_cast<int>(rng() % 8);
    auto hair = testing::random_hairstyle(ns, np, 1000 + inst);
    PrismParams p = params_for(3 + static_cast<int>(rng() % 4), 0.01);
    p.reference_point = Vec3(gauss(rng), gauss(rng), gauss(rng)) * 0.1;
    const PrismMesh pm = prismatize_hairstyle(hair, p);
    std::vector<Vec3> grads(pm.mesh.vertices.size());
    for (auto& g : grads) g = Vec3(gauss(rng), gauss(rng), gauss(rng));
    check_dp_gradient(hair, p, grads, 1e-4);
  }
}
