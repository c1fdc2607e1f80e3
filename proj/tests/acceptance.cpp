// End-to-end acceptance checks. Each criterion prints exactly one pass/fail
// line; the process exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "strandkit/io.hpp"
#include "strandkit/losses.hpp"
#include "strandkit/meshfit.hpp"
#include "strandkit/optimize.hpp"
#include "strandkit/parallel.hpp"
#include "strandkit/prismatize.hpp"

using namespace strandkit;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& what,
            const std::string& detail = "") {
  if (!ok) ++g_failures;
  std::printf("criterion %2d: %s - %s%s%s\n", criterion, ok ? "pass" : "FAIL",
              what.c_str(), detail.empty() ? "" : " | ", detail.c_str());
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Hairstyle random_hairstyle(std::mt19937& rng, int ns, int np, double jitter = 0.05) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<Strand> strands;
  for (int i = 0; i < ns; ++i) {
    const Vec3 root(uni(rng), uni(rng), 1.0 + 0.2 * uni(rng));
    const double ph1 = 3.0 * uni(rng), ph2 = 3.0 * uni(rng), ph3 = 3.0 * uni(rng);
    std::vector<Vec3> pts;
    for (int j = 0; j < np; ++j) {
      const double t = np > 1 ? static_cast<double>(j) / (np - 1) : 0.0;
      Vec3 p = root + Vec3(0, 0, -1.0) * t;
      p += jitter * Vec3(std::sin(3 * t + ph1), std::cos(5 * t + ph2),
                         std::sin(7 * t + ph3));
      pts.push_back(p);
    }
    strands.emplace_back(std::move(pts));
  }
  return Hairstyle(std::move(strands), std::min(4, ns - 1));
}

std::vector<Vec3> flatten(const Hairstyle& h) {
  std::vector<Vec3> pts;
  for (int i = 0; i < h.strand_count(); ++i)
    for (int j = 0; j < h.point_count(); ++j) pts.push_back(h.strand(i).point(j));
  return pts;
}

Hairstyle rebuild(const Hairstyle& like, const std::vector<Vec3>& pts) {
  std::vector<Strand> strands;
  const int np = like.point_count();
  for (int i = 0; i < like.strand_count(); ++i)
    strands.emplace_back(
        std::vector<Vec3>(pts.begin() + static_cast<long>(i) * np,
                          pts.begin() + static_cast<long>(i + 1) * np));
  return Hairstyle(std::move(strands), std::min(4, like.strand_count() - 1));
}

double rel_error(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double diff = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]).squaredNorm();
    na += a[i].squaredNorm();
    nb += b[i].squaredNorm();
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-8});
}

template <typename F>
std::vector<Vec3> finite_diff(std::vector<Vec3> x, const F& f, double h = 1e-5) {
  std::vector<Vec3> g(x.size(), Vec3::Zero());
  for (size_t i = 0; i < x.size(); ++i)
    for (int a = 0; a < 3; ++a) {
      const double orig = x[i][a];
      x[i][a] = orig + h;
      const double fp = f(x);
      x[i][a] = orig - h;
      const double fm = f(x);
      x[i][a] = orig;
      g[i][a] = (fp - fm) / (2 * h);
    }
  return g;
}

double rmse(const Hairstyle& a, const Hairstyle& b) {
  double acc = 0.0;
  for (int i = 0; i < a.total_points(); ++i)
    acc += (a.flat_point(i) - b.flat_point(i)).squaredNorm();
  return std::sqrt(acc / a.total_points());
}

// ---------------------------------------------------------------------------

void criterion_1_watertightness() {
  const auto t0 = Clock::now();
  std::mt19937 rng(1);
  std::uniform_int_distribution<int> ns_dist(1, 100), np_dist(3, 100);
  const int ks[4] = {3, 4, 6, 8};
  bool ok = true;
  std::string detail;
  for (int trial = 0; trial < 50 && ok; ++trial) {
    const int ns = ns_dist(rng), np = np_dist(rng);
    const Hairstyle hair = random_hairstyle(rng, ns, np, 0.03);
    PrismParams params;
    params.k_edges = ks[trial % 4];
    params.radius = 0.002;
    const PrismMesh pm = prismatize_hairstyle(hair, params);
    const ValidationReport rep = validate_mesh(pm.mesh);
    if (static_cast<int>(rep.components.size()) != ns) ok = false;
    for (const auto& c : rep.components)
      if (c.boundary_edges != 0 || c.nonmanifold_edges != 0 ||
          c.euler_characteristic != 2 || !c.winding_consistent)
        ok = false;
    if (!ok)
      detail = "trial " + std::to_string(trial) + ": " + rep.summary();
  }
  const double secs = seconds_since(t0);
  if (secs >= 60.0) ok = false;
  report(1, ok, "watertight prism meshes on 50 randomized hairstyles",
         detail.empty() ? std::to_string(secs) + "s" : detail);
}

void criterion_2_gradients() {
  const auto t0 = Clock::now();
  std::mt19937 rng(2);
  std::uniform_int_distribution<int> ns_dist(5, 10), np_dist(5, 20);
  const double tol = 1e-4;
  double worst = 0.0;
  std::string worst_name;

  MeshSdf head(make_icosphere(0.6, 2, Vec3(0, 0, 0.8)));
  BoxSdf bbox(Vec3(0, 0, 0.5), Vec3(0.9, 0.9, 0.8));
  HalfSpaceSdf face_hs(Vec3(0, 0.4, 0.5), Vec3(0, 1, 0));

  auto record = [&](const std::string& name, double err) {
    if (err > worst) {
      worst = err;
      worst_name = name;
    }
  };

  // Central differences are only valid away from the measure-zero kinks of
  // |.| and max(0, .): redraw any instance whose terms sit within a margin of
  // a kink (near-zero curvature, curvature ties with the target, points on an
  // SDF boundary, or near the degenerate-normal fallback of prismatization).
  auto smooth_pair = [&](Hairstyle& hair, Hairstyle& target) {
    const double margin = 2e-3;
    for (int attempt = 0; attempt < 500; ++attempt) {
      const int ns = ns_dist(rng), np = np_dist(rng);
      hair = random_hairstyle(rng, ns, np);
      target = random_hairstyle(rng, ns, np);
      bool ok = std::abs(c_mean(hair) - 0.1) > margin;
      for (int i = 0; ok && i < ns; ++i) {
        const auto cur = curvatures(hair.strand(i));
        const auto cur_t = curvatures(target.strand(i));
        const auto ori = orientations(hair.strand(i));
        // Near-zero curvature also inflates the truncation error of central
        // differences (the norm's second derivative grows like 1/c), so keep a
        // wider berth there than at the plain kinks.
        for (int j = 1; ok && j + 1 < np; ++j)
          if (cur[j] < 1e-2 || cur_t[j] < 1e-2 ||
              std::abs(cur[j] - cur_t[j]) < margin)
            ok = false;
        for (int j = 0; ok && j < np; ++j) {
          const Vec3& p = hair.strand(i).point(j);
          if ((p - target.strand(i).point(j)).norm() < margin) ok = false;
          if (std::abs(bbox.eval(p)) < margin || std::abs(face_hs.eval(p)) < margin ||
              std::abs(head.eval(p)) < margin)
            ok = false;
          const Vec3& o = ori[std::min<int>(j, np - 2)];
          if (o.cross(-p).norm() < margin) ok = false;
        }
      }
      if (ok) return;
    }
    throw std::runtime_error("could not draw a kink-free gradient instance");
  };

  for (int inst = 0; inst < 20; ++inst) {
    Hairstyle hair, target;
    smooth_pair(hair, target);

    auto check = [&](const std::string& name,
                     const std::function<LossValue(const Hairstyle&)>& loss) {
      const LossValue lv = loss(hair);
      const auto fd = finite_diff(flatten(hair), [&](const std::vector<Vec3>& p) {
        return loss(rebuild(hair, p)).value;
      });
      record(name, rel_error(lv.grad, fd));
    };
    check("loss_fit", [&](const Hairstyle& x) { return loss_fit(x, target, 5e-2, 1.0); });
    check("loss_ori", [&](const Hairstyle& x) { return loss_ori(x); });
    check("loss_cur", [&](const Hairstyle& x) { return loss_cur(x, 0.1); });
    check("loss_bbox", [&](const Hairstyle& x) { return loss_bbox(x, bbox); });
    check("loss_face", [&](const Hairstyle& x) { return loss_face(x, face_hs); });
    check("loss_colli", [&](const Hairstyle& x) { return loss_colli(x, head); });

    // Prismatization Jacobian against a fixed linear functional of vertices.
    {
      PrismParams params;
      params.radius = 0.02;
      const PrismMesh pm = prismatize_hairstyle(hair, params);
      std::vector<Vec3> vgrads(pm.mesh.vertices.size());
      for (size_t v = 0; v < vgrads.size(); ++v)
        vgrads[v] = Vec3(std::sin(0.1 * v), std::cos(0.2 * v), 0.5);
      const auto analytic = backprop_vertices(pm, vgrads, hair, params);
      const auto fd = finite_diff(flatten(hair), [&](const std::vector<Vec3>& p) {
        const PrismMesh m = prismatize_hairstyle(rebuild(hair, p), params);
        double acc = 0.0;
        for (size_t v = 0; v < m.mesh.vertices.size(); ++v)
          acc += m.mesh.vertices[v].dot(vgrads[v]);
        return acc;
      });
      record("dp_jacobian", rel_error(analytic, fd));
    }
  }

  // Template-mesh fitting objective on small deformed icospheres.
  {
    std::mt19937 mrng(7);
    std::uniform_real_distribution<double> uni(-0.015, 0.015);
    for (int inst = 0; inst < 20; ++inst) {
      const TriMesh src = make_icosphere(1.0, 0);
      const TriMesh tgt =
          make_icosphere(1.0 + 0.1 * uni(mrng) * 10.0, 0,
                         Vec3(uni(mrng), uni(mrng), uni(mrng)));
      DeformableMesh dm = DeformableMesh::from_mesh(src);
      for (Vec3& o : dm.offsets) o = Vec3(uni(mrng), uni(mrng), uni(mrng));
      MeshFitWeights w;
      w.sample_count = 96;
      w.sample_seed = 100 + inst;
      const LossValue lv = loss_meshfit(dm, tgt, w);
      const auto fd = finite_diff(dm.offsets, [&](const std::vector<Vec3>& o) {
        DeformableMesh probe = dm;
        probe.offsets = o;
        return loss_meshfit(probe, tgt, w).value;
      });
      record("loss_meshfit", rel_error(lv.grad, fd));
    }
  }

  const double secs = seconds_since(t0);
  const bool ok = worst <= tol && secs < 300.0;
  std::ostringstream d;
  d << "worst rel_error " << worst << " (" << worst_name << "), " << secs << "s";
  report(2, ok, "analytic gradients match finite differences (tol 1e-4)", d.str());
}

void criterion_3_arc_curvature() {
  bool ok = true;
  std::string detail;
  for (double step : {0.05, 0.1, 0.2}) {
    const int np = 80;
    std::vector<Strand> strands;
    for (int i = 0; i < 3; ++i) {
      std::vector<Vec3> pts;
      for (int j = 0; j < np; ++j)
        pts.emplace_back(std::cos(j * step), std::sin(j * step), 0.1 * i);
      strands.emplace_back(std::move(pts));
    }
    Hairstyle h(std::move(strands), 2);
    const double expected_interior = 2.0 * std::sin(step / 2.0);
    const auto cur = curvatures(h.strand(0));
    for (int j = 1; j + 1 < np; ++j)
      if (std::abs(cur[j] - expected_interior) > 1e-9) ok = false;
    const double expected_mean = (np - 2) * expected_interior / np;
    if (std::abs(c_mean(h) - expected_mean) > 1e-9) ok = false;
    if (!ok && detail.empty()) detail = "step " + std::to_string(step);
  }
  report(3, ok, "circular-arc curvature matches 2*sin(step/2) closed form", detail);
}

void criterion_4_statistics() {
  const Hairstyle straight = synth_hairstyle(HairKind::Straight, 60, 40, 11);
  const Hairstyle wavy = synth_hairstyle(HairKind::Wavy, 60, 40, 11);
  const Hairstyle curly = synth_hairstyle(HairKind::Curly, 60, 40, 11);
  bool ok = c_mean(straight) < c_mean(wavy) && c_mean(wavy) < c_mean(curly);

  // Parallel strands: exact orientation similarity.
  std::vector<Strand> par;
  for (int i = 0; i < 6; ++i) {
    std::vector<Vec3> pts;
    for (int j = 0; j < 10; ++j) pts.emplace_back(0.1 * i, 0.0, -0.05 * j);
    par.emplace_back(std::move(pts));
  }
  if (cs_ori(Hairstyle(std::move(par))) != 1.0) ok = false;

  // Curliness-class constants load from config verbatim.
  if (parse_config(R"({"c_target": "straight"})").loss.c_target != 2e-2) ok = false;
  if (parse_config(R"({"c_target": "normal"})").loss.c_target != 5e-2) ok = false;
  if (parse_config(R"({"c_target": "wavy"})").loss.c_target != 1e-1) ok = false;
  if (parse_config(R"({"c_target": "curly"})").loss.c_target != 2e-1) ok = false;

  report(4, ok, "curvature ordering straight < wavy < curly; class constants");
}

void criterion_5_fit_recovery() {
  const auto t0 = Clock::now();
  // Long wavy hair on a unit head: stretch each strand away from its root so
  // segments stay well clear of the noise scale (sigma comparable to segment
  // length makes near-collapsed segments and wildly ill-conditioned curvature
  // terms, which no first-order step budget recovers from).
  const Hairstyle base = synth_hairstyle(HairKind::Wavy, 50, 100, 5);
  std::vector<Vec3> stretched = flatten(base);
  for (int i = 0; i < base.strand_count(); ++i) {
    const Vec3 root = base.strand(i).point(0);
    for (int j = 0; j < base.point_count(); ++j)
      stretched[static_cast<size_t>(i) * base.point_count() + j] =
          root + 2.5 * (base.strand(i).point(j) - root);
  }
  const Hairstyle target = rebuild(base, stretched);
  std::mt19937 rng(17);
  std::normal_distribution<double> gauss(0.0, 0.01);
  std::vector<Vec3> pts = flatten(target);
  for (Vec3& p : pts) p += Vec3(gauss(rng), gauss(rng), gauss(rng));
  const Hairstyle init = rebuild(target, pts);

  const double start = rmse(init, target);
  LossConfig cfg;
  OptimSchedule sched;
  sched.step_count = 500;
  sched.learning_rate = 2e-3;
  sched.lr_decay = "cosine";
  auto [fitted, trace] = fit_hairstyle(init, target, cfg, sched);
  const double end = rmse(fitted, target);
  const double secs = seconds_since(t0);
  const bool ok = !trace.aborted && end < 0.1 * start && secs < 120.0;
  std::ostringstream d;
  d << "rmse " << start << " -> " << end << ", " << secs << "s";
  report(5, ok, "noisy hairstyle recovers target (rmse < 10% of initial)", d.str());
}

void criterion_6_collision_elimination() {
  const auto t0 = Clock::now();
  const Hairstyle init = synth_hairstyle(HairKind::Wavy, 30, 25, 4);
  MeshSdf head(make_icosphere(0.4, 2, Vec3(0, 0, 0.5)));
  BoxSdf bbox(Vec3(0, 0, 0), Vec3(5, 5, 5));       // generous: no active term
  HalfSpaceSdf face_hs(Vec3(0, 4, 0), Vec3(0, 1, 0));  // far away
  SdfSources sources{&bbox, &face_hs, &head};

  LossConfig cfg;  // default weights
  OptimSchedule sched;
  sched.step_count = 2000;
  sched.learning_rate = 2e-3;
  sched.lr_decay = "cosine";
  auto [out, trace] = optimize_geometry(init, cfg, sources, sched);

  int inside = 0;
  for (int i = 0; i < out.strand_count(); ++i)
    for (int j = 0; j < out.point_count(); ++j)
      if (head.eval(out.strand(i).point(j)) < 0.0) ++inside;
  const double l_colli = loss_colli(out, head).value;
  const double secs = seconds_since(t0);

  int inside_before = 0;
  for (int i = 0; i < init.strand_count(); ++i)
    for (int j = 0; j < init.point_count(); ++j)
      if (head.eval(init.strand(i).point(j)) < 0.0) ++inside_before;

  const bool ok = !trace.aborted && inside_before > 0 && inside == 0 &&
                  l_colli < 1e-6 && secs < 120.0;
  std::ostringstream d;
  d << "points inside head " << inside_before << " -> " << inside
    << ", L_colli " << l_colli << ", " << secs << "s";
  report(6, ok, "head collisions eliminated under full objective", d.str());
}

void criterion_7_curvature_steering() {
  const auto t0 = Clock::now();
  // Perfectly straight strands are an exact stationary point of the curvature
  // loss (the zero-curvature subgradient is zero), so break the symmetry with
  // a small seeded perturbation.
  Hairstyle init = synth_hairstyle(HairKind::Straight, 30, 25, 6);
  {
    std::mt19937 rng(66);
    std::normal_distribution<double> gauss(0.0, 1e-3);
    std::vector<Vec3> pts = flatten(init);
    for (size_t i = 0; i < pts.size(); ++i)
      if (i % init.point_count() != 0)  // keep roots
        pts[i] += Vec3(gauss(rng), gauss(rng), gauss(rng));
    init = rebuild(init, pts);
  }
  LossConfig cfg;
  cfg.lambda_bbox = cfg.lambda_face = cfg.lambda_colli = 0.0;
  cfg.c_target = 0.1;
  OptimSchedule sched;
  sched.step_count = 1000;
  sched.learning_rate = 2e-3;
  sched.lr_decay = "cosine";
  auto [out, trace] = optimize_geometry(init, cfg, SdfSources{}, sched);
  const double cm = c_mean(out);
  const double secs = seconds_since(t0);
  const bool ok = !trace.aborted && std::abs(cm - 0.1) <= 0.02 && secs < 120.0;
  std::ostringstream d;
  d << "c_mean " << c_mean(init) << " -> " << cm << " (target 0.1), " << secs << "s";
  report(7, ok, "mean curvature steered to within 20% of target", d.str());
}

void criterion_8_dataset() {
  // Requires an external hairstyle dataset that is not bundled.
  std::printf("criterion  8: skip - dataset-wide orientation-similarity survey "
              "(external dataset not available)\n");
}

void criterion_9_io_roundtrips() {
  const fs::path dir = fs::temp_directory_path() / "strandkit_acceptance";
  fs::create_directories(dir);
  bool ok = true;
  std::string detail;

  std::mt19937 rng(9);
  std::uniform_real_distribution<float> uni(-1.0f, 1.0f);
  for (int fixture = 0; fixture < 20 && ok; ++fixture) {
    // Hair binary: coordinates constructed as exact float32 values.
    std::vector<Strand> strands;
    const int ns = 2 + fixture % 5, np = 3 + fixture % 7;
    for (int i = 0; i < ns; ++i) {
      std::vector<Vec3> pts;
      for (int j = 0; j < np; ++j)
        pts.emplace_back(uni(rng), uni(rng), -0.25f * static_cast<float>(j));
      strands.emplace_back(std::move(pts));
    }
    const Hairstyle h(std::move(strands), std::min(4, ns - 1));
    const std::string hp = (dir / "fixture.hair").string();
    write_hair_binary(h, hp);
    const Hairstyle hb = read_hair_binary(hp);
    for (int i = 0; i < h.total_points(); ++i)
      if (hb.flat_point(i) != h.flat_point(i)) ok = false;

    // Mesh round trips: topology exact, coordinates at float precision.
    const TriMesh m = make_icosphere(0.3 + 0.05 * fixture, fixture % 3);
    for (const char* ext : {".obj", ".ply"}) {
      const std::string mp = (dir / ("fixture" + std::string(ext))).string();
      write_mesh(m, mp);
      const TriMesh mb = read_mesh(mp);
      if (mb.triangles != m.triangles) ok = false;
      for (int v = 0; v < m.vertex_count(); ++v)
        if ((mb.vertices[v] - m.vertices[v]).norm() > 1e-6) ok = false;
    }
    if (!ok) detail = "fixture " + std::to_string(fixture);
  }

  // Corruption must fail with positional errors and never partial reads.
  const std::string bad = (dir / "bad.hair").string();
  {
    std::ofstream out(bad, std::ios::binary);
    const std::int32_t two = 2, three = 3;
    out.write(reinterpret_cast<const char*>(&two), 4);
    out.write(reinterpret_cast<const char*>(&three), 4);
    const float v = 1.0f;
    for (int i = 0; i < 9; ++i) out.write(reinterpret_cast<const char*>(&v), 4);
  }
  try {
    read_hair_binary(bad);
    ok = false;
    detail = "truncated file was accepted";
  } catch (const IoError& e) {
    if (std::string(e.what()).find("byte offset") == std::string::npos) {
      ok = false;
      detail = std::string("error lacks byte offset: ") + e.what();
    }
  }

  report(9, ok, "hair/OBJ/PLY round trips on 20 fixtures; positional errors", detail);
}

void criterion_10_determinism() {
  bool ok = true;
  std::string detail;

  // Stats and prismatization: bit-identical across repeat runs.
  const Hairstyle a = synth_hairstyle(HairKind::Curly, 40, 30, 3);
  const Hairstyle b = synth_hairstyle(HairKind::Curly, 40, 30, 3);
  if (cs_ori(a) != cs_ori(b) || c_mean(a) != c_mean(b)) {
    ok = false;
    detail = "stats differ";
  }
  PrismParams params;
  params.radius = 0.003;
  const PrismMesh pa = prismatize_hairstyle(a, params);
  const PrismMesh pb = prismatize_hairstyle(b, params);
  if (pa.mesh.triangles != pb.mesh.triangles) ok = false;
  for (size_t v = 0; ok && v < pa.mesh.vertices.size(); ++v)
    if (pa.mesh.vertices[v] != pb.mesh.vertices[v]) {
      ok = false;
      detail = "prism vertices differ";
    }

  // Optimization: bit-identical outputs and loss traces across 1 vs 8 threads.
  LossConfig cfg;
  cfg.lambda_bbox = cfg.lambda_face = cfg.lambda_colli = 0.0;
  OptimSchedule sched;
  sched.step_count = 60;
  const int saved = thread_count();
  set_thread_count(1);
  auto [o1, t1] = optimize_geometry(a, cfg, SdfSources{}, sched);
  set_thread_count(8);
  auto [o8, t8] = optimize_geometry(a, cfg, SdfSources{}, sched);
  set_thread_count(saved);
  for (int i = 0; ok && i < o1.total_points(); ++i)
    if (o1.flat_point(i) != o8.flat_point(i)) {
      ok = false;
      detail = "optimized points differ across thread counts";
    }
  if (t1.records.size() != t8.records.size()) ok = false;
  for (size_t r = 0; ok && r < t1.records.size(); ++r)
    if (t1.records[r].loss != t8.records[r].loss) {
      ok = false;
      detail = "loss trace differs across thread counts";
    }

  report(10, ok, "bit-identical repeat runs; identical losses across 1 vs 8 threads",
         detail);
}

}  // namespace

int main() {
  criterion_1_watertightness();
  criterion_2_gradients();
  criterion_3_arc_curvature();
  criterion_4_statistics();
  criterion_5_fit_recovery();
  criterion_6_collision_elimination();
  criterion_7_curvature_steering();
  criterion_8_dataset();
  criterion_9_io_roundtrips();
  criterion_10_determinism();

  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
