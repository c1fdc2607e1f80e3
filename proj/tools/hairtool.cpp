// hairtool: command-line pipeline over strand geometry artifacts.
//
// Exit codes: 0 success, 1 validation failure, 2 usage error, 3 I/O error,
// 4 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "strandkit/io.hpp"
#include "strandkit/losses.hpp"
#include "strandkit/meshfit.hpp"
#include "strandkit/optimize.hpp"
#include "strandkit/parallel.hpp"
#include "strandkit/prismatize.hpp"

using namespace strandkit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

struct StatsRow {
  std::string name;
  int strands = 0;
  int points = 0;
  double cs_ori = 0.0;
  double c_mean = 0.0;
  std::vector<int> histogram;  // per-strand mean curvature, 20 bins over [0, 0.5]
};

std::vector<int> curvature_histogram(const Hairstyle& hair) {
  std::vector<int> bins(20, 0);
  for (int i = 0; i < hair.strand_count(); ++i) {
    const auto cur = curvatures(hair.strand(i), i);
    double mean = 0.0;
    for (double c : cur) mean += c;
    mean /= cur.size();
    int b = static_cast<int>(mean / 0.5 * 20.0);
    b = std::clamp(b, 0, 19);
    ++bins[b];
  }
  return bins;
}

StatsRow compute_stats(const Hairstyle& hair, const std::string& name) {
  StatsRow row;
  row.name = name;
  row.strands = hair.strand_count();
  row.points = hair.point_count();
  row.cs_ori = hair.strand_count() > 1 ? cs_ori(hair) : 1.0;
  row.c_mean = c_mean(hair);
  row.histogram = curvature_histogram(hair);
  return row;
}

void print_stats_human(const StatsRow& row) {
  std::cout << row.name << "\n"
            << "  strands: " << row.strands << "\n"
            << "  points per strand: " << row.points << "\n"
            << "  cs_ori: " << row.cs_ori << "\n"
            << "  c_mean: " << row.c_mean << "\n"
            << "  curvature histogram (20 bins over [0, 0.5]):";
  for (int b : row.histogram) std::cout << ' ' << b;
  std::cout << "\n";
}

json stats_to_json(const StatsRow& row) {
  return json{{"name", row.name},
              {"strands", row.strands},
              {"points", row.points},
              {"cs_ori", row.cs_ori},
              {"c_mean", row.c_mean},
              {"histogram", row.histogram}};
}

bool is_hair_file(const fs::path& p) {
  const std::string ext = p.extension().string();
  return ext == ".hair" || ext == ".data" || ext == ".bin" || ext == ".json";
}

int count_collisions(const Hairstyle& hair, const SdfSource& head) {
  int n = 0;
  for (int i = 0; i < hair.strand_count(); ++i)
    for (int j = 0; j < hair.point_count(); ++j)
      if (head.eval(hair.strand(i).point(j)) < 0.0) ++n;
  return n;
}

void write_trace_csv(const OptimTrace& trace, const std::string& path) {
  AtomicWriter w(path);
  w.stream() << "step,loss,grad_norm\n";
  for (const auto& rec : trace.records)
    w.stream() << rec.step << ',' << rec.loss << ',' << rec.grad_norm << '\n';
  w.commit();
}

// ---------------------------------------------------------------------------
// stats

int cmd_stats(const std::string& path, bool as_json, int resample) {
  std::vector<StatsRow> rows;
  if (fs::is_directory(path)) {
    if (resample == 0) resample = 100;  // dataset strands vary in length
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path))
      if (e.is_regular_file() && is_hair_file(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      std::cerr << "no hairstyle files in " << path << "\n";
      return kExitIo;
    }
    for (const auto& f : files)
      rows.push_back(
          compute_stats(read_hairstyle(f.string(), resample), f.filename().string()));
  } else {
    rows.push_back(compute_stats(read_hairstyle(path, resample), path));
  }

  int high = 0;
  for (const auto& r : rows)
    if (r.cs_ori > 0.9) ++high;
  const double fraction = static_cast<double>(high) / rows.size();

  if (as_json) {
    json doc;
    doc["hairstyles"] = json::array();
    for (const auto& r : rows) doc["hairstyles"].push_back(stats_to_json(r));
    doc["fraction_cs_ori_above_0.9"] = fraction;
    std::cout << doc.dump(2) << "\n";
  } else {
    for (const auto& r : rows) print_stats_human(r);
    if (rows.size() > 1)
      std::cout << "fraction with cs_ori > 0.9: " << fraction << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// prismatize / validate

int cmd_prismatize(const std::string& hair_path, const std::string& out_path,
                   int k, double radius, double scalp_area,
                   const std::vector<double>& ref, int resample) {
  const Hairstyle hair = read_hairstyle(hair_path, resample);
  PrismParams params;
  params.k_edges = k;
  if (radius > 0)
    params.radius = radius;
  else if (scalp_area > 0)
    params.radius = default_radius(scalp_area, std::max(1, hair.strand_count()));
  if (ref.size() == 3) params.reference_point = Vec3(ref[0], ref[1], ref[2]);

  const PrismMesh prism = prismatize_hairstyle(hair, params);
  write_mesh(prism.mesh, out_path);

  const ValidationReport report = validate_mesh(prism.mesh);
  std::cout << report.summary();
  std::cout << "vertices: " << prism.mesh.vertex_count()
            << "  triangles: " << prism.mesh.triangle_count() << "\n";
  if (!hair.strands().empty() && !report.all_watertight()) {
    std::cerr << "prismatization produced a non-watertight mesh\n";
    return kExitValidation;
  }
  return kExitOk;
}

int cmd_validate(const std::string& mesh_path) {
  const TriMesh mesh = read_mesh(mesh_path);
  const ValidationReport report = validate_mesh(mesh);
  std::cout << report.summary();
  return report.all_watertight() ? kExitOk : kExitValidation;
}

// ---------------------------------------------------------------------------
// synth

int cmd_synth(const std::string& kind, int n_strands, int n_points,
              std::uint32_t seed, const std::string& out_path) {
  const Hairstyle hair =
      synth_hairstyle(hair_kind_from_string(kind), n_strands, n_points, seed);
  if (fs::path(out_path).extension() == ".json")
    write_hair_json(hair, out_path);
  else
    write_hair_binary(hair, out_path);
  std::cout << "wrote " << n_strands << " strands x " << n_points << " points to "
            << out_path << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// fit / optimize

int run_fit(const std::string& init_path, const std::string& synth_kind,
            const std::string& target_path, const RunConfig& cfg,
            const std::string& out_path, const std::string& trace_path) {
  // Read as-is: a shape mismatch between init and target is a usage error,
  // not something to quietly fix by resampling.
  const Hairstyle target = read_hairstyle(target_path);
  Hairstyle init;
  if (!synth_kind.empty())
    init = synth_hairstyle(hair_kind_from_string(synth_kind), target.strand_count(),
                           target.point_count(), cfg.seed);
  else
    init = read_hairstyle(init_path);

  if (init.strand_count() != target.strand_count() ||
      init.point_count() != target.point_count()) {
    std::cerr << "init and target shapes differ: " << init.strand_count() << "x"
              << init.point_count() << " vs " << target.strand_count() << "x"
              << target.point_count() << "\n";
    return kExitUsage;
  }

  auto [fitted, trace] = fit_hairstyle(init, target, cfg.loss, cfg.schedule,
                                       cfg.freeze_roots);
  if (trace.aborted) {
    std::cerr << "optimization aborted: " << trace.abort_reason << "\n";
    return kExitNumerical;
  }
  write_hair_binary(fitted, out_path);
  if (!trace_path.empty()) write_trace_csv(trace, trace_path);
  std::cout << "initial loss: " << trace.records.front().loss
            << "\nfinal loss: " << trace.records.back().loss
            << "\nsteps: " << trace.records.size() << "\n";
  return kExitOk;
}

int run_optimize(const std::string& init_path, const RunConfig& cfg,
                 const std::string& out_path, const std::string& trace_path) {
  const Hairstyle init = read_hairstyle(init_path);

  std::unique_ptr<SdfSource> bbox, face, head;
  SdfSources sources;
  if (cfg.bbox) sources.bbox = (bbox = cfg.bbox->build()).get();
  if (cfg.face) sources.face = (face = cfg.face->build()).get();
  if (cfg.head) sources.head = (head = cfg.head->build()).get();
  if (cfg.loss.lambda_colli > 0 && !sources.head) {
    std::cerr << "lambda_colli > 0 requires a 'head' SDF source in the config\n";
    return kExitUsage;
  }
  if (cfg.loss.lambda_bbox > 0 && !sources.bbox) {
    std::cerr << "lambda_bbox > 0 requires a 'bbox' SDF source in the config\n";
    return kExitUsage;
  }
  if (cfg.loss.lambda_face > 0 && !sources.face) {
    std::cerr << "lambda_face > 0 requires a 'face' SDF source in the config\n";
    return kExitUsage;
  }

  auto print_block = [&](const char* label, const Hairstyle& h) {
    std::cout << label << ": cs_ori=" << (h.strand_count() > 1 ? cs_ori(h) : 1.0)
              << " c_mean=" << c_mean(h);
    if (sources.head)
      std::cout << " collisions=" << count_collisions(h, *sources.head);
    std::cout << "\n";
  };
  print_block("before", init);

  auto [out, trace] =
      optimize_geometry(init, cfg.loss, sources, cfg.schedule, cfg.freeze_roots);
  if (trace.aborted) {
    std::cerr << "optimization aborted: " << trace.abort_reason << "\n";
    return kExitNumerical;
  }
  print_block("after", out);
  std::cout << "final loss: " << trace.records.back().loss << "\n";

  write_hair_binary(out, out_path);
  if (!trace_path.empty()) write_trace_csv(trace, trace_path);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck

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
  return Hairstyle(std::move(strands));
}

Hairstyle random_gradcheck_hairstyle(std::mt19937& rng, int ns, int np) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<Strand> strands;
  for (int i = 0; i < ns; ++i) {
    const Vec3 root(uni(rng), uni(rng), 1.0 + 0.2 * uni(rng));
    const double ph1 = 3.0 * uni(rng), ph2 = 3.0 * uni(rng), ph3 = 3.0 * uni(rng);
    std::vector<Vec3> pts;
    for (int j = 0; j < np; ++j) {
      const double t = static_cast<double>(j) / (np - 1);
      Vec3 p = root + Vec3(0, 0, -1.0) * t;
      p += 0.05 * Vec3(std::sin(3 * t + ph1), std::cos(5 * t + ph2),
                       std::sin(7 * t + ph3));
      pts.push_back(p);
    }
    strands.emplace_back(std::move(pts));
  }
  return Hairstyle(std::move(strands));
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

int cmd_gradcheck(std::uint32_t seed, int instances, bool flip_grad) {
  if (instances <= 0) {
    std::cerr << "--instances must be positive\n";
    return kExitUsage;
  }
  std::mt19937 rng(seed);
  // At least 5 strands so the default k=4 root adjacency is defined.
  std::uniform_int_distribution<int> ns_dist(5, 10), np_dist(5, 20);
  const double h = 1e-5;
  const double tol = 1e-4;
  bool all_ok = true;

  auto fd = [&](const Hairstyle& like, const std::function<double(const Hairstyle&)>& f) {
    std::vector<Vec3> pts = flatten(like);
    std::vector<Vec3> g(pts.size(), Vec3::Zero());
    for (size_t i = 0; i < pts.size(); ++i)
      for (int a = 0; a < 3; ++a) {
        const double orig = pts[i][a];
        pts[i][a] = orig + h;
        const double fp = f(rebuild(like, pts));
        pts[i][a] = orig - h;
        const double fm = f(rebuild(like, pts));
        pts[i][a] = orig;
        g[i][a] = (fp - fm) / (2 * h);
      }
    return g;
  };

  auto report = [&](const std::string& name, double err) {
    const bool ok = err <= tol;
    all_ok = all_ok && ok;
    std::cout << (ok ? "pass" : "FAIL") << "  " << name << "  rel_error=" << err
              << "\n";
  };

  MeshSdf head(make_icosphere(0.6, 2, Vec3(0, 0, 0.8)));
  BoxSdf bbox(Vec3(0, 0, 0.5), Vec3(0.9, 0.9, 0.8));
  HalfSpaceSdf face_hs(Vec3(0, 0.4, 0.5), Vec3(0, 1, 0));

  for (int inst = 0; inst < instances; ++inst) {
    const int ns = ns_dist(rng), np = np_dist(rng);
    const Hairstyle hair = random_gradcheck_hairstyle(rng, ns, np);
    const Hairstyle target = random_gradcheck_hairstyle(rng, ns, np);
    const std::string tag = " [" + std::to_string(inst) + "]";

    auto check_loss = [&](const std::string& name,
                          const std::function<LossValue(const Hairstyle&)>& loss) {
      LossValue lv = loss(hair);
      if (flip_grad)
        for (auto& g : lv.grad) g = -g;
      const auto num = fd(hair, [&](const Hairstyle& x) { return loss(x).value; });
      report(name + tag, rel_error(lv.grad, num));
    };

    check_loss("loss_fit", [&](const Hairstyle& x) {
      return loss_fit(x, target, 5e-2, 1.0);
    });
    check_loss("loss_ori", [&](const Hairstyle& x) { return loss_ori(x); });
    check_loss("loss_cur", [&](const Hairstyle& x) { return loss_cur(x, 0.1); });
    check_loss("loss_bbox", [&](const Hairstyle& x) { return loss_bbox(x, bbox); });
    check_loss("loss_face", [&](const Hairstyle& x) { return loss_face(x, face_hs); });
    check_loss("loss_colli", [&](const Hairstyle& x) { return loss_colli(x, head); });

    // Prismatization vertex Jacobian against a fixed downstream functional.
    {
      PrismParams params;
      params.radius = 0.02;
      auto vertex_loss = [](const PrismMesh& pm) {
        double acc = 0.0;
        for (size_t v = 0; v < pm.mesh.vertices.size(); ++v)
          acc += pm.mesh.vertices[v].dot(
              Vec3(std::sin(0.1 * v), std::cos(0.2 * v), 0.5));
        return acc;
      };
      const PrismMesh pm = prismatize_hairstyle(hair, params);
      std::vector<Vec3> vgrads(pm.mesh.vertices.size());
      for (size_t v = 0; v < vgrads.size(); ++v)
        vgrads[v] = Vec3(std::sin(0.1 * v), std::cos(0.2 * v), 0.5);
      std::vector<Vec3> analytic = backprop_vertices(pm, vgrads, hair, params);
      if (flip_grad)
        for (auto& g : analytic) g = -g;
      const auto num = fd(hair, [&](const Hairstyle& x) {
        return vertex_loss(prismatize_hairstyle(x, params));
      });
      report("dp_jacobian" + tag, rel_error(analytic, num));
    }
  }

  if (!all_ok) {
    std::cerr << "gradient check failed\n";
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"strand geometry toolkit"};
  app.require_subcommand(1);

  int threads = 0;
  std::string config_path;
  app.add_option("--threads", threads, "worker thread count (0 = hardware)");
  app.add_option("--config", config_path, "JSON config file");

  // stats
  std::string stats_path;
  bool stats_json = false;
  int stats_resample = 0;
  auto* stats = app.add_subcommand("stats", "hairstyle statistics");
  stats->add_option("path", stats_path, "hair file or dataset directory")->required();
  stats->add_flag("--json", stats_json, "emit one JSON document");
  stats->add_option("--resample", stats_resample, "resample strands to this point count");

  // prismatize
  std::string pris_in, pris_out;
  int pris_k = 4;
  double pris_radius = 0.0, pris_area = 0.0;
  std::vector<double> pris_ref;
  int pris_resample = 0;
  auto* pris = app.add_subcommand("prismatize", "convert strands to a prism mesh");
  pris->add_option("hair", pris_in)->required();
  pris->add_option("--out", pris_out, "output mesh (.obj or .ply)")->required();
  pris->add_option("--k", pris_k, "lateral edges per prism");
  pris->add_option("--radius", pris_radius, "prism radius");
  pris->add_option("--scalp-area", pris_area, "derive radius from scalp area");
  pris->add_option("--ref", pris_ref, "reference point x y z")->expected(3);
  pris->add_option("--resample", pris_resample);

  // validate
  std::string val_path;
  auto* val = app.add_subcommand("validate", "check a mesh for watertightness");
  val->add_option("mesh", val_path)->required();

  // synth
  std::string synth_kind = "straight", synth_out;
  int synth_ns = 3000, synth_np = 100;
  std::uint32_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "generate a synthetic hairstyle");
  synth->add_option("--kind", synth_kind, "straight | wavy | curly");
  synth->add_option("--strands", synth_ns);
  synth->add_option("--points", synth_np);
  synth->add_option("--seed", synth_seed);
  synth->add_option("--out", synth_out)->required();

  // fit
  std::string fit_init, fit_synth, fit_target, fit_out, fit_trace;
  auto* fit = app.add_subcommand("fit", "fit a hairstyle to a target");
  fit->add_option("target", fit_target)->required();
  fit->add_option("--init", fit_init, "initial hairstyle file");
  fit->add_option("--synth", fit_synth, "synthesize the init instead");
  fit->add_option("--out", fit_out)->required();
  fit->add_option("--trace", fit_trace, "per-step loss CSV");

  // optimize
  std::string opt_init, opt_out, opt_trace;
  auto* opt = app.add_subcommand("optimize", "regularized geometry optimization");
  opt->add_option("init", opt_init)->required();
  opt->add_option("--out", opt_out)->required();
  opt->add_option("--trace", opt_trace, "per-step loss CSV");

  // gradcheck
  std::uint32_t gc_seed = 0;
  int gc_instances = 20;
  bool gc_flip = false;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient audit");
  gc->add_option("--seed", gc_seed);
  gc->add_option("--instances", gc_instances);
  gc->add_flag("--flip-grad", gc_flip)->group("");  // test hook, hidden

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (threads > 0) set_thread_count(threads);
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);

    if (*stats) return cmd_stats(stats_path, stats_json, stats_resample);
    if (*pris)
      return cmd_prismatize(pris_in, pris_out, pris_k, pris_radius, pris_area,
                            pris_ref, pris_resample);
    if (*val) return cmd_validate(val_path);
    if (*synth) return cmd_synth(synth_kind, synth_ns, synth_np, synth_seed, synth_out);
    if (*fit) {
      if (fit_init.empty() == fit_synth.empty()) {
        std::cerr << "fit needs exactly one of --init or --synth\n";
        return kExitUsage;
      }
      return run_fit(fit_init, fit_synth, fit_target, cfg, fit_out, fit_trace);
    }
    if (*opt) return run_optimize(opt_init, cfg, opt_out, opt_trace);
    if (*gc) return cmd_gradcheck(gc_seed, gc_instances, gc_flip);
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const DegenerateSegmentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
