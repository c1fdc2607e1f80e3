#include "strandkit/io.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "strandkit/prismatize.hpp"

namespace strandkit {

namespace {

using nlohmann::json;

template <typename T>
T read_le(std::istream& in, const std::string& path, std::uint64_t& offset) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in)
    throw IoError("truncated read at byte offset " + std::to_string(offset) +
                  " in " + path);
  offset += sizeof(T);
  return value;
}

template <typename T>
void write_le(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

bool has_extension(const std::string& path, const std::string& ext) {
  auto p = std::filesystem::path(path).extension().string();
  for (auto& c : p) c = static_cast<char>(std::tolower(c));
  return p == ext;
}

Hairstyle finalize_hair(std::vector<Strand> strands, int resample_to,
                        bool* resampled) {
  bool any = false;
  if (resample_to > 0) {
    for (auto& s : strands)
      if (s.size() != resample_to) {
        s = resample_strand(s, resample_to);
        any = true;
      }
  } else if (!strands.empty()) {
    const int np = strands[0].size();
    for (const auto& s : strands)
      if (s.size() != np)
        throw IoError(
            "strands have heterogeneous point counts; pass a resample target");
  }
  if (resampled) *resampled = any;
  return Hairstyle(std::move(strands));
}

}  // namespace

Hairstyle read_hair_binary(const std::string& path, int resample_to,
                           bool* resampled) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::uint64_t offset = 0;

  std::int32_t strand_count;
  try {
    strand_count = read_le<std::int32_t>(in, path, offset);
  } catch (const IoError&) {
    throw IoError("truncated header in " + path);
  }
  if (strand_count < 0)
    throw IoError("negative strand count at byte offset 0 in " + path);

  std::vector<Strand> strands;
  strands.reserve(strand_count);
  for (std::int32_t i = 0; i < strand_count; ++i) {
    const std::uint64_t count_offset = offset;
    const std::int32_t nv = read_le<std::int32_t>(in, path, offset);
    if (nv < 2)
      throw IoError("strand " + std::to_string(i) + " declares " +
                    std::to_string(nv) + " vertices at byte offset " +
                    std::to_string(count_offset) + " in " + path);
    std::vector<Vec3> pts;
    pts.reserve(nv);
    for (std::int32_t j = 0; j < nv; ++j) {
      const float x = read_le<float>(in, path, offset);
      const float y = read_le<float>(in, path, offset);
      const float z = read_le<float>(in, path, offset);
      pts.emplace_back(x, y, z);
    }
    strands.emplace_back(std::move(pts));
  }
  in.peek();
  if (!in.eof())
    throw IoError("trailing bytes after declared data at byte offset " +
                  std::to_string(offset) + " in " + path);
  return finalize_hair(std::move(strands), resample_to, resampled);
}

void write_hair_binary(const Hairstyle& hair, const std::string& path) {
  AtomicWriter w(path);
  write_le<std::int32_t>(w.stream(), hair.strand_count());
  for (int i = 0; i < hair.strand_count(); ++i) {
    const Strand& s = hair.strand(i);
    write_le<std::int32_t>(w.stream(), s.size());
    for (int j = 0; j < s.size(); ++j) {
      write_le<float>(w.stream(), static_cast<float>(s.point(j).x()));
      write_le<float>(w.stream(), static_cast<float>(s.point(j).y()));
      write_le<float>(w.stream(), static_cast<float>(s.point(j).z()));
    }
  }
  w.commit();
}

Hairstyle read_hair_json(const std::string& path, int resample_to) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw IoError("JSON parse error in " + path + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("strands"))
    throw IoError("hair JSON must be an object with a \"strands\" array: " + path);
  std::vector<Strand> strands;
  for (const auto& js : doc["strands"]) {
    std::vector<Vec3> pts;
    for (const auto& jp : js) {
      if (!jp.is_array() || jp.size() != 3)
        throw IoError("point must be [x,y,z] in " + path);
      pts.emplace_back(jp[0].get<double>(), jp[1].get<double>(),
                       jp[2].get<double>());
    }
    strands.emplace_back(std::move(pts));
  }
  return finalize_hair(std::move(strands), resample_to, nullptr);
}

void write_hair_json(const Hairstyle& hair, const std::string& path) {
  json doc;
  doc["strands"] = json::array();
  for (int i = 0; i < hair.strand_count(); ++i) {
    json js = json::array();
    for (int j = 0; j < hair.strand(i).size(); ++j) {
      const Vec3& p = hair.strand(i).point(j);
      js.push_back({p.x(), p.y(), p.z()});
    }
    doc["strands"].push_back(std::move(js));
  }
  AtomicWriter w(path);
  w.stream() << doc.dump(1) << "\n";
  w.commit();
}

Hairstyle read_hairstyle(const std::string& path, int resample_to) {
  if (has_extension(path, ".json")) return read_hair_json(path, resample_to);
  return read_hair_binary(path, resample_to);
}

// ------------------------------------------------------------------- OBJ

TriMesh read_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  TriMesh mesh;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "#" || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z))
        throw IoError("malformed vertex at line " + std::to_string(lineno) +
                      " in " + path);
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        // Accept v, v/vt, v/vt/vn, v//vn.
        const std::string head = tok.substr(0, tok.find('/'));
        int v;
        try {
          v = std::stoi(head);
        } catch (...) {
          throw IoError("malformed face index '" + tok + "' at line " +
                        std::to_string(lineno) + " in " + path);
        }
        if (v < 0) v = static_cast<int>(mesh.vertices.size()) + v + 1;
        if (v < 1 || v > static_cast<int>(mesh.vertices.size()))
          throw IoError("face index out of range at line " +
                        std::to_string(lineno) + " in " + path);
        idx.push_back(v - 1);
      }
      if (idx.size() < 3)
        throw IoError("face with fewer than 3 vertices at line " +
                      std::to_string(lineno) + " in " + path);
      for (size_t k = 1; k + 1 < idx.size(); ++k)
        mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
    }
    // Other records (vn, vt, o, g, s, usemtl, mtllib) are ignored.
  }
  return mesh;
}

void write_obj(const TriMesh& mesh, const std::string& path) {
  AtomicWriter w(path);
  auto& out = w.stream();
  out.precision(9);
  for (const auto& v : mesh.vertices)
    out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const auto& t : mesh.triangles)
    out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
  w.commit();
}

// ------------------------------------------------------------------- PLY

TriMesh read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "ply")
    throw IoError("missing 'ply' magic at line 1 in " + path);

  long n_vertices = -1, n_faces = -1;
  bool binary_le = false;
  int lineno = 1;
  std::vector<std::string> vertex_props;
  std::string current_element;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "comment") continue;
    if (tag == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "binary_little_endian") binary_le = true;
      else
        throw IoError("unsupported PLY format '" + fmt + "' at line " +
                      std::to_string(lineno) + " in " + path);
    } else if (tag == "element") {
      std::string name;
      long count;
      ls >> name >> count;
      current_element = name;
      if (name == "vertex") n_vertices = count;
      else if (name == "face") n_faces = count;
      else
        throw IoError("unsupported PLY element '" + name + "' at line " +
                      std::to_string(lineno) + " in " + path);
    } else if (tag == "property") {
      if (current_element == "vertex") {
        std::string type, name;
        ls >> type >> name;
        if (type != "float")
          throw IoError("unsupported vertex property type '" + type +
                        "' at line " + std::to_string(lineno) + " in " + path);
        vertex_props.push_back(name);
      }
    } else if (tag == "end_header") {
      break;
    } else {
      throw IoError("unexpected header line " + std::to_string(lineno) +
                    " in " + path);
    }
  }
  if (!binary_le || n_vertices < 0 || n_faces < 0)
    throw IoError("incomplete PLY header in " + path);
  if (vertex_props.size() < 3 || vertex_props[0] != "x" ||
      vertex_props[1] != "y" || vertex_props[2] != "z")
    throw IoError("PLY vertex element must start with float x y z in " + path);

  std::uint64_t offset = static_cast<std::uint64_t>(in.tellg());
  TriMesh mesh;
  mesh.vertices.reserve(n_vertices);
  for (long i = 0; i < n_vertices; ++i) {
    float xyz[3];
    for (int a = 0; a < 3; ++a) xyz[a] = read_le<float>(in, path, offset);
    // Skip any extra float vertex properties.
    for (size_t a = 3; a < vertex_props.size(); ++a) read_le<float>(in, path, offset);
    mesh.vertices.emplace_back(xyz[0], xyz[1], xyz[2]);
  }
  mesh.triangles.reserve(n_faces);
  for (long f = 0; f < n_faces; ++f) {
    const auto n = read_le<std::uint8_t>(in, path, offset);
    if (n < 3)
      throw IoError("face with fewer than 3 indices at byte offset " +
                    std::to_string(offset - 1) + " in " + path);
    std::vector<std::int32_t> idx(n);
    for (int a = 0; a < n; ++a) {
      idx[a] = read_le<std::int32_t>(in, path, offset);
      if (idx[a] < 0 || idx[a] >= n_vertices)
        throw IoError("face index out of range at byte offset " +
                      std::to_string(offset - 4) + " in " + path);
    }
    for (int a = 1; a + 1 < n; ++a)
      mesh.triangles.push_back({idx[0], idx[a], idx[a + 1]});
  }
  return mesh;
}

void write_ply(const TriMesh& mesh, const std::string& path) {
  AtomicWriter w(path);
  auto& out = w.stream();
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << mesh.vertex_count() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "element face " << mesh.triangle_count() << "\n"
      << "property list uchar int vertex_indices\n"
      << "end_header\n";
  for (const auto& v : mesh.vertices) {
    write_le<float>(out, static_cast<float>(v.x()));
    write_le<float>(out, static_cast<float>(v.y()));
    write_le<float>(out, static_cast<float>(v.z()));
  }
  for (const auto& t : mesh.triangles) {
    write_le<std::uint8_t>(out, 3);
    for (int a = 0; a < 3; ++a) write_le<std::int32_t>(out, t[a]);
  }
  w.commit();
}

TriMesh read_mesh(const std::string& path) {
  if (has_extension(path, ".obj")) return read_obj(path);
  if (has_extension(path, ".ply")) return read_ply(path);
  throw IoError("unsupported mesh extension (want .obj or .ply): " + path);
}

void write_mesh(const TriMesh& mesh, const std::string& path) {
  if (has_extension(path, ".obj")) return write_obj(mesh, path);
  if (has_extension(path, ".ply")) return write_ply(mesh, path);
  throw IoError("unsupported mesh extension (want .obj or .ply): " + path);
}

// ---------------------------------------------------------------- config

std::unique_ptr<SdfSource> SdfSourceConfig::build() const {
  if (kind == "box") return std::make_unique<BoxSdf>(center, half_extents);
  if (kind == "half_space") return std::make_unique<HalfSpaceSdf>(plane_point, normal);
  if (kind == "mesh") return std::make_unique<MeshSdf>(read_mesh(mesh_path));
  if (kind == "icosphere")
    return std::make_unique<MeshSdf>(make_icosphere(radius, subdivisions, center));
  throw IoError("unknown SDF source kind: " + kind);
}

double RunConfig::resolved_radius() const {
  if (radius > 0.0) return radius;
  if (scalp_area > 0.0) return default_radius(scalp_area, n_strands);
  return 0.01;
}

double c_target_for(const std::string& kind) {
  if (kind == "straight") return 2e-2;
  if (kind == "normal") return 5e-2;
  if (kind == "wavy") return 1e-1;
  if (kind == "curly") return 2e-1;
  throw IoError("unknown curliness class: " + kind);
}

namespace {

Vec3 parse_vec3(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 3)
    throw IoError("config key '" + key + "' must be a 3-element array");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

double parse_weight(const json& j, const std::string& key) {
  if (!j.is_number())
    throw IoError("config key '" + key + "' must be a number");
  const double v = j.get<double>();
  if (v < 0) throw IoError("config key '" + key + "' must be non-negative");
  return v;
}

SdfSourceConfig parse_sdf_source(const json& j, const std::string& prefix) {
  static const std::set<std::string> known = {
      "kind", "center", "half_extents", "plane_point",
      "normal", "mesh_path", "radius", "subdivisions"};
  SdfSourceConfig cfg;
  for (const auto& [key, val] : j.items()) {
    if (!known.count(key))
      throw IoError("unknown config key '" + prefix + "." + key + "'");
    if (key == "kind") cfg.kind = val.get<std::string>();
    else if (key == "center") cfg.center = parse_vec3(val, prefix + ".center");
    else if (key == "half_extents")
      cfg.half_extents = parse_vec3(val, prefix + ".half_extents");
    else if (key == "plane_point")
      cfg.plane_point = parse_vec3(val, prefix + ".plane_point");
    else if (key == "normal") cfg.normal = parse_vec3(val, prefix + ".normal");
    else if (key == "mesh_path") cfg.mesh_path = val.get<std::string>();
    else if (key == "radius") cfg.radius = val.get<double>();
    else if (key == "subdivisions") cfg.subdivisions = val.get<int>();
  }
  if (cfg.kind.empty())
    throw IoError("config key '" + prefix + ".kind' is required");
  if (cfg.kind != "box" && cfg.kind != "half_space" && cfg.kind != "mesh" &&
      cfg.kind != "icosphere")
    throw IoError("unknown SDF source kind: " + cfg.kind);
  return cfg;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json doc;
  if (json_text.empty() ||
      json_text.find_first_not_of(" \t\r\n") == std::string::npos) {
    doc = json::object();
  } else {
    try {
      doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
      throw IoError(std::string("config parse error: ") + e.what());
    }
  }
  if (!doc.is_object()) throw IoError("config must be a JSON object");

  RunConfig cfg;
  for (const auto& [key, val] : doc.items()) {
    try {
      if (key == "lambda_ori_fit") cfg.loss.lambda_ori_fit = parse_weight(val, key);
      else if (key == "lambda_cur_fit") cfg.loss.lambda_cur_fit = parse_weight(val, key);
      else if (key == "lambda_ori") cfg.loss.lambda_ori = parse_weight(val, key);
      else if (key == "lambda_cur") cfg.loss.lambda_cur = parse_weight(val, key);
      else if (key == "lambda_bbox") cfg.loss.lambda_bbox = parse_weight(val, key);
      else if (key == "lambda_face") cfg.loss.lambda_face = parse_weight(val, key);
      else if (key == "lambda_colli") cfg.loss.lambda_colli = parse_weight(val, key);
      else if (key == "lambda_chamf") cfg.loss.lambda_chamf = parse_weight(val, key);
      else if (key == "lambda_edge") cfg.loss.lambda_edge = parse_weight(val, key);
      else if (key == "lambda_nor") cfg.loss.lambda_nor = parse_weight(val, key);
      else if (key == "lambda_lap") cfg.loss.lambda_lap = parse_weight(val, key);
      else if (key == "lambda_prior") cfg.loss.lambda_prior = parse_weight(val, key);
      else if (key == "c_target") {
        if (val.is_string()) cfg.loss.c_target = c_target_for(val.get<std::string>());
        else cfg.loss.c_target = parse_weight(val, key);
        if (cfg.loss.c_target > 2.0)
          throw IoError("config key 'c_target' must lie in [0, 2]");
      } else if (key == "step_count") cfg.schedule.step_count = val.get<int>();
      else if (key == "learning_rate") cfg.schedule.learning_rate = val.get<double>();
      else if (key == "adam_betas") {
        if (!val.is_array() || val.size() != 2)
          throw IoError("config key 'adam_betas' must be a 2-element array");
        cfg.schedule.beta1 = val[0].get<double>();
        cfg.schedule.beta2 = val[1].get<double>();
      } else if (key == "adam_eps") cfg.schedule.adam_eps = val.get<double>();
      else if (key == "convergence_tol") cfg.schedule.convergence_tol = val.get<double>();
      else if (key == "lr_decay") cfg.schedule.lr_decay = val.get<std::string>();
      else if (key == "log_every") cfg.schedule.log_every = val.get<int>();
      else if (key == "k_edges") cfg.k_edges = val.get<int>();
      else if (key == "radius") cfg.radius = val.get<double>();
      else if (key == "scalp_area") cfg.scalp_area = val.get<double>();
      else if (key == "reference_point")
        cfg.reference_point = parse_vec3(val, key);
      else if (key == "n_strands") cfg.n_strands = val.get<int>();
      else if (key == "n_points") cfg.n_points = val.get<int>();
      else if (key == "seed") cfg.seed = val.get<std::uint32_t>();
      else if (key == "freeze_roots") cfg.freeze_roots = val.get<bool>();
      else if (key == "bbox") cfg.bbox = parse_sdf_source(val, "bbox");
      else if (key == "face") cfg.face = parse_sdf_source(val, "face");
      else if (key == "head") cfg.head = parse_sdf_source(val, "head");
      else throw IoError("unknown config key '" + key + "'");
    } catch (const json::exception& e) {
      throw IoError("config key '" + key + "': " + e.what());
    }
  }
  cfg.loss.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace strandkit
