#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "strandkit/losses.hpp"
#include "strandkit/mesh.hpp"
#include "strandkit/optimize.hpp"
#include "strandkit/strand.hpp"

namespace strandkit {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Little-endian hair binary: int32 strand_count, then per strand
// int32 vertex_count followed by vertex_count * 3 float32.
// resample_to > 0 forces every strand to that point count on read;
// `resampled`, when given, reports whether any strand was resampled.
Hairstyle read_hair_binary(const std::string& path, int resample_to = 0,
                           bool* resampled = nullptr);
void write_hair_binary(const Hairstyle& hair, const std::string& path);

// Human-readable JSON fixture format: {"strands": [[[x,y,z], ...], ...]}.
Hairstyle read_hair_json(const std::string& path, int resample_to = 0);
void write_hair_json(const Hairstyle& hair, const std::string& path);

// Auto-detects binary vs JSON by extension (.json).
Hairstyle read_hairstyle(const std::string& path, int resample_to = 0);

// ASCII OBJ (v/f records) and binary little-endian PLY.
TriMesh read_mesh(const std::string& path);
void write_mesh(const TriMesh& mesh, const std::string& path);  // by extension
void write_obj(const TriMesh& mesh, const std::string& path);
void write_ply(const TriMesh& mesh, const std::string& path);
TriMesh read_obj(const std::string& path);
TriMesh read_ply(const std::string& path);

// Writers go through a temp file and rename so failures never leave partial
// output behind.
class AtomicWriter {
 public:
  explicit AtomicWriter(const std::string& path)
      : path_(path), tmp_(path + ".tmp"), out_(tmp_, std::ios::binary) {
    if (!out_) throw IoError("cannot open for writing: " + tmp_);
  }
  std::ofstream& stream() { return out_; }
  void commit() {
    out_.close();
    if (!out_) throw IoError("write failed: " + tmp_);
    std::filesystem::rename(tmp_, path_);
  }
  ~AtomicWriter() {
    if (out_.is_open()) {
      out_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }

 private:
  std::string path_, tmp_;
  std::ofstream out_;
};


// One SDF source described in the config file.
struct SdfSourceConfig {
  std::string kind;  // "box" | "half_space" | "mesh" | "icosphere"
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Ones();
  Vec3 plane_point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  std::string mesh_path;
  double radius = 0.5;
  int subdivisions = 2;

  std::unique_ptr<SdfSource> build() const;
};

struct RunConfig {
  LossConfig loss;
  OptimSchedule schedule;
  int k_edges = 4;
  double radius = 0.0;       // 0 means derive from scalp_area
  double scalp_area = 0.0;   // used when radius == 0
  Vec3 reference_point = Vec3::Zero();
  int n_strands = 3000;
  int n_points = 100;
  std::uint32_t seed = 0;
  bool freeze_roots = true;
  std::optional<SdfSourceConfig> bbox;
  std::optional<SdfSourceConfig> face;
  std::optional<SdfSourceConfig> head;

  double resolved_radius() const;
};

// Maps a curliness class name to the target mean curvature.
double c_target_for(const std::string& kind);

// Strict JSON config: unknown keys, wrong types and negative weights are
// rejected by name. An empty file or "{}" yields the defaults above.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);

}  // namespace strandkit
