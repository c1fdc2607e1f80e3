#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace strandkit {

using Vec3 = Eigen::Vector3d;

// Thrown when a strand contains a segment too short to orient.
struct DegenerateSegmentError : std::runtime_error {
  DegenerateSegmentError(int strand, int segment);
  int strand_index;
  int segment_index;
};

constexpr double kMinSegmentLength = 1e-9;

// One hair fiber as an ordered 3D polyline. Point count is fixed after
// construction.
class Strand {
 public:
  explicit Strand(std::vector<Vec3> points);

  const std::vector<Vec3>& points() const { return points_; }
  int size() const { return static_cast<int>(points_.size()); }
  const Vec3& point(int j) const { return points_[j]; }

  // Moves point j. The new position must keep adjacent segments non-degenerate;
  // callers doing optimization check this via orientations().
  void set_point(int j, const Vec3& p) { points_[j] = p; }

 private:
  std::vector<Vec3> points_;
};

// Unit segment directions, one per segment (size N_p-1).
// Throws DegenerateSegmentError naming the offending segment.
std::vector<Vec3> orientations(const Strand& strand, int strand_index = -1);

// Per-point curvature ||o_j - o_{j-1}||, zero-padded at both ends (size N_p).
std::vector<double> curvatures(const Strand& strand, int strand_index = -1);

// A set of strands with shared point count, root positions and a root
// adjacency graph.
class Hairstyle {
 public:
  Hairstyle() = default;
  Hairstyle(std::vector<Strand> strands, int neighbor_k = 4);

  int strand_count() const { return static_cast<int>(strands_.size()); }
  int point_count() const { return strands_.empty() ? 0 : strands_[0].size(); }
  const std::vector<Strand>& strands() const { return strands_; }
  const Strand& strand(int i) const { return strands_[i]; }
  const std::vector<Vec3>& roots() const { return roots_; }
  const std::vector<std::vector<int>>& neighbors() const { return neighbors_; }

  // Flat point access used by the optimizer: index = strand * N_p + point.
  Vec3 flat_point(int idx) const;
  void set_flat_point(int idx, const Vec3& p);
  int total_points() const { return strand_count() * point_count(); }

  void set_point(int strand, int j, const Vec3& p);

 private:
  std::vector<Strand> strands_;
  std::vector<Vec3> roots_;
  std::vector<std::vector<int>> neighbors_;
};

// Per-strand orientations and curvatures for a whole hairstyle.
struct StrandFrameField {
  std::vector<std::vector<Vec3>> orientations;   // N_s x (N_p-1)
  std::vector<std::vector<double>> curvatures;   // N_s x N_p, zero-padded
};

StrandFrameField compute_frames(const Hairstyle& hair);

// k-nearest-neighbor adjacency over root positions. Ties break to the lower
// index. Requires at least k+1 roots.
std::vector<std::vector<int>> build_neighbors(const std::vector<Vec3>& roots, int k);

enum class HairKind { Straight, Wavy, Curly };

HairKind hair_kind_from_string(const std::string& s);

// Deterministic synthetic hairstyle: roots on a spherical cap, strands fall
// with sinusoidal lateral displacement that grows from straight to curly.
Hairstyle synth_hairstyle(HairKind kind, int n_strands, int n_points, std::uint32_t seed);

// Resamples to n_points at uniform arc-length spacing; endpoints preserved.
Strand resample_strand(const Strand& strand, int n_points);

}  // namespace strandkit
