#include "strandkit/strand.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace strandkit {

DegenerateSegmentError::DegenerateSegmentError(int strand, int segment)
    : std::runtime_error("degenerate segment " + std::to_string(segment) +
                         " on strand " + std::to_string(strand) +
                         " (length <= 1e-9)"),
      strand_index(strand),
      segment_index(segment) {}

Strand::Strand(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.size() < 2)
    throw std::invalid_argument("strand needs at least 2 points");
}

std::vector<Vec3> orientations(const Strand& strand, int strand_index) {
  std::vector<Vec3> out;
  out.reserve(strand.size() - 1);
  for (int j = 0; j + 1 < strand.size(); ++j) {
    Vec3 d = strand.point(j + 1) - strand.point(j);
    double len = d.norm();
    if (len <= kMinSegmentLength) throw DegenerateSegmentError(strand_index, j);
    out.push_back(d / len);
  }
  return out;
}

std::vector<double> curvatures(const Strand& strand, int strand_index) {
  const auto ori = orientations(strand, strand_index);
  std::vector<double> out(strand.size(), 0.0);
  for (int j = 1; j + 1 < strand.size(); ++j)
    out[j] = (ori[j] - ori[j - 1]).norm();
  return out;
}

Hairstyle::Hairstyle(std::vector<Strand> strands, int neighbor_k)
    : strands_(std::move(strands)) {
  if (strands_.empty()) return;
  const int np = strands_[0].size();
  for (const auto& s : strands_)
    if (s.size() != np)
      throw std::invalid_argument("all strands must share the same point count");
  roots_.reserve(strands_.size());
  for (const auto& s : strands_) roots_.push_back(s.point(0));
  if (static_cast<int>(strands_.size()) > neighbor_k && neighbor_k >= 1)
    neighbors_ = build_neighbors(roots_, neighbor_k);
  else
    neighbors_.assign(strands_.size(), {});
}

Vec3 Hairstyle::flat_point(int idx) const {
  return strands_[idx / point_count()].point(idx % point_count());
}

void Hairstyle::set_flat_point(int idx, const Vec3& p) {
  set_point(idx / point_count(), idx % point_count(), p);
}

void Hairstyle::set_point(int strand, int j, const Vec3& p) {
  strands_[strand].set_point(j, p);
  if (j == 0) roots_[strand] = p;
}

StrandFrameField compute_frames(const Hairstyle& hair) {
  StrandFrameField f;
  f.orientations.resize(hair.strand_count());
  f.curvatures.resize(hair.strand_count());
  for (int i = 0; i < hair.strand_count(); ++i) {
    f.orientations[i] = orientations(hair.strand(i), i);
    f.curvatures[i] = curvatures(hair.strand(i), i);
  }
  return f;
}

std::vector<std::vector<int>> build_neighbors(const std::vector<Vec3>& roots, int k) {
  const int n = static_cast<int>(roots.size());
  if (k < 1) throw std::invalid_argument("neighbor count k must be >= 1");
  if (n < k + 1)
    throw std::invalid_argument("need at least k+1 roots to build k-NN adjacency");
  std::vector<std::vector<int>> adj(n);
  std::vector<std::pair<double, int>> dist;
  dist.reserve(n - 1);
  for (int i = 0; i < n; ++i) {
    dist.clear();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      dist.emplace_back((roots[j] - roots[i]).squaredNorm(), j);
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    adj[i].reserve(k);
    for (int m = 0; m < k; ++m) adj[i].push_back(dist[m].second);
  }
  return adj;
}

HairKind hair_kind_from_string(const std::string& s) {
  if (s == "straight") return HairKind::Straight;
  if (s == "wavy") return HairKind::Wavy;
  if (s == "curly") return HairKind::Curly;
  throw std::invalid_argument("unknown hairstyle kind: " + s);
}

Hairstyle synth_hairstyle(HairKind kind, int n_strands, int n_points,
                          std::uint32_t seed) {
  if (n_strands < 1 || n_points < 3)
    throw std::invalid_argument("synth_hairstyle needs n_strands >= 1, n_points >= 3");

  double amp = 0.0, freq = 0.0;
  switch (kind) {
    case HairKind::Straight: amp = 0.0;   freq = 0.0;  break;
    case HairKind::Wavy:     amp = 0.04;  freq = 4.0;  break;
    case HairKind::Curly:    amp = 0.08;  freq = 10.0; break;
  }

  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  // Spherical cap of angular radius 70 degrees around +z on the unit sphere.
  const double cap = 70.0 * M_PI / 180.0;
  const double cos_cap = std::cos(cap);

  std::vector<Strand> strands;
  strands.reserve(n_strands);
  const double strand_len = 1.0;
  for (int i = 0; i < n_strands; ++i) {
    const double z = cos_cap + (1.0 - cos_cap) * uni(rng);
    const double phi = 2.0 * M_PI * uni(rng);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 root(r * std::cos(phi), r * std::sin(phi), z);
    const double phase = 2.0 * M_PI * uni(rng);

    // Local frame: downward growth plus two lateral directions.
    Vec3 down(0, 0, -1);
    Vec3 lat1 = root.cross(Vec3(0, 0, 1));
    if (lat1.norm() < 1e-8) lat1 = Vec3(1, 0, 0);
    lat1.normalize();
    Vec3 lat2 = down.cross(lat1).normalized();

    std::vector<Vec3> pts;
    pts.reserve(n_points);
    for (int j = 0; j < n_points; ++j) {
      const double t = static_cast<double>(j) / (n_points - 1);
      Vec3 p = root + down * (strand_len * t);
      p += lat1 * amp * (std::sin(freq * 2.0 * M_PI * t + phase) - std::sin(phase));
      p += lat2 * amp * (std::cos(freq * 2.0 * M_PI * t + phase) - std::cos(phase));
      pts.push_back(p);
    }
    strands.emplace_back(std::move(pts));
  }
  return Hairstyle(std::move(strands));
}

Strand resample_strand(const Strand& strand, int n_points) {
  if (n_points < 2) throw std::invalid_argument("resample needs n_points >= 2");
  const int n = strand.size();
  std::vector<double> arc(n, 0.0);
  for (int j = 1; j < n; ++j)
    arc[j] = arc[j - 1] + (strand.point(j) - strand.point(j - 1)).norm();
  const double total = arc[n - 1];
  if (total <= kMinSegmentLength)
    throw std::invalid_argument("cannot resample a zero-length strand");

  std::vector<Vec3> out;
  out.reserve(n_points);
  out.push_back(strand.point(0));
  int seg = 0;
  for (int m = 1; m + 1 < n_points; ++m) {
    const double target = total * m / (n_points - 1);
    while (seg + 2 < n && arc[seg + 1] < target) ++seg;
    const double seg_len = arc[seg + 1] - arc[seg];
    const double t = seg_len > 0 ? (target - arc[seg]) / seg_len : 0.0;
    out.push_back(strand.point(seg) * (1.0 - t) + strand.point(seg + 1) * t);
  }
  out.push_back(strand.point(n - 1));
  return Strand(std::move(out));
}

}  // namespace strandkit
