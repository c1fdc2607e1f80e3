#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <memory>
#include <vector>

#include "strandkit/mesh.hpp"

namespace strandkit {

// Signed-distance evaluator; negative inside, positive outside.
class SdfSource {
 public:
  virtual ~SdfSource() = default;
  virtual double eval(const Vec3& p) const = 0;
  virtual Vec3 grad(const Vec3& p) const = 0;

  std::vector<double> eval(const std::vector<Vec3>& points) const;
  std::vector<Vec3> grad(const std::vector<Vec3>& points) const;
};

class BoxSdf final : public SdfSource {
 public:
  BoxSdf(const Vec3& center, const Vec3& half_extents,
         const Eigen::Matrix3d& rotation = Eigen::Matrix3d::Identity());
  double eval(const Vec3& p) const override;
  Vec3 grad(const Vec3& p) const override;
  using SdfSource::eval;
  using SdfSource::grad;

 private:
  Vec3 center_;
  Vec3 half_;
  Eigen::Matrix3d rot_;  // local -> world
};

class HalfSpaceSdf final : public SdfSource {
 public:
  // Negative behind the plane (opposite the outward normal).
  HalfSpaceSdf(const Vec3& plane_point, const Vec3& outward_normal);
  double eval(const Vec3& p) const override;
  Vec3 grad(const Vec3& p) const override;
  using SdfSource::eval;
  using SdfSource::grad;

 private:
  Vec3 point_;
  Vec3 normal_;
};

// Exact nearest-triangle distance via a BVH; sign from the generalized
// winding number (inside iff > 0.5). The mesh must be watertight.
class MeshSdf final : public SdfSource {
 public:
  explicit MeshSdf(TriMesh mesh);
  ~MeshSdf() override;
  double eval(const Vec3& p) const override;
  Vec3 grad(const Vec3& p) const override;
  using SdfSource::eval;
  using SdfSource::grad;

  double unsigned_distance(const Vec3& p, Vec3* closest = nullptr) const;
  double winding_number(const Vec3& p) const;
  const TriMesh& mesh() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace strandkit
