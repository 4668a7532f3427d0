#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ipr {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// Errors named by the failure they report. Callers that treat a condition as
// flow control (e.g. an empty mirror range) get a sentinel value instead.
struct DegenerateInput : std::runtime_error {
  explicit DegenerateInput(const std::string& what) : std::runtime_error(what) {}
};
struct InvalidPartial : std::runtime_error {
  explicit InvalidPartial(const std::string& what) : std::runtime_error(what) {}
};
struct ResolutionMismatch : std::runtime_error {
  explicit ResolutionMismatch(const std::string& what) : std::runtime_error(what) {}
};
struct TooLarge : std::runtime_error {
  explicit TooLarge(const std::string& what) : std::runtime_error(what) {}
};
struct UnstableScene : std::runtime_error {
  explicit UnstableScene(const std::string& what) : std::runtime_error(what) {}
};
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};
struct Diverged : std::runtime_error {
  explicit Diverged(const std::string& what) : std::runtime_error(what) {}
};
struct NoValidModels : std::runtime_error {
  explicit NoValidModels(const std::string& what) : std::runtime_error(what) {}
};

enum class FacetOrigin : uint8_t { Observed, Hypothesized };

/// A small homogeneous surface patch: a point set with a mean normal.
struct Facet {
  int id = -1;
  std::vector<Vec3> points;
  Vec3 normal = Vec3::UnitZ();   // unit mean surface normal
  Vec3 centroid = Vec3::Zero();  // component-wise mean of points
  FacetOrigin origin = FacetOrigin::Observed;
  int parent = -1;  // facet this one was mirrored from, -1 if none

  double bounding_radius() const;
};

/// Watertight triangle mesh of a convex solid. Face normals point outward.
struct ConvexMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<Vec3> face_normals;
  double volume = 0.0;

  Vec3 centroid() const;
  /// True if p satisfies every face half-space inequality within tol.
  bool contains(const Vec3& p, double tol = 1e-9) const;
};

struct Pose {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Pose inverse() const {
    Quat qi = rotation.conjugate();
    return Pose{qi, qi * (-translation)};
  }
  Pose compose(const Pose& other) const {  // applies other first, then this
    return Pose{rotation * other.rotation, rotation * other.translation + translation};
  }
};

struct ColoredPoint {
  Vec3 position = Vec3::Zero();
  Vec3 color = Vec3::Zero();  // rgb in [0,1]
};

inline Vec3 component_mean(const std::vector<Vec3>& pts) {
  Vec3 m = Vec3::Zero();
  for (const auto& p : pts) m += p;
  return pts.empty() ? m : Vec3(m / double(pts.size()));
}

}  // namespace ipr
