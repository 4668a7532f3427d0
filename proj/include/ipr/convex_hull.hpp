#pragma once

#include <span>

#include "ipr/types.hpp"

namespace ipr {

/// Quickhull over a point set. Throws DegenerateInput when the points are
/// collinear or coplanar within 1e-7 m.
ConvexMesh convex_hull(std::span<const Vec3> points);
ConvexMesh convex_hull(const std::vector<Vec3>& points);

/// Merge coplanar adjacent hull triangles (normal angle < angle_tol) into
/// facets. Every mesh face lands in exactly one facet.
std::vector<Facet> hull_facets(const ConvexMesh& mesh, double angle_tol = 0.087);

/// Reflect a facet's points across its tangent plane and translate the result
/// by -d along the facet normal. The returned facet faces the opposite way.
Facet mirror_facet(const Facet& f, double d);

/// True when the point sets come within tol of each other in a crossing
/// configuration. Facets whose planes agree within angle_tol intersect on any
/// near pair; for distinct planes both sets must pierce the other's plane by
/// more than tol/2, so edge and T contacts count as adjacency.
bool facets_intersect(const Facet& f1, const Facet& f2, double tol = 0.0025,
                      double angle_tol = 0.087);

/// Merged coplanar face of a convex mesh, loop ordered counter-clockwise when
/// seen from outside.
struct FacePolygon {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;  // plane is normal . x = offset
  std::vector<int> loop;
};

std::vector<FacePolygon> merge_coplanar_faces(const ConvexMesh& mesh,
                                              double angle_tol = 1e-4);

struct MassProperties {
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia = Mat3::Zero();  // about the center of mass
};

MassProperties compute_mass_properties(const ConvexMesh& mesh, double density);

/// Least-squares plane normal of a point set (smallest PCA eigenvector).
Vec3 plane_normal(const std::vector<Vec3>& points);

Facet make_facet(int id, std::vector<Vec3> points, const Vec3& normal,
                 FacetOrigin origin, int parent = -1);

}  // namespace ipr
