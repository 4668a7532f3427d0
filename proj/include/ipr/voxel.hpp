#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "ipr/types.hpp"

namespace ipr {

// Cell labels. Occupancy grids reuse kSurface for "occupied".
inline constexpr uint8_t kFree = 0;
inline constexpr uint8_t kSurface = 1;
inline constexpr uint8_t kUnknown = 2;

struct VoxelGrid {
  Vec3 origin = Vec3::Zero();  // min corner of cell (0,0,0)
  double resolution = 0.005;
  std::array<int, 3> dims{0, 0, 0};
  std::vector<uint8_t> cells;  // x + nx*(y + ny*z)

  size_t index(int x, int y, int z) const {
    return size_t(x) + size_t(dims[0]) * (size_t(y) + size_t(dims[1]) * size_t(z));
  }
  bool in_bounds(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims[0] && y < dims[1] && z < dims[2];
  }
  uint8_t at(int x, int y, int z) const { return cells[index(x, y, z)]; }
  uint8_t& at(int x, int y, int z) { return cells[index(x, y, z)]; }

  std::array<int, 3> cell_of(const Vec3& p) const;
  bool contains_point(const Vec3& p) const;
  Vec3 cell_center(int x, int y, int z) const;
  Vec3 min_corner() const { return origin; }
  Vec3 max_corner() const;
  size_t count(uint8_t label) const;
};

VoxelGrid make_grid(const Vec3& origin, double resolution,
                    const std::array<int, 3>& dims, uint8_t fill);

// Grid snapped to absolute multiples of resolution, covering the mesh with
// one cell of padding. Snapping keeps signatures stable across frames.
VoxelGrid canonical_frame(const Vec3& lo, const Vec3& hi, double resolution);

struct VisibleSpace {
  int frame_index = 0;
  VoxelGrid grid;
};

// Marks cells whose center lies inside the mesh. Output shares the frame's
// origin, resolution, and dims; labels are kFree / kSurface.
VoxelGrid voxelize(const ConvexMesh& mesh, double resolution,
                   const VoxelGrid& frame);
VoxelGrid voxelize(const ConvexMesh& mesh, double resolution);

// Hash over global integer coordinates of occupied cells; independent of the
// frame padding, sensitive to world-frame translation at grid granularity.
uint64_t occupancy_signature(const VoxelGrid& grid);

// Largest D such that no half-voxel-stepped sample p - t*normal, t in
// (0, D], sits strictly inside seen-free space (point_in_free_space below)
// for any facet point p. Rays grazing along an unknown region's boundary
// stay in contact and do not cut D short. Samples inside a point's own
// start cell are exempt. Returns 0 when any ray's first step beyond its
// start cell lands strictly in free space; exits through the grid boundary
// clamp to the exact exit distance.
double ray_trace_free_distance(const Facet& f, const VisibleSpace& vs);

// True when p sits strictly inside space the camera saw empty: every cell
// touched within half a voxel of p (Chebyshev ball, 27 samples) is FREE.
// Contact with a surface or unknown cell, or with the grid boundary, is not
// inside. Hidden-facet rims run along the edges of observed surfaces and
// unknown regions, so contact at cell granularity must not disqualify them.
bool point_in_free_space(const VisibleSpace& vs, const Vec3& p);

// Visits every cell the segment [a, b] passes through, in order. The
// callback returns false to stop the walk early.
void walk_segment(const VoxelGrid& grid, const Vec3& a, const Vec3& b,
                  const std::function<bool(int, int, int)>& visit);

void save_voxel_grid(std::ostream& os, const VoxelGrid& grid);
VoxelGrid load_voxel_grid(std::istream& is);

}  // namespace ipr
