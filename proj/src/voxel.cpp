#include "ipr/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace ipr {

std::array<int, 3> VoxelGrid::cell_of(const Vec3& p) const {
  Vec3 r = (p - origin) / resolution;
  return {int(std::floor(r.x())), int(std::floor(r.y())), int(std::floor(r.z()))};
}

bool VoxelGrid::contains_point(const Vec3& p) const {
  auto c = cell_of(p);
  return in_bounds(c[0], c[1], c[2]);
}

Vec3 VoxelGrid::cell_center(int x, int y, int z) const {
  return origin + resolution * Vec3(x + 0.5, y + 0.5, z + 0.5);
}

Vec3 VoxelGrid::max_corner() const {
  return origin + resolution * Vec3(dims[0], dims[1], dims[2]);
}

size_t VoxelGrid::count(uint8_t label) const {
  return size_t(std::count(cells.begin(), cells.end(), label));
}

VoxelGrid make_grid(const Vec3& origin, double resolution,
                    const std::array<int, 3>& dims, uint8_t fill) {
  VoxelGrid g;
  g.origin = origin;
  g.resolution = resolution;
  g.dims = dims;
  g.cells.assign(size_t(dims[0]) * size_t(dims[1]) * size_t(dims[2]), fill);
  return g;
}

VoxelGrid canonical_frame(const Vec3& lo, const Vec3& hi, double resolution) {
  std::array<int, 3> lo_c{}, hi_c{};
  for (int k = 0; k < 3; ++k) {
    lo_c[k] = int(std::floor(lo[k] / resolution)) - 1;
    hi_c[k] = int(std::floor(hi[k] / resolution)) + 2;
  }
  Vec3 origin(lo_c[0] * resolution, lo_c[1] * resolution, lo_c[2] * resolution);
  std::array<int, 3> dims{hi_c[0] - lo_c[0], hi_c[1] - lo_c[1], hi_c[2] - lo_c[2]};
  return make_grid(origin, resolution, dims, kFree);
}

VoxelGrid voxelize(const ConvexMesh& mesh, double resolution,
                   const VoxelGrid& frame) {
  VoxelGrid out = make_grid(frame.origin, resolution, frame.dims, kFree);
  if (mesh.vertices.empty()) return out;

  Vec3 lo = mesh.vertices[0], hi = mesh.vertices[0];
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  auto c_lo = out.cell_of(lo);
  auto c_hi = out.cell_of(hi);
  for (int k = 0; k < 3; ++k) {
    c_lo[k] = std::max(0, c_lo[k]);
    c_hi[k] = std::min(out.dims[k] - 1, c_hi[k]);
  }
  for (int z = c_lo[2]; z <= c_hi[2]; ++z)
    for (int y = c_lo[1]; y <= c_hi[1]; ++y)
      for (int x = c_lo[0]; x <= c_hi[0]; ++x)
        if (mesh.contains(out.cell_center(x, y, z), 1e-9))
          out.at(x, y, z) = kSurface;
  return out;
}

VoxelGrid voxelize(const ConvexMesh& mesh, double resolution) {
  Vec3 lo = mesh.vertices.empty() ? Vec3::Zero() : mesh.vertices[0];
  Vec3 hi = lo;
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return voxelize(mesh, resolution, canonical_frame(lo, hi, resolution));
}

uint64_t occupancy_signature(const VoxelGrid& grid) {
  // FNV-1a over the occupied cells' global integer coordinates.
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](int64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= uint64_t(v >> (8 * b)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  const int64_t gx = int64_t(std::llround(grid.origin.x() / grid.resolution));
  const int64_t gy = int64_t(std::llround(grid.origin.y() / grid.resolution));
  const int64_t gz = int64_t(std::llround(grid.origin.z() / grid.resolution));
  for (int z = 0; z < grid.dims[2]; ++z)
    for (int y = 0; y < grid.dims[1]; ++y)
      for (int x = 0; x < grid.dims[0]; ++x)
        if (grid.at(x, y, z) != kFree) {
          mix(gx + x);
          mix(gy + y);
          mix(gz + z);
        }
  return h;
}

namespace {

// Entry and exit parameters of ray o + t*d against the grid box, or false.
bool ray_box(const VoxelGrid& g, const Vec3& o, const Vec3& d, double& t0,
             double& t1) {
  t0 = 0.0;
  t1 = std::numeric_limits<double>::infinity();
  Vec3 lo = g.min_corner(), hi = g.max_corner();
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (o[k] < lo[k] || o[k] > hi[k]) return false;
      continue;
    }
    double a = (lo[k] - o[k]) / d[k];
    double b = (hi[k] - o[k]) / d[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  return t0 <= t1;
}

}  // namespace

double ray_trace_free_distance(const Facet& f, const VisibleSpace& vs) {
  const VoxelGrid& g = vs.grid;
  const double h = 0.5 * g.resolution;
  const Vec3 dir = -f.normal;
  double overall = std::numeric_limits<double>::infinity();

  for (const auto& p : f.points) {
    double t_in, t_exit;
    if (!ray_box(g, p, dir, t_in, t_exit) || t_exit <= 0.0) return 0.0;

    const auto start = g.cell_of(p);
    double good = 0.0;
    bool left_start = false;
    bool hit_blocker = false;
    for (int k = 1;; ++k) {
      const double t = k * h;
      if (t > t_exit) break;
      const Vec3 q = p + t * dir;
      const auto c = g.cell_of(q);
      if (!g.in_bounds(c[0], c[1], c[2])) break;
      if (!left_start && c == start) continue;
      left_start = true;
      if (point_in_free_space(vs, q)) {
        hit_blocker = true;
        break;
      }
      good = t;
    }
    double d_p;
    if (hit_blocker) {
      d_p = good;  // last hidden sample; 0 when the first step failed
    } else {
      d_p = std::max(good, t_exit);  // ran off the grid while still unknown
      if (!left_start) d_p = t_exit;
    }
    if (d_p <= 0.0) return 0.0;
    overall = std::min(overall, d_p);
  }
  return std::isfinite(overall) ? overall : 0.0;
}

bool point_in_free_space(const VisibleSpace& vs, const Vec3& p) {
  const VoxelGrid& g = vs.grid;
  const double h = 0.5 * g.resolution;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        auto c = g.cell_of(p + Vec3(dx * h, dy * h, dz * h));
        if (!g.in_bounds(c[0], c[1], c[2])) return false;
        if (g.at(c[0], c[1], c[2]) != kFree) return false;
      }
  return true;
}

void walk_segment(const VoxelGrid& grid, const Vec3& a, const Vec3& b,
                  const std::function<bool(int, int, int)>& visit) {
  const Vec3 d = b - a;
  const double len = d.norm();
  if (len < 1e-15) {
    auto c = grid.cell_of(a);
    if (grid.in_bounds(c[0], c[1], c[2])) visit(c[0], c[1], c[2]);
    return;
  }
  const Vec3 dir = d / len;
  double t0, t1;
  if (!ray_box(grid, a, dir, t0, t1)) return;
  t1 = std::min(t1, len);
  if (t0 > t1) return;

  // Nudge inside the box to get a valid starting cell.
  Vec3 p = a + (t0 + 1e-12) * dir;
  auto c = grid.cell_of(p);
  for (int k = 0; k < 3; ++k) c[k] = std::clamp(c[k], 0, grid.dims[k] - 1);

  std::array<int, 3> step{};
  Vec3 t_max_v, t_delta;
  for (int k = 0; k < 3; ++k) {
    if (dir[k] > 1e-15) {
      step[k] = 1;
      t_delta[k] = grid.resolution / dir[k];
      t_max_v[k] = ((c[k] + 1) * grid.resolution + grid.origin[k] - a[k]) / dir[k];
    } else if (dir[k] < -1e-15) {
      step[k] = -1;
      t_delta[k] = -grid.resolution / dir[k];
      t_max_v[k] = (c[k] * grid.resolution + grid.origin[k] - a[k]) / dir[k];
    } else {
      step[k] = 0;
      t_delta[k] = std::numeric_limits<double>::infinity();
      t_max_v[k] = std::numeric_limits<double>::infinity();
    }
  }

  double t = t0;
  while (t <= t1) {
    if (!visit(c[0], c[1], c[2])) return;
    int axis = 0;
    if (t_max_v[1] < t_max_v[axis]) axis = 1;
    if (t_max_v[2] < t_max_v[axis]) axis = 2;
    t = t_max_v[axis];
    c[axis] += step[axis];
    if (c[axis] < 0 || c[axis] >= grid.dims[axis]) return;
    t_max_v[axis] += t_delta[axis];
  }
}

void save_voxel_grid(std::ostream& os, const VoxelGrid& grid) {
  os << "origin " << grid.origin.x() << ' ' << grid.origin.y() << ' '
     << grid.origin.z() << " res " << grid.resolution << " dims "
     << grid.dims[0] << ' ' << grid.dims[1] << ' ' << grid.dims[2] << '\n';
  size_t i = 0;
  while (i < grid.cells.size()) {
    size_t j = i;
    while (j < grid.cells.size() && grid.cells[j] == grid.cells[i]) ++j;
    os << int(grid.cells[i]) << ' ' << (j - i) << '\n';
    i = j;
  }
}

VoxelGrid load_voxel_grid(std::istream& is) {
  std::string tag;
  VoxelGrid g;
  is >> tag >> g.origin.x() >> g.origin.y() >> g.origin.z();
  if (tag != "origin") throw IoError("voxel grid: bad header");
  is >> tag >> g.resolution;
  if (tag != "res") throw IoError("voxel grid: bad header");
  is >> tag >> g.dims[0] >> g.dims[1] >> g.dims[2];
  if (tag != "dims") throw IoError("voxel grid: bad header");
  const size_t total = size_t(g.dims[0]) * size_t(g.dims[1]) * size_t(g.dims[2]);
  g.cells.reserve(total);
  int label;
  size_t run;
  while (g.cells.size() < total && (is >> label >> run)) {
    for (size_t k = 0; k < run && g.cells.size() < total; ++k)
      g.cells.push_back(uint8_t(label));
  }
  if (g.cells.size() != total) throw IoError("voxel grid: truncated runs");
  return g;
}

}  // namespace ipr
