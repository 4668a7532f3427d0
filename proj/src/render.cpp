#include "ipr/render.hpp"

#include <algorithm>
#include <cmath>

namespace ipr {

namespace {

struct WorldFaces {
  std::vector<Vec3> normals;
  std::vector<double> offsets;
};

// Entry depth of the ray org + t*dir against the hull's half-spaces, where
// dir carries unit camera z so t equals the z-depth.
bool ray_hull_depth(const WorldFaces& faces, const Vec3& org, const Vec3& dir,
                    double t_far, double& t_hit) {
  double t0 = 1e-4, t1 = t_far;
  for (size_t f = 0; f < faces.normals.size(); ++f) {
    double denom = faces.normals[f].dot(dir);
    double num = faces.offsets[f] - faces.normals[f].dot(org);
    if (std::abs(denom) < 1e-15) {
      if (num < 0) return false;
      continue;
    }
    double t = num / denom;
    if (denom > 0) {
      t1 = std::min(t1, t);
    } else {
      t0 = std::max(t0, t);
    }
    if (t0 > t1) return false;
  }
  t_hit = t0;
  return t_hit > 1e-4 && t_hit < t_far;
}

}  // namespace

PredictedObservation render_depth(const World& w, const CameraModel& cam) {
  PredictedObservation obs;
  obs.camera = cam;
  const size_t npx = size_t(cam.width) * size_t(cam.height);
  obs.depth.assign(npx, cam.far_plane);
  obs.mask.assign(npx, -1);
  obs.scene_depth.assign(npx, cam.far_plane);
  std::vector<double> body_z(npx, cam.far_plane);
  std::vector<int> body_id(npx, -1);

  const Vec3 org = cam.pose.translation;
  const Pose cam_inv = cam.pose.inverse();

  // Support plane first: scene depth only.
  if (w.has_support) {
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x) {
        Vec3 dir = cam.pixel_dir_world(x + 0.5, y + 0.5);
        if (std::abs(dir.z()) < 1e-12) continue;
        double t = (w.support_z - org.z()) / dir.z();
        if (t > 1e-4 && t < obs.scene_depth[obs.index(x, y)])
          obs.scene_depth[obs.index(x, y)] = t;
      }
  }

  for (const auto& body : w.bodies) {
    // World-space face planes.
    WorldFaces faces;
    Mat3 rot = body.pose.rotation.toRotationMatrix();
    faces.normals.reserve(body.shape->faces.size());
    faces.offsets.reserve(body.shape->faces.size());
    for (const auto& f : body.shape->faces) {
      Vec3 n = rot * f.n;
      faces.normals.push_back(n);
      faces.offsets.push_back(f.d + n.dot(body.pose.translation));
    }

    // Conservative pixel rectangle from the bounding sphere.
    Vec3 c = cam_inv.apply(body.pose.translation);
    double r = body.shape->radius;
    int x0 = 0, x1 = cam.width - 1, y0 = 0, y1 = cam.height - 1;
    if (c.z() > r + 1e-6) {
      double zn = c.z() - r, zf = c.z() + r;
      auto lo_px = [&](double coord, double focal, double center) {
        double edge = coord - r;
        return int(std::floor(center + focal * edge / (edge >= 0 ? zf : zn)));
      };
      auto hi_px = [&](double coord, double focal, double center) {
        double edge = coord + r;
        return int(std::ceil(center + focal * edge / (edge >= 0 ? zn : zf)));
      };
      x0 = std::max(0, lo_px(c.x(), cam.fx, cam.cx));
      x1 = std::min(cam.width - 1, hi_px(c.x(), cam.fx, cam.cx));
      y0 = std::max(0, lo_px(c.y(), cam.fy, cam.cy));
      y1 = std::min(cam.height - 1, hi_px(c.y(), cam.fy, cam.cy));
    } else if (c.z() < -r) {
      continue;  // entirely behind the camera
    }

    const bool masked = body.inv_mass > 0;
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        Vec3 dir = cam.pixel_dir_world(x + 0.5, y + 0.5);
        double t;
        if (!ray_hull_depth(faces, org, dir, cam.far_plane, t)) continue;
        size_t px = obs.index(x, y);
        if (t < obs.scene_depth[px]) obs.scene_depth[px] = t;
        if (masked && t < body_z[px]) {
          body_z[px] = t;
          body_id[px] = body.body_id;
        }
      }
  }

  // A body pixel survives into the output only if nothing static is closer.
  for (size_t px = 0; px < npx; ++px) {
    if (body_id[px] >= 0 && body_z[px] <= obs.scene_depth[px] + 1e-12) {
      obs.depth[px] = body_z[px];
      obs.mask[px] = body_id[px];
    }
  }
  return obs;
}

std::map<int, double> observation_distance(const PredictedObservation& observed,
                                           const PredictedObservation& predicted) {
  const auto& a = observed;
  const auto& b = predicted;
  if (a.camera.width != b.camera.width || a.camera.height != b.camera.height)
    throw ResolutionMismatch("observation frames differ in resolution");
  const double far = a.camera.far_plane;

  std::map<int, std::pair<double, size_t>> acc;  // id -> (sum sq, union count)
  const size_t npx = a.depth.size();
  for (size_t px = 0; px < npx; ++px) {
    int ia = a.mask[px], ib = b.mask[px];
    if (ia < 0 && ib < 0) continue;
    if (ia == ib) {
      double d = a.depth[px] - b.depth[px];
      auto& slot = acc[ia];
      slot.first += d * d;
      slot.second++;
    } else {
      if (ia >= 0) {
        double d = far - a.depth[px];
        auto& slot = acc[ia];
        slot.first += d * d;
        slot.second++;
      }
      if (ib >= 0) {
        double d = far - b.depth[px];
        auto& slot = acc[ib];
        slot.first += d * d;
        slot.second++;
      }
    }
  }
  std::map<int, double> out;
  for (const auto& [id, sums] : acc)
    out[id] = sums.second > 0 ? std::sqrt(sums.first / double(sums.second)) : 0.0;
  return out;
}

double likelihood(const std::vector<std::map<int, double>>& frames, double alpha) {
  double total = 0.0;
  for (const auto& frame : frames)
    for (const auto& [id, d] : frame) total += d;
  return std::exp(-alpha * total);
}

std::map<int, double> object_likelihood_factors(
    const std::vector<std::map<int, double>>& frames, double alpha) {
  std::map<int, double> sums;
  for (const auto& frame : frames)
    for (const auto& [id, d] : frame) sums[id] += d;
  std::map<int, double> out;
  for (const auto& [id, s] : sums) out[id] = std::exp(-alpha * s);
  return out;
}

}  // namespace ipr
