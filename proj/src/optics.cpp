#include "transgen/optics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "transgen/error.hpp"

namespace transgen::optics {

double transparency_weight(int level) {
  if (level < 1 || level > 4) {
    throw InputError("transparency level " + std::to_string(level) + " outside 1..4");
  }
  return kTransparencyWeights[static_cast<std::size_t>(level - 1)];
}

void DielectricMaterial::validate() const {
  if (!(ior > 1.0)) throw InputError("material ior must exceed 1");
  if (!(transparency_weight > 0.0 && transparency_weight <= 1.0)) {
    throw InputError("transparency weight must lie in (0, 1]");
  }
  if (!((tint.array() >= 0.0).all() && (tint.array() <= 1.0).all())) {
    throw InputError("tint must lie in [0, 1]^3");
  }
}

std::optional<Vec3> refract(const Vec3& incident, const Vec3& normal, double eta) {
  const double cos_i = -incident.dot(normal);
  const double sin2_t = eta * eta * std::max(0.0, 1.0 - cos_i * cos_i);
  if (sin2_t > 1.0) return std::nullopt;
  const double cos_t = std::sqrt(1.0 - sin2_t);
  return (eta * incident + (eta * cos_i - cos_t) * normal).normalized();
}

Vec3 reflect(const Vec3& incident, const Vec3& normal) {
  return incident - 2.0 * incident.dot(normal) * normal;
}

double fresnel_dielectric(double cos_i, double n1, double n2) {
  cos_i = std::clamp(cos_i, 0.0, 1.0);
  const double sin_i = std::sqrt(std::max(0.0, 1.0 - cos_i * cos_i));
  const double sin_t = n1 / n2 * sin_i;
  if (sin_t >= 1.0) return 1.0;
  const double cos_t = std::sqrt(std::max(0.0, 1.0 - sin_t * sin_t));
  const double rs = (n1 * cos_i - n2 * cos_t) / (n1 * cos_i + n2 * cos_t);
  const double rp = (n2 * cos_i - n1 * cos_t) / (n2 * cos_i + n1 * cos_t);
  return 0.5 * (rs * rs + rp * rp);
}

Rgb trace(const SceneQuery& scene, const geometry::Ray& ray, int depth, double throughput,
          const TransportParams& params) {
  if (depth >= params.max_depth || throughput < params.throughput_cutoff) {
    return scene.environment(ray);
  }
  const auto surface = scene.intersect(ray);
  if (!surface) return scene.environment(ray);
  return shade_dielectric(scene, *surface, ray, depth, throughput, params);
}

Rgb shade_dielectric(const SceneQuery& scene, const SurfaceHit& surface, const geometry::Ray& ray,
                     int depth, double throughput, const TransportParams& params) {
  const DielectricMaterial& m = *surface.material;
  const geometry::Hit& h = surface.hit;

  // Orient the interface against the ray and pick the media.
  const Vec3 n = h.front_face ? h.normal : Vec3(-h.normal);
  const double n1 = h.front_face ? 1.0 : m.ior;
  const double n2 = h.front_face ? m.ior : 1.0;
  const double cos_i = -ray.direction.dot(n);
  const double r = fresnel_dielectric(cos_i, n1, n2);
  const double w = m.transparency_weight;

  const auto branch = [&](const Vec3& dir, double offset_sign, double weight) -> Rgb {
    geometry::Ray next;
    next.origin = h.point + offset_sign * params.ray_offset * n;
    next.direction = dir;
    return trace(scene, next, depth + 1, throughput * weight, params);
  };

  Rgb transport = Rgb::Zero();
  if (r > 0.0) transport += r * branch(reflect(ray.direction, n), +1.0, w * r);
  if (r < 1.0) {
    if (const auto t = refract(ray.direction, n, n1 / n2)) {
      const Rgb through = branch(*t, -1.0, w * (1.0 - r) * m.tint.maxCoeff());
      transport += (1.0 - r) * m.tint.cwiseProduct(through);
    }
  }
  return w * transport + Rgb::Constant((1.0 - w) * m.gray_albedo * m.ambient);
}

}  // namespace transgen::optics
