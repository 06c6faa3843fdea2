#pragma once

#include <array>
#include <optional>

#include "transgen/geometry.hpp"
#include "transgen/math.hpp"

namespace transgen::optics {

// Transparency level (1 = clearly visible .. 4 = nearly invisible) to the
// weight of pure dielectric transport.
inline constexpr std::array<double, 4> kTransparencyWeights = {0.55, 0.75, 0.90, 0.99};

// Throws InputError outside 1..4.
double transparency_weight(int level);

struct DielectricMaterial {
  double ior = 1.5;
  double transparency_weight = 1.0;  // in (0, 1]
  Rgb tint = Rgb::Ones();            // per-transmission multiplier
  double gray_albedo = 0.5;
  double ambient = 1.0;

  // Throws InputError when ior <= 1, weight outside (0, 1] or tint outside [0, 1].
  void validate() const;
};

// Snell refraction. eta_ratio = n_incident / n_transmitted. The normal must
// face against the incident direction. Empty under total internal reflection.
std::optional<Vec3> refract(const Vec3& incident, const Vec3& normal, double eta_ratio);

Vec3 reflect(const Vec3& incident, const Vec3& normal);

// Unpolarized Fresnel reflectance for light travelling from n1 into n2.
// Exactly 1 under total internal reflection.
double fresnel_dielectric(double cos_incident, double n1, double n2);

struct TransportParams {
  int max_depth = 6;
  double throughput_cutoff = 1e-3;
  double ray_offset = 1e-4;  // along the outgoing side of the surface
};

struct SurfaceHit {
  geometry::Hit hit;
  const DielectricMaterial* material = nullptr;
  int object = -1;  // scene-defined identifier
};

// What the transport needs from a scene: nearest surface and the radiance
// arriving from the environment along an unobstructed ray.
class SceneQuery {
 public:
  virtual ~SceneQuery() = default;
  virtual std::optional<SurfaceHit> intersect(const geometry::Ray& ray) const = 0;
  virtual Rgb environment(const geometry::Ray& ray) const = 0;
};

// Radiance along a ray: nearest surface is shaded, otherwise environment.
Rgb trace(const SceneQuery& scene, const geometry::Ray& ray, int depth, double throughput,
          const TransportParams& params);

// Deterministic splitting transport at a dielectric interface:
//   w * [R * L(reflected) + (1 - R) * tint * L(refracted)] + (1 - w) * albedo * ambient
// Branches whose throughput drops under the cutoff, or that exceed the
// depth limit, fall back to the environment along the current ray.
Rgb shade_dielectric(const SceneQuery& scene, const SurfaceHit& surface, const geometry::Ray& ray,
                     int depth, double throughput, const TransportParams& params);

}  // namespace transgen::optics
