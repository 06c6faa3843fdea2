#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "transgen/assets.hpp"
#include "transgen/error.hpp"
#include "transgen/optics.hpp"
#include "transgen/render.hpp"

namespace {

using namespace transgen;
using namespace transgen::optics;

Vec3 direction_at_incidence(double deg) {
  // Travelling down (-z) onto the plane z = 0, tilted in x.
  const double a = deg_to_rad(deg);
  return Vec3(std::sin(a), 0.0, -std::cos(a));
}

TEST(Refract, NormalIncidencePassesStraight) {
  const Vec3 n(0, 0, 1);
  for (double eta : {1.0 / 1.5, 1.5, 1.0 / 2.4}) {
    const auto t = refract(Vec3(0, 0, -1), n, eta);
    ASSERT_TRUE(t);
    EXPECT_NEAR((*t - Vec3(0, 0, -1)).norm(), 0.0, 1e-15);
  }
}

TEST(Refract, SnellAngleAtFortyFiveDegrees) {
  const auto t = refract(direction_at_incidence(45.0), Vec3(0, 0, 1), 1.0 / 1.5);
  ASSERT_TRUE(t);
  // Reconstruct the angle from the direction and compare with Snell's law.
  const double theta_t = std::atan2(t->x(), -t->z());
  EXPECT_NEAR(rad_to_deg(theta_t), 28.126, 5e-4);
  EXPECT_NEAR(std::sin(deg_to_rad(45.0)) / std::sin(theta_t), 1.5, 1e-12);
  EXPECT_NEAR(t->norm(), 1.0, 1e-15);
}

TEST(Refract, TotalInternalReflection) {
  EXPECT_FALSE(refract(direction_at_incidence(60.0), Vec3(0, 0, 1), 1.5));
  // Just below the critical angle asin(1/1.5) = 41.81 deg it still refracts.
  EXPECT_TRUE(refract(direction_at_incidence(41.8), Vec3(0, 0, 1), 1.5));
  EXPECT_FALSE(refract(direction_at_incidence(41.9), Vec3(0, 0, 1), 1.5));
}

TEST(Refract, ReciprocityThroughInterface) {
  Rng rng(21);
  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    const Vec3 n = fixtures::random_direction(rng);
    Vec3 d = fixtures::random_direction(rng);
    if (d.dot(n) > 0) d = -d;
    const double eta = rng.bernoulli(0.5) ? 1.0 / 1.5 : 1.5;
    const auto t = refract(d, n, eta);
    if (!t) continue;
    // Back out: reversed ray, normal facing it, inverse ratio.
    const auto back = refract(-*t, -n, 1.0 / eta);
    ASSERT_TRUE(back);
    EXPECT_LT((-*back - d).norm(), 1e-9);
    ++checked;
  }
  EXPECT_GT(checked, 5000);
}

TEST(Reflect, MirrorsAboutNormal) {
  const Vec3 r = reflect(direction_at_incidence(30.0), Vec3(0, 0, 1));
  EXPECT_NEAR((r - Vec3(std::sin(deg_to_rad(30.0)), 0, std::cos(deg_to_rad(30.0)))).norm(), 0.0, 1e-15);
}

TEST(Fresnel, ClosedFormsAndLimits) {
  EXPECT_NEAR(fresnel_dielectric(1.0, 1.0, 1.5), 0.04, 1e-12);
  EXPECT_NEAR(fresnel_dielectric(1.0, 1.5, 1.0), 0.04, 1e-12);
  EXPECT_EQ(fresnel_dielectric(std::cos(deg_to_rad(60.0)), 1.5, 1.0), 1.0);
  EXPECT_GT(fresnel_dielectric(1e-6, 1.0, 1.5), 0.999);
}

TEST(Fresnel, NonDecreasingTowardGrazing) {
  double prev = -1.0;
  for (int i = 0; i < 1000; ++i) {
    const double cos_i = 1.0 - static_cast<double>(i) / 999.0;
    const double r = fresnel_dielectric(cos_i, 1.0, 1.5);
    EXPECT_GE(r, prev - 1e-15) << cos_i;
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
    prev = r;
  }
}

TEST(Material, TransparencyLevelsAndValidation) {
  EXPECT_EQ(transparency_weight(1), 0.55);
  EXPECT_EQ(transparency_weight(4), 0.99);
  EXPECT_THROW(transparency_weight(0), InputError);
  EXPECT_THROW(transparency_weight(5), InputError);
  DielectricMaterial m;
  EXPECT_NO_THROW(m.validate());
  m.ior = 1.0;
  EXPECT_THROW(m.validate(), InputError);
  m.ior = 1.5;
  m.tint = Rgb(1.2, 1, 1);
  EXPECT_THROW(m.validate(), InputError);
}

// A mesh in front of a backdrop; the environment is c for rays heading away
// from the camera (-z) and black otherwise, so reflections contribute nothing.
class MeshScene : public SceneQuery {
 public:
  MeshScene(const geometry::TriMesh& mesh, DielectricMaterial material, Rgb c)
      : mesh_(mesh), bvh_(geometry::Bvh::build(mesh_)), material_(material), c_(c) {}

  std::optional<SurfaceHit> intersect(const geometry::Ray& ray) const override {
    const auto hit = bvh_.intersect(mesh_, ray);
    if (!hit) return std::nullopt;
    return SurfaceHit{*hit, &material_, 0};
  }
  Rgb environment(const geometry::Ray& ray) const override {
    return ray.direction.z() < 0 ? c_ : Rgb::Zero();
  }

 private:
  geometry::TriMesh mesh_;
  geometry::Bvh bvh_;
  DielectricMaterial material_;
  Rgb c_;
};

TEST(Shade, SlabTransmitsProductOfInterfaceTransmittances) {
  DielectricMaterial glass;
  glass.transparency_weight = 1.0;
  const Rgb c(0.2, 0.5, 0.8);
  MeshScene scene(assets::make_box(Vec3(5, 5, 0.1)), glass, c);
  TransportParams params;
  params.max_depth = 2;  // enter and exit; inter-reflections truncated
  params.ray_offset = 1e-9;
  geometry::Ray ray;
  ray.origin = Vec3(0.1, 0.2, 3.0);
  ray.direction = Vec3(0, 0, -1);
  const Rgb out = trace(scene, ray, 0, 1.0, params);
  const double expected = (1.0 - 0.04) * (1.0 - 0.04);
  EXPECT_NEAR(expected, 0.9216, 1e-15);
  for (int ch = 0; ch < 3; ++ch) EXPECT_NEAR(out[ch], expected * c[ch], 1e-12);
}

TEST(Shade, EnergySplitsAcrossBranches) {
  // Uniform environment on both sides: reflected and refracted parts sum to c.
  class Uniform : public SceneQuery {
   public:
    std::optional<SurfaceHit> intersect(const geometry::Ray&) const override { return std::nullopt; }
    Rgb environment(const geometry::Ray&) const override { return Rgb(0.3, 0.6, 0.9); }
  } env;
  DielectricMaterial glass;
  glass.transparency_weight = 1.0;
  for (double deg : {0.0, 20.0, 45.0, 70.0, 89.0}) {
    geometry::Ray ray;
    ray.direction = direction_at_incidence(deg);
    SurfaceHit s;
    s.hit.point = Vec3::Zero();
    s.hit.normal = Vec3(0, 0, 1);
    s.hit.front_face = true;
    s.material = &glass;
    const Rgb out = shade_dielectric(env, s, ray, 0, 1.0, TransportParams{});
    EXPECT_NEAR((out - Rgb(0.3, 0.6, 0.9)).cwiseAbs().maxCoeff(), 0.0, 1e-15) << deg;
  }
}

TEST(Shade, PartialTransparencyBlendsTowardGray) {
  class Uniform : public SceneQuery {
   public:
    std::optional<SurfaceHit> intersect(const geometry::Ray&) const override { return std::nullopt; }
    Rgb environment(const geometry::Ray&) const override { return Rgb(1, 1, 1); }
  } env;
  DielectricMaterial glass;
  glass.transparency_weight = 0.55;
  SurfaceHit s;
  s.hit.normal = Vec3(0, 0, 1);
  s.hit.front_face = true;
  s.material = &glass;
  geometry::Ray ray;
  const Rgb out = shade_dielectric(env, s, ray, 0, 1.0, TransportParams{});
  EXPECT_NEAR(out[0], 0.55 * 1.0 + 0.45 * 0.5, 1e-15);
}

TEST(Shade, UniformEnvironmentInvarianceInRenderedFrames) {
  const std::array<std::uint8_t, 3> c = {70, 140, 210};
  RgbImage bg(64, 48);
  for (std::size_t i = 0; i < bg.data.size(); i += 3) std::copy(c.begin(), c.end(), bg.data.begin() + i);
  const render::Camera camera{64, 48, 50.0};
  const render::Backdrop backdrop(bg, camera, 14.0);
  for (const auto& mesh : {assets::make_uv_sphere(16, 32), assets::make_torus(32, 16, 0.7, 0.3),
                           assets::make_tumbler(32, 0.5, 0.7, 0.06)}) {
    render::SceneState state;
    render::SceneObject obj;
    obj.asset = render::MeshAsset::from_mesh(mesh);
    obj.material.transparency_weight = 1.0;
    obj.pose = [](double) {
      return geometry::Transform{Quat(Eigen::AngleAxisd(0.6, Vec3(1, 1, 0).normalized())),
                                 Vec3(0.1, 0.0, -6.0), 1.5};
    };
    state.objects.push_back(obj);
    state.transport.ray_offset = 1.5e-4;
    render::FrameOptions fo;
    fo.spp = 2;
    const auto fb = render::render_frame(state, camera, backdrop, 0, fo);
    EXPECT_GT(fb.target_mask.count(), 100u);
    int worst = 0;
    for (std::size_t i = 0; i < fb.rgb.data.size(); ++i) {
      worst = std::max(worst, std::abs(int(fb.rgb.data[i]) - int(c[i % 3])));
    }
    EXPECT_LE(worst / 255.0, 2e-2);
  }
}

}  // namespace
