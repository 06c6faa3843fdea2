#include "transgen/render.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "transgen/error.hpp"
#include "transgen/parallel.hpp"
#include "transgen/rng.hpp"
#include "transgen/simd/kernels.hpp"

namespace transgen::render {

using geometry::Ray;

// ---------------------------------------------------------------------------
// Camera and backdrop

double Camera::tan_half() const { return std::tan(deg_to_rad(vfov_deg) / 2.0); }

void Camera::validate() const {
  if (width < 1 || height < 1) throw InputError("camera resolution must be positive");
  if (!(vfov_deg > 10.0 && vfov_deg < 120.0)) {
    throw InputError("vertical field of view must lie in (10, 120) degrees");
  }
}

Ray Camera::primary(double px, double py) const {
  const double th = tan_half();
  const double sx = (2.0 * px / width - 1.0) * th * aspect();
  const double sy = (1.0 - 2.0 * py / height) * th;
  Ray r;
  r.origin = Vec3::Zero();
  r.direction = Vec3(sx, sy, -1.0).normalized();
  return r;
}

Backdrop::Backdrop(const RgbImage& image, const Camera& camera, double distance)
    : image_(&image), distance_(distance) {
  if (image.width < 1 || image.height < 1) throw InputError("backdrop image is empty");
  half_height_ = distance * camera.tan_half();
  half_width_ = half_height_ * camera.aspect();
}

Rgb Backdrop::texel(int x, int y) const {
  x = std::clamp(x, 0, image_->width - 1);
  y = std::clamp(y, 0, image_->height - 1);
  const std::uint8_t* p = image_->pixel(x, y);
  return Rgb(p[0], p[1], p[2]) / 255.0;
}

Rgb Backdrop::radiance(const Ray& ray) const {
  constexpr double kMinApproach = 1e-9;
  const double dz = std::min(ray.direction.z(), -kMinApproach);
  const double t = (-distance_ - ray.origin.z()) / dz;
  const double X = ray.origin.x() + t * ray.direction.x();
  const double Y = ray.origin.y() + t * ray.direction.y();

  // Continuous pixel coordinates where integer values are texel centers.
  const double u = std::clamp((X / half_width_ + 1.0) * 0.5 * image_->width - 0.5, 0.0,
                              image_->width - 1.0);
  const double v = std::clamp((1.0 - Y / half_height_) * 0.5 * image_->height - 0.5, 0.0,
                              image_->height - 1.0);
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const double fx = u - x0;
  const double fy = v - y0;
  const Rgb top = (1.0 - fx) * texel(x0, y0) + fx * texel(x0 + 1, y0);
  const Rgb bottom = (1.0 - fx) * texel(x0, y0 + 1) + fx * texel(x0 + 1, y0 + 1);
  return (1.0 - fy) * top + fy * bottom;
}

// ---------------------------------------------------------------------------
// Scene

std::shared_ptr<const MeshAsset> MeshAsset::from_mesh(const geometry::TriMesh& raw) {
  auto asset = std::make_shared<MeshAsset>();
  asset->mesh = geometry::normalized(raw);
  asset->bvh = geometry::Bvh::build(asset->mesh);
  return asset;
}

std::shared_ptr<const MeshAsset> MeshAsset::load(const fs::path& obj_path) {
  return from_mesh(geometry::load_mesh_file(obj_path));
}

Scene::Scene(const SceneState& state, const Backdrop& backdrop, double frame_time)
    : state_(&state), backdrop_(&backdrop) {
  placed_.reserve(state.objects.size());
  for (const auto& obj : state.objects) placed_.push_back({&obj, obj.pose(frame_time)});
}

std::optional<optics::SurfaceHit> Scene::intersect(const Ray& ray) const {
  std::optional<optics::SurfaceHit> best;
  double t_max = ray.t_max;
  for (std::size_t i = 0; i < placed_.size(); ++i) {
    const auto& p = placed_[i];
    // Bounding sphere of the normalized mesh.
    const Vec3 oc = ray.origin - p.xf.translation;
    const double radius = p.xf.scale * (1.0 + 1e-9);
    const double b = oc.dot(ray.direction);
    const double c = oc.squaredNorm() - radius * radius;
    const double disc = b * b - c;
    if (disc < 0.0 || -b + std::sqrt(disc) < ray.t_min) continue;

    Ray r = ray;
    r.t_max = t_max;
    auto hit = geometry::intersect_instance(p.object->asset->bvh, p.object->asset->mesh, p.xf, r);
    if (!hit) continue;
    t_max = hit->t;
    best = optics::SurfaceHit{*hit, &p.object->material, static_cast<int>(p.object->role)};
  }
  return best;
}

// ---------------------------------------------------------------------------
// Frames

std::vector<double> shutter_offsets(double shutter_fraction) {
  if (!(shutter_fraction > 0.0)) return {0.0};
  std::vector<double> out(kShutterSamples);
  for (int j = 0; j < kShutterSamples; ++j) {
    out[static_cast<std::size_t>(j)] = shutter_fraction * ((j + 0.5) / kShutterSamples - 0.5);
  }
  return out;
}

FrameBuffers render_frame(const SceneState& state, const Camera& camera, const Backdrop& backdrop,
                          int frame_index, const FrameOptions& options) {
  if (options.spp < 1) throw InputError("spp must be at least 1");
  const int w = camera.width;
  const int h = camera.height;

  std::vector<Scene> scenes;
  for (double dt : shutter_offsets(options.shutter_fraction)) {
    scenes.emplace_back(state, backdrop, frame_index + dt);
  }
  const Scene exact(state, backdrop, frame_index);

  FrameBuffers out{RgbImage(w, h), Mask(w, h), Mask(w, h)};
  std::vector<double> accum(static_cast<std::size_t>(w) * h * 3, 0.0);

  const int spp = options.spp;
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(spp))));
  const int rows = (spp + cols - 1) / cols;
  const std::uint64_t frame_key = hash_combine(options.seed, static_cast<std::uint64_t>(frame_index));

  parallel_for(static_cast<std::size_t>(h), options.workers, [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < w; ++x) {
      const std::size_t pixel = static_cast<std::size_t>(y) * w + x;

      if (const auto hit = exact.intersect(camera.primary(x + 0.5, y + 0.5))) {
        Mask& m = hit->object == static_cast<int>(ObjectRole::kTarget) ? out.target_mask
                                                                        : out.distractor_mask;
        m.data[pixel] = 1;
      }

      Rgb sum = Rgb::Zero();
      const std::uint64_t pixel_key = hash_combine(frame_key, pixel);
      for (int s = 0; s < spp; ++s) {
        double jx = 0.5;
        double jy = 0.5;
        if (spp > 1) {
          const std::uint64_t k = hash_combine(pixel_key, static_cast<std::uint64_t>(s));
          jx = ((s % cols) + bits_to_unit(mix64(k))) / cols;
          jy = ((s / cols) + bits_to_unit(mix64(k ^ 0x5851f42d4c957f2dULL))) / rows;
        }
        const Ray ray = camera.primary(x + jx, y + jy);
        for (const Scene& scene : scenes) {
          sum += optics::trace(scene, ray, 0, 1.0, scene.transport());
        }
      }
      double* a = accum.data() + pixel * 3;
      a[0] = sum.x();
      a[1] = sum.y();
      a[2] = sum.z();
    }
  });

  const double scale = 255.0 / (static_cast<double>(spp) * static_cast<double>(scenes.size()));
  simd::active_kernels().resolve_to_u8(accum.data(), accum.size(), scale, out.rgb.data.data());
  return out;
}

// ---------------------------------------------------------------------------
// Occluder

const std::array<std::array<std::uint8_t, 3>, 6> StripeOccluder::kPalette = {{
    {255, 0, 0},
    {0, 255, 0},
    {0, 0, 255},
    {255, 255, 0},
    {255, 0, 255},
    {0, 255, 255},
}};

int StripeOccluder::stripe_width(int frame_width) const {
  return std::max(1, (frame_width + kWidthDivisor / 2) / kWidthDivisor);
}

int StripeOccluder::stripe_start(int i, int frame_width, int frame_index) const {
  const long long base = static_cast<long long>(i) * frame_width / stripe_count;
  const long long pos = base + phase + static_cast<long long>(kVelocity) * frame_index;
  const long long m = pos % frame_width;
  return static_cast<int>(m < 0 ? m + frame_width : m);
}

bool StripeOccluder::covers(int column, int frame_width, int frame_index) const {
  const int sw = stripe_width(frame_width);
  for (int i = 0; i < stripe_count; ++i) {
    const int start = stripe_start(i, frame_width, frame_index);
    const int rel = ((column - start) % frame_width + frame_width) % frame_width;
    if (rel < sw) return true;
  }
  return false;
}

void composite_occluder(FrameBuffers& buffers, const StripeOccluder& occluder, int frame_index,
                        bool modal) {
  const int w = buffers.rgb.width;
  const int h = buffers.rgb.height;
  const int sw = occluder.stripe_width(w);
  for (int i = 0; i < occluder.stripe_count; ++i) {
    const auto& color = StripeOccluder::kPalette[static_cast<std::size_t>(i) % StripeOccluder::kPalette.size()];
    const int start = occluder.stripe_start(i, w, frame_index);
    for (int k = 0; k < sw; ++k) {
      const int x = (start + k) % w;
      for (int y = 0; y < h; ++y) {
        std::uint8_t* p = buffers.rgb.pixel(x, y);
        p[0] = color[0];
        p[1] = color[1];
        p[2] = color[2];
        if (modal) {
          buffers.target_mask.at(x, y) = 0;
          buffers.distractor_mask.at(x, y) = 0;
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Sequences

namespace {

std::string frame_name(int frame, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06d.%s", frame, ext);
  return buf;
}

void check_occluder_fits(int stripes, int width) {
  if (stripes == 0) return;
  const int sw = StripeOccluder{stripes, 0}.stripe_width(width);
  if (stripes * (sw + 1) > width) {
    throw InputError(std::to_string(stripes) + " stripes do not fit a frame " +
                     std::to_string(width) + " pixels wide");
  }
}

Camera camera_for(const seqplan::RenderSettings& r) {
  Camera c{r.width, r.height, r.vfov_deg};
  c.validate();
  return c;
}

}  // namespace

fs::path frame_path(const fs::path& dir, int frame) { return dir / "frames" / frame_name(frame, "ppm"); }
fs::path target_mask_path(const fs::path& dir, int frame) {
  return dir / "masks" / "target" / frame_name(frame, "pgm");
}
fs::path distractor_mask_path(const fs::path& dir, int frame) {
  return dir / "masks" / "distractor" / frame_name(frame, "pgm");
}
fs::path background_frame_path(const seqplan::BackgroundEntry& bg, int frame) {
  return bg.path / frame_name(frame, "ppm");
}

SceneState build_scene(const seqplan::SequenceConfig& config, const seqplan::ObjectCatalog& catalog) {
  const Camera camera = camera_for(config.render);
  const auto& a = config.attributes;
  const auto& sp = config.scene;
  const double fit = camera.tan_half() * std::min(1.0, camera.aspect());

  auto target_path = std::make_shared<trajectory::MotionPath>(config.control_points, config.n_frames);
  const double mid_depth = -target_path->position((config.n_frames - 1) / 2.0).z();
  if (!(mid_depth > 0.0)) throw InputError(config.seq_id + ": trajectory midpoint is behind the camera");
  const double target_radius = sp.target_scale * mid_depth * fit;

  SceneState state;
  const auto material_for = [&](const seqplan::CatalogEntry& e) {
    optics::DielectricMaterial m;
    m.ior = e.ior;
    m.tint = e.tint;
    m.transparency_weight = optics::transparency_weight(a.transparency_level);
    m.validate();
    return m;
  };

  const auto& target_entry = catalog.find(config.object_instance_id);
  SceneObject target;
  target.asset = MeshAsset::load(target_entry.mesh);
  target.material = material_for(target_entry);
  target.role = ObjectRole::kTarget;
  target.pose = [target_path, axis = sp.rotation_axis, speed = a.rotation_speed,
                 q0 = sp.target_orientation, target_radius](double t) {
    return geometry::Transform{trajectory::orientation_at(axis, speed, t, q0),
                               target_path->position(t), target_radius};
  };
  state.objects.push_back(std::move(target));

  double max_radius = target_radius;
  if (a.distractor_present) {
    if (!config.distractor_instance_id) {
      throw InputError(config.seq_id + ": distractor present but no distractor instance");
    }
    const auto& entry = catalog.find(*config.distractor_instance_id);
    if (entry.type_id == target_entry.type_id) {
      throw InputError(config.seq_id + ": distractor must differ in type from the target");
    }
    const double radius = sp.distractor_scale * mid_depth * fit;
    const Vec3 offset = 1.1 * (target_radius + radius) *
                        Vec3(std::cos(sp.distractor_offset_angle), std::sin(sp.distractor_offset_angle), 0.0);
    auto path = std::make_shared<trajectory::MotionPath>(config.control_points, config.n_frames,
                                                         kDistractorLag, offset);
    SceneObject d;
    d.asset = MeshAsset::load(entry.mesh);
    d.material = material_for(entry);
    d.role = ObjectRole::kDistractor;
    d.pose = [path, axis = sp.rotation_axis, speed = a.rotation_speed,
              q0 = sp.distractor_orientation, radius](double t) {
      return geometry::Transform{trajectory::orientation_at(axis, speed, t, q0), path->position(t), radius};
    };
    state.objects.push_back(std::move(d));
    max_radius = std::max(max_radius, radius);
  }
  state.transport.ray_offset = 1e-4 * max_radius;
  return state;
}

SequenceResult render_sequence(const seqplan::SequenceConfig& config, const seqplan::Corpus& corpus,
                               const seqplan::ObjectCatalog& catalog, const fs::path& output_dir,
                               const SequenceOptions& options) {
  config.attributes.validate();
  const Camera camera = camera_for(config.render);
  if (config.n_frames < 2) throw InputError(config.seq_id + ": n_frames must be at least 2");
  if (config.render.spp < 1) throw InputError(config.seq_id + ": spp must be at least 1");
  check_occluder_fits(config.attributes.occlusion_stripes, camera.width);

  const auto& bg = corpus.find(config.background_id);
  if (bg.frames < config.n_frames) {
    throw InputError(config.seq_id + ": background '" + bg.id + "' has " + std::to_string(bg.frames) +
                     " frames, sequence needs " + std::to_string(config.n_frames));
  }
  for (int k = 0; k < config.n_frames; ++k) {
    const fs::path p = background_frame_path(bg, k);
    if (!fs::exists(p)) throw InputError(config.seq_id + ": missing background frame " + p.string());
  }
  const SceneState scene = build_scene(config, catalog);

  fs::create_directories(output_dir / "frames");
  fs::create_directories(output_dir / "masks" / "target");
  fs::create_directories(output_dir / "masks" / "distractor");
  fs::remove(output_dir / "meta.json");

  const StripeOccluder occluder{config.attributes.occlusion_stripes, config.scene.occluder_phase};
  FrameOptions fo;
  fo.spp = config.render.spp;
  fo.shutter_fraction = config.attributes.shutter_fraction();
  fo.seed = config.seed;
  fo.workers = 1;

  SequenceResult result;
  result.annotations.resize(static_cast<std::size_t>(config.n_frames));
  parallel_for(static_cast<std::size_t>(config.n_frames), options.workers, [&](std::size_t i) {
    const int k = static_cast<int>(i);
    const RgbImage background = read_ppm(background_frame_path(bg, k));
    const Backdrop backdrop(background, camera, config.render.backdrop_distance);
    FrameBuffers fb = render_frame(scene, camera, backdrop, k, fo);
    composite_occluder(fb, occluder, k, config.render.modal_masks);
    write_ppm(frame_path(output_dir, k), fb.rgb);
    write_pgm_mask(target_mask_path(output_dir, k), fb.target_mask);
    write_pgm_mask(distractor_mask_path(output_dir, k), fb.distractor_mask);
    result.annotations[i] = annotate::annotate_frame(k, fb.target_mask, fb.distractor_mask);
  });
  result.frames_written = config.n_frames;

  annotate::write_groundtruth(result.annotations, output_dir, config.attributes, config.study);

  nlohmann::json meta = config;
  meta["frames_written"] = result.frames_written;
  const fs::path tmp = output_dir / "meta.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << meta.dump(2) << "\n";
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, output_dir / "meta.json");
  return result;
}

bool sequence_complete(const seqplan::SequenceConfig& config, const fs::path& output_dir) {
  const fs::path meta_path = output_dir / "meta.json";
  if (!fs::exists(meta_path)) return false;
  try {
    std::ifstream in(meta_path);
    const auto meta = nlohmann::json::parse(in);
    if (meta.value("frames_written", -1) != config.n_frames) return false;
    if (!(meta.get<seqplan::SequenceConfig>() == config)) return false;
  } catch (const std::exception&) {
    return false;
  }
  for (int k = 0; k < config.n_frames; ++k) {
    if (!fs::exists(frame_path(output_dir, k)) || !fs::exists(target_mask_path(output_dir, k)) ||
        !fs::exists(distractor_mask_path(output_dir, k))) {
      return false;
    }
  }
  return fs::exists(output_dir / annotate::kGroundTruthFile) &&
         fs::exists(output_dir / annotate::kDistractorGroundTruthFile) &&
         fs::exists(output_dir / annotate::kAttributesFile);
}

}  // namespace transgen::render
