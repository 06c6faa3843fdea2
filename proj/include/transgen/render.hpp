#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "transgen/annotate.hpp"
#include "transgen/geometry.hpp"
#include "transgen/image.hpp"
#include "transgen/optics.hpp"
#include "transgen/seqplan.hpp"
#include "transgen/trajectory.hpp"

namespace transgen::render {

namespace fs = std::filesystem;

// Pinhole at the origin looking down -z, +y up.
struct Camera {
  int width = 320;
  int height = 180;
  double vfov_deg = 50.0;

  double tan_half() const;
  double aspect() const { return static_cast<double>(width) / height; }
  // Ray through continuous pixel coordinates; (x + 0.5, y + 0.5) is the center of pixel (x, y).
  geometry::Ray primary(double px, double py) const;
  void validate() const;
};

// Background frame on the plane z = -distance, mapped onto the camera's
// frustum footprint there, so primary rays see the frame unchanged.
class Backdrop {
 public:
  Backdrop(const RgbImage& image, const Camera& camera, double distance);

  // Bilinear lookup; out-of-footprint points clamp to the border. Rays that
  // do not travel toward the plane are treated as grazing it.
  Rgb radiance(const geometry::Ray& ray) const;
  Rgb texel(int x, int y) const;

 private:
  const RgbImage* image_;
  double distance_;
  double half_width_;
  double half_height_;
};

enum class ObjectRole { kTarget = 0, kDistractor = 1 };

struct MeshAsset {
  geometry::TriMesh mesh;  // normalized: centered, unit bounding radius
  geometry::Bvh bvh;

  static std::shared_ptr<const MeshAsset> from_mesh(const geometry::TriMesh& raw);
  static std::shared_ptr<const MeshAsset> load(const fs::path& obj_path);
};

struct SceneObject {
  std::shared_ptr<const MeshAsset> asset;
  optics::DielectricMaterial material;
  ObjectRole role = ObjectRole::kTarget;
  std::function<geometry::Transform(double frame_time)> pose;
};

// Objects plus their backdrop; immutable while rendering.
struct SceneState {
  std::vector<SceneObject> objects;
  optics::TransportParams transport;
};

// Snapshot of the scene at one instant; answers the transport's queries.
class Scene final : public optics::SceneQuery {
 public:
  Scene(const SceneState& state, const Backdrop& backdrop, double frame_time);

  std::optional<optics::SurfaceHit> intersect(const geometry::Ray& ray) const override;
  Rgb environment(const geometry::Ray& ray) const override { return backdrop_->radiance(ray); }

  const optics::TransportParams& transport() const { return state_->transport; }

 private:
  struct Placed {
    const SceneObject* object;
    geometry::Transform xf;
  };
  const SceneState* state_;
  const Backdrop* backdrop_;
  std::vector<Placed> placed_;
};

struct FrameBuffers {
  RgbImage rgb;
  Mask target_mask;
  Mask distractor_mask;
};

struct FrameOptions {
  int spp = 1;
  double shutter_fraction = 0.0;
  std::uint64_t seed = 0;
  int workers = 1;  // row-level parallelism inside the frame
};

inline constexpr int kShutterSamples = 8;

// Frame times sampled for motion blur, centered on the frame instant.
std::vector<double> shutter_offsets(double shutter_fraction);

// rgb averages spp sub-pixel samples times the shutter samples; masks come
// from one pixel-center ray at the exact frame instant and ignore blur.
FrameBuffers render_frame(const SceneState& scene, const Camera& camera, const Backdrop& backdrop,
                          int frame_index, const FrameOptions& options);

// Opaque vertical stripes sweeping horizontally, wrapping at the frame edge.
struct StripeOccluder {
  static constexpr int kVelocity = 3;  // pixels per frame
  static constexpr int kWidthDivisor = 40;
  static const std::array<std::array<std::uint8_t, 3>, 6> kPalette;

  int stripe_count = 0;
  int phase = 0;

  int stripe_width(int frame_width) const;
  // First column of stripe i at the given frame.
  int stripe_start(int i, int frame_width, int frame_index) const;
  bool covers(int column, int frame_width, int frame_index) const;
};

// Paints the stripes over rgb. Masks are left untouched unless modal is set,
// in which case covered mask pixels are cleared.
void composite_occluder(FrameBuffers& buffers, const StripeOccluder& occluder, int frame_index,
                        bool modal = false);

struct SequenceResult {
  std::vector<annotate::FrameAnnotation> annotations;
  int frames_written = 0;
};

struct SequenceOptions {
  int workers = 1;
};

inline constexpr double kDistractorLag = 0.15;

fs::path frame_path(const fs::path& sequence_dir, int frame);
fs::path target_mask_path(const fs::path& sequence_dir, int frame);
fs::path distractor_mask_path(const fs::path& sequence_dir, int frame);
fs::path background_frame_path(const seqplan::BackgroundEntry& bg, int frame);

// Builds the renderable scene for a sequence (meshes, materials, motion).
SceneState build_scene(const seqplan::SequenceConfig& config, const seqplan::ObjectCatalog& catalog);

// Renders a sequence into output_dir: frames/, masks/target/, masks/distractor/,
// ground-truth files, and meta.json last. Preconditions are checked before
// anything is written.
SequenceResult render_sequence(const seqplan::SequenceConfig& config, const seqplan::Corpus& corpus,
                               const seqplan::ObjectCatalog& catalog, const fs::path& output_dir,
                               const SequenceOptions& options = {});

// True when output_dir holds a complete render of exactly this config.
bool sequence_complete(const seqplan::SequenceConfig& config, const fs::path& output_dir);

}  // namespace transgen::render
