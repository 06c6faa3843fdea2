#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "transgen/geometry.hpp"
#include "transgen/math.hpp"
#include "transgen/optics.hpp"
#include "transgen/rng.hpp"
#include "transgen/trajectory.hpp"

namespace transgen::seqplan {

namespace fs = std::filesystem;

// Attribute level sets. Index 0 is the neutral level.
inline constexpr std::array<int, 4> kStripeLevels = {0, 7, 11, 20};
inline constexpr std::array<double, 4> kRotationLevels = {0.0, 1.3, 5.4, 10.6};  // deg/frame
inline constexpr std::array<int, 4> kTransparencyLevels = {1, 2, 3, 4};
inline constexpr std::array<int, 4> kBlurLevels = {0, 1, 2, 3};
// Fraction of the inter-frame interval the shutter stays open, per blur level.
inline constexpr std::array<double, 4> kBlurShutter = {0.0, 0.25, 0.5, 1.0};

inline constexpr int kStudyVariations = 5;
inline constexpr std::array<const char*, 4> kStudyAttributes = {"transparency", "occlusion",
                                                                "rotation", "blur"};
inline constexpr int kStudyNeutralTransparency = 2;

struct AttributeLevels {
  int transparency_level = kStudyNeutralTransparency;
  int blur_level = 0;
  int occlusion_stripes = 0;
  double rotation_speed = 0.0;  // degrees per frame about the sequence axis
  bool distractor_present = false;

  // Throws InputError when any field is outside its level set.
  void validate() const;
  double shutter_fraction() const { return kBlurShutter[static_cast<std::size_t>(blur_level)]; }
  // Tags used by the per-attribute evaluation.
  std::vector<std::string> tags() const;

  bool operator==(const AttributeLevels&) const = default;
};

// Camera and output settings echoed into every sequence.
struct RenderSettings {
  int width = 320;
  int height = 180;
  int spp = 4;
  double vfov_deg = 50.0;
  double backdrop_distance = 14.0;  // world units in front of the camera
  bool modal_masks = false;         // true: clear mask pixels under occluder stripes

  bool operator==(const RenderSettings&) const = default;
};

// Per-sequence scene randomness, fixed at planning time.
struct SceneParams {
  double target_scale = 0.2;      // projected diameter / shorter frame side at mid-trajectory
  double distractor_scale = 0.2;
  Vec3 rotation_axis = Vec3::UnitZ();
  Quat target_orientation = Quat::Identity();
  Quat distractor_orientation = Quat::Identity();
  double distractor_offset_angle = 0.0;  // radians, in the image plane
  int occluder_phase = 0;                // pixels

  bool operator==(const SceneParams&) const;
};

struct StudyTag {
  std::string attribute;  // one of kStudyAttributes
  int level_index = 0;    // 0..3
  int variation = 0;      // 0..kStudyVariations-1

  bool operator==(const StudyTag&) const = default;
};

struct SequenceConfig {
  std::string seq_id;
  std::uint64_t seed = 0;
  std::string background_id;
  std::string object_instance_id;
  std::optional<std::string> distractor_instance_id;
  AttributeLevels attributes;
  trajectory::ControlPoints control_points{};
  int n_frames = 51;
  RenderSettings render;
  SceneParams scene;
  std::optional<StudyTag> study;

  bool operator==(const SequenceConfig&) const;
};

// ---------------------------------------------------------------------------
// Corpus and catalog manifests

struct BackgroundEntry {
  std::string id;
  fs::path path;  // directory of %06d.ppm frames
  int frames = 0;
};

struct Corpus {
  std::vector<BackgroundEntry> entries;
  fs::path manifest_path;
  std::string manifest_hash;

  const BackgroundEntry& find(const std::string& id) const;
};

enum class Volume { kFull, kEmpty };

struct CatalogEntry {
  std::string instance_id;
  std::string type_id;
  fs::path mesh;
  Volume volume = Volume::kFull;
  double ior = 1.5;
  Rgb tint = Rgb::Ones();
};

struct ObjectCatalog {
  std::vector<CatalogEntry> entries;
  fs::path manifest_path;
  std::string manifest_hash;

  std::vector<std::string> types() const;  // sorted, unique
  const CatalogEntry& find(const std::string& instance_id) const;
};

// Relative paths inside a manifest resolve against the manifest's directory.
Corpus load_corpus(const fs::path& manifest);
ObjectCatalog load_catalog(const fs::path& manifest);
void write_corpus(const fs::path& manifest, const Corpus& corpus);
void write_catalog(const fs::path& manifest, const ObjectCatalog& catalog);

std::string fnv1a_hex(const fs::path& file);

// ---------------------------------------------------------------------------
// Sampling

struct GenerationParams {
  int n_frames = 51;
  RenderSettings render;
  double blur_probability = 0.15;
  double occlusion_probability = 0.2;
  double distractor_probability = 0.3;
  double scale_min = 0.10;
  double scale_max = 0.30;
  double depth_near = 5.0;
  double depth_far = 7.0;

  void validate() const;
};

// Backgrounds not yet used by a plan; draws are without replacement.
class BackgroundPool {
 public:
  explicit BackgroundPool(std::size_t corpus_size);
  std::size_t remaining() const { return unused_.size(); }
  // Throws InputError("backgrounds depleted") when empty.
  std::size_t draw(Rng& rng);

 private:
  std::vector<std::size_t> unused_;
};

// World-space box for trajectory control points that keeps an object of the
// given projected scale inside the frame.
geometry::Aabb3 trajectory_safe_region(const GenerationParams& params, double scale_fraction);

SequenceConfig sample_sequence_config(Rng& rng, BackgroundPool& pool, const Corpus& corpus,
                                      const ObjectCatalog& catalog, const GenerationParams& params,
                                      std::uint64_t seed);

struct DatasetPlan {
  std::string kind = "dataset";  // or "study"
  std::uint64_t global_seed = 0;
  GenerationParams params;
  fs::path corpus_manifest;
  std::string corpus_hash;
  fs::path catalog_manifest;
  std::string catalog_hash;
  std::vector<SequenceConfig> sequences;

  std::int64_t total_frames() const;
};

std::uint64_t sequence_seed(std::uint64_t global_seed, std::uint64_t ordinal);

DatasetPlan build_dataset_plan(std::uint64_t global_seed, int n_sequences, const Corpus& corpus,
                               const ObjectCatalog& catalog, const GenerationParams& params);

// 4 attributes x 4 levels x 5 variations. Within a variation every config
// shares background, object, scene params and control points; the studied
// attribute takes its four levels while the others stay neutral.
DatasetPlan build_attribute_study_plan(std::uint64_t global_seed, const Corpus& corpus,
                                       const ObjectCatalog& catalog,
                                       const GenerationParams& params);

// ---------------------------------------------------------------------------
// Training batch mixing

enum class Source { kTransparent, kOpaque };

inline constexpr double kTransparentShare = 5.0 / 8.0;

struct SequenceIndexEntry {
  std::string id;
  int frames = 0;
};

struct BatchEntry {
  Source source = Source::kTransparent;
  std::size_t sequence = 0;
  int frame = 0;

  bool operator==(const BatchEntry&) const = default;
};

struct BatchSpec {
  std::vector<BatchEntry> entries;
  double transparent_fraction() const;
};

BatchSpec mix_batches(const std::vector<SequenceIndexEntry>& transparent,
                      const std::vector<SequenceIndexEntry>& opaque, std::size_t batch_size,
                      Rng& rng);

// Reads {"sequences": [{"id", "frames"}]} or a corpus manifest.
std::vector<SequenceIndexEntry> load_sequence_index(const fs::path& manifest);

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const AttributeLevels& a);
void from_json(const nlohmann::json& j, AttributeLevels& a);
void to_json(nlohmann::json& j, const RenderSettings& r);
void from_json(const nlohmann::json& j, RenderSettings& r);
void to_json(nlohmann::json& j, const SceneParams& s);
void from_json(const nlohmann::json& j, SceneParams& s);
void to_json(nlohmann::json& j, const StudyTag& s);
void from_json(const nlohmann::json& j, StudyTag& s);
void to_json(nlohmann::json& j, const SequenceConfig& c);
void from_json(const nlohmann::json& j, SequenceConfig& c);
void to_json(nlohmann::json& j, const GenerationParams& p);
void from_json(const nlohmann::json& j, GenerationParams& p);
void to_json(nlohmann::json& j, const DatasetPlan& p);
void from_json(const nlohmann::json& j, DatasetPlan& p);

std::string serialize_plan(const DatasetPlan& plan);
DatasetPlan parse_plan(const std::string& text);
void write_plan(const fs::path& path, const DatasetPlan& plan);
DatasetPlan read_plan(const fs::path& path);

std::string to_string(Source s);

}  // namespace transgen::seqplan
