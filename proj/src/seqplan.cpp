#include "transgen/seqplan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "transgen/error.hpp"

namespace transgen::seqplan {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Attribute levels

void AttributeLevels::validate() const {
  if (std::find(kTransparencyLevels.begin(), kTransparencyLevels.end(), transparency_level) ==
      kTransparencyLevels.end()) {
    throw InputError("transparency_level " + std::to_string(transparency_level) + " not in 1..4");
  }
  if (std::find(kBlurLevels.begin(), kBlurLevels.end(), blur_level) == kBlurLevels.end()) {
    throw InputError("blur_level " + std::to_string(blur_level) + " not in 0..3");
  }
  if (std::find(kStripeLevels.begin(), kStripeLevels.end(), occlusion_stripes) ==
      kStripeLevels.end()) {
    throw InputError("occlusion_stripes " + std::to_string(occlusion_stripes) +
                     " not in {0, 7, 11, 20}");
  }
  if (std::find(kRotationLevels.begin(), kRotationLevels.end(), rotation_speed) ==
      kRotationLevels.end()) {
    throw InputError("rotation_speed not in {0, 1.3, 5.4, 10.6}");
  }
}

std::vector<std::string> AttributeLevels::tags() const {
  std::vector<std::string> t{"transparency_" + std::to_string(transparency_level)};
  if (blur_level > 0) t.emplace_back("motion_blur");
  if (occlusion_stripes > 0) t.emplace_back("partial_occlusion");
  if (rotation_speed > 0.0) t.emplace_back("rotation");
  if (distractor_present) t.emplace_back("distractor");
  return t;
}

bool SceneParams::operator==(const SceneParams& o) const {
  return target_scale == o.target_scale && distractor_scale == o.distractor_scale &&
         rotation_axis == o.rotation_axis && target_orientation.coeffs() == o.target_orientation.coeffs() &&
         distractor_orientation.coeffs() == o.distractor_orientation.coeffs() &&
         distractor_offset_angle == o.distractor_offset_angle && occluder_phase == o.occluder_phase;
}

bool SequenceConfig::operator==(const SequenceConfig& o) const {
  return seq_id == o.seq_id && seed == o.seed && background_id == o.background_id &&
         object_instance_id == o.object_instance_id &&
         distractor_instance_id == o.distractor_instance_id && attributes == o.attributes &&
         control_points == o.control_points && n_frames == o.n_frames && render == o.render &&
         scene == o.scene && study == o.study;
}

// ---------------------------------------------------------------------------
// Manifests

const BackgroundEntry& Corpus::find(const std::string& id) const {
  for (const auto& e : entries) {
    if (e.id == id) return e;
  }
  throw InputError("background '" + id + "' not in corpus");
}

std::vector<std::string> ObjectCatalog::types() const {
  std::set<std::string> s;
  for (const auto& e : entries) s.insert(e.type_id);
  return {s.begin(), s.end()};
}

const CatalogEntry& ObjectCatalog::find(const std::string& instance_id) const {
  for (const auto& e : entries) {
    if (e.instance_id == instance_id) return e;
  }
  throw InputError("object instance '" + instance_id + "' not in catalog");
}

std::string fnv1a_hex(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError("cannot open " + file.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[8192];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream ss;
  ss << std::hex;
  ss.width(16);
  ss.fill('0');
  ss << h;
  return ss.str();
}

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

fs::path resolve(const fs::path& base_dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base_dir / path).lexically_normal();
}

template <class T>
T required(const json& j, const char* key, const fs::path& where) {
  if (!j.contains(key)) throw InputError(where.string() + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(where.string() + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

Corpus load_corpus(const fs::path& manifest) {
  const json j = read_json_file(manifest);
  if (!j.contains("backgrounds") || !j["backgrounds"].is_array()) {
    throw InputError(manifest.string() + ": expected a 'backgrounds' array");
  }
  Corpus c;
  c.manifest_path = fs::absolute(manifest).lexically_normal();
  c.manifest_hash = fnv1a_hex(manifest);
  const fs::path base = c.manifest_path.parent_path();
  std::set<std::string> seen;
  for (const auto& e : j["backgrounds"]) {
    BackgroundEntry b;
    b.id = required<std::string>(e, "id", manifest);
    b.path = resolve(base, required<std::string>(e, "path", manifest));
    b.frames = required<int>(e, "frames", manifest);
    if (b.frames < 1) throw InputError(manifest.string() + ": background '" + b.id + "' has no frames");
    if (!seen.insert(b.id).second) throw InputError(manifest.string() + ": duplicate background id '" + b.id + "'");
    c.entries.push_back(std::move(b));
  }
  return c;
}

ObjectCatalog load_catalog(const fs::path& manifest) {
  const json j = read_json_file(manifest);
  if (!j.contains("entries") || !j["entries"].is_array()) {
    throw InputError(manifest.string() + ": expected an 'entries' array");
  }
  ObjectCatalog c;
  c.manifest_path = fs::absolute(manifest).lexically_normal();
  c.manifest_hash = fnv1a_hex(manifest);
  const fs::path base = c.manifest_path.parent_path();
  std::set<std::string> seen;
  for (const auto& e : j["entries"]) {
    CatalogEntry o;
    o.instance_id = required<std::string>(e, "instance_id", manifest);
    o.type_id = required<std::string>(e, "type_id", manifest);
    o.mesh = resolve(base, required<std::string>(e, "mesh", manifest));
    const std::string volume = e.value("volume", std::string("full"));
    if (volume == "full") {
      o.volume = Volume::kFull;
    } else if (volume == "empty") {
      o.volume = Volume::kEmpty;
    } else {
      throw InputError(manifest.string() + ": volume must be 'full' or 'empty'");
    }
    o.ior = e.value("ior", 1.5);
    if (e.contains("tint")) {
      const auto t = e["tint"].get<std::vector<double>>();
      if (t.size() != 3) throw InputError(manifest.string() + ": tint needs 3 components");
      o.tint = Rgb(t[0], t[1], t[2]);
    }
    optics::DielectricMaterial{o.ior, 1.0, o.tint}.validate();
    if (!seen.insert(o.instance_id).second) {
      throw InputError(manifest.string() + ": duplicate instance id '" + o.instance_id + "'");
    }
    c.entries.push_back(std::move(o));
  }
  return c;
}

void write_corpus(const fs::path& manifest, const Corpus& corpus) {
  const fs::path base = fs::absolute(manifest).parent_path();
  json arr = json::array();
  for (const auto& e : corpus.entries) {
    arr.push_back({{"id", e.id},
                   {"path", e.path.lexically_relative(base).generic_string()},
                   {"frames", e.frames}});
  }
  write_text_file(manifest, json{{"backgrounds", arr}}.dump(2) + "\n");
}

void write_catalog(const fs::path& manifest, const ObjectCatalog& catalog) {
  const fs::path base = fs::absolute(manifest).parent_path();
  json arr = json::array();
  for (const auto& e : catalog.entries) {
    arr.push_back({{"instance_id", e.instance_id},
                   {"type_id", e.type_id},
                   {"mesh", e.mesh.lexically_relative(base).generic_string()},
                   {"volume", e.volume == Volume::kFull ? "full" : "empty"},
                   {"ior", e.ior},
                   {"tint", {e.tint.x(), e.tint.y(), e.tint.z()}}});
  }
  write_text_file(manifest, json{{"entries", arr}}.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Sampling

void GenerationParams::validate() const {
  if (n_frames < 2) throw InputError("n_frames must be at least 2");
  if (render.width < 8 || render.height < 8) throw InputError("resolution must be at least 8x8");
  if (render.spp < 1) throw InputError("spp must be at least 1");
  if (!(render.vfov_deg > 10.0 && render.vfov_deg < 120.0)) {
    throw InputError("vertical field of view must lie in (10, 120) degrees");
  }
  for (double p : {blur_probability, occlusion_probability, distractor_probability}) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("probabilities must lie in [0, 1]");
  }
  if (!(scale_min > 0.0 && scale_min <= scale_max && scale_max < 1.0)) {
    throw InputError("object scale range must satisfy 0 < min <= max < 1");
  }
  if (!(depth_near > 0.0 && depth_near < depth_far)) {
    throw InputError("depth range must satisfy 0 < near < far");
  }
  if (!(render.backdrop_distance > depth_far)) {
    throw InputError("backdrop must lie behind the trajectory region");
  }
}

BackgroundPool::BackgroundPool(std::size_t corpus_size) : unused_(corpus_size) {
  for (std::size_t i = 0; i < corpus_size; ++i) unused_[i] = i;
}

std::size_t BackgroundPool::draw(Rng& rng) {
  if (unused_.empty()) throw InputError("backgrounds depleted");
  const std::size_t k = rng.below(unused_.size());
  const std::size_t chosen = unused_[k];
  unused_[k] = unused_.back();
  unused_.pop_back();
  return chosen;
}

geometry::Aabb3 trajectory_safe_region(const GenerationParams& params, double scale_fraction) {
  constexpr double kOvershootMargin = 0.8;
  const double tan_half = std::tan(deg_to_rad(params.render.vfov_deg) / 2.0);
  const double aspect = static_cast<double>(params.render.width) / params.render.height;
  const double radius_bound = scale_fraction * params.depth_far * tan_half * std::min(1.0, aspect);
  const double half_y = params.depth_near * tan_half - radius_bound;
  const double half_x = params.depth_near * tan_half * aspect - radius_bound;
  if (!(half_x > 0.0 && half_y > 0.0)) {
    throw InputError("object scale too large for the trajectory depth range");
  }
  geometry::Aabb3 box;
  box.lo = Vec3(-kOvershootMargin * half_x, -kOvershootMargin * half_y, -params.depth_far);
  box.hi = Vec3(kOvershootMargin * half_x, kOvershootMargin * half_y, -params.depth_near);
  return box;
}

namespace {

Vec3 random_unit_vector(Rng& rng) {
  for (;;) {
    const Vec3 v(rng.normal(), rng.normal(), rng.normal());
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

// Uniform rotation (Shoemake).
Quat random_rotation(Rng& rng) {
  const double u1 = rng.uniform();
  const double u2 = 2.0 * kPi * rng.uniform();
  const double u3 = 2.0 * kPi * rng.uniform();
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  return Quat(a * std::sin(u2), a * std::cos(u2), b * std::sin(u3), b * std::cos(u3)).normalized();
}

// Instances grouped by type, type order sorted.
std::vector<std::vector<std::size_t>> instances_by_type(const ObjectCatalog& catalog) {
  const auto types = catalog.types();
  std::vector<std::vector<std::size_t>> out(types.size());
  for (std::size_t i = 0; i < catalog.entries.size(); ++i) {
    const auto it = std::lower_bound(types.begin(), types.end(), catalog.entries[i].type_id);
    out[static_cast<std::size_t>(it - types.begin())].push_back(i);
  }
  return out;
}

SceneParams sample_scene(Rng& rng, const GenerationParams& params) {
  SceneParams s;
  s.target_scale = rng.uniform(params.scale_min, params.scale_max);
  s.distractor_scale = rng.uniform(params.scale_min, params.scale_max);
  s.rotation_axis = random_unit_vector(rng);
  s.target_orientation = random_rotation(rng);
  s.distractor_orientation = random_rotation(rng);
  s.distractor_offset_angle = rng.uniform(0.0, 2.0 * kPi);
  s.occluder_phase = static_cast<int>(rng.below(static_cast<std::uint64_t>(params.render.width)));
  return s;
}

}  // namespace

SequenceConfig sample_sequence_config(Rng& rng, BackgroundPool& pool, const Corpus& corpus,
                                      const ObjectCatalog& catalog, const GenerationParams& params,
                                      std::uint64_t seed) {
  if (catalog.entries.empty()) throw InputError("object catalog is empty");
  SequenceConfig c;
  c.seed = seed;
  c.n_frames = params.n_frames;
  c.render = params.render;
  c.background_id = corpus.entries.at(pool.draw(rng)).id;

  const auto by_type = instances_by_type(catalog);
  const std::size_t type = rng.below(by_type.size());
  const auto& members = by_type[type];
  c.object_instance_id = catalog.entries[members[rng.below(members.size())]].instance_id;

  AttributeLevels& a = c.attributes;
  a.transparency_level = kTransparencyLevels[1 + rng.below(3)];
  a.blur_level = rng.bernoulli(params.blur_probability) ? kBlurLevels[1 + rng.below(3)] : 0;
  a.occlusion_stripes =
      rng.bernoulli(params.occlusion_probability) ? kStripeLevels[1 + rng.below(3)] : 0;
  a.rotation_speed = kRotationLevels[1 + rng.below(3)];
  a.distractor_present = rng.bernoulli(params.distractor_probability);

  if (a.distractor_present) {
    if (by_type.size() < 2) throw InputError("no valid distractor type");
    std::size_t other = rng.below(by_type.size() - 1);
    if (other >= type) ++other;
    const auto& others = by_type[other];
    c.distractor_instance_id = catalog.entries[others[rng.below(others.size())]].instance_id;
  }

  c.scene = sample_scene(rng, params);
  c.control_points =
      trajectory::sample_control_points(rng, trajectory_safe_region(params, c.scene.target_scale));
  return c;
}

std::uint64_t sequence_seed(std::uint64_t global_seed, std::uint64_t ordinal) {
  return derive_seed(global_seed, ordinal);
}

std::int64_t DatasetPlan::total_frames() const {
  std::int64_t n = 0;
  for (const auto& s : sequences) n += s.n_frames;
  return n;
}

namespace {

DatasetPlan plan_header(std::string kind, std::uint64_t global_seed, const Corpus& corpus,
                        const ObjectCatalog& catalog, const GenerationParams& params) {
  DatasetPlan plan;
  plan.kind = std::move(kind);
  plan.global_seed = global_seed;
  plan.params = params;
  plan.corpus_manifest = corpus.manifest_path;
  plan.corpus_hash = corpus.manifest_hash;
  plan.catalog_manifest = catalog.manifest_path;
  plan.catalog_hash = catalog.manifest_hash;
  return plan;
}

std::string padded(std::size_t v, int width) {
  std::string s = std::to_string(v);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

}  // namespace

DatasetPlan build_dataset_plan(std::uint64_t global_seed, int n_sequences, const Corpus& corpus,
                               const ObjectCatalog& catalog, const GenerationParams& params) {
  params.validate();
  if (n_sequences < 0) throw InputError("sequence count must be non-negative");
  if (static_cast<std::size_t>(n_sequences) > corpus.entries.size()) {
    throw InputError("backgrounds depleted: " + std::to_string(n_sequences) +
                     " sequences requested, corpus holds " + std::to_string(corpus.entries.size()));
  }
  DatasetPlan plan = plan_header("dataset", global_seed, corpus, catalog, params);
  BackgroundPool pool(corpus.entries.size());
  plan.sequences.reserve(static_cast<std::size_t>(n_sequences));
  for (int i = 0; i < n_sequences; ++i) {
    const std::uint64_t seed = sequence_seed(global_seed, static_cast<std::uint64_t>(i));
    Rng rng(seed);
    SequenceConfig c = sample_sequence_config(rng, pool, corpus, catalog, params, seed);
    c.seq_id = "seq_" + padded(static_cast<std::size_t>(i), 5);
    plan.sequences.push_back(std::move(c));
  }
  return plan;
}

DatasetPlan build_attribute_study_plan(std::uint64_t global_seed, const Corpus& corpus,
                                       const ObjectCatalog& catalog,
                                       const GenerationParams& params) {
  params.validate();
  if (corpus.entries.size() < static_cast<std::size_t>(kStudyVariations)) {
    throw InputError("attribute study needs at least " + std::to_string(kStudyVariations) +
                     " backgrounds, corpus holds " + std::to_string(corpus.entries.size()));
  }
  if (catalog.entries.empty()) throw InputError("object catalog is empty");

  DatasetPlan plan = plan_header("study", global_seed, corpus, catalog, params);
  BackgroundPool pool(corpus.entries.size());
  const auto by_type = instances_by_type(catalog);

  struct Variation {
    std::uint64_t seed;
    SequenceConfig base;
  };
  std::vector<Variation> variations;
  for (int v = 0; v < kStudyVariations; ++v) {
    const std::uint64_t seed = sequence_seed(global_seed, static_cast<std::uint64_t>(v));
    Rng rng(seed);
    SequenceConfig base;
    base.n_frames = params.n_frames;
    base.render = params.render;
    base.background_id = corpus.entries.at(pool.draw(rng)).id;
    const auto& members = by_type[rng.below(by_type.size())];
    base.object_instance_id = catalog.entries[members[rng.below(members.size())]].instance_id;
    base.scene = sample_scene(rng, params);
    base.control_points = trajectory::sample_control_points(
        rng, trajectory_safe_region(params, base.scene.target_scale));
    variations.push_back({seed, std::move(base)});
  }

  for (std::size_t attr = 0; attr < kStudyAttributes.size(); ++attr) {
    for (int level = 0; level < 4; ++level) {
      for (int v = 0; v < kStudyVariations; ++v) {
        SequenceConfig c = variations[static_cast<std::size_t>(v)].base;
        const std::string name = kStudyAttributes[attr];
        AttributeLevels& a = c.attributes;
        a = AttributeLevels{};
        const auto li = static_cast<std::size_t>(level);
        if (name == "transparency") a.transparency_level = kTransparencyLevels[li];
        if (name == "occlusion") a.occlusion_stripes = kStripeLevels[li];
        if (name == "rotation") a.rotation_speed = kRotationLevels[li];
        if (name == "blur") a.blur_level = kBlurLevels[li];
        c.study = StudyTag{name, level, v};
        c.seed = derive_seed(variations[static_cast<std::size_t>(v)].seed,
                             static_cast<std::uint64_t>(attr * 4 + li) + 1);
        c.seq_id = "study_" + name + "_l" + std::to_string(level) + "_v" + std::to_string(v);
        plan.sequences.push_back(std::move(c));
      }
    }
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Batch mixing

double BatchSpec::transparent_fraction() const {
  if (entries.empty()) return 0.0;
  const auto n = std::count_if(entries.begin(), entries.end(),
                               [](const BatchEntry& e) { return e.source == Source::kTransparent; });
  return static_cast<double>(n) / static_cast<double>(entries.size());
}

BatchSpec mix_batches(const std::vector<SequenceIndexEntry>& transparent,
                      const std::vector<SequenceIndexEntry>& opaque, std::size_t batch_size,
                      Rng& rng) {
  if (transparent.empty()) throw InputError("transparent sequence index is empty");
  if (opaque.empty()) throw InputError("opaque sequence index is empty");
  if (batch_size < 1) throw InputError("batch size must be at least 1");
  for (const auto* index : {&transparent, &opaque}) {
    for (const auto& e : *index) {
      if (e.frames < 1) throw InputError("sequence '" + e.id + "' has no frames");
    }
  }
  BatchSpec spec;
  spec.entries.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    BatchEntry e;
    e.source = rng.bernoulli(kTransparentShare) ? Source::kTransparent : Source::kOpaque;
    const auto& index = e.source == Source::kTransparent ? transparent : opaque;
    e.sequence = rng.below(index.size());
    e.frame = static_cast<int>(rng.below(static_cast<std::uint64_t>(index[e.sequence].frames)));
    spec.entries.push_back(e);
  }
  return spec;
}

std::vector<SequenceIndexEntry> load_sequence_index(const fs::path& manifest) {
  const json j = read_json_file(manifest);
  const char* key = j.contains("sequences") ? "sequences" : "backgrounds";
  if (!j.contains(key) || !j[key].is_array()) {
    throw InputError(manifest.string() + ": expected a 'sequences' or 'backgrounds' array");
  }
  std::vector<SequenceIndexEntry> out;
  for (const auto& e : j[key]) {
    out.push_back({required<std::string>(e, "id", manifest), required<int>(e, "frames", manifest)});
  }
  return out;
}

std::string to_string(Source s) { return s == Source::kTransparent ? "transparent" : "opaque"; }

// ---------------------------------------------------------------------------
// JSON

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3 vec_from(const json& j) { return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()); }
json quat_json(const Quat& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }
Quat quat_from(const json& j) {
  return Quat(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>());
}

}  // namespace

void to_json(json& j, const AttributeLevels& a) {
  j = json{{"transparency_level", a.transparency_level},
           {"blur_level", a.blur_level},
           {"occlusion_stripes", a.occlusion_stripes},
           {"rotation_speed_deg", a.rotation_speed},
           {"distractor_present", a.distractor_present}};
}

void from_json(const json& j, AttributeLevels& a) {
  a.transparency_level = j.at("transparency_level").get<int>();
  a.blur_level = j.at("blur_level").get<int>();
  a.occlusion_stripes = j.at("occlusion_stripes").get<int>();
  a.rotation_speed = j.at("rotation_speed_deg").get<double>();
  a.distractor_present = j.at("distractor_present").get<bool>();
}

void to_json(json& j, const RenderSettings& r) {
  j = json{{"width", r.width},
           {"height", r.height},
           {"spp", r.spp},
           {"vfov_deg", r.vfov_deg},
           {"backdrop_distance", r.backdrop_distance},
           {"modal_masks", r.modal_masks}};
}

void from_json(const json& j, RenderSettings& r) {
  r.width = j.at("width").get<int>();
  r.height = j.at("height").get<int>();
  r.spp = j.at("spp").get<int>();
  r.vfov_deg = j.at("vfov_deg").get<double>();
  r.backdrop_distance = j.at("backdrop_distance").get<double>();
  r.modal_masks = j.value("modal_masks", false);
}

void to_json(json& j, const SceneParams& s) {
  j = json{{"target_scale", s.target_scale},
           {"distractor_scale", s.distractor_scale},
           {"rotation_axis", vec_json(s.rotation_axis)},
           {"target_orientation", quat_json(s.target_orientation)},
           {"distractor_orientation", quat_json(s.distractor_orientation)},
           {"distractor_offset_angle", s.distractor_offset_angle},
           {"occluder_phase", s.occluder_phase}};
}

void from_json(const json& j, SceneParams& s) {
  s.target_scale = j.at("target_scale").get<double>();
  s.distractor_scale = j.at("distractor_scale").get<double>();
  s.rotation_axis = vec_from(j.at("rotation_axis"));
  s.target_orientation = quat_from(j.at("target_orientation"));
  s.distractor_orientation = quat_from(j.at("distractor_orientation"));
  s.distractor_offset_angle = j.at("distractor_offset_angle").get<double>();
  s.occluder_phase = j.at("occluder_phase").get<int>();
}

void to_json(json& j, const StudyTag& s) {
  j = json{{"attribute", s.attribute}, {"level_index", s.level_index}, {"variation", s.variation}};
}

void from_json(const json& j, StudyTag& s) {
  s.attribute = j.at("attribute").get<std::string>();
  s.level_index = j.at("level_index").get<int>();
  s.variation = j.at("variation").get<int>();
}

void to_json(json& j, const SequenceConfig& c) {
  json pts = json::array();
  for (const auto& p : c.control_points) pts.push_back(vec_json(p));
  j = json{{"seq_id", c.seq_id},
           {"seed", c.seed},
           {"background_id", c.background_id},
           {"object_instance_id", c.object_instance_id},
           {"distractor_instance_id",
            c.distractor_instance_id ? json(*c.distractor_instance_id) : json(nullptr)},
           {"attributes", c.attributes},
           {"control_points", pts},
           {"n_frames", c.n_frames},
           {"resolution", {c.render.width, c.render.height}},
           {"render", c.render},
           {"scene", c.scene}};
  if (c.study) j["study"] = *c.study;
}

void from_json(const json& j, SequenceConfig& c) {
  c.seq_id = j.at("seq_id").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.background_id = j.at("background_id").get<std::string>();
  c.object_instance_id = j.at("object_instance_id").get<std::string>();
  const auto& d = j.at("distractor_instance_id");
  c.distractor_instance_id = d.is_null() ? std::nullopt : std::optional<std::string>(d.get<std::string>());
  c.attributes = j.at("attributes").get<AttributeLevels>();
  const auto& pts = j.at("control_points");
  if (pts.size() != 4) throw InputError("sequence '" + c.seq_id + "' needs 4 control points");
  for (std::size_t i = 0; i < 4; ++i) c.control_points[i] = vec_from(pts.at(i));
  c.n_frames = j.at("n_frames").get<int>();
  c.render = j.at("render").get<RenderSettings>();
  c.scene = j.at("scene").get<SceneParams>();
  if (j.contains("study")) c.study = j.at("study").get<StudyTag>();
}

void to_json(json& j, const GenerationParams& p) {
  j = json{{"n_frames", p.n_frames},
           {"render", p.render},
           {"blur_probability", p.blur_probability},
           {"occlusion_probability", p.occlusion_probability},
           {"distractor_probability", p.distractor_probability},
           {"scale_min", p.scale_min},
           {"scale_max", p.scale_max},
           {"depth_near", p.depth_near},
           {"depth_far", p.depth_far}};
}

void from_json(const json& j, GenerationParams& p) {
  p.n_frames = j.at("n_frames").get<int>();
  p.render = j.at("render").get<RenderSettings>();
  p.blur_probability = j.at("blur_probability").get<double>();
  p.occlusion_probability = j.at("occlusion_probability").get<double>();
  p.distractor_probability = j.at("distractor_probability").get<double>();
  p.scale_min = j.at("scale_min").get<double>();
  p.scale_max = j.at("scale_max").get<double>();
  p.depth_near = j.at("depth_near").get<double>();
  p.depth_far = j.at("depth_far").get<double>();
}

void to_json(json& j, const DatasetPlan& p) {
  j = json{{"kind", p.kind},
           {"global_seed", p.global_seed},
           {"params", p.params},
           {"manifest",
            {{"corpus", p.corpus_manifest.generic_string()},
             {"corpus_hash", p.corpus_hash},
             {"catalog", p.catalog_manifest.generic_string()},
             {"catalog_hash", p.catalog_hash}}},
           {"sequences", p.sequences}};
}

void from_json(const json& j, DatasetPlan& p) {
  p.kind = j.at("kind").get<std::string>();
  p.global_seed = j.at("global_seed").get<std::uint64_t>();
  p.params = j.at("params").get<GenerationParams>();
  const auto& m = j.at("manifest");
  p.corpus_manifest = m.at("corpus").get<std::string>();
  p.corpus_hash = m.at("corpus_hash").get<std::string>();
  p.catalog_manifest = m.at("catalog").get<std::string>();
  p.catalog_hash = m.at("catalog_hash").get<std::string>();
  p.sequences = j.at("sequences").get<std::vector<SequenceConfig>>();
}

std::string serialize_plan(const DatasetPlan& plan) { return json(plan).dump(2) + "\n"; }

DatasetPlan parse_plan(const std::string& text) {
  try {
    return json::parse(text).get<DatasetPlan>();
  } catch (const json::exception& e) {
    throw InputError(std::string("invalid plan: ") + e.what());
  }
}

void write_plan(const fs::path& path, const DatasetPlan& plan) {
  write_text_file(path, serialize_plan(plan));
}

DatasetPlan read_plan(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open plan " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_plan(ss.str());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace transgen::seqplan
