#include <gtest/gtest.h>

#include <map>
#include <set>

#include "fixtures.hpp"
#include "transgen/error.hpp"
#include "transgen/seqplan.hpp"

namespace {

using namespace transgen;
using namespace transgen::seqplan;

Corpus synthetic_corpus(std::size_t n) {
  Corpus c;
  for (std::size_t i = 0; i < n; ++i) c.entries.push_back({"bg" + std::to_string(i), "bg", 60});
  c.manifest_path = "corpus.json";
  c.manifest_hash = "0000000000000000";
  return c;
}

// Type "a" has one instance, "b" has five: types must still be equiprobable.
ObjectCatalog synthetic_catalog() {
  ObjectCatalog c;
  c.entries.push_back({"a0", "a", "a0.obj"});
  for (int i = 0; i < 5; ++i) c.entries.push_back({"b" + std::to_string(i), "b", "b.obj"});
  c.entries.push_back({"c0", "c", "c0.obj"});
  c.manifest_path = "catalog.json";
  c.manifest_hash = "1111111111111111";
  return c;
}

TEST(Levels, ConstantsMatchAttributeSets) {
  EXPECT_EQ(kStripeLevels, (std::array<int, 4>{0, 7, 11, 20}));
  EXPECT_EQ(kRotationLevels, (std::array<double, 4>{0.0, 1.3, 5.4, 10.6}));
  EXPECT_EQ(kTransparencyLevels, (std::array<int, 4>{1, 2, 3, 4}));
  EXPECT_EQ(kBlurLevels, (std::array<int, 4>{0, 1, 2, 3}));
  AttributeLevels a;
  a.occlusion_stripes = 8;
  EXPECT_THROW(a.validate(), InputError);
  a = {};
  a.rotation_speed = 5.0;
  EXPECT_THROW(a.validate(), InputError);
}

TEST(Sampling, FrequenciesAndExclusions) {
  const Corpus corpus = synthetic_corpus(10000);
  const ObjectCatalog catalog = synthetic_catalog();
  const GenerationParams params;
  BackgroundPool pool(corpus.entries.size());
  Rng rng(2024);
  int blur = 0, occl = 0, distract = 0;
  std::map<std::string, int> types;
  std::map<int, int> stripes, blur_levels;
  std::set<std::string> backgrounds;
  for (int i = 0; i < 10000; ++i) {
    const auto c = sample_sequence_config(rng, pool, corpus, catalog, params, static_cast<std::uint64_t>(i));
    ASSERT_NO_THROW(c.attributes.validate());
    EXPECT_NE(c.attributes.transparency_level, 1);
    EXPECT_NE(c.attributes.rotation_speed, 0.0);
    blur += c.attributes.blur_level > 0;
    occl += c.attributes.occlusion_stripes > 0;
    ++stripes[c.attributes.occlusion_stripes];
    ++blur_levels[c.attributes.blur_level];
    ++types[catalog.find(c.object_instance_id).type_id];
    EXPECT_TRUE(backgrounds.insert(c.background_id).second) << c.background_id;
    if (c.attributes.distractor_present) {
      ++distract;
      ASSERT_TRUE(c.distractor_instance_id);
      EXPECT_NE(catalog.find(*c.distractor_instance_id).type_id, catalog.find(c.object_instance_id).type_id);
    } else {
      EXPECT_FALSE(c.distractor_instance_id);
    }
  }
  EXPECT_NEAR(blur / 1e4, 0.15, 0.02);
  EXPECT_NEAR(occl / 1e4, 0.20, 0.02);
  EXPECT_NEAR(distract / 1e4, 0.30, 0.02);
  for (int s : {7, 11, 20}) EXPECT_NEAR(stripes[s] / double(occl), 1.0 / 3.0, 0.05);
  for (int b : {1, 2, 3}) EXPECT_NEAR(blur_levels[b] / double(blur), 1.0 / 3.0, 0.05);
  for (const char* t : {"a", "b", "c"}) EXPECT_NEAR(types[t] / 1e4, 1.0 / 3.0, 0.02) << t;
  EXPECT_EQ(pool.remaining(), 0u);
}

TEST(Sampling, DepletionAndMissingDistractorType) {
  const Corpus corpus = synthetic_corpus(3);
  const ObjectCatalog catalog = synthetic_catalog();
  BackgroundPool pool(3);
  Rng rng(1);
  for (int i = 0; i < 3; ++i) sample_sequence_config(rng, pool, corpus, catalog, {}, 0);
  try {
    sample_sequence_config(rng, pool, corpus, catalog, {}, 0);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("backgrounds depleted"), std::string::npos);
  }

  ObjectCatalog one_type;
  one_type.entries.push_back({"x", "t", "x.obj"});
  GenerationParams always;
  always.distractor_probability = 1.0;
  BackgroundPool pool2(3);
  EXPECT_THROW(sample_sequence_config(rng, pool2, corpus, one_type, always, 0), InputError);
}

TEST(SafeRegion, ControlPointsKeepObjectInFrame) {
  GenerationParams params;
  for (double scale : {0.1, 0.2, 0.3}) {
    const auto box = trajectory_safe_region(params, scale);
    const double tan_half = std::tan(deg_to_rad(params.render.vfov_deg) / 2);
    const double aspect = double(params.render.width) / params.render.height;
    // Largest radius the renderer can assign at this scale.
    const double r = scale * params.depth_far * tan_half * std::min(1.0, aspect);
    for (int corner = 0; corner < 8; ++corner) {
      const Vec3 p((corner & 1) ? box.hi.x() : box.lo.x(), (corner & 2) ? box.hi.y() : box.lo.y(),
                   (corner & 4) ? box.hi.z() : box.lo.z());
      const double depth = -p.z();
      EXPECT_LE((std::abs(p.x()) + r) / depth, tan_half * aspect + 1e-12);
      EXPECT_LE((std::abs(p.y()) + r) / depth, tan_half + 1e-12);
    }
  }
  params.scale_max = 0.9;
  EXPECT_THROW(trajectory_safe_region(params, 2.0), InputError);
}

TEST(Plan, DeterministicWithDistinctSeeds) {
  const Corpus corpus = synthetic_corpus(40);
  const ObjectCatalog catalog = synthetic_catalog();
  const auto a = build_dataset_plan(9, 40, corpus, catalog, {});
  const auto b = build_dataset_plan(9, 40, corpus, catalog, {});
  EXPECT_EQ(serialize_plan(a), serialize_plan(b));
  std::set<std::uint64_t> seeds;
  std::set<std::string> bgs;
  for (const auto& s : a.sequences) {
    seeds.insert(s.seed);
    bgs.insert(s.background_id);
  }
  EXPECT_EQ(seeds.size(), 40u);
  EXPECT_EQ(bgs.size(), 40u);  // every background exactly once
  EXPECT_NE(serialize_plan(build_dataset_plan(10, 40, corpus, catalog, {})), serialize_plan(a));

  // A sequence's config depends on its own seed only, not on the plan size.
  const auto prefix = build_dataset_plan(9, 1, corpus, catalog, {});
  EXPECT_EQ(prefix.sequences[0].seed, a.sequences[0].seed);
}

TEST(Plan, EmptyAndOversized) {
  const Corpus corpus = synthetic_corpus(4);
  const auto empty = build_dataset_plan(3, 0, corpus, synthetic_catalog(), {});
  EXPECT_TRUE(empty.sequences.empty());
  EXPECT_EQ(parse_plan(serialize_plan(empty)).corpus_hash, corpus.manifest_hash);
  EXPECT_THROW(build_dataset_plan(3, 5, corpus, synthetic_catalog(), {}), InputError);
}

TEST(Plan, ReferenceScaleFrameCount) {
  GenerationParams params;
  const std::int64_t frames = 2039 * static_cast<std::int64_t>(params.n_frames);
  EXPECT_EQ(frames, 103989);
  EXPECT_LT(std::abs(frames - 104343) / 104343.0, 0.02);
}

TEST(Plan, JsonRoundTripIsExact) {
  const auto plan = build_dataset_plan(77, 12, synthetic_corpus(12), synthetic_catalog(), {});
  const std::string text = serialize_plan(plan);
  const auto back = parse_plan(text);
  ASSERT_EQ(back.sequences.size(), plan.sequences.size());
  for (std::size_t i = 0; i < plan.sequences.size(); ++i) EXPECT_TRUE(back.sequences[i] == plan.sequences[i]);
  EXPECT_EQ(serialize_plan(back), text);
  EXPECT_THROW(parse_plan("{\"kind\": \"dataset\"}"), std::exception);
}

TEST(Study, ShapeSharingAndNeutralPins) {
  const auto plan = build_attribute_study_plan(5, synthetic_corpus(8), synthetic_catalog(), {});
  ASSERT_EQ(plan.sequences.size(), 80u);
  std::map<std::string, int> per_bg;
  std::map<int, std::vector<const SequenceConfig*>> by_variation;
  std::set<std::string> ids;
  for (const auto& s : plan.sequences) {
    ASSERT_TRUE(s.study);
    ++per_bg[s.background_id];
    by_variation[s.study->variation].push_back(&s);
    EXPECT_TRUE(ids.insert(s.seq_id).second);
    const auto& a = s.attributes;
    EXPECT_FALSE(a.distractor_present);
    const auto& attr = s.study->attribute;
    if (attr != "transparency") {
      EXPECT_EQ(a.transparency_level, 2);
    }
    if (attr != "occlusion") {
      EXPECT_EQ(a.occlusion_stripes, 0);
    }
    if (attr != "rotation") {
      EXPECT_EQ(a.rotation_speed, 0.0);
    }
    if (attr != "blur") {
      EXPECT_EQ(a.blur_level, 0);
    }
  }
  EXPECT_EQ(per_bg.size(), 5u);
  for (const auto& [bg, n] : per_bg) EXPECT_EQ(n, 16) << bg;
  for (const auto& [v, seqs] : by_variation) {
    ASSERT_EQ(seqs.size(), 16u);
    std::set<int> transparency;
    for (const auto* s : seqs) {
      EXPECT_EQ(s->background_id, seqs[0]->background_id);
      EXPECT_EQ(s->object_instance_id, seqs[0]->object_instance_id);
      EXPECT_TRUE(s->scene == seqs[0]->scene);
      for (int k = 0; k < 4; ++k) EXPECT_EQ(s->control_points[k], seqs[0]->control_points[k]);
      if (s->study->attribute == "transparency") transparency.insert(s->attributes.transparency_level);
    }
    EXPECT_EQ(transparency, (std::set<int>{1, 2, 3, 4}));
  }
  EXPECT_THROW(build_attribute_study_plan(5, synthetic_corpus(4), synthetic_catalog(), {}), InputError);
}

TEST(Mix, RatioAndShape) {
  const std::vector<SequenceIndexEntry> t = {{"t0", 10}, {"t1", 3}};
  const std::vector<SequenceIndexEntry> o = {{"o0", 7}};
  Rng rng(8);
  const auto spec = mix_batches(t, o, 80000, rng);
  ASSERT_EQ(spec.entries.size(), 80000u);
  EXPECT_NEAR(spec.transparent_fraction(), 0.625, 0.01);
  for (const auto& e : spec.entries) {
    const auto& idx = e.source == Source::kTransparent ? t : o;
    ASSERT_LT(e.sequence, idx.size());
    EXPECT_GE(e.frame, 0);
    EXPECT_LT(e.frame, idx[e.sequence].frames);
  }
  Rng r1(3), r2(3);
  EXPECT_EQ(mix_batches(t, o, 100, r1).entries, mix_batches(t, o, 100, r2).entries);
  EXPECT_EQ(mix_batches(t, o, 1, r1).entries.size(), 1u);
  EXPECT_THROW(mix_batches(t, {}, 4, r1), InputError);
  EXPECT_THROW(mix_batches({}, o, 4, r1), InputError);
  EXPECT_THROW(mix_batches(t, o, 0, r1), InputError);
}

TEST(Manifests, RoundTripThroughFiles) {
  fixtures::TempDir dir("manifests");
  const auto paths = fixtures::small_assets(dir.path(), 3, 4, 16, 16);
  const Corpus corpus = load_corpus(paths.corpus_manifest);
  ASSERT_EQ(corpus.entries.size(), 3u);
  EXPECT_EQ(corpus.entries[0].frames, 4);
  EXPECT_TRUE(fs::exists(corpus.entries[0].path / "000000.ppm"));
  const ObjectCatalog catalog = load_catalog(paths.catalog_manifest);
  EXPECT_GE(catalog.types().size(), 2u);
  EXPECT_EQ(catalog.manifest_hash, fnv1a_hex(paths.catalog_manifest));

  write_corpus(dir / "copy.json", corpus);
  const Corpus again = load_corpus(dir / "copy.json");
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    EXPECT_EQ(fs::weakly_canonical(again.entries[i].path), fs::weakly_canonical(corpus.entries[i].path));
  }
  EXPECT_EQ(load_sequence_index(paths.corpus_manifest).size(), 3u);

  fixtures::write_file(dir / "bad.json", "{\"objects\": [{\"instance_id\": \"x\"}]}");
  EXPECT_THROW(load_catalog(dir / "bad.json"), std::exception);
}

}  // namespace
