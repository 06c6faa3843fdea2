#include "transgen/assets.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "transgen/error.hpp"
#include "transgen/rng.hpp"

namespace transgen::assets {

using Tri = std::array<std::uint32_t, 3>;

geometry::TriMesh make_uv_sphere(int stacks, int slices) {
  std::vector<Vec3> v;
  std::vector<Tri> t;
  v.emplace_back(0, 1, 0);
  for (int i = 1; i < stacks; ++i) {
    const double phi = kPi * i / stacks;
    for (int j = 0; j < slices; ++j) {
      const double theta = 2.0 * kPi * j / slices;
      v.emplace_back(std::sin(phi) * std::cos(theta), std::cos(phi), std::sin(phi) * std::sin(theta));
    }
  }
  v.emplace_back(0, -1, 0);
  const auto ring = [&](int i, int j) {
    return static_cast<std::uint32_t>(1 + (i - 1) * slices + (j % slices));
  };
  const auto bottom = static_cast<std::uint32_t>(v.size() - 1);
  for (int j = 0; j < slices; ++j) {
    t.push_back({0, ring(1, j + 1), ring(1, j)});
    for (int i = 1; i + 1 < stacks; ++i) {
      t.push_back({ring(i, j), ring(i, j + 1), ring(i + 1, j + 1)});
      t.push_back({ring(i, j), ring(i + 1, j + 1), ring(i + 1, j)});
    }
    t.push_back({bottom, ring(stacks - 1, j), ring(stacks - 1, j + 1)});
  }
  return geometry::make_mesh(std::move(v), std::move(t));
}

geometry::TriMesh make_box(const Vec3& he) {
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i) {
    v.emplace_back((i & 1) ? he.x() : -he.x(), (i & 2) ? he.y() : -he.y(), (i & 4) ? he.z() : -he.z());
  }
  // Quads wound counter-clockwise seen from outside.
  const int quads[6][4] = {{0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4},
                           {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}};
  std::vector<Tri> t;
  for (const auto& q : quads) {
    t.push_back({static_cast<std::uint32_t>(q[0]), static_cast<std::uint32_t>(q[1]), static_cast<std::uint32_t>(q[2])});
    t.push_back({static_cast<std::uint32_t>(q[0]), static_cast<std::uint32_t>(q[2]), static_cast<std::uint32_t>(q[3])});
  }
  return geometry::make_mesh(std::move(v), std::move(t));
}

namespace {

// Surface of revolution around +y through a profile of (radius, y) points,
// listed bottom to top, with optional caps at the ends.
geometry::TriMesh lathe(const std::vector<std::pair<double, double>>& profile, int slices,
                        bool cap_bottom, bool cap_top) {
  std::vector<Vec3> v;
  std::vector<Tri> t;
  const auto rings = static_cast<int>(profile.size());
  for (const auto& [r, y] : profile) {
    for (int j = 0; j < slices; ++j) {
      const double theta = 2.0 * kPi * j / slices;
      v.emplace_back(r * std::cos(theta), y, r * std::sin(theta));
    }
  }
  const auto at = [&](int i, int j) { return static_cast<std::uint32_t>(i * slices + (j % slices)); };
  for (int i = 0; i + 1 < rings; ++i) {
    for (int j = 0; j < slices; ++j) {
      t.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
      t.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
    }
  }
  if (cap_bottom) {
    v.emplace_back(0, profile.front().second, 0);
    const auto c = static_cast<std::uint32_t>(v.size() - 1);
    for (int j = 0; j < slices; ++j) t.push_back({c, at(0, j), at(0, j + 1)});
  }
  if (cap_top) {
    v.emplace_back(0, profile.back().second, 0);
    const auto c = static_cast<std::uint32_t>(v.size() - 1);
    for (int j = 0; j < slices; ++j) t.push_back({c, at(rings - 1, j + 1), at(rings - 1, j)});
  }
  return geometry::make_mesh(std::move(v), std::move(t));
}

}  // namespace

geometry::TriMesh make_cylinder(int slices, double radius, double half_height) {
  return lathe({{radius, -half_height}, {radius, half_height}}, slices, true, true);
}

geometry::TriMesh make_cone(int slices, double radius, double half_height) {
  return lathe({{radius, -half_height}, {radius * 1e-3, half_height}}, slices, true, true);
}

geometry::TriMesh make_torus(int rings, int sides, double major, double minor) {
  std::vector<Vec3> v;
  std::vector<Tri> t;
  for (int i = 0; i < rings; ++i) {
    const double u = 2.0 * kPi * i / rings;
    for (int j = 0; j < sides; ++j) {
      const double w = 2.0 * kPi * j / sides;
      const double r = major + minor * std::cos(w);
      v.emplace_back(r * std::cos(u), minor * std::sin(w), r * std::sin(u));
    }
  }
  const auto at = [&](int i, int j) {
    return static_cast<std::uint32_t>((i % rings) * sides + (j % sides));
  };
  for (int i = 0; i < rings; ++i) {
    for (int j = 0; j < sides; ++j) {
      t.push_back({at(i, j), at(i, j + 1), at(i + 1, j + 1)});
      t.push_back({at(i, j), at(i + 1, j + 1), at(i + 1, j)});
    }
  }
  return geometry::make_mesh(std::move(v), std::move(t));
}

geometry::TriMesh make_tumbler(int slices, double radius, double half_height, double wall) {
  // Outer wall bottom to rim, then inner wall rim to floor; the profile
  // folds over at the rim so both shells share one closed surface.
  const double inner = radius - wall;
  const double floor_y = -half_height + wall;
  return lathe({{radius, -half_height},
                {radius, half_height},
                {inner, half_height},
                {inner, floor_y}},
               slices, true, true);
}

std::string to_obj(const geometry::TriMesh& mesh) {
  std::ostringstream out;
  out.precision(17);
  out << "# " << mesh.vertex_count() << " vertices, " << mesh.triangle_count() << " triangles\n";
  for (const auto& v : mesh.vertices) out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
  return out.str();
}

RgbImage synth_background_frame(std::uint64_t seed, int frame, int width, int height) {
  Rng rng(seed);
  // A few drifting sinusoidal layers per channel plus a coarse checker.
  struct Wave {
    double kx, ky, speed, phase, amp;
  };
  std::array<std::array<Wave, 3>, 3> waves{};
  for (auto& channel : waves) {
    for (auto& w : channel) {
      w = {rng.uniform(-0.06, 0.06), rng.uniform(-0.06, 0.06), rng.uniform(-0.15, 0.15),
           rng.uniform(0.0, 2.0 * kPi), rng.uniform(0.08, 0.2)};
    }
  }
  Vec3 base(rng.uniform(0.25, 0.75), rng.uniform(0.25, 0.75), rng.uniform(0.25, 0.75));
  const double cell = rng.uniform(12.0, 28.0);
  const double drift = rng.uniform(0.5, 1.5);

  RgbImage img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int cx = static_cast<int>(std::floor((x + drift * frame) / cell));
      const int cy = static_cast<int>(std::floor(y / cell));
      const double checker = ((cx + cy) & 1) ? 0.08 : -0.08;
      std::uint8_t* p = img.pixel(x, y);
      for (int c = 0; c < 3; ++c) {
        double v = base[c] + checker;
        for (const auto& w : waves[static_cast<std::size_t>(c)]) {
          v += w.amp * std::sin(w.kx * x + w.ky * y + w.speed * frame + w.phase);
        }
        p[c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
    }
  }
  return img;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace

DemoPaths write_demo_assets(const fs::path& dir, const DemoOptions& o) {
  if (o.backgrounds < 1 || o.frames < 1 || o.width < 8 || o.height < 8) {
    throw InputError("demo assets need at least one background, one frame and 8x8 pixels");
  }
  fs::create_directories(dir / "backgrounds");
  fs::create_directories(dir / "meshes");

  seqplan::Corpus corpus;
  for (int b = 0; b < o.backgrounds; ++b) {
    char id[32];
    std::snprintf(id, sizeof id, "bg_%04d", b);
    const fs::path bdir = dir / "backgrounds" / id;
    fs::create_directories(bdir);
    const std::uint64_t seed = derive_seed(o.seed, static_cast<std::uint64_t>(b));
    for (int k = 0; k < o.frames; ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "%06d.ppm", k);
      write_ppm(bdir / name, synth_background_frame(seed, k, o.width, o.height));
    }
    corpus.entries.push_back({id, fs::absolute(bdir), o.frames});
  }

  struct Shape {
    const char* instance;
    const char* type;
    geometry::TriMesh mesh;
    seqplan::Volume volume;
    Rgb tint;
  };
  std::vector<Shape> shapes;
  shapes.push_back({"sphere_a", "sphere", make_uv_sphere(24, 48), seqplan::Volume::kFull, Rgb(1, 1, 1)});
  shapes.push_back({"sphere_b", "sphere", make_uv_sphere(16, 32), seqplan::Volume::kFull, Rgb(0.92, 0.97, 1.0)});
  shapes.push_back({"cube_a", "cube", make_box(Vec3(0.6, 0.6, 0.6)), seqplan::Volume::kFull, Rgb(1, 1, 1)});
  shapes.push_back({"slab_a", "cube", make_box(Vec3(0.8, 0.5, 0.25)), seqplan::Volume::kFull, Rgb(0.95, 1.0, 0.95)});
  shapes.push_back({"bottle_a", "cylinder", make_cylinder(48, 0.4, 0.9), seqplan::Volume::kFull, Rgb(0.9, 1.0, 0.92)});
  shapes.push_back({"cone_a", "cone", make_cone(48, 0.6, 0.7), seqplan::Volume::kFull, Rgb(1, 1, 1)});
  shapes.push_back({"ring_a", "torus", make_torus(48, 24, 0.7, 0.25), seqplan::Volume::kFull, Rgb(1, 0.97, 0.92)});
  shapes.push_back({"cup_a", "tumbler", make_tumbler(48, 0.5, 0.7, 0.06), seqplan::Volume::kEmpty, Rgb(1, 1, 1)});

  seqplan::ObjectCatalog catalog;
  for (auto& s : shapes) {
    const fs::path mesh_path = dir / "meshes" / (std::string(s.instance) + ".obj");
    write_text(mesh_path, to_obj(s.mesh));
    seqplan::CatalogEntry e;
    e.instance_id = s.instance;
    e.type_id = s.type;
    e.mesh = fs::absolute(mesh_path);
    e.volume = s.volume;
    e.tint = s.tint;
    catalog.entries.push_back(std::move(e));
  }

  DemoPaths paths{dir / "corpus.json", dir / "catalog.json"};
  seqplan::write_corpus(paths.corpus_manifest, corpus);
  seqplan::write_catalog(paths.catalog_manifest, catalog);
  return paths;
}

}  // namespace transgen::assets
