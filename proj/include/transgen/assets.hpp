#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "transgen/geometry.hpp"
#include "transgen/image.hpp"
#include "transgen/seqplan.hpp"

// Procedural stand-ins for the user-supplied background corpus and object
// catalog, used by the demo command and the tests.
namespace transgen::assets {

namespace fs = std::filesystem;

geometry::TriMesh make_uv_sphere(int stacks, int slices);
geometry::TriMesh make_box(const Vec3& half_extent);
geometry::TriMesh make_cylinder(int slices, double radius, double half_height);
geometry::TriMesh make_cone(int slices, double radius, double half_height);
geometry::TriMesh make_torus(int rings, int sides, double major, double minor);
// Open-top cup with a wall thickness: two shells joined at the rim.
geometry::TriMesh make_tumbler(int slices, double radius, double half_height, double wall);

std::string to_obj(const geometry::TriMesh& mesh);

// Smooth, drifting texture; frame k of background `seed`.
RgbImage synth_background_frame(std::uint64_t seed, int frame, int width, int height);

struct DemoOptions {
  int backgrounds = 8;
  int frames = 60;
  int width = 320;
  int height = 180;
  std::uint64_t seed = 1;
};

struct DemoPaths {
  fs::path corpus_manifest;
  fs::path catalog_manifest;
};

// Writes <dir>/backgrounds/<id>/%06d.ppm, <dir>/meshes/*.obj,
// <dir>/corpus.json and <dir>/catalog.json.
DemoPaths write_demo_assets(const fs::path& dir, const DemoOptions& options);

}  // namespace transgen::assets
