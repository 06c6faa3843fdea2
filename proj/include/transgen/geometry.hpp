#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "transgen/math.hpp"
#include "transgen/simd/kernels.hpp"

namespace transgen::geometry {

struct Aabb3 {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void expand(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void expand(const Aabb3& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool valid() const { return (lo.array() <= hi.array()).all(); }
  bool contains(const Aabb3& b) const {
    return (lo.array() <= b.lo.array()).all() && (b.hi.array() <= hi.array()).all();
  }
  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
  double surface_area() const;
};

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::vector<Vec3> normals;  // per triangle, unit, from counter-clockwise winding

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t triangle_count() const { return triangles.size(); }
  Aabb3 bounds() const;
  Aabb3 triangle_bounds(std::size_t tri) const;
  double surface_area() const;
};

// Parses the v / f subset of Wavefront OBJ. Polygons are fan-triangulated,
// "i/j/k" corner forms and negative (relative) indices are accepted, every
// other record type is ignored, and zero-area triangles are dropped.
TriMesh load_mesh(std::string_view obj_text, std::string_view source_name = "<obj>");
TriMesh load_mesh_file(const std::filesystem::path& path);

// Builds a mesh from raw arrays, recomputing normals and dropping degenerates.
TriMesh make_mesh(std::vector<Vec3> vertices, std::vector<std::array<std::uint32_t, 3>> triangles);

// Recenters the mesh on its bounding-box center and scales it so the
// farthest vertex lies at distance 1.
TriMesh normalized(const TriMesh& mesh);

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3(0, 0, -1);
  double t_min = 0.0;
  double t_max = std::numeric_limits<double>::infinity();
};

struct Hit {
  double t = 0.0;
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();  // outward geometric normal
  bool front_face = false;     // ray arrives from the outside
  std::uint32_t triangle = 0;
};

struct TraversalStats {
  std::size_t nodes_visited = 0;
  std::size_t triangle_tests = 0;
};

// Binned-SAH bounding volume hierarchy over a TriMesh. Leaves hold at most
// four triangles packed for the packet intersection kernel. Immutable after
// construction; concurrent queries are safe.
class Bvh {
 public:
  static constexpr int kBins = 16;
  static constexpr int kMaxLeafSize = 4;

  struct Node {
    Aabb3 box;
    std::uint32_t first = 0;  // left child (interior) or packet index (leaf)
    std::uint32_t count = 0;  // triangle count; 0 for interior nodes
    bool is_leaf() const { return count != 0; }
  };

  static Bvh build(const TriMesh& mesh);

  std::optional<Hit> intersect(const TriMesh& mesh, const Ray& ray,
                               TraversalStats* stats = nullptr) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  const Aabb3& root_box() const { return nodes_.front().box; }
  // Mesh triangle indices held by a leaf.
  std::vector<std::uint32_t> leaf_triangles(const Node& leaf) const;

 private:
  std::vector<Node> nodes_;
  std::vector<simd::TrianglePacket4> packets_;
  std::vector<std::array<std::int32_t, 4>> lane_triangle_;
  const simd::KernelTable* kernels_ = nullptr;

  friend class BvhBuilder;
};

// Rigid placement with uniform scale: world = translation + scale * rotation * local.
struct Transform {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;

  Vec3 apply_point(const Vec3& p) const { return translation + scale * (rotation * p); }
  Vec3 apply_normal(const Vec3& n) const { return rotation * n; }
};

// Intersects a world-space ray with a transformed mesh; t is in world units.
std::optional<Hit> intersect_instance(const Bvh& bvh, const TriMesh& mesh, const Transform& xf,
                                      const Ray& world_ray, TraversalStats* stats = nullptr);

// Slab test; returns the entry distance when the box is hit within [t_min, t_max].
std::optional<double> intersect_box(const Aabb3& box, const Vec3& origin, const Vec3& inv_dir,
                                    double t_min, double t_max);

}  // namespace transgen::geometry
