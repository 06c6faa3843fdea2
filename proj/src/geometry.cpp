#include "transgen/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "transgen/error.hpp"

namespace transgen::geometry {

namespace fs = std::filesystem;

double Aabb3::surface_area() const {
  if (!valid()) return 0.0;
  const Vec3 e = extent();
  return 2.0 * (e.x() * e.y() + e.y() * e.z() + e.z() * e.x());
}

Aabb3 TriMesh::bounds() const {
  Aabb3 b;
  for (const auto& v : vertices) b.expand(v);
  return b;
}

Aabb3 TriMesh::triangle_bounds(std::size_t tri) const {
  Aabb3 b;
  for (auto idx : triangles[tri]) b.expand(vertices[idx]);
  return b;
}

double TriMesh::surface_area() const {
  double area = 0.0;
  for (const auto& t : triangles) {
    area += 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
  }
  return area;
}

TriMesh make_mesh(std::vector<Vec3> vertices, std::vector<std::array<std::uint32_t, 3>> triangles) {
  TriMesh mesh;
  mesh.vertices = std::move(vertices);
  Aabb3 box;
  for (const auto& v : mesh.vertices) box.expand(v);
  const double diag = box.valid() ? box.extent().norm() : 0.0;
  const double min_double_area = 1e-14 * diag * diag;

  mesh.triangles.reserve(triangles.size());
  mesh.normals.reserve(triangles.size());
  for (const auto& t : triangles) {
    const Vec3 n = (mesh.vertices[t[1]] - mesh.vertices[t[0]])
                       .cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]);
    const double twice_area = n.norm();
    if (!(twice_area > min_double_area)) continue;
    mesh.triangles.push_back(t);
    mesh.normals.push_back(n / twice_area);
  }
  return mesh;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

TriMesh load_mesh(std::string_view text, std::string_view source_name) {
  const std::string where(source_name);
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    const auto tokens = split_ws(line);
    if (tokens[0] == "v") {
      if (tokens.size() < 4) throw ParseError(where, line_no, "vertex needs 3 coordinates");
      Vec3 v;
      for (int k = 0; k < 3; ++k) {
        const auto tok = tokens[1 + k];
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (ec != std::errc() || ptr != tok.data() + tok.size()) {
          throw ParseError(where, line_no, "bad coordinate '" + std::string(tok) + "'");
        }
        v[k] = value;
      }
      vertices.push_back(v);
    } else if (tokens[0] == "f") {
      if (tokens.size() < 4) throw ParseError(where, line_no, "face needs at least 3 vertices");
      std::vector<std::uint32_t> corners;
      for (std::size_t k = 1; k < tokens.size(); ++k) {
        const auto tok = tokens[k].substr(0, tokens[k].find('/'));
        long long idx = 0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), idx);
        if (ec != std::errc() || ptr != tok.data() + tok.size() || idx == 0) {
          throw ParseError(where, line_no, "bad face index '" + std::string(tokens[k]) + "'");
        }
        const long long n = static_cast<long long>(vertices.size());
        const long long resolved = idx > 0 ? idx - 1 : n + idx;
        if (resolved < 0 || resolved >= n) {
          throw ParseError(where, line_no,
                           "face index " + std::to_string(idx) + " out of range (" +
                               std::to_string(n) + " vertices)");
        }
        corners.push_back(static_cast<std::uint32_t>(resolved));
      }
      for (std::size_t k = 1; k + 1 < corners.size(); ++k) {
        triangles.push_back({corners[0], corners[k], corners[k + 1]});
      }
    }
    if (end == text.size()) break;
  }

  TriMesh mesh = make_mesh(std::move(vertices), std::move(triangles));
  if (mesh.triangles.empty()) throw InputError(where + ": mesh has no triangles");
  return mesh;
}

TriMesh load_mesh_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open mesh " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_mesh(ss.str(), path.string());
}

TriMesh normalized(const TriMesh& mesh) {
  const Vec3 c = mesh.bounds().center();
  double radius = 0.0;
  for (const auto& v : mesh.vertices) radius = std::max(radius, (v - c).norm());
  if (!(radius > 0.0)) throw InputError("cannot normalize a mesh of zero extent");
  TriMesh out = mesh;
  for (auto& v : out.vertices) v = (v - c) / radius;
  return out;
}

std::optional<double> intersect_box(const Aabb3& box, const Vec3& origin, const Vec3& inv_dir,
                                    double t_min, double t_max) {
  for (int a = 0; a < 3; ++a) {
    double t0 = (box.lo[a] - origin[a]) * inv_dir[a];
    double t1 = (box.hi[a] - origin[a]) * inv_dir[a];
    if (t0 > t1) std::swap(t0, t1);
    // NaN from 0 * inf (origin on a slab plane, axis-parallel ray) leaves the interval unchanged.
    if (t0 > t_min) t_min = t0;
    if (t1 < t_max) t_max = t1;
    if (t_min > t_max) return std::nullopt;
  }
  return t_min;
}

// ----------------------------------------------------------------------------
// Construction

class BvhBuilder {
 public:
  explicit BvhBuilder(const TriMesh& mesh) : mesh_(mesh) {
    const std::size_t n = mesh.triangle_count();
    boxes_.reserve(n);
    centroids_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      boxes_.push_back(mesh.triangle_bounds(i));
      centroids_.push_back(boxes_.back().center());
    }
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0u);
  }

  Bvh run() {
    Bvh bvh;
    bvh_ = &bvh;
    bvh.nodes_.reserve(2 * mesh_.triangle_count() / Bvh::kMaxLeafSize + 1);
    bvh.nodes_.emplace_back();
    build_node(0, 0, order_.size(), 0);
    bvh.kernels_ = &simd::active_kernels();
    return bvh;
  }

 private:
  static constexpr int kMaxSahDepth = 48;

  struct Bin {
    Aabb3 box;
    std::size_t count = 0;
  };

  void build_node(std::size_t node_index, std::size_t begin, std::size_t end, int depth) {
    Aabb3 box;
    Aabb3 centroid_box;
    for (std::size_t i = begin; i < end; ++i) {
      box.expand(boxes_[order_[i]]);
      centroid_box.expand(centroids_[order_[i]]);
    }
    bvh_->nodes_[node_index].box = box;

    const std::size_t count = end - begin;
    if (count <= static_cast<std::size_t>(Bvh::kMaxLeafSize)) {
      make_leaf(node_index, begin, end);
      return;
    }

    // Past kMaxSahDepth only balanced splits are made, which bounds the tree depth.
    std::size_t mid = depth < kMaxSahDepth ? split_sah(centroid_box, begin, end) : begin;
    if (mid == begin || mid == end) {
      // All centroids coincide or SAH found no separating plane.
      mid = begin + count / 2;
      const int axis = largest_axis(centroid_box);
      std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                       [&](std::uint32_t a, std::uint32_t b) {
                         return centroids_[a][axis] < centroids_[b][axis];
                       });
    }

    const auto left = static_cast<std::uint32_t>(bvh_->nodes_.size());
    bvh_->nodes_.emplace_back();
    bvh_->nodes_.emplace_back();
    bvh_->nodes_[node_index].first = left;
    bvh_->nodes_[node_index].count = 0;
    build_node(left, begin, mid, depth + 1);
    build_node(left + 1, mid, end, depth + 1);
  }

  static int largest_axis(const Aabb3& b) {
    const Vec3 e = b.extent();
    if (e.x() >= e.y() && e.x() >= e.z()) return 0;
    return e.y() >= e.z() ? 1 : 2;
  }

  // Returns the partition point of the cheapest binned split, or begin when none.
  std::size_t split_sah(const Aabb3& centroid_box, std::size_t begin, std::size_t end) {
    constexpr int kBins = Bvh::kBins;
    double best_cost = std::numeric_limits<double>::infinity();
    int best_axis = -1;
    int best_split = -1;

    for (int axis = 0; axis < 3; ++axis) {
      const double lo = centroid_box.lo[axis];
      const double extent = centroid_box.hi[axis] - lo;
      if (!(extent > 0.0)) continue;
      const double to_bin = kBins / extent;

      std::array<Bin, kBins> bins{};
      for (std::size_t i = begin; i < end; ++i) {
        const auto tri = order_[i];
        const int b = std::min(kBins - 1, static_cast<int>((centroids_[tri][axis] - lo) * to_bin));
        bins[b].count++;
        bins[b].box.expand(boxes_[tri]);
      }

      std::array<double, kBins - 1> left_cost{};
      Aabb3 acc;
      std::size_t n = 0;
      for (int b = 0; b < kBins - 1; ++b) {
        acc.expand(bins[b].box);
        n += bins[b].count;
        left_cost[b] = n == 0 ? 0.0 : acc.surface_area() * static_cast<double>(n);
      }
      acc = Aabb3{};
      n = 0;
      for (int b = kBins - 1; b > 0; --b) {
        acc.expand(bins[b].box);
        n += bins[b].count;
        const double right = n == 0 ? 0.0 : acc.surface_area() * static_cast<double>(n);
        const double cost = left_cost[b - 1] + right;
        if (cost < best_cost) {
          best_cost = cost;
          best_axis = axis;
          best_split = b;
        }
      }
    }
    if (best_axis < 0) return begin;

    const double lo = centroid_box.lo[best_axis];
    const double to_bin = kBins / (centroid_box.hi[best_axis] - lo);
    auto it = std::partition(order_.begin() + begin, order_.begin() + end, [&](std::uint32_t tri) {
      const int b =
          std::min(kBins - 1, static_cast<int>((centroids_[tri][best_axis] - lo) * to_bin));
      return b < best_split;
    });
    return static_cast<std::size_t>(it - order_.begin());
  }

  void make_leaf(std::size_t node_index, std::size_t begin, std::size_t end) {
    simd::TrianglePacket4 packet{};
    std::array<std::int32_t, 4> lanes{-1, -1, -1, -1};
    for (std::size_t i = begin; i < end; ++i) {
      const int lane = static_cast<int>(i - begin);
      const auto tri = order_[i];
      const auto& t = mesh_.triangles[tri];
      const Vec3& v0 = mesh_.vertices[t[0]];
      const Vec3 e1 = mesh_.vertices[t[1]] - v0;
      const Vec3 e2 = mesh_.vertices[t[2]] - v0;
      packet.v0x[lane] = v0.x();
      packet.v0y[lane] = v0.y();
      packet.v0z[lane] = v0.z();
      packet.e1x[lane] = e1.x();
      packet.e1y[lane] = e1.y();
      packet.e1z[lane] = e1.z();
      packet.e2x[lane] = e2.x();
      packet.e2y[lane] = e2.y();
      packet.e2z[lane] = e2.z();
      lanes[lane] = static_cast<std::int32_t>(tri);
    }
    auto& node = bvh_->nodes_[node_index];
    node.first = static_cast<std::uint32_t>(bvh_->packets_.size());
    node.count = static_cast<std::uint32_t>(end - begin);
    bvh_->packets_.push_back(packet);
    bvh_->lane_triangle_.push_back(lanes);
  }

  const TriMesh& mesh_;
  std::vector<Aabb3> boxes_;
  std::vector<Vec3> centroids_;
  std::vector<std::uint32_t> order_;
  Bvh* bvh_ = nullptr;
};

Bvh Bvh::build(const TriMesh& mesh) {
  if (mesh.triangles.empty()) throw InputError("cannot build a BVH over an empty mesh");
  return BvhBuilder(mesh).run();
}

std::vector<std::uint32_t> Bvh::leaf_triangles(const Node& leaf) const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < leaf.count; ++i) {
    out.push_back(static_cast<std::uint32_t>(lane_triangle_[leaf.first][i]));
  }
  return out;
}

// ----------------------------------------------------------------------------
// Traversal

std::optional<Hit> Bvh::intersect(const TriMesh& mesh, const Ray& ray,
                                  TraversalStats* stats) const {
  const Vec3 inv_dir = ray.direction.cwiseInverse();
  const simd::RayData rd{ray.origin.x(),    ray.origin.y(),    ray.origin.z(),
                         ray.direction.x(), ray.direction.y(), ray.direction.z()};
  const auto intersect_packet = kernels_->intersect_packet4;

  double closest = ray.t_max;
  std::int32_t hit_tri = -1;

  std::array<std::uint32_t, 128> stack;
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (stats) stats->nodes_visited++;
    if (!intersect_box(node.box, ray.origin, inv_dir, ray.t_min, closest)) continue;

    if (node.is_leaf()) {
      if (stats) stats->triangle_tests += node.count;
      const simd::PacketHit h = intersect_packet(packets_[node.first], rd, ray.t_min, closest);
      if (h.lane >= 0) {
        closest = h.t;
        hit_tri = lane_triangle_[node.first][h.lane];
      }
      continue;
    }

    // Visit the nearer child first: push it last.
    const Node& a = nodes_[node.first];
    const Node& b = nodes_[node.first + 1];
    const auto ta = intersect_box(a.box, ray.origin, inv_dir, ray.t_min, closest);
    const auto tb = intersect_box(b.box, ray.origin, inv_dir, ray.t_min, closest);
    if (ta && tb) {
      if (*ta <= *tb) {
        stack[top++] = node.first + 1;
        stack[top++] = node.first;
      } else {
        stack[top++] = node.first;
        stack[top++] = node.first + 1;
      }
    } else if (ta) {
      stack[top++] = node.first;
    } else if (tb) {
      stack[top++] = node.first + 1;
    }
  }

  if (hit_tri < 0) return std::nullopt;
  Hit hit;
  hit.t = closest;
  hit.point = ray.origin + closest * ray.direction;
  hit.triangle = static_cast<std::uint32_t>(hit_tri);
  hit.normal = mesh.normals[hit.triangle];
  hit.front_face = ray.direction.dot(hit.normal) < 0.0;
  return hit;
}

std::optional<Hit> intersect_instance(const Bvh& bvh, const TriMesh& mesh, const Transform& xf,
                                      const Ray& world_ray, TraversalStats* stats) {
  const Quat inv = xf.rotation.conjugate();
  Ray local;
  local.origin = inv * (world_ray.origin - xf.translation) / xf.scale;
  local.direction = inv * world_ray.direction;
  local.t_min = world_ray.t_min / xf.scale;
  local.t_max = world_ray.t_max / xf.scale;
  auto hit = bvh.intersect(mesh, local, stats);
  if (!hit) return std::nullopt;
  hit->t *= xf.scale;
  hit->point = world_ray.origin + hit->t * world_ray.direction;
  hit->normal = xf.apply_normal(hit->normal);
  return hit;
}

}  // namespace transgen::geometry
