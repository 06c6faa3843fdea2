#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "transgen/assets.hpp"
#include "transgen/geometry.hpp"
#include "transgen/rng.hpp"
#include "transgen/trajectory.hpp"

namespace transgen::fixtures {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(static_cast<std::uint64_t>(std::hash<std::string>{}(tag)) ^
            static_cast<std::uint64_t>(reinterpret_cast<std::uintptr_t>(this)));
    path_ = fs::temp_directory_path() / ("transgen_" + tag + "_" + std::to_string(rng.next_u64() % 1000000007));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

// Byte-level digest of every regular file under root, keyed by relative path.
inline std::vector<std::pair<std::string, std::string>> tree_contents(const fs::path& root) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.emplace_back(fs::relative(e.path(), root).generic_string(), read_file(e.path()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Independent ray/triangle oracle: plane hit, then same-side edge tests.
inline std::optional<double> oracle_ray_triangle(const Vec3& o, const Vec3& d, const Vec3& a,
                                                 const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const double denom = n.dot(d);
  if (std::abs(denom) < 1e-300) return std::nullopt;
  const double t = n.dot(a - o) / denom;
  const Vec3 p = o + t * d;
  const double e0 = ((b - a).cross(p - a)).dot(n);
  const double e1 = ((c - b).cross(p - b)).dot(n);
  const double e2 = ((a - c).cross(p - c)).dot(n);
  if ((e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0)) return t;
  return std::nullopt;
}

struct OracleHit {
  double t;
  std::size_t triangle;
};

inline std::optional<OracleHit> oracle_nearest(const geometry::TriMesh& mesh, const Vec3& o,
                                               const Vec3& d, double t_min, double t_max) {
  std::optional<OracleHit> best;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& tri = mesh.triangles[i];
    const auto t = oracle_ray_triangle(o, d, mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
    if (t && *t > t_min && *t < t_max && (!best || *t < best->t)) best = OracleHit{*t, i};
  }
  return best;
}

// Triangle soup of n random small triangles inside the unit cube.
inline geometry::TriMesh random_soup(std::size_t n, std::uint64_t seed, double size = 0.08) {
  Rng rng(seed);
  std::vector<Vec3> v;
  std::vector<std::array<std::uint32_t, 3>> t;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 c(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const auto base = static_cast<std::uint32_t>(v.size());
    for (int k = 0; k < 3; ++k) {
      v.push_back(c + size * Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)));
    }
    t.push_back({base, base + 1, base + 2});
  }
  return geometry::make_mesh(std::move(v), std::move(t));
}

inline Vec3 random_direction(Rng& rng) {
  for (;;) {
    const Vec3 v(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const double n = v.norm();
    if (n > 1e-3 && n <= 1.0) return v / n;
  }
}

// Arc length between two parameters by dense uniform subdivision.
inline double oracle_arc(const trajectory::Spline& s, double t0, double t1, int pieces = 4000) {
  double len = 0.0;
  Vec3 prev = s.eval(t0);
  for (int i = 1; i <= pieces; ++i) {
    const Vec3 p = s.eval(t0 + (t1 - t0) * i / pieces);
    len += (p - prev).norm();
    prev = p;
  }
  return len;
}

// Small procedural corpus and catalog for pipeline tests.
inline assets::DemoPaths small_assets(const fs::path& dir, int backgrounds = 6, int frames = 12,
                                      int width = 96, int height = 64) {
  assets::DemoOptions o;
  o.backgrounds = backgrounds;
  o.frames = frames;
  o.width = width;
  o.height = height;
  o.seed = 11;
  return assets::write_demo_assets(dir, o);
}

}  // namespace transgen::fixtures
