#include "transgen/simd/kernels.hpp"

#include <cmath>
#include <limits>

#include "simd/scalar_ops.hpp"

namespace transgen::simd {

namespace {

PacketHit intersect_packet4_scalar(const TrianglePacket4& p, const RayData& r, double t_min,
                                   double t_max) {
  PacketHit best{std::numeric_limits<double>::infinity(), -1};
  for (int i = 0; i < 4; ++i) {
    const double px = r.dy * p.e2z[i] - r.dz * p.e2y[i];
    const double py = r.dz * p.e2x[i] - r.dx * p.e2z[i];
    const double pz = r.dx * p.e2y[i] - r.dy * p.e2x[i];
    const double det = p.e1x[i] * px + p.e1y[i] * py + p.e1z[i] * pz;
    if (!(std::fabs(det) >= detail::kDetEpsilon)) continue;
    const double inv = 1.0 / det;
    const double tx = r.ox - p.v0x[i];
    const double ty = r.oy - p.v0y[i];
    const double tz = r.oz - p.v0z[i];
    const double u = (tx * px + ty * py + tz * pz) * inv;
    if (!(u >= 0.0 && u <= 1.0)) continue;
    const double qx = ty * p.e1z[i] - tz * p.e1y[i];
    const double qy = tz * p.e1x[i] - tx * p.e1z[i];
    const double qz = tx * p.e1y[i] - ty * p.e1x[i];
    const double v = (r.dx * qx + r.dy * qy + r.dz * qz) * inv;
    if (!(v >= 0.0 && u + v <= 1.0)) continue;
    const double t = (p.e2x[i] * qx + p.e2y[i] * qy + p.e2z[i] * qz) * inv;
    if (!(t > t_min && t < t_max)) continue;
    if (t < best.t) best = {t, i};
  }
  return best;
}

void iou_batch_scalar(const BoxArrays& a, const BoxArrays& b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = detail::iou_one(a.x[i], a.y[i], a.w[i], a.h[i], b.x[i], b.y[i], b.w[i], b.h[i]);
  }
}

MaskBounds mask_bounds_scalar(const std::uint8_t* mask, int width, int height) {
  MaskBounds b{width, height, -1, -1, false};
  for (int y = 0; y < height; ++y) {
    const std::uint8_t* row = mask + static_cast<std::size_t>(y) * width;
    int first = -1;
    int last = -1;
    for (int x = 0; x < width; ++x) {
      if (row[x] != 0) {
        if (first < 0) first = x;
        last = x;
      }
    }
    if (first < 0) continue;
    if (!b.found) b.y0 = y;
    b.found = true;
    b.y1 = y;
    if (first < b.x0) b.x0 = first;
    if (last > b.x1) b.x1 = last;
  }
  if (!b.found) return MaskBounds{0, 0, -1, -1, false};
  return b;
}

void resolve_to_u8_scalar(const double* accum, std::size_t n, double scale, std::uint8_t* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = detail::resolve_one(accum[i], scale);
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", &intersect_packet4_scalar, &iou_batch_scalar,
                                 &mask_bounds_scalar, &resolve_to_u8_scalar};
  return table;
}

}  // namespace transgen::simd
