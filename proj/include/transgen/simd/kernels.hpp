#pragma once

// Data-parallel inner loops with a scalar reference and vector variants.
// Every variant must produce bit-identical results to the scalar kernel;
// the equivalence tests enforce this, and the build disables FMA
// contraction so the compiler cannot fuse the scalar arithmetic.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace transgen::simd {

// Four triangles in SoA form: base vertex and the two edge vectors.
// Unused lanes carry zero edges, which fail the determinant test.
struct alignas(32) TrianglePacket4 {
  double v0x[4], v0y[4], v0z[4];
  double e1x[4], e1y[4], e1z[4];
  double e2x[4], e2y[4], e2z[4];
};

struct RayData {
  double ox, oy, oz;
  double dx, dy, dz;
};

// lane < 0 means no lane was hit inside (t_min, t_max).
struct PacketHit {
  double t;
  int lane;
};

// Boxes in SoA form: x, y, w, h arrays of equal length. Inputs must be finite.
struct BoxArrays {
  const double* x;
  const double* y;
  const double* w;
  const double* h;
};

struct MaskBounds {
  int x0, y0, x1, y1;  // inclusive
  bool found;
};

struct KernelTable {
  std::string_view name;

  // Nearest Moller-Trumbore hit among the packet's lanes; ties keep the lowest lane.
  PacketHit (*intersect_packet4)(const TrianglePacket4& packet, const RayData& ray, double t_min,
                                 double t_max);

  // out[i] = IoU(a[i], b[i]) with boxes covering [x, x+w) x [y, y+h).
  void (*iou_batch)(const BoxArrays& a, const BoxArrays& b, double* out, std::size_t n);

  // Tightest inclusive bounds of the nonzero bytes of a row-major mask.
  MaskBounds (*mask_bounds)(const std::uint8_t* mask, int width, int height);

  // out[i] = round_half_even(clamp(accum[i] * scale, 0, 255)); NaN maps to 0.
  void (*resolve_to_u8)(const double* accum, std::size_t n, double scale, std::uint8_t* out);
};

const KernelTable& scalar_kernels();

// nullptr when the variant was not compiled in or the CPU lacks support.
const KernelTable* avx2_kernels();

// Selected once per process: the best supported variant, unless the
// TRANSGEN_SIMD environment variable names one ("scalar" or "avx2").
const KernelTable& active_kernels();

}  // namespace transgen::simd
