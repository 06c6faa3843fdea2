#pragma once

// Per-element operations shared by the scalar kernels and the tails of the
// vector kernels, so both paths round identically.

#include <cmath>
#include <cstdint>

#include "transgen/simd/kernels.hpp"

namespace transgen::simd::detail {

constexpr double kDetEpsilon = 1e-300;

// Operand order of maxpd/minpd: the second operand wins on NaN or equality.
inline double vmax(double a, double b) { return a > b ? a : b; }
inline double vmin(double a, double b) { return a < b ? a : b; }

// Widths and areas are taken from the corner coordinates, the same values
// the overlap is computed from, so identical boxes give exactly 1.
inline double iou_one(double ax, double ay, double aw, double ah, double bx, double by, double bw,
                      double bh) {
  const double ax1 = ax + vmax(aw, 0.0);
  const double ay1 = ay + vmax(ah, 0.0);
  const double bx1 = bx + vmax(bw, 0.0);
  const double by1 = by + vmax(bh, 0.0);
  const double iw = vmax(vmin(ax1, bx1) - vmax(ax, bx), 0.0);
  const double ih = vmax(vmin(ay1, by1) - vmax(ay, by), 0.0);
  const double inter = iw * ih;
  const double uni = (ax1 - ax) * (ay1 - ay) + (bx1 - bx) * (by1 - by) - inter;
  return uni > 0.0 ? vmin(inter / uni, 1.0) : 0.0;
}

inline std::uint8_t resolve_one(double accum, double scale) {
  double x = accum * scale;
  x = vmax(x, 0.0);
  x = vmin(x, 255.0);
  return static_cast<std::uint8_t>(static_cast<int>(std::nearbyint(x)));
}

}  // namespace transgen::simd::detail
