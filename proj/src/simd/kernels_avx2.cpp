#include "transgen/simd/kernels.hpp"

#include <immintrin.h>

#include <cstring>
#include <limits>

#include "simd/scalar_ops.hpp"

namespace transgen::simd {
namespace {

inline __m256d cross_x(__m256d ay, __m256d az, __m256d by, __m256d bz) {
  return _mm256_sub_pd(_mm256_mul_pd(ay, bz), _mm256_mul_pd(az, by));
}

inline __m256d dot3(__m256d ax, __m256d ay, __m256d az, __m256d bx, __m256d by, __m256d bz) {
  return _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(ax, bx), _mm256_mul_pd(ay, by)),
                       _mm256_mul_pd(az, bz));
}

PacketHit intersect_packet4_avx2(const TrianglePacket4& p, const RayData& r, double t_min,
                                 double t_max) {
  const __m256d dx = _mm256_set1_pd(r.dx);
  const __m256d dy = _mm256_set1_pd(r.dy);
  const __m256d dz = _mm256_set1_pd(r.dz);
  const __m256d e1x = _mm256_load_pd(p.e1x);
  const __m256d e1y = _mm256_load_pd(p.e1y);
  const __m256d e1z = _mm256_load_pd(p.e1z);
  const __m256d e2x = _mm256_load_pd(p.e2x);
  const __m256d e2y = _mm256_load_pd(p.e2y);
  const __m256d e2z = _mm256_load_pd(p.e2z);

  // Same operand order as the scalar kernel, term by term.
  const __m256d px = cross_x(dy, dz, e2y, e2z);
  const __m256d py = cross_x(dz, dx, e2z, e2x);
  const __m256d pz = cross_x(dx, dy, e2x, e2y);
  const __m256d det = dot3(e1x, e1y, e1z, px, py, pz);
  const __m256d abs_det = _mm256_andnot_pd(_mm256_set1_pd(-0.0), det);
  __m256d valid = _mm256_cmp_pd(abs_det, _mm256_set1_pd(detail::kDetEpsilon), _CMP_GE_OQ);

  const __m256d inv = _mm256_div_pd(_mm256_set1_pd(1.0), det);
  const __m256d tx = _mm256_sub_pd(_mm256_set1_pd(r.ox), _mm256_load_pd(p.v0x));
  const __m256d ty = _mm256_sub_pd(_mm256_set1_pd(r.oy), _mm256_load_pd(p.v0y));
  const __m256d tz = _mm256_sub_pd(_mm256_set1_pd(r.oz), _mm256_load_pd(p.v0z));
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);

  const __m256d u = _mm256_mul_pd(dot3(tx, ty, tz, px, py, pz), inv);
  valid = _mm256_and_pd(valid, _mm256_cmp_pd(u, zero, _CMP_GE_OQ));
  valid = _mm256_and_pd(valid, _mm256_cmp_pd(u, one, _CMP_LE_OQ));

  const __m256d qx = cross_x(ty, tz, e1y, e1z);
  const __m256d qy = cross_x(tz, tx, e1z, e1x);
  const __m256d qz = cross_x(tx, ty, e1x, e1y);
  const __m256d v = _mm256_mul_pd(dot3(dx, dy, dz, qx, qy, qz), inv);
  valid = _mm256_and_pd(valid, _mm256_cmp_pd(v, zero, _CMP_GE_OQ));
  valid = _mm256_and_pd(valid, _mm256_cmp_pd(_mm256_add_pd(u, v), one, _CMP_LE_OQ));

  const __m256d t = _mm256_mul_pd(dot3(e2x, e2y, e2z, qx, qy, qz), inv);
  valid = _mm256_and_pd(valid, _mm256_cmp_pd(t, _mm256_set1_pd(t_min), _CMP_GT_OQ));
  valid = _mm256_and_pd(valid, _mm256_cmp_pd(t, _mm256_set1_pd(t_max), _CMP_LT_OQ));

  PacketHit best{std::numeric_limits<double>::infinity(), -1};
  const int bits = _mm256_movemask_pd(valid);
  if (bits == 0) return best;
  alignas(32) double ts[4];
  _mm256_store_pd(ts, t);
  for (int i = 0; i < 4; ++i) {
    if ((bits >> i) & 1) {
      if (ts[i] < best.t) best = {ts[i], i};
    }
  }
  return best;
}

void iou_batch_avx2(const BoxArrays& a, const BoxArrays& b, double* out, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d ax = _mm256_loadu_pd(a.x + i);
    const __m256d ay = _mm256_loadu_pd(a.y + i);
    const __m256d bx = _mm256_loadu_pd(b.x + i);
    const __m256d by = _mm256_loadu_pd(b.y + i);
    const __m256d ax1 = _mm256_add_pd(ax, _mm256_max_pd(_mm256_loadu_pd(a.w + i), zero));
    const __m256d ay1 = _mm256_add_pd(ay, _mm256_max_pd(_mm256_loadu_pd(a.h + i), zero));
    const __m256d bx1 = _mm256_add_pd(bx, _mm256_max_pd(_mm256_loadu_pd(b.w + i), zero));
    const __m256d by1 = _mm256_add_pd(by, _mm256_max_pd(_mm256_loadu_pd(b.h + i), zero));
    const __m256d iw =
        _mm256_max_pd(_mm256_sub_pd(_mm256_min_pd(ax1, bx1), _mm256_max_pd(ax, bx)), zero);
    const __m256d ih =
        _mm256_max_pd(_mm256_sub_pd(_mm256_min_pd(ay1, by1), _mm256_max_pd(ay, by)), zero);
    const __m256d inter = _mm256_mul_pd(iw, ih);
    const __m256d area_a = _mm256_mul_pd(_mm256_sub_pd(ax1, ax), _mm256_sub_pd(ay1, ay));
    const __m256d area_b = _mm256_mul_pd(_mm256_sub_pd(bx1, bx), _mm256_sub_pd(by1, by));
    const __m256d uni = _mm256_sub_pd(_mm256_add_pd(area_a, area_b), inter);
    const __m256d pos = _mm256_cmp_pd(uni, zero, _CMP_GT_OQ);
    const __m256d ratio = _mm256_min_pd(_mm256_div_pd(inter, uni), _mm256_set1_pd(1.0));
    _mm256_storeu_pd(out + i, _mm256_and_pd(pos, ratio));
  }
  for (; i < n; ++i) {
    out[i] = detail::iou_one(a.x[i], a.y[i], a.w[i], a.h[i], b.x[i], b.y[i], b.w[i], b.h[i]);
  }
}

// First and last nonzero byte of a row, or first = -1 when the row is empty.
inline void row_extent(const std::uint8_t* row, int width, int& first, int& last) {
  const __m256i zero = _mm256_setzero_si256();
  first = -1;
  last = -1;
  int x = 0;
  for (; x + 32 <= width; x += 32) {
    const __m256i chunk = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(row + x));
    const auto nonzero =
        ~static_cast<std::uint32_t>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(chunk, zero)));
    if (nonzero == 0) continue;
    if (first < 0) first = x + __builtin_ctz(nonzero);
    last = x + 31 - __builtin_clz(nonzero);
  }
  for (; x < width; ++x) {
    if (row[x] != 0) {
      if (first < 0) first = x;
      last = x;
    }
  }
}

MaskBounds mask_bounds_avx2(const std::uint8_t* mask, int width, int height) {
  MaskBounds b{width, height, -1, -1, false};
  for (int y = 0; y < height; ++y) {
    int first;
    int last;
    row_extent(mask + static_cast<std::size_t>(y) * width, width, first, last);
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

void resolve_to_u8_avx2(const double* accum, std::size_t n, double scale, std::uint8_t* out) {
  const __m256d s = _mm256_set1_pd(scale);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d top = _mm256_set1_pd(255.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d x = _mm256_mul_pd(_mm256_loadu_pd(accum + i), s);
    x = _mm256_max_pd(x, zero);
    x = _mm256_min_pd(x, top);
    x = _mm256_round_pd(x, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    alignas(16) std::int32_t v[4];
    _mm_store_si128(reinterpret_cast<__m128i*>(v), _mm256_cvtpd_epi32(x));
    for (int k = 0; k < 4; ++k) out[i + k] = static_cast<std::uint8_t>(v[k]);
  }
  for (; i < n; ++i) out[i] = detail::resolve_one(accum[i], scale);
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{"avx2", &intersect_packet4_avx2, &iou_batch_avx2, &mask_bounds_avx2,
                                 &resolve_to_u8_avx2};
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &table : nullptr;
}

}  // namespace transgen::simd
