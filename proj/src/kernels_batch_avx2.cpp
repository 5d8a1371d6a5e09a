// AVX2/FMA variants of the batched kernels. Compiled with -mavx2 -mfma and
// only entered after avx2_available() has returned true.

#include "helmscat/kernels_batch.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

namespace helmscat::simd {

namespace {

constexpr double kInvFourPi = 1.0 / kFourPi;

// exp(x): Cody-Waite reduction by ln 2, degree-13 Taylor polynomial on
// |r| <= ln(2)/2, scaling by 2^n through the exponent field. Inputs below
// -708 flush to zero; inputs above 709 saturate.
inline __m256d exp_pd(__m256d x) {
  const __m256d lo = _mm256_set1_pd(-708.0);
  const __m256d hi = _mm256_set1_pd(709.0);
  const __m256d xc = _mm256_min_pd(_mm256_max_pd(x, lo), hi);
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(xc, _mm256_set1_pd(1.4426950408889634074)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93147180369123816490e-01), xc);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.90821492927058770002e-10), r);

  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);  // 1/13!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  const __m128i n32 = _mm256_cvtpd_epi32(n);
  const __m256i n64 = _mm256_cvtepi32_epi64(n32);
  const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
  const __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
  return _mm256_blendv_pd(result, _mm256_setzero_pd(), underflow);
}

// sin and cos: reduction by pi/2 with a three-part constant, Cephes minimax
// polynomials on [-pi/4, pi/4], quadrant fix-up by blends.
inline void sincos_pd(__m256d x, __m256d& s_out, __m256d& c_out) {
  const __m256d q = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(0.63661977236758134308)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(q, _mm256_set1_pd(1.57079625129699707031e+00), x);
  r = _mm256_fnmadd_pd(q, _mm256_set1_pd(7.54978941586159635336e-08), r);
  r = _mm256_fnmadd_pd(q, _mm256_set1_pd(5.39030285815811905290e-15), r);
  const __m256d z = _mm256_mul_pd(r, r);

  __m256d ps = _mm256_set1_pd(1.58962301576546568060e-10);
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(-2.50507477628578072866e-8));
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(2.75573136213857245213e-6));
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(-1.98412698295895385996e-4));
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(8.33333333332211858878e-3));
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(-1.66666666666666307295e-1));
  const __m256d sin_r = _mm256_fmadd_pd(_mm256_mul_pd(r, z), ps, r);

  __m256d pc = _mm256_set1_pd(-1.13585365213876817300e-11);
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(2.08757008419747316778e-9));
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(-2.75573141792967388112e-7));
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(2.48015872888517045348e-5));
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(-1.38888888888730564116e-3));
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(4.16666666666665929218e-2));
  const __m256d cos_r = _mm256_fmadd_pd(_mm256_mul_pd(z, z), pc, _mm256_fnmadd_pd(_mm256_set1_pd(0.5), z, _mm256_set1_pd(1.0)));

  const __m256i qi = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(q));
  const __m256i one = _mm256_set1_epi64x(1);
  const __m256i two = _mm256_set1_epi64x(2);
  const __m256d swap = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(qi, one), one));
  const __m256d neg_s = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(qi, two), two));
  const __m256d neg_c =
      _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(_mm256_add_epi64(qi, one), two), two));

  __m256d s = _mm256_blendv_pd(sin_r, cos_r, swap);
  __m256d c = _mm256_blendv_pd(cos_r, sin_r, swap);
  const __m256d sign = _mm256_set1_pd(-0.0);
  s = _mm256_xor_pd(s, _mm256_and_pd(neg_s, sign));
  c = _mm256_xor_pd(c, _mm256_and_pd(neg_c, sign));
  s_out = s;
  c_out = c;
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void exp_sincos_avx2(std::span<const double> x, std::span<const double> y, std::span<double> exp_out,
                     std::span<double> sin_out, std::span<double> cos_out) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(exp_out.data() + i, exp_pd(_mm256_loadu_pd(x.data() + i)));
    __m256d s, c;
    sincos_pd(_mm256_loadu_pd(y.data() + i), s, c);
    _mm256_storeu_pd(sin_out.data() + i, s);
    _mm256_storeu_pd(cos_out.data() + i, c);
  }
  for (; i < n; ++i) {
    exp_out[i] = std::exp(x[i]);
    sin_out[i] = std::sin(y[i]);
    cos_out[i] = std::cos(y[i]);
  }
}

void kernel_row_avx2(const Vec3& target, const Vec3& target_normal, Complex k, const SourceBlock& src,
                     const KernelRowOut& out) {
  const std::size_t n4 = src.n & ~std::size_t{3};
  const __m256d tx = _mm256_set1_pd(target.x()), ty = _mm256_set1_pd(target.y()), tz = _mm256_set1_pd(target.z());
  const __m256d tnx = _mm256_set1_pd(target_normal.x()), tny = _mm256_set1_pd(target_normal.y()),
                tnz = _mm256_set1_pd(target_normal.z());
  const __m256d vkr = _mm256_set1_pd(k.real()), vki = _mm256_set1_pd(k.imag());
  const __m256d neg_ki = _mm256_set1_pd(-k.imag());
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d inv4pi = _mm256_set1_pd(kInvFourPi);
  const __m256d zero = _mm256_setzero_pd();

  for (std::size_t j = 0; j < n4; j += 4) {
    const __m256d dx = _mm256_sub_pd(tx, _mm256_loadu_pd(src.x + j));
    const __m256d dy = _mm256_sub_pd(ty, _mm256_loadu_pd(src.y + j));
    const __m256d dz = _mm256_sub_pd(tz, _mm256_loadu_pd(src.z + j));
    const __m256d r2 = _mm256_fmadd_pd(dz, dz, _mm256_fmadd_pd(dy, dy, _mm256_mul_pd(dx, dx)));
    const __m256d r = _mm256_sqrt_pd(r2);
    const __m256d inv_r = _mm256_div_pd(one, r);

    const __m256d mag = exp_pd(_mm256_mul_pd(neg_ki, r));
    __m256d sn, cs;
    sincos_pd(_mm256_mul_pd(vkr, r), sn, cs);
    const __m256d c = _mm256_mul_pd(mag, cs);
    const __m256d s = _mm256_mul_pd(mag, sn);
    const __m256d g = _mm256_mul_pd(inv4pi, inv_r);
    _mm256_storeu_pd(out.s_re + j, _mm256_sub_pd(zero, _mm256_mul_pd(c, g)));
    _mm256_storeu_pd(out.s_im + j, _mm256_sub_pd(zero, _mm256_mul_pd(s, g)));

    const __m256d pr = _mm256_fmadd_pd(vki, r, one);
    const __m256d pi = _mm256_sub_pd(zero, _mm256_mul_pd(vkr, r));
    const __m256d f_scale = _mm256_mul_pd(g, _mm256_mul_pd(inv_r, inv_r));
    const __m256d f_re = _mm256_mul_pd(_mm256_fmsub_pd(c, pr, _mm256_mul_pd(s, pi)), f_scale);
    const __m256d f_im = _mm256_mul_pd(_mm256_fmadd_pd(c, pi, _mm256_mul_pd(s, pr)), f_scale);

    const __m256d nd = _mm256_fmadd_pd(_mm256_loadu_pd(src.nz + j), dz,
                                       _mm256_fmadd_pd(_mm256_loadu_pd(src.ny + j), dy,
                                                       _mm256_mul_pd(_mm256_loadu_pd(src.nx + j), dx)));
    const __m256d na = _mm256_fmadd_pd(tnz, dz, _mm256_fmadd_pd(tny, dy, _mm256_mul_pd(tnx, dx)));
    _mm256_storeu_pd(out.d_re + j, _mm256_sub_pd(zero, _mm256_mul_pd(f_re, nd)));
    _mm256_storeu_pd(out.d_im + j, _mm256_sub_pd(zero, _mm256_mul_pd(f_im, nd)));
    _mm256_storeu_pd(out.a_re + j, _mm256_mul_pd(f_re, na));
    _mm256_storeu_pd(out.a_im + j, _mm256_mul_pd(f_im, na));
  }

  if (n4 < src.n) {
    SourceBlock tail{src.x + n4, src.y + n4, src.z + n4, src.nx + n4, src.ny + n4, src.nz + n4, src.n - n4};
    KernelRowOut tail_out{out.s_re + n4, out.s_im + n4, out.d_re + n4, out.d_im + n4, out.a_re + n4, out.a_im + n4};
    kernel_row_scalar(target, target_normal, k, tail, tail_out);
  }
}

PotentialValue potential_avx2(const Vec3& target, Complex k, const PotentialSources& src, bool with_gradient) {
  const SourceBlock& geo = src.geometry;
  const std::size_t n4 = geo.n & ~std::size_t{3};
  const double kr = k.real(), ki = k.imag();
  const __m256d tx = _mm256_set1_pd(target.x()), ty = _mm256_set1_pd(target.y()), tz = _mm256_set1_pd(target.z());
  const __m256d vkr = _mm256_set1_pd(kr), vki = _mm256_set1_pd(ki);
  const __m256d neg_ki = _mm256_set1_pd(-ki);
  const __m256d k2r = _mm256_set1_pd(kr * kr - ki * ki), k2i = _mm256_set1_pd(2.0 * kr * ki);
  const __m256d one = _mm256_set1_pd(1.0), three = _mm256_set1_pd(3.0);
  const __m256d inv4pi = _mm256_set1_pd(kInvFourPi);
  const __m256d zero = _mm256_setzero_pd();

  __m256d u_re = zero, u_im = zero;
  __m256d gx_re = zero, gx_im = zero, gy_re = zero, gy_im = zero, gz_re = zero, gz_im = zero;

  for (std::size_t j = 0; j < n4; j += 4) {
    const __m256d nx = _mm256_loadu_pd(geo.nx + j), ny = _mm256_loadu_pd(geo.ny + j), nz = _mm256_loadu_pd(geo.nz + j);
    const __m256d dx = _mm256_sub_pd(tx, _mm256_loadu_pd(geo.x + j));
    const __m256d dy = _mm256_sub_pd(ty, _mm256_loadu_pd(geo.y + j));
    const __m256d dz = _mm256_sub_pd(tz, _mm256_loadu_pd(geo.z + j));
    const __m256d r2 = _mm256_fmadd_pd(dz, dz, _mm256_fmadd_pd(dy, dy, _mm256_mul_pd(dx, dx)));
    const __m256d r = _mm256_sqrt_pd(r2);
    const __m256d inv_r = _mm256_div_pd(one, r);

    const __m256d mag = exp_pd(_mm256_mul_pd(neg_ki, r));
    __m256d sn, cs;
    sincos_pd(_mm256_mul_pd(vkr, r), sn, cs);
    const __m256d c = _mm256_mul_pd(mag, cs);
    const __m256d s = _mm256_mul_pd(mag, sn);
    const __m256d g1 = _mm256_mul_pd(inv4pi, inv_r);
    const __m256d s_re = _mm256_sub_pd(zero, _mm256_mul_pd(c, g1));
    const __m256d s_im = _mm256_sub_pd(zero, _mm256_mul_pd(s, g1));
    const __m256d pr = _mm256_fmadd_pd(vki, r, one);
    const __m256d pi = _mm256_sub_pd(zero, _mm256_mul_pd(vkr, r));
    const __m256d f_scale = _mm256_mul_pd(g1, _mm256_mul_pd(inv_r, inv_r));
    const __m256d f_re = _mm256_mul_pd(_mm256_fmsub_pd(c, pr, _mm256_mul_pd(s, pi)), f_scale);
    const __m256d f_im = _mm256_mul_pd(_mm256_fmadd_pd(c, pi, _mm256_mul_pd(s, pr)), f_scale);
    const __m256d nd = _mm256_fmadd_pd(nz, dz, _mm256_fmadd_pd(ny, dy, _mm256_mul_pd(nx, dx)));
    const __m256d d_re = _mm256_sub_pd(zero, _mm256_mul_pd(f_re, nd));
    const __m256d d_im = _mm256_sub_pd(zero, _mm256_mul_pd(f_im, nd));

    const __m256d dcr = _mm256_loadu_pd(src.dc_re + j), dci = _mm256_loadu_pd(src.dc_im + j);
    const __m256d scr = _mm256_loadu_pd(src.sc_re + j), sci = _mm256_loadu_pd(src.sc_im + j);
    // u += dc*D + sc*S
    u_re = _mm256_add_pd(u_re, _mm256_sub_pd(_mm256_fmsub_pd(dcr, d_re, _mm256_mul_pd(dci, d_im)),
                                             _mm256_fmsub_pd(sci, s_im, _mm256_mul_pd(scr, s_re))));
    u_im = _mm256_add_pd(u_im, _mm256_add_pd(_mm256_fmadd_pd(dcr, d_im, _mm256_mul_pd(dci, d_re)),
                                             _mm256_fmadd_pd(scr, s_im, _mm256_mul_pd(sci, s_re))));

    if (with_gradient) {
      const __m256d e3 = f_scale;
      const __m256d ek_re = _mm256_mul_pd(_mm256_fmsub_pd(k2r, c, _mm256_mul_pd(k2i, s)), e3);
      const __m256d ek_im = _mm256_mul_pd(_mm256_fmadd_pd(k2r, s, _mm256_mul_pd(k2i, c)), e3);
      const __m256d ir2 = _mm256_mul_pd(inv_r, inv_r);
      const __m256d g_re = _mm256_fnmadd_pd(_mm256_mul_pd(three, f_re), ir2, ek_re);
      const __m256d g_im = _mm256_fnmadd_pd(_mm256_mul_pd(three, f_im), ir2, ek_im);
      const __m256d dg_re = _mm256_fmsub_pd(dcr, g_re, _mm256_mul_pd(dci, g_im));
      const __m256d dg_im = _mm256_fmadd_pd(dcr, g_im, _mm256_mul_pd(dci, g_re));
      const __m256d cd_re = _mm256_fnmadd_pd(nd, dg_re, _mm256_fmsub_pd(scr, f_re, _mm256_mul_pd(sci, f_im)));
      const __m256d cd_im = _mm256_fnmadd_pd(nd, dg_im, _mm256_fmadd_pd(scr, f_im, _mm256_mul_pd(sci, f_re)));
      const __m256d cn_re = _mm256_sub_pd(zero, _mm256_fmsub_pd(dcr, f_re, _mm256_mul_pd(dci, f_im)));
      const __m256d cn_im = _mm256_sub_pd(zero, _mm256_fmadd_pd(dcr, f_im, _mm256_mul_pd(dci, f_re)));
      gx_re = _mm256_add_pd(gx_re, _mm256_fmadd_pd(cd_re, dx, _mm256_mul_pd(cn_re, nx)));
      gx_im = _mm256_add_pd(gx_im, _mm256_fmadd_pd(cd_im, dx, _mm256_mul_pd(cn_im, nx)));
      gy_re = _mm256_add_pd(gy_re, _mm256_fmadd_pd(cd_re, dy, _mm256_mul_pd(cn_re, ny)));
      gy_im = _mm256_add_pd(gy_im, _mm256_fmadd_pd(cd_im, dy, _mm256_mul_pd(cn_im, ny)));
      gz_re = _mm256_add_pd(gz_re, _mm256_fmadd_pd(cd_re, dz, _mm256_mul_pd(cn_re, nz)));
      gz_im = _mm256_add_pd(gz_im, _mm256_fmadd_pd(cd_im, dz, _mm256_mul_pd(cn_im, nz)));
    }
  }

  PotentialValue out;
  out.value = {hsum(u_re), hsum(u_im)};
  if (with_gradient)
    out.gradient = CVec3(Complex(hsum(gx_re), hsum(gx_im)), Complex(hsum(gy_re), hsum(gy_im)),
                         Complex(hsum(gz_re), hsum(gz_im)));

  if (n4 < geo.n) {
    PotentialSources tail = src;
    tail.geometry = SourceBlock{geo.x + n4, geo.y + n4, geo.z + n4, geo.nx + n4, geo.ny + n4, geo.nz + n4, geo.n - n4};
    tail.dc_re += n4;
    tail.dc_im += n4;
    tail.sc_re += n4;
    tail.sc_im += n4;
    const PotentialValue rest = potential_scalar(target, k, tail, with_gradient);
    out.value += rest.value;
    if (with_gradient) out.gradient += rest.gradient;
  }
  return out;
}

}  // namespace helmscat::simd

#endif
