#include "helmscat/kernels_batch.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>

namespace helmscat::simd {

namespace {
constexpr double kInvFourPi = 1.0 / kFourPi;
}

void kernel_row_scalar(const Vec3& target, const Vec3& target_normal, Complex k, const SourceBlock& src,
                       const KernelRowOut& out) {
  const double kr = k.real(), ki = k.imag();
  for (std::size_t j = 0; j < src.n; ++j) {
    const double dx = target.x() - src.x[j];
    const double dy = target.y() - src.y[j];
    const double dz = target.z() - src.z[j];
    const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
    const double inv_r = 1.0 / r;
    // e^{ikr} = e^{-ki r} (cos(kr r) + i sin(kr r))
    const double mag = std::exp(-ki * r);
    const double c = mag * std::cos(kr * r);
    const double s = mag * std::sin(kr * r);
    const double g = kInvFourPi * inv_r;
    out.s_re[j] = -c * g;
    out.s_im[j] = -s * g;
    // F = e^{ikr} (1 - ikr) / (4 pi r^3), with 1 - ikr = (1 + ki r) - i kr r
    const double pr = 1.0 + ki * r, pi = -kr * r;
    const double f_scale = g * inv_r * inv_r;
    const double f_re = (c * pr - s * pi) * f_scale;
    const double f_im = (c * pi + s * pr) * f_scale;
    const double nd = src.nx[j] * dx + src.ny[j] * dy + src.nz[j] * dz;
    const double na = target_normal.x() * dx + target_normal.y() * dy + target_normal.z() * dz;
    out.d_re[j] = -f_re * nd;
    out.d_im[j] = -f_im * nd;
    out.a_re[j] = f_re * na;
    out.a_im[j] = f_im * na;
  }
}

PotentialValue potential_scalar(const Vec3& target, Complex k, const PotentialSources& src, bool with_gradient) {
  const double kr = k.real(), ki = k.imag();
  const double k2_re = kr * kr - ki * ki, k2_im = 2.0 * kr * ki;
  const SourceBlock& g = src.geometry;
  double u_re = 0.0, u_im = 0.0;
  double gx_re = 0.0, gx_im = 0.0, gy_re = 0.0, gy_im = 0.0, gz_re = 0.0, gz_im = 0.0;
  for (std::size_t j = 0; j < g.n; ++j) {
    const double dx = target.x() - g.x[j];
    const double dy = target.y() - g.y[j];
    const double dz = target.z() - g.z[j];
    const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
    const double inv_r = 1.0 / r;
    const double mag = std::exp(-ki * r);
    const double c = mag * std::cos(kr * r);
    const double s = mag * std::sin(kr * r);
    const double g1 = kInvFourPi * inv_r;
    const double s_re = -c * g1, s_im = -s * g1;
    const double pr = 1.0 + ki * r, pi = -kr * r;
    const double f_scale = g1 * inv_r * inv_r;
    const double f_re = (c * pr - s * pi) * f_scale;
    const double f_im = (c * pi + s * pr) * f_scale;
    const double nd = g.nx[j] * dx + g.ny[j] * dy + g.nz[j] * dz;
    const double d_re = -f_re * nd, d_im = -f_im * nd;

    const double dcr = src.dc_re[j], dci = src.dc_im[j];
    const double scr = src.sc_re[j], sci = src.sc_im[j];
    u_re += dcr * d_re - dci * d_im + scr * s_re - sci * s_im;
    u_im += dcr * d_im + dci * d_re + scr * s_im + sci * s_re;

    if (with_gradient) {
      // grad S = F d;  grad D = -(F nu + G (nu.d) d),  G = k^2 e^{ikr}/(4 pi r^3) - 3F/r^2
      const double e3 = f_scale;  // 1/(4 pi r^3)
      const double ek_re = (k2_re * c - k2_im * s) * e3;
      const double ek_im = (k2_re * s + k2_im * c) * e3;
      const double ir2 = inv_r * inv_r;
      const double g_re = ek_re - 3.0 * f_re * ir2;
      const double g_im = ek_im - 3.0 * f_im * ir2;
      // coefficient multiplying d: sc*F - dc*G*nd ; multiplying nu: -dc*F
      const double cd_re = (scr * f_re - sci * f_im) - nd * (dcr * g_re - dci * g_im);
      const double cd_im = (scr * f_im + sci * f_re) - nd * (dcr * g_im + dci * g_re);
      const double cn_re = -(dcr * f_re - dci * f_im);
      const double cn_im = -(dcr * f_im + dci * f_re);
      gx_re += cd_re * dx + cn_re * g.nx[j];
      gx_im += cd_im * dx + cn_im * g.nx[j];
      gy_re += cd_re * dy + cn_re * g.ny[j];
      gy_im += cd_im * dy + cn_im * g.ny[j];
      gz_re += cd_re * dz + cn_re * g.nz[j];
      gz_im += cd_im * dz + cn_im * g.nz[j];
    }
  }
  PotentialValue out;
  out.value = {u_re, u_im};
  out.gradient = CVec3(Complex(gx_re, gx_im), Complex(gy_re, gy_im), Complex(gz_re, gz_im));
  return out;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
#if defined(__GNUC__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
#else
  return false;
#endif
}

namespace {

Isa detect_isa() {
  if (const char* env = std::getenv("HELM_SCATTER_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
  }
  return avx2_available() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& isa_slot() {
  static std::atomic<Isa> slot{detect_isa()};
  return slot;
}

}  // namespace

Isa active_isa() { return isa_slot().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (isa == Isa::avx2 && !avx2_available()) throw DomainError("AVX2/FMA not available on this CPU");
  isa_slot().store(isa, std::memory_order_relaxed);
}

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void kernel_row(const Vec3& target, const Vec3& target_normal, Complex k, const SourceBlock& src,
                const KernelRowOut& out) {
#if defined(__x86_64__) || defined(_M_X64)
  if (active_isa() == Isa::avx2) return kernel_row_avx2(target, target_normal, k, src, out);
#endif
  kernel_row_scalar(target, target_normal, k, src, out);
}

PotentialValue potential(const Vec3& target, Complex k, const PotentialSources& src, bool with_gradient) {
#if defined(__x86_64__) || defined(_M_X64)
  if (active_isa() == Isa::avx2) return potential_avx2(target, k, src, with_gradient);
#endif
  return potential_scalar(target, k, src, with_gradient);
}

}  // namespace helmscat::simd
