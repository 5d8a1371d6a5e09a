#pragma once

// Batched kernel sampling: the two data-parallel inner loops of the solver.
//
//   kernel_row  - for one target x (with normal nu_x) and a block of source
//                 nodes y_j (normals nu_j), writes per node
//                   S   = S(k, x - y_j)
//                   D   = -nu_j . grad S(k, x - y_j)     (double layer)
//                   A   =  nu_x . grad S(k, x - y_j)     (adjoint double layer)
//   potential   - accumulates sum_j dc_j D_j + sc_j S_j and optionally its
//                 gradient with respect to x.
//
// Each kernel has a scalar reference implementation and an AVX2/FMA variant.
// The public entry points dispatch once per process on CPUID; the
// HELM_SCATTER_SIMD=scalar environment variable forces the reference path.
// The variants agree to rounding (see test_kernels_simd).

#include <cstddef>
#include <span>

#include "helmscat/common.hpp"

namespace helmscat::simd {

enum class Isa { scalar, avx2 };

struct SourceBlock {
  const double* x;
  const double* y;
  const double* z;
  const double* nx;
  const double* ny;
  const double* nz;
  std::size_t n;
};

struct KernelRowOut {
  double* s_re;
  double* s_im;
  double* d_re;
  double* d_im;
  double* a_re;
  double* a_im;
};

struct PotentialSources {
  SourceBlock geometry;
  const double* dc_re;  // double-layer coefficients (density * weight)
  const double* dc_im;
  const double* sc_re;  // single-layer coefficients
  const double* sc_im;
};

struct PotentialValue {
  Complex value{0.0, 0.0};
  CVec3 gradient = CVec3::Zero();
};

void kernel_row_scalar(const Vec3& target, const Vec3& target_normal, Complex k, const SourceBlock& src,
                       const KernelRowOut& out);
PotentialValue potential_scalar(const Vec3& target, Complex k, const PotentialSources& src, bool with_gradient);

bool avx2_available();
#if defined(__x86_64__) || defined(_M_X64)
void kernel_row_avx2(const Vec3& target, const Vec3& target_normal, Complex k, const SourceBlock& src,
                     const KernelRowOut& out);
PotentialValue potential_avx2(const Vec3& target, Complex k, const PotentialSources& src, bool with_gradient);

// Vector math used by the AVX2 kernels, exposed for accuracy tests:
// evaluates exp(x[i]) and (sin, cos)(y[i]) for i < n (n multiple of 4 not required).
void exp_sincos_avx2(std::span<const double> x, std::span<const double> y, std::span<double> exp_out,
                     std::span<double> sin_out, std::span<double> cos_out);
#endif

Isa active_isa();
void set_active_isa(Isa isa);  // throws DomainError if the ISA is unavailable
const char* isa_name(Isa isa);

void kernel_row(const Vec3& target, const Vec3& target_normal, Complex k, const SourceBlock& src,
                const KernelRowOut& out);
PotentialValue potential(const Vec3& target, Complex k, const PotentialSources& src, bool with_gradient);

}  // namespace helmscat::simd
