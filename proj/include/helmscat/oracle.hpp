#pragma once

#include <string>
#include <utility>
#include <vector>

#include "helmscat/geometry.hpp"
#include "helmscat/kernels.hpp"
#include "helmscat/samples.hpp"

namespace helmscat {

// ---------------------------------------------------------------------------
// Dirichlet data
// ---------------------------------------------------------------------------

struct DatumTerm {
  enum class Kind { constant, point_source, plane_wave, custom };
  Kind kind = Kind::constant;
  Complex weight{1.0, 0.0};
  Complex c{1.0, 0.0};          // constant
  Vec3 z = Vec3::Zero();        // point_source
  Vec3 d{0.0, 0.0, 1.0};        // plane_wave
  std::vector<Complex> values;  // custom, one per panel
};

/// Weighted sum of datum terms. The common case is a single term.
struct DatumSpec {
  std::vector<DatumTerm> terms;

  static DatumSpec constant(Complex c);
  static DatumSpec point_source(const Vec3& z);
  /// g = -exp(ik phi(s).d): the boundary value of a sound-soft scatterer under
  /// the incident plane wave exp(ik x.d). Throws DomainError unless |d| = 1.
  static DatumSpec plane_wave(const Vec3& d);
  static DatumSpec custom(std::vector<Complex> values);

  DatumSpec scaled(Complex a) const;
  DatumSpec plus(const DatumSpec& other) const;

  /// "constant:1", "constant:re,im", "point_source:x,y,z", "plane_wave:dx,dy,dz".
  /// Terms may be joined with '+'. Throws ConfigError.
  static DatumSpec parse(const std::string& text);
  std::string describe() const;
};

/// Point-source centers must be strictly inside the obstacle: ray-parity test
/// against the mapped triangulation plus positive clearance.
bool strictly_inside(const DeformedSurface& surface, const Vec3& z);

BoundaryField realize_datum(const DatumSpec& spec, const DeformedSurface& surface, const WaveNumber& k);

// ---------------------------------------------------------------------------
// Closed-form solutions
// ---------------------------------------------------------------------------

/// Exterior solution with boundary data S(k, . - z) for z inside the obstacle.
struct PointSourceExact {
  Vec3 z;
  WaveNumber k;

  Complex field(const Vec3& x) const;
  CVec3 gradient(const Vec3& x) const;
  Complex flux(const Vec3& x, const Vec3& normal) const;
  std::vector<Complex> flux(const DeformedSurface& surface) const;
  Complex far_field(const Vec3& x_hat) const;  // -exp(-ik x_hat.z) / (4 pi)
  std::vector<Complex> far_field(const std::vector<Vec3>& directions) const;
};

PointSourceExact point_source_exact(const Vec3& z, const WaveNumber& k);

/// Exterior solution with datum 1 on the sphere of radius rho:
/// u = rho exp(ik(|x| - rho)) / |x|.
struct RadialSphereExact {
  double rho;
  WaveNumber k;

  Complex field(const Vec3& x) const;
  CVec3 gradient(const Vec3& x) const;
  Complex flux() const;       // du/dr at r = rho: ik - 1/rho
  Complex far_field() const;  // rho exp(-ik rho)
};

RadialSphereExact radial_sphere_exact(double rho, const WaveNumber& k);

/// (j_l(z), h_l^(1)(z)) for l = 0..lmax. j by normalized downward recurrence,
/// h by upward recurrence. DomainError for z = 0 or lmax > 60.
std::pair<std::vector<Complex>, std::vector<Complex>> spherical_bessel_hankel(int lmax, Complex z);
std::pair<Complex, Complex> spherical_bessel_hankel_l(int l, Complex z);

/// Derivatives from f_l' = f_{l-1} - (l+1)/z f_l (l >= 1), f_0' = -f_1.
std::vector<Complex> spherical_derivative(const std::vector<Complex>& f, Complex z);

inline constexpr int kMaxBesselOrder = 60;

/// Far field of the sound-soft unit sphere under exp(ik x.d):
/// u_inf(x) = (i/k) sum_{l<=L} (2l+1) j_l(k)/h_l(k) P_l(x.d).
/// Requires real k > 0 and L >= ceil(k) + 10.
FarFieldGrid mie_far_field(double k, const Vec3& d, int L, const std::vector<Vec3>& directions);

/// Legendre polynomials P_0..P_L at x.
std::vector<double> legendre(int L, double x);

}  // namespace helmscat
