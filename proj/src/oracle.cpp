#include "helmscat/oracle.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "helmscat/io.hpp"

namespace helmscat {

namespace {

constexpr Complex kI{0.0, 1.0};

std::string describe_complex(Complex c) {
  if (c.imag() == 0.0) return format_double(c.real());
  return format_double(c.real()) + "," + format_double(c.imag());
}

Complex parse_complex(std::string_view text) {
  const auto v = parse_doubles(text);
  if (v.size() == 1) return {v[0], 0.0};
  if (v.size() == 2) return {v[0], v[1]};
  throw ConfigError("expected RE or RE,IM, got '" + std::string(text) + "'");
}

Vec3 parse_vec3(std::string_view text) {
  const auto v = parse_doubles(text);
  if (v.size() != 3) throw ConfigError("expected x,y,z, got '" + std::string(text) + "'");
  return {v[0], v[1], v[2]};
}

DatumSpec single(DatumTerm t) {
  DatumSpec s;
  s.terms.push_back(std::move(t));
  return s;
}

DatumSpec parse_term(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const std::string params = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (name == "constant" || name == "one") return DatumSpec::constant(params.empty() ? Complex(1.0) : parse_complex(params));
  if (name == "point_source") {
    if (params.empty()) throw ConfigError("point_source needs a center x,y,z");
    return DatumSpec::point_source(parse_vec3(params));
  }
  if (name == "plane_wave") {
    const Vec3 d = params.empty() ? Vec3(0, 0, 1) : parse_vec3(params);
    if (!(d.norm() > 0.0)) throw ConfigError("plane_wave direction must be nonzero");
    return DatumSpec::plane_wave(d.normalized());
  }
  throw ConfigError("unknown datum '" + name + "' (expected constant, point_source or plane_wave)");
}

// Moller-Trumbore ray/triangle test; returns true for a hit with t > 0.
bool ray_hits(const Vec3& o, const Vec3& dir, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 p = dir.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-300) return false;
  const double inv = 1.0 / det;
  const Vec3 s = o - a;
  const double u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return false;
  const Vec3 q = s.cross(e1);
  const double v = dir.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return false;
  return e2.dot(q) * inv > 0.0;
}

}  // namespace

DatumSpec DatumSpec::constant(Complex c) {
  DatumTerm t;
  t.kind = DatumTerm::Kind::constant;
  t.c = c;
  return single(t);
}

DatumSpec DatumSpec::point_source(const Vec3& z) {
  if (!z.allFinite()) throw DomainError("point_source center must be finite");
  DatumTerm t;
  t.kind = DatumTerm::Kind::point_source;
  t.z = z;
  return single(t);
}

DatumSpec DatumSpec::plane_wave(const Vec3& d) {
  if (!(std::abs(d.norm() - 1.0) <= 1e-12)) throw DomainError("plane_wave direction must have unit length");
  DatumTerm t;
  t.kind = DatumTerm::Kind::plane_wave;
  t.d = d;
  return single(t);
}

DatumSpec DatumSpec::custom(std::vector<Complex> values) {
  DatumTerm t;
  t.kind = DatumTerm::Kind::custom;
  t.values = std::move(values);
  return single(t);
}

DatumSpec DatumSpec::scaled(Complex a) const {
  DatumSpec out = *this;
  for (auto& t : out.terms) t.weight *= a;
  return out;
}

DatumSpec DatumSpec::plus(const DatumSpec& other) const {
  DatumSpec out = *this;
  out.terms.insert(out.terms.end(), other.terms.begin(), other.terms.end());
  return out;
}

DatumSpec DatumSpec::parse(const std::string& text) {
  if (text.empty()) throw ConfigError("empty datum specification");
  DatumSpec out;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= text.size(); ++i) {
    // '+' followed by a letter separates terms; '+' inside numbers does not.
    const bool split = i == text.size() ||
                       (text[i] == '+' && i + 1 < text.size() && std::isalpha(static_cast<unsigned char>(text[i + 1])));
    if (!split) continue;
    out = out.plus(parse_term(text.substr(start, i - start)));
    start = i + 1;
  }
  return out;
}

std::string DatumSpec::describe() const {
  std::string out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const DatumTerm& t = terms[i];
    if (i) out += "+";
    if (t.weight != Complex(1.0)) out += "(" + describe_complex(t.weight) + ")*";
    switch (t.kind) {
      case DatumTerm::Kind::constant: out += "constant:" + describe_complex(t.c); break;
      case DatumTerm::Kind::point_source:
        out += "point_source:" + join_doubles({t.z.x(), t.z.y(), t.z.z()});
        break;
      case DatumTerm::Kind::plane_wave:
        out += "plane_wave:" + join_doubles({t.d.x(), t.d.y(), t.d.z()});
        break;
      case DatumTerm::Kind::custom: {
        std::string raw;
        for (const Complex& v : t.values) raw += format_double(v.real()) + "," + format_double(v.imag()) + ";";
        out += "custom[" + std::to_string(t.values.size()) + "]:" + short_digest(raw);
        break;
      }
    }
  }
  return out;
}

bool strictly_inside(const DeformedSurface& surface, const Vec3& z) {
  const SurfaceNodes& nodes = surface.nodes();
  for (std::size_t m = 0; m < nodes.size(); ++m)
    if ((nodes.position(m) - z).norm() < 1e-8) return false;
  const Vec3 dir = Vec3(0.2357022603955158, 0.5491140613567433, 0.8017837257372732).normalized();
  int hits = 0;
  for (std::size_t j = 0; j < surface.size(); ++j) {
    const auto v = surface.mapped_vertices(j);
    if (ray_hits(z, dir, v[0], v[1], v[2])) ++hits;
  }
  return hits % 2 == 1;
}

BoundaryField realize_datum(const DatumSpec& spec, const DeformedSurface& surface, const WaveNumber& k) {
  if (spec.terms.empty()) throw ConfigError("datum has no terms");
  const std::size_t n = surface.size();
  BoundaryField g;
  g.surface_hash = surface.shape_hash();
  g.values = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n));
  for (const DatumTerm& t : spec.terms) {
    if (t.kind == DatumTerm::Kind::point_source && !strictly_inside(surface, t.z))
      throw DomainError("point_source center (" + join_doubles({t.z.x(), t.z.y(), t.z.z()}) +
                        ") is not strictly inside the obstacle");
    if (t.kind == DatumTerm::Kind::custom && t.values.size() != n)
      throw ConfigError("custom datum has " + std::to_string(t.values.size()) + " values, surface has " +
                        std::to_string(n) + " panels");
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3& y = surface.points()[i];
      Complex v;
      switch (t.kind) {
        case DatumTerm::Kind::constant: v = t.c; break;
        case DatumTerm::Kind::point_source: v = fund_sol(k, y - t.z); break;
        case DatumTerm::Kind::plane_wave: v = -std::exp(kI * k.value() * y.dot(t.d)); break;
        case DatumTerm::Kind::custom: v = t.values[i]; break;
      }
      g.values[static_cast<Eigen::Index>(i)] += t.weight * v;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Point source and radial sphere
// ---------------------------------------------------------------------------

PointSourceExact point_source_exact(const Vec3& z, const WaveNumber& k) { return {z, k}; }

Complex PointSourceExact::field(const Vec3& x) const { return fund_sol(k, x - z); }
CVec3 PointSourceExact::gradient(const Vec3& x) const { return grad_fund_sol(k, x - z); }

Complex PointSourceExact::flux(const Vec3& x, const Vec3& normal) const {
  const CVec3 g = gradient(x);
  return g.x() * normal.x() + g.y() * normal.y() + g.z() * normal.z();
}

std::vector<Complex> PointSourceExact::flux(const DeformedSurface& surface) const {
  std::vector<Complex> out(surface.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = flux(surface.points()[i], surface.normals()[i]);
  return out;
}

Complex PointSourceExact::far_field(const Vec3& x_hat) const {
  return -std::exp(-kI * k.value() * x_hat.dot(z)) / kFourPi;
}

std::vector<Complex> PointSourceExact::far_field(const std::vector<Vec3>& directions) const {
  std::vector<Complex> out;
  out.reserve(directions.size());
  for (const Vec3& d : directions) out.push_back(far_field(d));
  return out;
}

RadialSphereExact radial_sphere_exact(double rho, const WaveNumber& k) {
  if (!(rho > 0.0)) throw DomainError("radial_sphere_exact: radius must be positive");
  return {rho, k};
}

Complex RadialSphereExact::field(const Vec3& x) const {
  const double r = x.norm();
  return rho * std::exp(kI * k.value() * (r - rho)) / r;
}

CVec3 RadialSphereExact::gradient(const Vec3& x) const {
  const double r = x.norm();
  const Complex du = field(x) * (kI * k.value() - 1.0 / r);
  return CVec3(du * x.x() / r, du * x.y() / r, du * x.z() / r);
}

Complex RadialSphereExact::flux() const { return kI * k.value() - 1.0 / rho; }

Complex RadialSphereExact::far_field() const { return rho * std::exp(-kI * k.value() * rho); }

// ---------------------------------------------------------------------------
// Spherical Bessel / Hankel functions and the Mie series
// ---------------------------------------------------------------------------

std::pair<std::vector<Complex>, std::vector<Complex>> spherical_bessel_hankel(int lmax, Complex z) {
  if (lmax < 0 || lmax > kMaxBesselOrder)
    throw DomainError("spherical_bessel_hankel: order must lie in [0, " + std::to_string(kMaxBesselOrder) + "]");
  if (z == Complex(0.0)) throw DomainError("spherical_bessel_hankel: z must be nonzero");

  // j: Miller's downward recurrence from well above lmax, normalized by j_0 or j_1.
  const int start = lmax + 30 + static_cast<int>(std::abs(z));
  std::vector<Complex> f(static_cast<std::size_t>(start) + 2, 0.0);
  f[static_cast<std::size_t>(start)] = 1e-300;
  for (int l = start; l >= 1; --l) {
    f[l - 1] = static_cast<double>(2 * l + 1) / z * f[l] - f[l + 1];
    if (std::abs(f[l - 1]) > 1e250)
      for (int m = l - 1; m <= start; ++m) f[m] *= 1e-250;
  }
  const Complex j0 = std::sin(z) / z;
  const Complex j1 = std::sin(z) / (z * z) - std::cos(z) / z;
  const Complex scale = std::abs(j0) >= std::abs(j1) ? j0 / f[0] : j1 / f[1];
  std::vector<Complex> j(static_cast<std::size_t>(lmax) + 1), h(static_cast<std::size_t>(lmax) + 1);
  for (int l = 0; l <= lmax; ++l) j[l] = f[l] * scale;

  const Complex e = std::exp(kI * z);
  h[0] = -kI * e / z;
  if (lmax >= 1) h[1] = -e * (z + kI) / (z * z);
  for (int l = 1; l < lmax; ++l) h[l + 1] = static_cast<double>(2 * l + 1) / z * h[l] - h[l - 1];
  return {j, h};
}

std::pair<Complex, Complex> spherical_bessel_hankel_l(int l, Complex z) {
  const auto [j, h] = spherical_bessel_hankel(l, z);
  return {j.back(), h.back()};
}

std::vector<Complex> spherical_derivative(const std::vector<Complex>& f, Complex z) {
  if (f.size() < 2) throw DomainError("spherical_derivative needs orders 0 and 1");
  std::vector<Complex> d(f.size());
  d[0] = -f[1];
  for (std::size_t l = 1; l < f.size(); ++l) d[l] = f[l - 1] - static_cast<double>(l + 1) / z * f[l];
  return d;
}

std::vector<double> legendre(int L, double x) {
  std::vector<double> p(static_cast<std::size_t>(L) + 1);
  p[0] = 1.0;
  if (L >= 1) p[1] = x;
  for (int l = 1; l < L; ++l) p[l + 1] = ((2 * l + 1) * x * p[l] - l * p[l - 1]) / (l + 1);
  return p;
}

FarFieldGrid mie_far_field(double k, const Vec3& d, int L, const std::vector<Vec3>& directions) {
  if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("mie_far_field: k must be real and positive");
  const int lmin = static_cast<int>(std::ceil(k)) + 10;
  if (L < lmin) throw DomainError("mie_far_field: truncation L must be at least ceil(k) + 10 = " + std::to_string(lmin));
  const auto [j, h] = spherical_bessel_hankel(L, Complex(k, 0.0));
  std::vector<Complex> coef(static_cast<std::size_t>(L) + 1);
  for (int l = 0; l <= L; ++l) coef[l] = static_cast<double>(2 * l + 1) * j[l] / h[l];
  const Vec3 dn = d.normalized();
  FarFieldGrid out;
  out.directions = directions;
  for (const Vec3& x : directions) {
    const auto p = legendre(L, std::clamp(x.normalized().dot(dn), -1.0, 1.0));
    Complex acc = 0.0;
    for (int l = L; l >= 0; --l) acc += coef[l] * p[l];
    out.values.push_back(kI / k * acc);
  }
  return out;
}

}  // namespace helmscat
