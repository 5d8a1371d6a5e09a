#include "helmscat/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "helmscat/fields.hpp"
#include "helmscat/io.hpp"
#include "helmscat/parallel.hpp"
#include "helmscat/pipeline.hpp"

namespace helmscat {

namespace {

Vec3 parse_vec3(const std::string& text) {
  const auto v = parse_doubles(text);
  if (v.size() != 3) throw ConfigError("expected x,y,z, got '" + text + "'");
  return {v[0], v[1], v[2]};
}

// Rethrows the active exception with `prefix` prepended, keeping its class.
[[noreturn]] void rethrow_with(const std::string& prefix) {
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  } catch (const SolverError& e) {
    throw SolverError(prefix + e.what());
  } catch (const InvariantError& e) {
    throw InvariantError(prefix + e.what());
  } catch (const std::exception& e) {
    throw Error(prefix + e.what());
  }
}

struct LineFit {
  double slope = 0.0, intercept = 0.0, rms = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LineFit f;
  const double den = n * sxx - sx * sx;
  f.slope = den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
  f.intercept = (sy - f.slope * sx) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss += r * r;
  }
  f.rms = std::sqrt(ss / n);
  return f;
}

}  // namespace

// ---------------------------------------------------------------------------
// Observables
// ---------------------------------------------------------------------------

ObservableSpec ObservableSpec::farfield_at(const Vec3& direction) {
  if (!(direction.norm() > 0.0)) throw ConfigError("farfield_at needs a nonzero direction");
  ObservableSpec o;
  o.kind = Kind::farfield_at;
  o.point = direction.normalized();
  return o;
}

ObservableSpec ObservableSpec::field_at(const Vec3& x) {
  ObservableSpec o;
  o.kind = Kind::field_at;
  o.point = x;
  return o;
}

ObservableSpec ObservableSpec::dtn_entry(std::size_t i) {
  ObservableSpec o;
  o.kind = Kind::dtn_entry;
  o.index = i;
  return o;
}

ObservableSpec ObservableSpec::density_norm() {
  ObservableSpec o;
  o.kind = Kind::density_norm;
  return o;
}

ObservableSpec ObservableSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const std::string params = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (name == "farfield_at") return farfield_at(params.empty() ? Vec3(0, 0, 1) : parse_vec3(params));
  if (name == "field_at") return field_at(parse_vec3(params));
  if (name == "dtn_entry") {
    const auto v = parse_doubles(params);
    if (v.size() != 1 || v[0] < 0 || v[0] != std::floor(v[0])) throw ConfigError("dtn_entry needs an index");
    return dtn_entry(static_cast<std::size_t>(v[0]));
  }
  if (name == "density_norm") return density_norm();
  throw ConfigError("unknown observable '" + name + "' (expected farfield_at, field_at, dtn_entry, density_norm)");
}

std::string ObservableSpec::describe() const {
  switch (kind) {
    case Kind::farfield_at: return "farfield_at:" + join_doubles({point.x(), point.y(), point.z()});
    case Kind::field_at: return "field_at:" + join_doubles({point.x(), point.y(), point.z()});
    case Kind::dtn_entry: return "dtn_entry:" + std::to_string(index);
    case Kind::density_norm: return "density_norm";
  }
  return "";
}

Complex evaluate_observable(const Configuration& config, const ObservableSpec& obs, int level,
                            const AssemblyOptions& opts) {
  const Problem problem{level, config.shape, config.k, config.datum};
  const Solution sol = solve_problem(problem, opts);
  const DeformedSurface& s = *sol.surface;
  switch (obs.kind) {
    case ObservableSpec::Kind::farfield_at:
      return far_field_direct(s, sol.k, sol.theta, {obs.point}, opts.threads).values[0];
    case ObservableSpec::Kind::field_at: {
      EvalOptions eo;
      eo.threads = opts.threads;
      return eval_solution(s, sol.k, sol.theta, make_evaluation_set(s, {obs.point}), eo)[0];
    }
    case ObservableSpec::Kind::dtn_entry: {
      if (obs.index >= s.size())
        throw ConfigError("dtn_entry index " + std::to_string(obs.index) + " exceeds panel count " +
                          std::to_string(s.size()));
      NeumannOptions no;
      no.direct.assembly = opts;
      return dtn_apply(s, sol.k, sol.g, &sol.ops, no).values[static_cast<Eigen::Index>(obs.index)];
    }
    case ObservableSpec::Kind::density_norm: {
      double acc = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i)
        acc += std::norm(sol.theta.values[static_cast<Eigen::Index>(i)]) * s.weights()[i];
      return std::sqrt(acc);
    }
  }
  throw InvariantError("unhandled observable kind");
}

Evaluator bem_evaluator(const ObservableSpec& obs, int level, const AssemblyOptions& opts) {
  return [obs, level, opts](const Configuration& c) { return evaluate_observable(c, obs, level, opts); };
}

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

std::vector<double> uniform_points(double a, double b, int n) {
  if (n < 1) throw ConfigError("sample count must be positive");
  if (n == 1) return {a};
  std::vector<double> t(static_cast<std::size_t>(n));
  const double h = (b - a) / (n - 1);
  for (int i = 0; i < n; ++i) t[i] = a + i * h;
  t.back() = b;
  return t;
}

std::vector<double> chebyshev_points(double a, double b, int n) {
  if (n < 1) throw ConfigError("sample count must be positive");
  std::vector<double> t(static_cast<std::size_t>(n));
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int j = 0; j < n; ++j) t[j] = mid + half * std::cos(kPi * (j + 0.5) / n);
  return t;
}

Configuration FamilySpec::at(double t) const {
  Configuration c = base;
  switch (kind) {
    case Kind::shape: c.shape = ShapeMap::linear_family(base.shape, shape_direction, t); break;
    case Kind::wavenumber: c.k = base.k + t * dk; break;
    case Kind::datum: c.datum = base.datum.plus(datum_direction.scaled(t)); break;
  }
  return c;
}

std::vector<double> FamilySpec::grid_points() const {
  return grid == SampleGrid::chebyshev ? chebyshev_points(t_min, t_max, samples)
                                       : uniform_points(t_min, t_max, samples);
}

void FamilySpec::validate() const {
  if (!(t_max >= t_min) || samples < 1) throw ConfigError("family range must satisfy t_min <= t_max, samples >= 1");
  if (kind == Kind::wavenumber)
    for (double t : grid_points())
      if ((base.k + t * dk).imag() < 0.0)
        throw ConfigError("wave number family leaves C+ (Im k >= 0) at t = " + format_double(t));
}

std::vector<FamilySample> family_evaluate(const FamilySpec& family, const Evaluator& eval, int threads) {
  family.validate();
  const std::vector<double> ts = family.grid_points();
  std::vector<FamilySample> out(ts.size());
  parallel_for(ts.size(), resolve_threads(threads), [&](std::size_t i) {
    try {
      out[i] = {ts[i], eval(family.at(ts[i]))};
    } catch (...) {
      rethrow_with("family evaluation failed at t = " + format_double(ts[i]) + ": ");
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

DerivativeEstimate central_difference(const std::vector<double>& t, const std::vector<Complex>& f, int order) {
  if (order != 2 && order != 4) throw DomainError("central_difference: order must be 2 or 4");
  if (t.size() != f.size()) throw DomainError("central_difference: t and f lengths differ");
  const std::size_t width = order == 2 ? 3 : 5;
  if (t.size() < width)
    throw DomainError("central_difference: order " + std::to_string(order) + " needs at least " +
                      std::to_string(width) + " points");
  const double h = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i)
    if (std::abs((t[i] - t[i - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h)))
      throw DomainError("central_difference: grid is not uniform");

  auto d2 = [&](std::size_t i, std::size_t s) { return (f[i + s] - f[i - s]) / (2.0 * s * h); };
  auto d4 = [&](std::size_t i) { return (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * h); };

  DerivativeEstimate out;
  out.order = order;
  const std::size_t r = width / 2;
  for (std::size_t i = r; i + r < t.size(); ++i) {
    out.t.push_back(t[i]);
    if (order == 2) {
      out.derivative.push_back(d2(i, 1));
      out.richardson_gap.push_back(i >= 2 && i + 2 < t.size() ? std::abs(d2(i, 1) - d2(i, 2))
                                                               : std::numeric_limits<double>::quiet_NaN());
    } else {
      out.derivative.push_back(d4(i));
      out.richardson_gap.push_back(std::abs(d4(i) - d2(i, 1)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chebyshev decay
// ---------------------------------------------------------------------------

ChebyshevFit chebyshev_analyticity(const std::vector<Complex>& samples, double relative_floor, double absolute_noise,
                                   double rho_threshold) {
  const int n = static_cast<int>(samples.size());
  if (n < 16) throw DomainError("chebyshev_analyticity needs at least 16 samples");
  ChebyshevFit fit;
  fit.coefficients.assign(static_cast<std::size_t>(n), 0.0);
  for (int m = 0; m < n; ++m) {
    Complex acc = 0.0;
    for (int j = 0; j < n; ++j) acc += samples[j] * std::cos(kPi * m * (j + 0.5) / n);
    fit.coefficients[m] = acc * (m == 0 ? 1.0 / n : 2.0 / n);
  }
  double cmax = 0.0;
  for (const Complex& c : fit.coefficients) cmax = std::max(cmax, std::abs(c));
  fit.noise_floor = std::max(relative_floor * cmax, absolute_noise);
  fit.rho_hat = std::numeric_limits<double>::quiet_NaN();

  fit.resolved = -1;
  for (int m = 0; m < n; ++m)
    if (std::abs(fit.coefficients[m]) > fit.noise_floor) fit.resolved = m;
  if (fit.resolved <= 0) {
    fit.flat = true;
    return fit;
  }

  std::vector<double> xs, logm, ys;
  for (int m = std::max(1, fit.resolved / 2); m <= fit.resolved; ++m) {
    const double a = std::abs(fit.coefficients[m]);
    if (a <= fit.noise_floor) continue;
    fit.fit_indices.push_back(m);
    xs.push_back(m);
    logm.push_back(std::log(static_cast<double>(m)));
    ys.push_back(std::log(a));
  }
  if (xs.size() < 2) return fit;
  const LineFit geo = least_squares(xs, ys);
  const LineFit alg = least_squares(logm, ys);
  fit.rho_hat = std::exp(-geo.slope);
  fit.geometric_residual = geo.rms;
  fit.algebraic_residual = alg.rms;
  fit.algebraic_exponent = -alg.slope;
  fit.geometric = fit.rho_hat >= rho_threshold && geo.rms <= alg.rms;
  return fit;
}

double estimate_noise_floor(const Configuration& config, const ObservableSpec& obs, int level, int threads) {
  AssemblyOptions fwd;
  fwd.threads = threads;
  AssemblyOptions rev = fwd;
  rev.reverse_summation = true;
  const Complex a = evaluate_observable(config, obs, level, fwd);
  const Complex b = evaluate_observable(config, obs, level, rev);
  return std::max(std::abs(a - b), std::numeric_limits<double>::epsilon() * std::abs(a));
}

// ---------------------------------------------------------------------------
// Joint sweeps
// ---------------------------------------------------------------------------

std::vector<double> Axis::values() const {
  if (n < 1) throw ConfigError("sweep axis needs at least one point");
  return uniform_points(min, max, n);
}

Configuration JointGrid::at(double s, double kr, double a) const {
  Configuration c = base;
  c.shape = ShapeMap::linear_family(base.shape, shape_direction, s);
  c.k = base.k + kr;
  c.datum = base.datum.plus(datum_direction.scaled(a));
  return c;
}

std::size_t JointTable::failures() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const JointRow& r) { return !r.ok; }));
}

JointTable joint_sweep(const JointGrid& grid, const Evaluator& eval, bool strict, int threads) {
  const auto sv = grid.shape.values(), kv = grid.k_re.values(), av = grid.datum.values();
  JointTable table;
  table.ns = static_cast<int>(sv.size());
  table.nk = static_cast<int>(kv.size());
  table.na = static_cast<int>(av.size());
  table.rows.resize(sv.size() * kv.size() * av.size());
  for (int i = 0; i < table.ns; ++i)
    for (int j = 0; j < table.nk; ++j)
      for (int l = 0; l < table.na; ++l) {
        JointRow& r = table.rows[static_cast<std::size_t>((i * table.nk + j) * table.na + l)];
        r.s = sv[i];
        r.k_re = kv[j];
        r.a = av[l];
      }
  parallel_for(table.rows.size(), resolve_threads(threads), [&](std::size_t idx) {
    JointRow& r = table.rows[idx];
    try {
      r.value = eval(grid.at(r.s, r.k_re, r.a));
    } catch (const std::exception& e) {
      if (strict)
        rethrow_with("sweep failed at (s, Re k, a) = (" + format_double(r.s) + ", " + format_double(r.k_re) + ", " +
                     format_double(r.a) + "): ");
      r.ok = false;
      r.error = e.what();
    }
  });
  return table;
}

JointReport joint_report(const JointGrid& grid, const JointTable& table) {
  JointReport rep;
  const auto sv = grid.shape.values(), kv = grid.k_re.values();
  double fmax = 0.0;
  for (const auto& r : table.rows)
    if (r.ok) fmax = std::max(fmax, std::abs(r.value));
  for (int l = 0; l < table.na; ++l)
    for (int i = 0; i + 1 < table.ns; ++i)
      for (int j = 0; j + 1 < table.nk; ++j) {
        const JointRow &f00 = table.at(i, j, l), &f01 = table.at(i, j + 1, l), &f10 = table.at(i + 1, j, l),
                       &f11 = table.at(i + 1, j + 1, l);
        if (!(f00.ok && f01.ok && f10.ok && f11.ok)) continue;
        const double hs = sv[i + 1] - sv[i], hk = kv[j + 1] - kv[j];
        // d/ds of d/dk
        const Complex gk0 = (f01.value - f00.value) / hk, gk1 = (f11.value - f10.value) / hk;
        const Complex sk = (gk1 - gk0) / hs;
        // d/dk of d/ds
        const Complex gs0 = (f10.value - f00.value) / hs, gs1 = (f11.value - f01.value) / hs;
        const Complex ks = (gs1 - gs0) / hk;
        rep.max_mixed_commutator = std::max(rep.max_mixed_commutator, std::abs(sk - ks));
        rep.max_mixed_difference = std::max(rep.max_mixed_difference, std::abs(sk));
      }
  if (table.na >= 3 && fmax > 0.0)
    for (int i = 0; i < table.ns; ++i)
      for (int j = 0; j < table.nk; ++j)
        for (int l = 0; l + 2 < table.na; ++l) {
          const JointRow &a0 = table.at(i, j, l), &a1 = table.at(i, j, l + 1), &a2 = table.at(i, j, l + 2);
          if (!(a0.ok && a1.ok && a2.ok)) continue;
          rep.max_datum_curvature =
              std::max(rep.max_datum_curvature, std::abs(a0.value - 2.0 * a1.value + a2.value) / fmax);
        }
  return rep;
}

}  // namespace helmscat
