#include "helmscat/fields.hpp"

#include <algorithm>
#include <cmath>

#include "helmscat/io.hpp"
#include "helmscat/parallel.hpp"

namespace helmscat {

namespace {

constexpr Complex kI{0.0, 1.0};

// Panels whose centroid lies within (eta + 1) diameters may need subdivision;
// beyond that the split criterion can never fire.
bool maybe_near(const DeformedSurface& s, std::size_t j, const Vec3& x, double eta) {
  return (x - s.points()[j]).norm() < (eta + 1.0) * s.diameters()[j];
}

}  // namespace

LayerPotential::LayerPotential(const DeformedSurface& surface, const WaveNumber& k, const Eigen::VectorXcd& dl,
                               const Eigen::VectorXcd& sl, EvalOptions opts)
    : surface_(surface), k_(k), dl_(dl), sl_(sl), opts_(opts) {
  const std::size_t n = surface.size();
  if (static_cast<std::size_t>(dl.size()) != n || static_cast<std::size_t>(sl.size()) != n)
    throw InvariantError("LayerPotential: density length does not match the surface");
  const SurfaceNodes& nodes = surface.nodes();
  const std::size_t q = static_cast<std::size_t>(nodes.per_panel);
  for (auto* v : {&dc_re_, &dc_im_, &sc_re_, &sc_im_}) v->resize(nodes.size());
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t m = j * q; m < (j + 1) * q; ++m) {
      const Complex a = dl[static_cast<Eigen::Index>(j)] * nodes.w[m];
      const Complex b = sl[static_cast<Eigen::Index>(j)] * nodes.w[m];
      dc_re_[m] = a.real();
      dc_im_[m] = a.imag();
      sc_re_[m] = b.real();
      sc_im_[m] = b.imag();
    }
}

simd::PotentialValue LayerPotential::evaluate(const Vec3& x, bool with_gradient) const {
  const SurfaceNodes& nodes = surface_.nodes();
  const std::size_t n = surface_.size();
  const std::size_t q = static_cast<std::size_t>(nodes.per_panel);
  const PanelRule rule = regular_rule(kSurfaceRuleOrder);

  simd::PotentialValue total;
  auto add = [&](const simd::PotentialValue& v) {
    total.value += v.value;
    total.gradient += v.gradient;
  };
  auto flush = [&](std::size_t begin, std::size_t end) {
    if (begin == end) return;
    const std::size_t b = begin * q, e = end * q;
    simd::PotentialSources src{{nodes.x.data() + b, nodes.y.data() + b, nodes.z.data() + b, nodes.nx.data() + b,
                                nodes.ny.data() + b, nodes.nz.data() + b, e - b},
                               dc_re_.data() + b,
                               dc_im_.data() + b,
                               sc_re_.data() + b,
                               sc_im_.data() + b};
    add(simd::potential(x, k_.value(), src, with_gradient));
  };

  std::vector<double> bx, by, bz, bnx, bny, bnz, dr, di, sr, si;
  std::size_t run = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (!maybe_near(surface_, j, x, opts_.eta)) continue;
    auto map = [&](const UV& p) { return surface_.map_panel(j, p[0], p[1]).position; };
    const auto parts =
        near_singular_split(SubPanel{{UV{0, 0}, UV{1, 0}, UV{0, 1}}, 0}, map, x, opts_.eta, opts_.max_depth);
    if (parts.size() == 1) continue;
    flush(run, j);
    run = j + 1;
    for (auto* v : {&bx, &by, &bz, &bnx, &bny, &bnz, &dr, &di, &sr, &si}) v->clear();
    const Complex dl = dl_[static_cast<Eigen::Index>(j)], sl = sl_[static_cast<Eigen::Index>(j)];
    for (const SubPanel& part : parts) {
      const PanelRule r = map_rule(rule, part);
      for (std::size_t m = 0; m < r.size(); ++m) {
        const PanelPoint p = surface_.map_panel(j, r.points[m][0], r.points[m][1]);
        const double w = r.weights[m] * p.jacobian;
        bx.push_back(p.position.x());
        by.push_back(p.position.y());
        bz.push_back(p.position.z());
        bnx.push_back(p.normal.x());
        bny.push_back(p.normal.y());
        bnz.push_back(p.normal.z());
        dr.push_back(dl.real() * w);
        di.push_back(dl.imag() * w);
        sr.push_back(sl.real() * w);
        si.push_back(sl.imag() * w);
      }
    }
    simd::PotentialSources src{{bx.data(), by.data(), bz.data(), bnx.data(), bny.data(), bnz.data(), bx.size()},
                               dr.data(),
                               di.data(),
                               sr.data(),
                               si.data()};
    add(simd::potential(x, k_.value(), src, with_gradient));
  }
  flush(run, n);
  return total;
}

LayerPotential solution_potential(const DeformedSurface& surface, const WaveNumber& k, const BoundaryField& theta,
                                  EvalOptions opts) {
  check_binding(theta, surface.shape_hash(), surface.size(), "solution_potential");
  return LayerPotential(surface, k, theta.values, k.coupling() * theta.values, opts);
}

Clearance surface_clearance(const DeformedSurface& surface, const Vec3& x) {
  const SurfaceNodes& nodes = surface.nodes();
  const std::size_t q = static_cast<std::size_t>(nodes.per_panel);
  Clearance best{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t j = 0; j < surface.size(); ++j) {
    double d = (x - surface.points()[j]).norm();
    for (std::size_t m = j * q; m < (j + 1) * q; ++m) d = std::min(d, (x - nodes.position(m)).norm());
    if (d < best.distance) best = {d, j};
  }
  return best;
}

double interior_indicator(const DeformedSurface& surface, const Vec3& x) {
  const Eigen::VectorXcd one = Eigen::VectorXcd::Ones(static_cast<Eigen::Index>(surface.size()));
  const Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(surface.size()));
  const LayerPotential w(surface, WaveNumber(0.0, 0.0), one, zero);
  return w.evaluate(x, false).value.real();
}

EvaluationSet make_evaluation_set(const DeformedSurface& surface, std::vector<Vec3> points) {
  EvaluationSet set;
  set.clearance = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < points.size(); ++p) {
    const Vec3& x = points[p];
    if (!x.allFinite()) throw DomainError("evaluation point " + std::to_string(p) + " is not finite");
    const Clearance c = surface_clearance(surface, x);
    const double need = kMinClearanceRatio * surface.diameters()[c.nearest_panel];
    if (c.distance < need)
      throw DomainError("evaluation point " + std::to_string(p) + " is on or too close to the obstacle (distance " +
                        format_double(c.distance) + " < " + format_double(need) + ")");
    if (interior_indicator(surface, x) > 0.5)
      throw DomainError("evaluation point " + std::to_string(p) + " lies inside the obstacle");
    set.clearance = std::min(set.clearance, c.distance);
  }
  set.points = std::move(points);
  return set;
}

std::vector<Complex> eval_solution(const DeformedSurface& surface, const WaveNumber& k, const BoundaryField& theta,
                                   const EvaluationSet& points, EvalOptions opts) {
  const LayerPotential u = solution_potential(surface, k, theta, opts);
  std::vector<Complex> out(points.points.size());
  parallel_for(out.size(), resolve_threads(opts.threads),
               [&](std::size_t p) { out[p] = u.evaluate(points.points[p], false).value; });
  return out;
}

std::vector<CVec3> eval_gradient(const DeformedSurface& surface, const WaveNumber& k, const BoundaryField& theta,
                                 const EvaluationSet& points, EvalOptions opts) {
  const LayerPotential u = solution_potential(surface, k, theta, opts);
  std::vector<CVec3> out(points.points.size());
  parallel_for(out.size(), resolve_threads(opts.threads),
               [&](std::size_t p) { out[p] = u.evaluate(points.points[p], true).gradient; });
  return out;
}

// ---------------------------------------------------------------------------
// Offset traces
// ---------------------------------------------------------------------------

std::size_t OffsetTrace::flagged_count() const { return static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), true)); }

OffsetTrace offset_trace(const LayerPotential& potential, TraceSide side, TraceQuantity quantity, int threads) {
  const DeformedSurface& s = potential.surface();
  const std::size_t n = s.size();
  const double sign = side == TraceSide::exterior ? 1.0 : -1.0;
  OffsetTrace out;
  out.trace.surface_hash = s.shape_hash();
  out.trace.values.resize(static_cast<Eigen::Index>(n));
  std::vector<char> flags(n, 0);
  parallel_for(n, resolve_threads(threads), [&](std::size_t i) {
    const Vec3& x = s.points()[i];
    const Vec3& nu = s.normals()[i];
    const double h = s.diameters()[i];
    Complex f[3];
    for (int m = 0; m < 3; ++m) {
      const double eps = h * std::ldexp(1.0, -m);
      const simd::PotentialValue v =
          potential.evaluate(x + sign * eps * nu, quantity == TraceQuantity::normal_derivative);
      f[m] = quantity == TraceQuantity::value
                 ? v.value
                 : v.gradient.x() * nu.x() + v.gradient.y() * nu.y() + v.gradient.z() * nu.z();
    }
    // f(eps) = f0 + a eps + b eps^2 + O(eps^3), eps halving.
    out.trace.values[static_cast<Eigen::Index>(i)] = (8.0 * f[2] - 6.0 * f[1] + f[0]) / 3.0;
    const double d1 = std::abs(f[1] - f[0]), d2 = std::abs(f[2] - f[1]);
    flags[i] = d2 > d1 && d2 > 1e-12 * (std::abs(f[2]) + 1.0);
  });
  out.flagged.assign(flags.begin(), flags.end());
  return out;
}

OffsetTrace normal_derivative_double_layer(const DeformedSurface& surface, const WaveNumber& k,
                                           const BoundaryField& mu, EvalOptions opts) {
  check_binding(mu, surface.shape_hash(), surface.size(), "normal_derivative_double_layer");
  const LayerPotential w(surface, k, mu.values, Eigen::VectorXcd::Zero(mu.values.size()), opts);
  return offset_trace(w, TraceSide::exterior, TraceQuantity::normal_derivative, opts.threads);
}

const char* trace_method_name(TraceMethod m) { return m == TraceMethod::direct ? "direct" : "paper_formula"; }

TraceMethod parse_trace_method(const std::string& text) {
  if (text == "direct") return TraceMethod::direct;
  if (text == "paper_formula" || text == "paper") return TraceMethod::paper_formula;
  throw ConfigError("unknown trace method '" + text + "' (expected direct or paper_formula)");
}

BoundaryField neumann_trace(const DeformedSurface& surface, const WaveNumber& k, const BoundaryField& theta,
                            const BoundaryField& g, TraceMethod method, const LayerOperators* ops,
                            const NeumannOptions& opts) {
  LayerOperators local;
  if (!ops) {
    local = assemble_layer_operators(surface, k, opts.direct.assembly);
    ops = &local;
  }
  if (ops->V.surface_hash != surface.shape_hash() || ops->V.k.value() != k.value())
    throw InvariantError("neumann_trace: operators were assembled for a different surface or wave number");
  if (method == TraceMethod::direct) return direct_flux_solve(ops->V, ops->W, g, opts.direct).psi;

  check_binding(theta, surface.shape_hash(), surface.size(), "neumann_trace");
  const OffsetTrace dw = normal_derivative_double_layer(surface, k, theta, opts.eval);
  BoundaryField out;
  out.surface_hash = surface.shape_hash();
  out.values = dw.trace.values + k.coupling() * (0.5 * theta.values + ops->Wstar.matrix * theta.values);
  return out;
}

BoundaryField dtn_apply(const DeformedSurface& surface, const WaveNumber& k, const BoundaryField& g,
                        const LayerOperators* ops, const NeumannOptions& opts) {
  return neumann_trace(surface, k, BoundaryField{}, g, TraceMethod::direct, ops, opts);
}

Eigen::MatrixXcd dtn_matrix(const DeformedSurface& surface, const WaveNumber& k, const LayerOperators* ops,
                            const NeumannOptions& opts) {
  LayerOperators local;
  if (!ops) {
    local = assemble_layer_operators(surface, k, opts.direct.assembly);
    ops = &local;
  }
  const DenseSolver solver(ops->V);
  if (solver.condition_estimate() > opts.direct.max_condition && !opts.direct.force)
    throw SolverError("single-layer operator is ill-conditioned (condition estimate " +
                      format_double(solver.condition_estimate()) + "); k is close to an interior Dirichlet eigenvalue");
  const auto n = static_cast<Eigen::Index>(surface.size());
  Eigen::MatrixXcd out(n, n);
  BoundaryField rhs;
  rhs.surface_hash = surface.shape_hash();
  for (Eigen::Index c = 0; c < n; ++c) {
    // (1/2 I + W) e_c
    rhs.values = ops->W.matrix.col(c);
    rhs.values[c] += 0.5;
    out.col(c) = solver.solve(rhs).values;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Far field
// ---------------------------------------------------------------------------

std::vector<Vec3> fibonacci_directions(std::size_t n) {
  std::vector<Vec3> out(n);
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double a = golden * static_cast<double>(i);
    out[i] = Vec3(r * std::cos(a), r * std::sin(a), z).normalized();
  }
  return out;
}

FarFieldGrid far_field_direct(const DeformedSurface& surface, const WaveNumber& k, const BoundaryField& theta,
                              const std::vector<Vec3>& directions, int threads) {
  check_binding(theta, surface.shape_hash(), surface.size(), "far_field_direct");
  const SurfaceNodes& nodes = surface.nodes();
  const std::size_t q = static_cast<std::size_t>(nodes.per_panel);
  const Complex c = k.coupling();
  FarFieldGrid out;
  out.directions = directions;
  out.values.resize(directions.size());
  parallel_for(directions.size(), resolve_threads(threads), [&](std::size_t d) {
    const Vec3& xh = directions[d];
    Complex acc = 0.0;
    for (std::size_t j = 0; j < surface.size(); ++j) {
      Complex panel = 0.0;
      for (std::size_t m = j * q; m < (j + 1) * q; ++m) {
        const FarFieldKernels kk = farfield_kernels(k, xh, nodes.position(m), nodes.normal(m));
        panel += (kk.dlayer + c * kk.single) * nodes.w[m];
      }
      acc += panel * theta.values[static_cast<Eigen::Index>(j)];
    }
    out.values[d] = acc;
  });
  return out;
}

double min_sphere_radius(const DeformedSurface& surface) {
  double rmax = 0.0;
  const SurfaceNodes& nodes = surface.nodes();
  for (std::size_t m = 0; m < nodes.size(); ++m) rmax = std::max(rmax, nodes.position(m).norm());
  for (std::size_t j = 0; j < surface.size(); ++j)
    for (const Vec3& v : surface.mapped_vertices(j)) rmax = std::max(rmax, v.norm());
  return rmax + surface.max_diameter();
}

FarFieldGrid far_field_sphere_formula(const DeformedSurface& surface, const WaveNumber& k, const BoundaryField& theta,
                                      double R, const std::vector<Vec3>& directions,
                                      const SphereFormulaOptions& opts) {
  check_binding(theta, surface.shape_hash(), surface.size(), "far_field_sphere_formula");
  const double rmin = min_sphere_radius(surface);
  if (!(R > rmin))
    throw DomainError("sphere radius R = " + format_double(R) +
                      " is too small: the sphere must enclose the obstacle with one panel diameter to spare (R > " +
                      format_double(rmin) + ")");
  const int level = opts.grid_level >= 0 ? opts.grid_level : std::max(3, surface.mesh().level);
  const DeformedSurface grid(shared_reference_mesh(level), ShapeMap::identity());
  const SurfaceNodes& g = grid.nodes();

  // u and du/dr on the radius-R sphere.
  const LayerPotential u = solution_potential(surface, k, theta, opts.eval);
  std::vector<Complex> val(g.size()), dr(g.size());
  parallel_for(g.size(), resolve_threads(opts.eval.threads), [&](std::size_t m) {
    const Vec3 s = g.position(m).normalized();
    const simd::PotentialValue v = u.evaluate(R * s, true);
    val[m] = v.value;
    dr[m] = v.gradient.x() * s.x() + v.gradient.y() * s.y() + v.gradient.z() * s.z();
  });

  const Complex kk = k.value();
  FarFieldGrid out;
  out.directions = directions;
  out.values.resize(directions.size());
  parallel_for(directions.size(), resolve_threads(opts.eval.threads), [&](std::size_t d) {
    const Vec3& xh = directions[d];
    Complex acc = 0.0;
    for (std::size_t m = 0; m < g.size(); ++m) {
      const Vec3 s = g.position(m).normalized();
      const double xs = xh.dot(s);
      const Complex e = std::exp(-kI * kk * R * xs);
      acc += (val[m] * (-kI * kk * xs) - dr[m]) * e * (R * R * g.w[m]);
    }
    out.values[d] = acc / kFourPi;
  });
  return out;
}

std::vector<double> radiation_check(const DeformedSurface& surface, const WaveNumber& k, const BoundaryField& theta,
                                    const Vec3& direction, const std::vector<double>& radii, EvalOptions opts) {
  const LayerPotential u = solution_potential(surface, k, theta, opts);
  const Vec3 d = direction.normalized();
  std::vector<double> out(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const Vec3 x = radii[i] * d;
    if (surface_clearance(surface, x).distance < kMinClearanceRatio * surface.max_diameter() ||
        interior_indicator(surface, x) > 0.5)
      throw DomainError("radiation_check: radius " + format_double(radii[i]) + " is not in the exterior");
    const simd::PotentialValue v = u.evaluate(x, true);
    out[i] = std::abs(radiation_residual(v.value, v.gradient, x, k));
  }
  return out;
}

}  // namespace helmscat
