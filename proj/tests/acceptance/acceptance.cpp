// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "helmscat/cli.hpp"
#include "helmscat/fields.hpp"
#include "helmscat/oracle.hpp"
#include "helmscat/pipeline.hpp"
#include "helmscat/sensitivity.hpp"

using namespace helmscat;

namespace {

const Complex kI(0.0, 1.0);
const Vec3 kSource(0.2, 0.1, -0.1);
constexpr int kLevel = 3;
const char* const kShapes[] = {"identity", "axes_scale:1,1.3,0.7", "radial_star:0,0,1,0.5,0.15"};

double g_max_residual = 0.0;  // over every combined-field solve so far
int g_solves = 0;

Solution solve(const std::string& shape, Complex k, const DatumSpec& datum, int level = kLevel) {
  Solution s = solve_problem({level, ShapeMap::parse(shape), k, datum});
  g_max_residual = std::max(g_max_residual, s.diagnostics.relative_residual);
  ++g_solves;
  return s;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::string fmt(Complex z) { return "(" + fmt(z.real()) + "," + fmt(z.imag()) + ")"; }

struct Report {
  int failures = 0;
  void line(int id, bool pass, const std::string& what, const std::string& detail) {
    std::cout << (pass ? "PASS" : "FAIL") << " [" << id << "] " << what << ": " << detail << std::endl;
    if (!pass) ++failures;
  }
  void run(int id, const std::string& what, const std::function<std::pair<bool, std::string>()>& body) {
    try {
      const auto [pass, detail] = body();
      line(id, pass, what, detail);
    } catch (const std::exception& e) {
      line(id, false, what, std::string("exception: ") + e.what());
    }
  }
};

double rel_max(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

Eigen::VectorXcd to_eigen(const std::vector<Complex>& v) { return Eigen::Map<const Eigen::VectorXcd>(v.data(), v.size()); }

// Smooth random density: random complex quadratic in the boundary coordinates.
Eigen::VectorXcd random_density(const DeformedSurface& s, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Complex c[10];
  for (auto& v : c) v = Complex(g(rng), g(rng));
  Eigen::VectorXcd mu(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vec3& y = s.points()[i];
    mu[i] = c[0] + c[1] * y.x() + c[2] * y.y() + c[3] * y.z() + c[4] * y.x() * y.y() + c[5] * y.y() * y.z() +
            c[6] * y.x() * y.z() + c[7] * y.x() * y.x() + c[8] * y.y() * y.y() + c[9] * y.z() * y.z();
  }
  return mu;
}

double point_source_error(const std::string& shape, Complex k, int level, const std::vector<Vec3>& dirs) {
  const Solution s = solve(shape, k, DatumSpec::point_source(kSource), level);
  return max_relative_error(far_field_direct(*s.surface, s.k, s.theta, dirs).values,
                            point_source_exact(kSource, s.k).far_field(dirs));
}

// Far field of the radial solution: c rho e^{-ik rho} for a sphere of radius rho.
Complex radial_closed_form(const Configuration& c) {
  const double rho = c.shape(Vec3::UnitZ()).norm();
  Complex amp = 0.0;
  for (const DatumTerm& t : c.datum.terms) amp += t.weight * t.c;
  return amp * rho * std::exp(-kI * c.k * rho);
}

std::string verify_digest(int threads, const std::filesystem::path& dir) {
  std::ostringstream out, err;
  const int code = cli::run({"verify", "--level", std::to_string(kLevel), "--threads", std::to_string(threads),
                             "--shape", "axes_scale:1,1.3,0.7", "--k", "1,0.5", "--out", dir.string()},
                            out, err);
  if (code != cli::kExitOk) throw std::runtime_error("verify exited with " + std::to_string(code) + ": " + err.str());
  std::ifstream f(dir / "verify.json");
  return nlohmann::json::parse(f)["digest"].get<std::string>();
}

}  // namespace

int main() {
  Report rep;
  const auto dirs = fibonacci_directions(50);
  const Complex waves[] = {0.0, 1.0, {1.0, 0.5}, 2.0};

  rep.run(1, "point-source far field, 3 shapes x 4 wave numbers, level 3", [&] {
    double worst = 0.0, slowest = 0.0;
    std::string detail;
    for (const char* shape : kShapes)
      for (Complex k : waves) {
        const auto t0 = std::chrono::steady_clock::now();
        const double e = point_source_error(shape, k, kLevel, dirs);
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        worst = std::max(worst, e);
        slowest = std::max(slowest, sec);
      }
    detail = "max rel error " + fmt(worst) + " (tol 1e-2), slowest case " + fmt(slowest) + " s (limit 120 s)";
    return std::pair{worst <= 1e-2 && slowest <= 120.0, detail};
  });

  rep.run(2, "convergence 2->3: sphere ratio >= 1.7, ellipsoid ratio >= 1.5 (k = 0 and k = 1)", [&] {
    bool pass = true;
    std::string detail;
    for (Complex k : {Complex(0.0), Complex(1.0)}) {
      const double rs = point_source_error("identity", k, 2, dirs) / point_source_error("identity", k, 3, dirs);
      const double re = point_source_error(kShapes[1], k, 2, dirs) / point_source_error(kShapes[1], k, 3, dirs);
      pass = pass && rs >= 1.7 && re >= 1.5;
      detail += "k=" + fmt(k.real()) + ": sphere " + fmt(rs) + ", ellipsoid " + fmt(re) + "; ";
    }
    return std::pair{pass, detail};
  });

  rep.run(3, "Gauss identity |W 1 - 1/2| <= 5e-3 at k = 0", [&] {
    double worst = 0.0;
    for (const char* shape : kShapes) {
      const auto s = make_surface(ShapeMap::parse(shape), kLevel);
      const DenseOperator W = assemble_W(*s, WaveNumber(0.0, 0.0));
      const Eigen::VectorXcd w1 = W.matrix * Eigen::VectorXcd::Ones(s->size());
      worst = std::max(worst, (w1.array() - 0.5).abs().maxCoeff());
    }
    return std::pair{worst <= 5e-3, "max deviation " + fmt(worst)};
  });

  rep.run(4, "closed-form density theta = -1 on the sphere at k = 0; residual <= 1e-10 on every solve", [&] {
    const Solution s = solve("identity", 0.0, DatumSpec::constant(1.0));
    for (const char* shape : kShapes)
      for (Complex k : waves) solve(shape, k, DatumSpec::constant(1.0));
    const double dev = (s.theta.values.array() + 1.0).abs().maxCoeff();
    return std::pair{dev <= 1e-2 && g_max_residual <= 1e-10,
                     "max |theta + 1| = " + fmt(dev) + ", max residual " + fmt(g_max_residual) + " over " +
                         std::to_string(g_solves) + " solves"};
  });

  rep.run(5, "radial sphere k = 1: field, DtN direct and density-formula routes", [&] {
    const Solution s = solve("identity", 1.0, DatumSpec::constant(1.0));
    const Vec3 x(2.0, 0.0, 0.0);
    const Complex u = eval_solution(*s.surface, s.k, s.theta, make_evaluation_set(*s.surface, {x}))[0];
    const double eu = std::abs(u - std::exp(kI) / 2.0);
    const Complex flux = kI - 1.0;
    const auto dev = [&](const BoundaryField& f) { return (f.values.array() - flux).abs().maxCoeff() / std::abs(flux); };
    const double ed = dev(neumann_trace(*s.surface, s.k, s.theta, s.g, TraceMethod::direct, &s.ops));
    const double ep = dev(neumann_trace(*s.surface, s.k, s.theta, s.g, TraceMethod::paper_formula, &s.ops));
    return std::pair{eu <= 1e-2 && ed <= 5e-2 && ep <= 1e-1,
                     "|u - e^i/2| = " + fmt(eu) + " (1e-2), DtN direct " + fmt(ed) + " (5e-2), density formula " +
                         fmt(ep) + " (1e-1)"};
  });

  rep.run(6, "far-field routes agree and sphere formula is R-independent", [&] {
    const Solution s = solve("identity", 1.0, DatumSpec::point_source(kSource));
    const auto direct = far_field_direct(*s.surface, s.k, s.theta, dirs);
    const auto r2 = far_field_sphere_formula(*s.surface, s.k, s.theta, 2.0, dirs);
    const auto r3 = far_field_sphere_formula(*s.surface, s.k, s.theta, 3.0, dirs);
    const double a = max_relative_error(r2.values, direct.values), b = max_relative_error(r3.values, r2.values);
    return std::pair{a <= 1e-3 && b <= 1e-3, "direct vs sphere " + fmt(a) + ", R=2 vs R=3 " + fmt(b)};
  });

  rep.run(7, "Mie series, sound-soft unit sphere, k = 2, L = 20", [&] {
    const Solution s = solve("identity", 2.0, DatumSpec::plane_wave(Vec3::UnitZ()));
    const double e = max_relative_error(far_field_direct(*s.surface, s.k, s.theta, dirs).values,
                                        mie_far_field(2.0, Vec3::UnitZ(), 20, dirs).values);
    return std::pair{e <= 2e-2, "max rel error " + fmt(e) + " (tol 2e-2)"};
  });

  rep.run(8, "jump relations for 5 random densities", [&] {
    const auto s = make_surface(ShapeMap::parse(kShapes[1]), kLevel);
    const WaveNumber k(1.0, 0.0);
    const LayerOperators ops = assemble_layer_operators(*s, k);
    const Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(s->size());
    std::mt19937_64 rng(2024);
    double dl = 0.0, sl = 0.0;
    std::size_t flagged = 0;
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::VectorXcd mu = random_density(*s, rng);
      const OffsetTrace w = offset_trace(LayerPotential(*s, k, mu, zero), TraceSide::exterior, TraceQuantity::value);
      dl = std::max(dl, rel_max(w.trace.values, ops.W.matrix * mu - 0.5 * mu));
      const LayerPotential v(*s, k, zero, mu);
      const Eigen::VectorXcd Vmu = ops.V.matrix * mu;
      const OffsetTrace ve = offset_trace(v, TraceSide::exterior, TraceQuantity::value);
      const OffsetTrace vi = offset_trace(v, TraceSide::interior, TraceQuantity::value);
      sl = std::max({sl, rel_max(ve.trace.values, vi.trace.values), rel_max(ve.trace.values, Vmu)});
      flagged += w.flagged_count() + ve.flagged_count() + vi.flagged_count();
    }
    return std::pair{dl <= 5e-2 && sl <= 5e-2, "double layer " + fmt(dl) + ", single-layer continuity " + fmt(sl) +
                                                   ", flagged extrapolations " + std::to_string(flagged)};
  });

  rep.run(9, "radiation condition", [&] {
    const Solution s = solve("identity", 1.0, DatumSpec::point_source(kSource));
    const Vec3 d = Vec3(1.0, -0.5, 0.3).normalized();
    const auto r = radiation_check(*s.surface, s.k, s.theta, d, {20.0, 40.0});
    const double ratio = r[1] / r[0];
    const Solution s0 = solve("identity", 0.0, DatumSpec::point_source(kSource));
    const double uinf = std::abs(far_field_direct(*s0.surface, s0.k, s0.theta, {d}).values[0]);
    const auto u0 = eval_solution(*s0.surface, s0.k, s0.theta,
                                  make_evaluation_set(*s0.surface, {20.0 * d, 40.0 * d, 80.0 * d}));
    double spread = 0.0;
    const double radii[] = {20.0, 40.0, 80.0};
    for (int i = 0; i < 3; ++i) spread = std::max(spread, std::abs(radii[i] * std::abs(u0[i]) / uinf - 1.0));
    return std::pair{ratio <= 0.55 && spread <= 5e-2, "residual ratio 40/20 = " + fmt(ratio) +
                                                          " (<= 0.55); k=0: |x||u| within " + fmt(spread) +
                                                          " of |u_inf| for |x| = 20..80"};
  });

  rep.run(10, "radius-family derivative at t = 0 equals e^{-i}(1 - i)", [&] {
    FamilySpec fam;
    fam.base = {ShapeMap::identity(), 1.0, DatumSpec::constant(1.0)};
    fam.shape_direction = ShapeMap::identity();
    fam.t_min = -0.04;
    fam.t_max = 0.04;
    fam.samples = 5;
    const auto samples = family_evaluate(fam, bem_evaluator(ObservableSpec::farfield_at(Vec3::UnitZ()), kLevel), 1);
    std::vector<double> t;
    std::vector<Complex> f;
    for (const auto& x : samples) {
      t.push_back(x.t);
      f.push_back(x.value);
    }
    const DerivativeEstimate d = central_difference(t, f, 4);
    const Complex exact = std::exp(-kI) * (1.0 - kI);
    const double e = std::abs(d.derivative[0] - exact);
    return std::pair{e <= 1e-2, "D4 = " + fmt(d.derivative[0]) + ", exact " + fmt(exact) + ", error " + fmt(e) +
                                    ", stencil gap " + fmt(d.richardson_gap[0])};
  });

  rep.run(11, "analyticity probe: Chebyshev decay, |t| control, mixed differences", [&] {
    const Configuration base{ShapeMap::identity(), 1.0, DatumSpec::constant(1.0)};
    const ObservableSpec obs = ObservableSpec::farfield_at(Vec3::UnitZ());
    FamilySpec fam;
    fam.base = base;
    fam.shape_direction = ShapeMap::identity();
    fam.samples = 32;
    fam.grid = SampleGrid::chebyshev;
    const auto samples = family_evaluate(fam, bem_evaluator(obs, kLevel), 1);
    std::vector<Complex> f, control;
    for (const auto& s : samples) {
      f.push_back(s.value);
      control.push_back(std::abs(s.t));
    }
    const double noise = estimate_noise_floor(base, obs, kLevel);
    const ChebyshevFit fit = chebyshev_analyticity(f, 1e-12, noise);
    const ChebyshevFit ctl = chebyshev_analyticity(control);

    JointGrid g;
    g.base = base;
    g.shape_direction = ShapeMap::identity();
    g.shape = {-0.2, 0.2, 9};
    g.k_re = {-0.2, 0.2, 9};
    const JointTable table = joint_sweep(g, radial_closed_form, true);
    const JointReport jr = joint_report(g, table);
    // Centre cell against the exact mixed derivative -i(2 rho - i k rho^2) e^{-ik rho} at rho = 1, k = 1.
    const double h = 0.05;
    const Complex mixed =
        (table.at(4, 4, 0).value - table.at(3, 4, 0).value - table.at(4, 3, 0).value + table.at(3, 3, 0).value) / (h * h);
    const double rho = 0.975, kk = 0.975;
    const Complex exact_mixed = -kI * (2.0 * rho - kI * kk * rho * rho) * std::exp(-kI * kk * rho);
    const double mixed_err = std::abs(mixed - exact_mixed) / std::abs(exact_mixed);

    const bool pass = fit.geometric && fit.rho_hat >= 1.3 && !ctl.geometric && jr.max_mixed_commutator <= 1e-8;
    return std::pair{pass, "rho_hat " + fmt(fit.rho_hat) + " over m in [" +
                               (fit.fit_indices.empty() ? std::string("-") : std::to_string(fit.fit_indices.front())) +
                               "," + (fit.fit_indices.empty() ? std::string("-") : std::to_string(fit.fit_indices.back())) +
                               "], noise floor " + fmt(fit.noise_floor) + "; |t| control geometric=" +
                               (ctl.geometric ? "yes" : "no") + " (rho_hat " + fmt(ctl.rho_hat) + "); mixed commutator " +
                               fmt(jr.max_mixed_commutator) + ", centre-cell mixed difference vs exact " + fmt(mixed_err)};
  });

  rep.run(12, "verify digests identical across thread counts", [&] {
    const auto tmp = std::filesystem::temp_directory_path() / "helmscat_acceptance";
    std::filesystem::remove_all(tmp);
    const std::string a = verify_digest(1, tmp / "t1");
    const std::string b = verify_digest(4, tmp / "t4");
    const std::string c = verify_digest(4, tmp / "t4b");
    std::filesystem::remove_all(tmp);
    return std::pair{a == b && b == c, "threads 1: " + a.substr(0, 16) + ", threads 4: " + b.substr(0, 16) +
                                           ", repeat: " + c.substr(0, 16)};
  });

  std::cout << (rep.failures == 0 ? "all criteria passed" : std::to_string(rep.failures) + " check(s) failed") << std::endl;
  return rep.failures == 0 ? 0 : 1;
}
