#include "helmscat/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"

#include "helmscat/fields.hpp"
#include "helmscat/io.hpp"
#include "helmscat/kernels_batch.hpp"
#include "helmscat/oracle.hpp"
#include "helmscat/parallel.hpp"
#include "helmscat/pipeline.hpp"
#include "helmscat/sensitivity.hpp"

namespace helmscat::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Raised by `verify` when an oracle comparison exceeds its tolerance.
struct OracleFailure {
  json report;
};

Vec3 vec3_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + " must be an array [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json complex_json(Complex c) { return json::array({c.real(), c.imag()}); }

Complex complex_from(const json& j, const char* what) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  throw ConfigError(std::string(what) + " must be a number or [re, im]");
}

std::vector<Complex> to_vector(const Eigen::VectorXcd& v) { return {v.data(), v.data() + v.size()}; }

WaveNumber checked_k(Complex k) {
  try {
    return WaveNumber(k);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

struct Context {
  RunConfig cfg;
  fs::path out;
  std::ostream& log;

  AssemblyOptions assembly() const {
    AssemblyOptions a;
    a.threads = cfg.threads;
    return a;
  }
  EvalOptions eval() const {
    EvalOptions e;
    e.threads = cfg.threads;
    return e;
  }
  Problem problem() const {
    return {cfg.mesh_level, ShapeMap::parse(cfg.shape), checked_k(cfg.k).value(), DatumSpec::parse(cfg.datum)};
  }

  // Writes text to out/name and returns its SHA-256.
  std::string write_text(const std::string& name, const std::string& text) const {
    fs::create_directories(out);
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + (out / name).string());
    f << text;
    return sha256_hex(text);
  }

  std::string write_json(const std::string& name, json result) const {
    const json doc = seal(cfg.to_json(), std::move(result));
    write_text(name, doc.dump(2) + "\n");
    log << "wrote " << (out / name).string() << " digest " << doc["digest"].get<std::string>() << "\n";
    return doc["digest"].get<std::string>();
  }

  std::string write_csv(const std::string& name, const std::string& header, const std::vector<Vec3>& pts,
                        const std::vector<Complex>& values) const {
    std::ostringstream os;
    write_point_value_csv(os, header, pts, values);
    const std::string digest = write_text(name, os.str());
    log << "wrote " << (out / name).string() << "\n";
    return digest;
  }
};

json diagnostics_json(const SolveDiagnostics& d) {
  return {{"relative_residual", d.relative_residual}, {"condition_estimate", d.condition_estimate}};
}

json solution_summary(const Solution& s) {
  return {{"panels", s.surface->size()},
          {"shape_hash", s.surface->shape_hash()},
          {"surface_area", [&] {
             double a = 0.0;
             for (double w : s.surface->weights()) a += w;
             return a;
           }()},
          {"solve", diagnostics_json(s.diagnostics)}};
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_solve(const Context& ctx) {
  const Solution sol = solve_problem(ctx.problem(), ctx.assembly());
  json result = solution_summary(sol);
  result["theta_csv_sha256"] =
      ctx.write_csv("theta.csv", "x,y,z,re,im", sol.surface->points(), to_vector(sol.theta.values));
  if (ctx.cfg.dump_operators) {
    std::ostringstream os;
    write_hsop(os, sol.lambda);
    result["lambda_hsop_sha256"] = ctx.write_text("lambda.hsop", os.str());
  }
  ctx.write_json("solve.json", result);
  return kExitOk;
}

int cmd_farfield(const Context& ctx) {
  const Solution sol = solve_problem(ctx.problem(), ctx.assembly());
  const auto dirs = ctx.cfg.resolved_directions();
  const DeformedSurface& s = *sol.surface;
  // Check the containment requirement before doing any work on the sphere route.
  const double rmin = min_sphere_radius(s);
  for (double R : {ctx.cfg.R, ctx.cfg.R2})
    if (!(R > rmin))
      throw DomainError("sphere radius R = " + format_double(R) +
                        " is too small: the sphere must be taken large enough to enclose the obstacle (R > " +
                        format_double(rmin) + ")");
  SphereFormulaOptions so;
  so.eval = ctx.eval();
  const FarFieldGrid direct = far_field_direct(s, sol.k, sol.theta, dirs, ctx.cfg.threads);
  const FarFieldGrid sphere = far_field_sphere_formula(s, sol.k, sol.theta, ctx.cfg.R, dirs, so);
  const FarFieldGrid sphere2 = far_field_sphere_formula(s, sol.k, sol.theta, ctx.cfg.R2, dirs, so);

  json records = json::array();
  for (std::size_t i = 0; i < dirs.size(); ++i)
    records.push_back({{"direction", vec3_json(dirs[i])},
                       {"direct", complex_json(direct.values[i])},
                       {"sphere_formula", complex_json(sphere.values[i])}});
  json result = solution_summary(sol);
  result["normalization"] = direct.normalization;
  result["routes"] = {"direct", "sphere_formula"};
  result["R"] = ctx.cfg.R;
  result["R2"] = ctx.cfg.R2;
  result["route_agreement"] = max_relative_error(sphere.values, direct.values);
  result["r_independence"] = max_relative_error(sphere2.values, sphere.values);
  result["tolerances"] = {{"route_agreement", 1e-3}, {"r_independence", 1e-3}};
  result["values"] = records;
  result["csv_sha256"] = ctx.write_csv("farfield.csv", "dir_x,dir_y,dir_z,re,im", dirs, direct.values);
  ctx.write_json("farfield.json", result);
  return kExitOk;
}

int cmd_dtn(const Context& ctx) {
  const Solution sol = solve_problem(ctx.problem(), ctx.assembly());
  const DeformedSurface& s = *sol.surface;
  NeumannOptions no;
  no.eval = ctx.eval();
  no.direct.assembly = ctx.assembly();
  const TraceMethod method = parse_trace_method(ctx.cfg.method);
  const BoundaryField psi = neumann_trace(s, sol.k, sol.theta, sol.g, method, &sol.ops, no);
  json result = solution_summary(sol);
  result["method"] = trace_method_name(method);
  result["csv_sha256"] = ctx.write_csv("dtn.csv", "x,y,z,re,im", s.points(), to_vector(psi.values));
  if (ctx.cfg.dtn_matrix) {
    DenseOperator d;
    d.matrix = dtn_matrix(s, sol.k, &sol.ops, no);
    d.kind = OperatorKind::custom;
    d.k = sol.k;
    d.surface_hash = s.shape_hash();
    std::ostringstream os;
    write_hsop(os, d);
    result["dtn_matrix_hsop_sha256"] = ctx.write_text("dtn_matrix.hsop", os.str());
  }
  ctx.write_json("dtn.json", result);
  return kExitOk;
}

int cmd_field(const Context& ctx) {
  const Solution sol = solve_problem(ctx.problem(), ctx.assembly());
  const DeformedSurface& s = *sol.surface;
  const EvaluationSet set = make_evaluation_set(s, ctx.cfg.points);
  const auto u = eval_solution(s, sol.k, sol.theta, set, ctx.eval());
  const auto du = eval_gradient(s, sol.k, sol.theta, set, ctx.eval());
  json records = json::array();
  for (std::size_t i = 0; i < u.size(); ++i)
    records.push_back({{"x", vec3_json(set.points[i])},
                       {"u", complex_json(u[i])},
                       {"grad", json::array({complex_json(du[i].x()), complex_json(du[i].y()),
                                             complex_json(du[i].z())})}});
  json result = solution_summary(sol);
  result["clearance"] = set.clearance;
  result["values"] = records;
  result["csv_sha256"] = ctx.write_csv("field.csv", "x,y,z,re,im", set.points, u);
  ctx.write_json("field.json", result);
  return kExitOk;
}

int cmd_sweep(const Context& ctx) {
  const json& sw = ctx.cfg.sweep;
  const std::string family = sw.value("family", "shape");
  const ObservableSpec obs = ObservableSpec::parse(sw.value("observable", "farfield_at:0,0,1"));
  const Problem p = ctx.problem();
  const Configuration base{p.shape, p.k, p.datum};
  // Family points run one after another; each solve uses the thread budget.
  const Evaluator eval = bem_evaluator(obs, ctx.cfg.mesh_level, ctx.assembly());
  json result;
  result["observable"] = obs.describe();

  if (family == "joint") {
    const json axes = sw.value("axes", json::object());
    auto axis = [&](const char* name) {
      const json a = axes.value(name, json::array({0.0, 0.0, 1}));
      if (!a.is_array() || a.size() != 3) throw ConfigError(std::string("sweep axis ") + name + " must be [min, max, n]");
      return Axis{a[0].get<double>(), a[1].get<double>(), a[2].get<int>()};
    };
    JointGrid grid;
    grid.base = base;
    grid.shape_direction = ShapeMap::parse(sw.value("shape_direction", "identity"));
    grid.datum_direction = DatumSpec::parse(sw.value("datum_direction", "constant:1"));
    grid.shape = axis("shape");
    grid.k_re = axis("k_re");
    grid.datum = axis("datum");
    for (double kr : grid.k_re.values()) checked_k(base.k + kr);
    const JointTable table = joint_sweep(grid, eval, ctx.cfg.strict, 1);
    const JointReport rep = joint_report(grid, table);
    std::ostringstream csv;
    csv << "s,k_re,a,re,im\n";
    json rows = json::array();
    for (const JointRow& r : table.rows) {
      csv << format_double(r.s) << ',' << format_double(r.k_re) << ',' << format_double(r.a) << ','
          << format_double(r.value.real()) << ',' << format_double(r.value.imag()) << '\n';
      json row = {{"s", r.s}, {"k_re", r.k_re}, {"a", r.a}, {"ok", r.ok}};
      if (r.ok) row["value"] = complex_json(r.value);
      else row["error"] = r.error;
      rows.push_back(row);
    }
    result["family"] = "joint";
    result["rows"] = rows;
    result["failures"] = table.failures();
    result["mixed_commutator"] = rep.max_mixed_commutator;
    result["mixed_difference"] = rep.max_mixed_difference;
    result["datum_curvature"] = rep.max_datum_curvature;
    result["csv_sha256"] = ctx.write_text("sweep.csv", csv.str());
    ctx.write_json("sweep.json", result);
    return kExitOk;
  }

  FamilySpec fam;
  fam.base = base;
  if (family == "shape") {
    fam.kind = FamilySpec::Kind::shape;
    fam.shape_direction = ShapeMap::parse(sw.value("direction", "identity"));
  } else if (family == "wavenumber") {
    fam.kind = FamilySpec::Kind::wavenumber;
    fam.dk = sw.contains("direction") ? complex_from(sw["direction"], "sweep.direction") : Complex(1.0);
  } else if (family == "datum") {
    fam.kind = FamilySpec::Kind::datum;
    fam.datum_direction = DatumSpec::parse(sw.value("direction", "constant:1"));
  } else {
    throw ConfigError("unknown sweep family '" + family + "' (expected shape, wavenumber, datum or joint)");
  }
  const json range = sw.value("range", json::array({-0.2, 0.2}));
  if (!range.is_array() || range.size() != 2) throw ConfigError("sweep.range must be [t_min, t_max]");
  fam.t_min = range[0].get<double>();
  fam.t_max = range[1].get<double>();
  fam.samples = sw.value("samples", 5);
  const std::string grid = sw.value("grid", "uniform");
  if (grid != "uniform" && grid != "chebyshev") throw ConfigError("sweep.grid must be uniform or chebyshev");
  fam.grid = grid == "chebyshev" ? SampleGrid::chebyshev : SampleGrid::uniform;

  const auto samples = family_evaluate(fam, eval, 1);
  std::ostringstream csv;
  csv << "t,re,im\n";
  std::vector<double> ts;
  std::vector<Complex> fs;
  for (const auto& s : samples) {
    csv << format_double(s.t) << ',' << format_double(s.value.real()) << ',' << format_double(s.value.imag()) << '\n';
    ts.push_back(s.t);
    fs.push_back(s.value);
  }
  result["family"] = family;
  result["grid"] = grid;
  result["range"] = range;
  result["samples"] = fam.samples;

  double noise = 0.0;
  if (sw.value("estimate_noise", true)) noise = estimate_noise_floor(base, obs, ctx.cfg.mesh_level, ctx.cfg.threads);
  result["noise_floor"] = noise;

  if (fam.grid == SampleGrid::uniform) {
    const int order = sw.value("order", 4);
    if (static_cast<int>(fs.size()) >= (order == 2 ? 3 : 5)) {
      const DerivativeEstimate d = central_difference(ts, fs, order);
      json ds = json::array();
      for (std::size_t i = 0; i < d.t.size(); ++i)
        ds.push_back({{"t", d.t[i]}, {"derivative", complex_json(d.derivative[i])},
                      {"richardson_gap", std::isnan(d.richardson_gap[i]) ? json(nullptr) : json(d.richardson_gap[i])}});
      result["derivative"] = {{"order", order}, {"estimates", ds}};
    }
  } else if (fs.size() >= 16) {
    const double threshold = sw.value("rho_threshold", kDefaultRhoThreshold);
    const ChebyshevFit fit = chebyshev_analyticity(fs, 1e-12, noise, threshold);
    json coeffs = json::array();
    for (const Complex& c : fit.coefficients) coeffs.push_back(std::abs(c));
    result["chebyshev"] = {{"abs_coefficients", coeffs},
                           {"noise_floor", fit.noise_floor},
                           {"resolved", fit.resolved},
                           {"rho_hat", std::isnan(fit.rho_hat) ? json(nullptr) : json(fit.rho_hat)},
                           {"geometric_residual", fit.geometric_residual},
                           {"algebraic_residual", fit.algebraic_residual},
                           {"flat", fit.flat},
                           {"geometric", fit.geometric},
                           {"rho_threshold", threshold}};
  }
  result["csv_sha256"] = ctx.write_text("sweep.csv", csv.str());
  ctx.write_json("sweep.json", result);
  return kExitOk;
}

// Far field, DtN and random exterior field values against the point-source solution.
json verify_point_source(const Context& ctx, const json& v) {
  const Vec3 z = v.contains("z") ? vec3_from(v["z"], "verify.z") : Vec3(0.2, 0.1, -0.1);
  const double tol_ff = v.value("tolerance", 1e-2);
  const double tol_dtn = v.value("dtn_tolerance", 5e-2);
  Problem p = ctx.problem();
  p.datum = DatumSpec::point_source(z);
  const Solution sol = solve_problem(p, ctx.assembly());
  const DeformedSurface& s = *sol.surface;
  const PointSourceExact exact = point_source_exact(z, sol.k);
  const auto dirs = ctx.cfg.resolved_directions();
  const double e_ff =
      max_relative_error(far_field_direct(s, sol.k, sol.theta, dirs, ctx.cfg.threads).values, exact.far_field(dirs));
  NeumannOptions no;
  no.direct.assembly = ctx.assembly();
  const double e_dtn = max_relative_error(to_vector(dtn_apply(s, sol.k, sol.g, &sol.ops, no).values), exact.flux(s));

  std::mt19937_64 rng(ctx.cfg.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double r0 = min_sphere_radius(s);
  std::vector<Vec3> pts;
  for (int i = 0; i < v.value("random_points", 4); ++i) {
    Vec3 d(normal(rng), normal(rng), normal(rng));
    pts.push_back((r0 + unif(rng)) * d.normalized());
  }
  const auto u = eval_solution(s, sol.k, sol.theta, make_evaluation_set(s, pts), ctx.eval());
  std::vector<Complex> ue;
  for (const Vec3& x : pts) ue.push_back(exact.field(x));
  const double e_u = max_relative_error(u, ue);

  json c = {{"name", "point_source"},
            {"shape", p.shape.describe()},
            {"k", complex_json(sol.k.value())},
            {"z", vec3_json(z)},
            {"solve", diagnostics_json(sol.diagnostics)},
            {"farfield_error", e_ff},
            {"farfield_tolerance", tol_ff},
            {"dtn_error", e_dtn},
            {"dtn_tolerance", tol_dtn},
            {"field_error", e_u},
            {"field_tolerance", tol_ff}};
  c["passed"] = e_ff <= tol_ff && e_dtn <= tol_dtn && e_u <= tol_ff;
  return c;
}

// Unit sphere with datum 1.
json verify_radial(const Context& ctx, const json& v) {
  Problem p = ctx.problem();
  p.shape = ShapeMap::identity();
  p.datum = DatumSpec::constant(1.0);
  const Solution sol = solve_problem(p, ctx.assembly());
  const DeformedSurface& s = *sol.surface;
  const RadialSphereExact exact = radial_sphere_exact(1.0, sol.k);
  const Vec3 x(2.0, 0.0, 0.0);
  const Complex u = eval_solution(s, sol.k, sol.theta, make_evaluation_set(s, {x}), ctx.eval())[0];
  const double e_u = std::abs(u - exact.field(x));
  NeumannOptions no;
  no.direct.assembly = ctx.assembly();
  const auto psi = to_vector(dtn_apply(s, sol.k, sol.g, &sol.ops, no).values);
  const double e_dtn = max_relative_error(psi, std::vector<Complex>(psi.size(), exact.flux()));
  const auto dirs = ctx.cfg.resolved_directions();
  const double e_ff = max_relative_error(far_field_direct(s, sol.k, sol.theta, dirs, ctx.cfg.threads).values,
                                         std::vector<Complex>(dirs.size(), exact.far_field()));
  const double tol = v.value("tolerance", 1e-2), tol_dtn = v.value("dtn_tolerance", 5e-2);
  json c = {{"name", "radial"},
            {"k", complex_json(sol.k.value())},
            {"field_error", e_u},
            {"dtn_error", e_dtn},
            {"farfield_error", e_ff},
            {"tolerance", tol},
            {"dtn_tolerance", tol_dtn}};
  c["passed"] = e_u <= tol && e_dtn <= tol_dtn && e_ff <= tol;
  return c;
}

// Sound-soft unit sphere against the Mie series (real k > 0 only).
json verify_mie(const Context& ctx, const json& v) {
  const Complex k = ctx.cfg.k;
  if (k.imag() != 0.0 || !(k.real() > 0.0)) return {{"name", "mie"}, {"skipped", "needs real k > 0"}, {"passed", true}};
  Problem p = ctx.problem();
  p.shape = ShapeMap::identity();
  const Vec3 d = v.contains("d") ? vec3_from(v["d"], "verify.d").normalized() : Vec3(0, 0, 1);
  p.datum = DatumSpec::plane_wave(d);
  const Solution sol = solve_problem(p, ctx.assembly());
  const auto dirs = ctx.cfg.resolved_directions();
  const int L = v.value("L", std::max(20, static_cast<int>(std::ceil(k.real())) + 10));
  const double e = max_relative_error(far_field_direct(*sol.surface, sol.k, sol.theta, dirs, ctx.cfg.threads).values,
                                      mie_far_field(k.real(), d, L, dirs).values);
  const double tol = v.value("mie_tolerance", 2e-2);
  return {{"name", "mie"}, {"k", k.real()}, {"L", L}, {"farfield_error", e}, {"tolerance", tol}, {"passed", e <= tol}};
}

int cmd_verify(const Context& ctx) {
  const json& v = ctx.cfg.verify;
  const json presets = v.value("presets", json::array({"point_source"}));
  json cases = json::array();
  bool passed = true;
  for (const auto& name : presets) {
    const std::string n = name.get<std::string>();
    json c;
    if (n == "point_source") c = verify_point_source(ctx, v);
    else if (n == "radial") c = verify_radial(ctx, v);
    else if (n == "mie") c = verify_mie(ctx, v);
    else throw ConfigError("unknown verify preset '" + n + "' (expected point_source, radial or mie)");
    passed = passed && c["passed"].get<bool>();
    cases.push_back(c);
  }
  json result = {{"cases", cases}, {"passed", passed}};
  const std::string digest = ctx.write_json("verify.json", result);
  ctx.log << (passed ? "verify passed" : "verify FAILED") << " digest " << digest << "\n";
  return passed ? kExitOk : kExitOracle;
}

int cmd_convergence(const Context& ctx) {
  const json& c = ctx.cfg.convergence;
  const json levels = c.value("levels", json::array({1, 2, 3}));
  const Problem base = ctx.problem();
  const auto dirs = ctx.cfg.resolved_directions();
  const bool point = base.datum.terms.size() == 1 && base.datum.terms[0].kind == DatumTerm::Kind::point_source &&
                     base.datum.terms[0].weight == Complex(1.0);
  const bool radial = base.datum.terms.size() == 1 && base.datum.terms[0].kind == DatumTerm::Kind::constant &&
                      base.shape.describe() == "identity";
  if (!point && !radial)
    throw ConfigError("convergence needs a closed-form reference: a point_source datum, or a constant datum on the identity shape");

  std::ostringstream csv;
  csv << "level,panels,error\n";
  json rows = json::array();
  double prev = 0.0;
  for (const auto& lv : levels) {
    Problem p = base;
    p.level = lv.get<int>();
    const Solution sol = solve_problem(p, ctx.assembly());
    std::vector<Complex> ref;
    if (point) {
      ref = point_source_exact(base.datum.terms[0].z, sol.k).far_field(dirs);
    } else {
      const DatumTerm& t = base.datum.terms[0];
      ref.assign(dirs.size(), t.weight * t.c * radial_sphere_exact(1.0, sol.k).far_field());
    }
    const double e = max_relative_error(far_field_direct(*sol.surface, sol.k, sol.theta, dirs, ctx.cfg.threads).values, ref);
    json row = {{"level", p.level}, {"panels", sol.surface->size()}, {"farfield_error", e}};
    if (prev > 0.0) {
      row["reduction"] = prev / e;
      row["observed_order"] = std::log2(prev / e);
    }
    prev = e;
    rows.push_back(row);
    csv << p.level << ',' << sol.surface->size() << ',' << format_double(e) << '\n';
  }
  json result = {{"reference", point ? "point_source" : "radial"}, {"levels", rows}};
  result["csv_sha256"] = ctx.write_text("convergence.csv", csv.str());
  ctx.write_json("convergence.json", result);
  return kExitOk;
}

int cmd_export_mesh(const Context& ctx) {
  const ShapeMap shape = ShapeMap::parse(ctx.cfg.shape);
  const auto mesh = shared_reference_mesh(ctx.cfg.mesh_level);
  const ShapeDiagnostics diag = validate_shape(shape, *mesh);
  std::ostringstream body;
  write_obj(body, *mesh, shape);
  std::ostringstream os;
  os << "# helmscat mesh shape=" << shape.describe() << " level=" << ctx.cfg.mesh_level << "\n";
  os << "# config " << ctx.cfg.to_json().dump() << "\n";
  os << body.str();
  os << "# sha256 " << sha256_hex(body.str()) << "\n";
  const std::string digest = ctx.write_text("mesh.obj", os.str());
  json result = {{"panels", mesh->panel_count()},
                 {"nodes", mesh->nodes.size()},
                 {"diagnostics",
                  {{"min_jacobian", diag.min_jacobian},
                   {"max_jacobian", diag.max_jacobian},
                   {"min_separation_ratio", diag.min_separation_ratio},
                   {"signed_volume", diag.signed_volume},
                   {"passed", diag.passed}}},
                 {"obj_sha256", digest}};
  ctx.write_json("mesh.json", result);
  return diag.passed ? kExitOk : kExitConfig;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

Complex parse_wave_number(const std::string& text) {
  const auto v = parse_doubles(text);
  if (v.size() == 1) return {v[0], 0.0};
  if (v.size() == 2) return {v[0], v[1]};
  throw ConfigError("--k expects RE,IM, got '" + text + "'");
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  static const std::vector<std::string> known = {
      "mesh_level", "shape", "k", "datum", "points", "directions", "R", "R2", "method", "dtn_matrix",
      "dump_operators", "sweep", "convergence", "verify", "seed", "strict", "output", "threads"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("unknown configuration key '" + key + "'");
  RunConfig c;
  try {
    c.mesh_level = j.value("mesh_level", c.mesh_level);
    if (j.contains("shape")) c.shape = j["shape"].get<std::string>();
    if (j.contains("k")) c.k = complex_from(j["k"], "k");
    if (j.contains("datum")) c.datum = j["datum"].get<std::string>();
    if (j.contains("points")) {
      c.points.clear();
      for (const auto& p : j["points"]) c.points.push_back(vec3_from(p, "points[i]"));
    }
    if (j.contains("directions")) {
      const json& d = j["directions"];
      if (d.is_number_integer()) {
        c.direction_count = d.get<int>();
      } else {
        for (const auto& p : d) c.directions.push_back(vec3_from(p, "directions[i]").normalized());
      }
    }
    c.R = j.value("R", c.R);
    c.R2 = j.value("R2", c.R2);
    c.method = j.value("method", c.method);
    c.dtn_matrix = j.value("dtn_matrix", c.dtn_matrix);
    c.dump_operators = j.value("dump_operators", c.dump_operators);
    if (j.contains("sweep")) c.sweep = j["sweep"];
    if (j.contains("convergence")) c.convergence = j["convergence"];
    if (j.contains("verify")) c.verify = j["verify"];
    c.seed = j.value("seed", c.seed);
    c.strict = j.value("strict", c.strict);
    c.output = j.value("output", c.output);
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  if (c.mesh_level < 0 || c.mesh_level > kMaxMeshLevel)
    throw ConfigError("mesh_level must lie in [0, " + std::to_string(kMaxMeshLevel) + "]");
  if (c.direction_count < 1) throw ConfigError("directions must be positive");
  if (c.threads < 0) throw ConfigError("threads must be nonnegative");
  checked_k(c.k);
  ShapeMap::parse(c.shape);
  DatumSpec::parse(c.datum);
  parse_trace_method(c.method);
  return c;
}

json RunConfig::to_json() const {
  json j = {{"mesh_level", mesh_level},
            {"shape", shape},
            {"k", complex_json(k)},
            {"datum", datum},
            {"R", R},
            {"R2", R2},
            {"method", method},
            {"dtn_matrix", dtn_matrix},
            {"dump_operators", dump_operators},
            {"sweep", sweep},
            {"convergence", convergence},
            {"verify", verify},
            {"seed", seed},
            {"strict", strict}};
  json pts = json::array();
  for (const Vec3& p : points) pts.push_back(vec3_json(p));
  j["points"] = pts;
  if (directions.empty()) {
    j["directions"] = direction_count;
  } else {
    json d = json::array();
    for (const Vec3& p : directions) d.push_back(vec3_json(p));
    j["directions"] = d;
  }
  return j;
}

std::vector<Vec3> RunConfig::resolved_directions() const {
  return directions.empty() ? fibonacci_directions(static_cast<std::size_t>(direction_count)) : directions;
}

RunConfig resolve_config(const Overrides& o) {
  json j = json::object();
  if (!o.config_path.empty()) {
    std::ifstream f(o.config_path);
    if (!f) throw ConfigError("cannot open config file " + o.config_path);
    try {
      j = json::parse(f);
    } catch (const json::exception& e) {
      throw ConfigError("cannot parse " + o.config_path + ": " + e.what());
    }
  }
  if (o.level >= 0) j["mesh_level"] = o.level;
  if (!o.k.empty()) j["k"] = complex_json(parse_wave_number(o.k));
  if (!o.shape.empty()) j["shape"] = o.shape;
  if (!o.datum.empty()) j["datum"] = o.datum;
  if (!o.out.empty()) j["output"] = o.out;
  if (o.threads >= 0) j["threads"] = o.threads;
  if (o.strict) j["strict"] = true;
  return RunConfig::from_json(j);
}

json seal(json config, json result) {
  json doc = {{"config", std::move(config)}, {"result", std::move(result)}};
  doc["digest"] = sha256_hex(doc.dump());
  return doc;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  static const std::vector<std::string> commands = {"solve", "farfield", "dtn", "field", "sweep",
                                                    "verify", "convergence", "export-mesh"};
  CLI::App app{"Exterior Dirichlet Helmholtz solver on deformed spheres"};
  app.set_version_flag("--version", "helmscat 1.0");
  std::string command;
  Overrides o;
  app.add_option("command", command, "solve | farfield | dtn | field | sweep | verify | convergence | export-mesh")
      ->required()
      ->check(CLI::IsMember(commands));
  app.add_option("--config", o.config_path, "JSON configuration file");
  app.add_option("--level", o.level, "mesh subdivision level");
  app.add_option("--k", o.k, "wave number RE,IM");
  app.add_option("--shape", o.shape, "shape NAME[:params]");
  app.add_option("--datum", o.datum, "Dirichlet datum NAME[:params]");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--threads", o.threads, "worker threads (default: HELM_SCATTER_THREADS or all cores)");
  app.add_flag("--strict", o.strict, "abort sweeps at the first failing point");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    Context ctx{resolve_config(o), {}, out};
    ctx.out = ctx.cfg.output;
    if (ctx.cfg.threads == 0) ctx.cfg.threads = default_thread_count();
    if (command == "solve") return cmd_solve(ctx);
    if (command == "farfield") return cmd_farfield(ctx);
    if (command == "dtn") return cmd_dtn(ctx);
    if (command == "field") return cmd_field(ctx);
    if (command == "sweep") return cmd_sweep(ctx);
    if (command == "verify") return cmd_verify(ctx);
    if (command == "convergence") return cmd_convergence(ctx);
    return cmd_export_mesh(ctx);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const InvariantError& e) {
    err << "invariant violation: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const fs::filesystem_error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInvariant;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace helmscat::cli
