#include "helmscat/pipeline.hpp"

#include "helmscat/io.hpp"

namespace helmscat {

std::shared_ptr<const DeformedSurface> make_surface(const ShapeMap& shape, int level) {
  const auto mesh = shared_reference_mesh(level);
  const ShapeDiagnostics diag = validate_shape(shape, *mesh);
  if (!diag.passed) {
    std::string why;
    if (!diag.immersive) why += " non-immersive (min Jacobian " + format_double(diag.min_jacobian) + ")";
    if (!diag.injective) why += " not injective (separation ratio " + format_double(diag.min_separation_ratio) + ")";
    if (!diag.oriented) why += " not outward oriented";
    throw DomainError("shape '" + shape.describe() + "' rejected:" + why);
  }
  return std::make_shared<const DeformedSurface>(mesh, shape);
}

Solution solve_problem(const Problem& problem, const AssemblyOptions& opts) {
  Solution s;
  s.k = WaveNumber(problem.k);
  s.surface = make_surface(problem.shape, problem.level);
  s.ops = assemble_layer_operators(*s.surface, s.k, opts);
  s.lambda = combine_lambda(s.ops.V, s.ops.W);
  s.g = realize_datum(problem.datum, *s.surface, s.k);
  DensitySolution d = solve_density(s.lambda, s.g);
  s.theta = std::move(d.theta);
  s.diagnostics = d.diagnostics;
  return s;
}

}  // namespace helmscat
