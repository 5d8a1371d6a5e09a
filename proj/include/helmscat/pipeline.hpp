#pragma once

#include <memory>

#include "helmscat/fields.hpp"
#include "helmscat/geometry.hpp"
#include "helmscat/operators.hpp"
#include "helmscat/oracle.hpp"

namespace helmscat {

/// One exterior Dirichlet problem: shape, wave number and datum on a mesh level.
struct Problem {
  int level = 3;
  ShapeMap shape;
  Complex k{0.0, 0.0};
  DatumSpec datum = DatumSpec::constant(1.0);
};

struct Solution {
  std::shared_ptr<const DeformedSurface> surface;
  WaveNumber k;
  LayerOperators ops;
  DenseOperator lambda;
  BoundaryField g;
  BoundaryField theta;
  SolveDiagnostics diagnostics;
};

/// Builds the surface (after validate_shape), assembles the operators, realizes
/// the datum and solves the combined-field equation.
Solution solve_problem(const Problem& problem, const AssemblyOptions& opts = {});

/// Surface for a shape on a cached reference mesh; DomainError if validation fails.
std::shared_ptr<const DeformedSurface> make_surface(const ShapeMap& shape, int level);

}  // namespace helmscat
