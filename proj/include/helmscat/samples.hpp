#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "helmscat/common.hpp"

namespace helmscat {

/// Complex samples at the collocation points of one DeformedSurface.
struct BoundaryField {
  Eigen::VectorXcd values;
  std::string surface_hash;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

/// Throws InvariantError unless `field` belongs to the surface with hash `hash` and size n.
void check_binding(const BoundaryField& field, const std::string& hash, std::size_t n, const char* what);

/// Far-field samples. Normalization: u(x) ~ e^{ik|x|}/|x| (u_inf(x/|x|) + O(1/|x|)).
struct FarFieldGrid {
  std::vector<Vec3> directions;
  std::vector<Complex> values;
  std::string normalization = "paper";
};

/// max_i |a_i - b_i| / max_i |b_i|.
double max_relative_error(const std::vector<Complex>& a, const std::vector<Complex>& b);

}  // namespace helmscat
