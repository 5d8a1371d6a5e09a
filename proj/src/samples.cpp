#include "helmscat/samples.hpp"

#include <algorithm>
#include <cmath>

namespace helmscat {

void check_binding(const BoundaryField& field, const std::string& hash, std::size_t n, const char* what) {
  if (field.size() != n)
    throw InvariantError(std::string(what) + ": field has " + std::to_string(field.size()) + " samples, surface has " +
                         std::to_string(n) + " panels");
  if (!field.surface_hash.empty() && !hash.empty() && field.surface_hash != hash)
    throw InvariantError(std::string(what) + ": field is bound to surface " + field.surface_hash + ", not " + hash);
}

double max_relative_error(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  if (a.size() != b.size()) throw InvariantError("max_relative_error: length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return den > 0.0 ? num / den : num;
}

}  // namespace helmscat
