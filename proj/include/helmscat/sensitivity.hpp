#pragma once

#include <functional>
#include <string>
#include <vector>

#include "helmscat/geometry.hpp"
#include "helmscat/operators.hpp"
#include "helmscat/oracle.hpp"

namespace helmscat {

/// A point (phi, k, g) of the solution map.
struct Configuration {
  ShapeMap shape;
  Complex k{0.0, 0.0};
  DatumSpec datum = DatumSpec::constant(1.0);
};

struct ObservableSpec {
  enum class Kind { farfield_at, field_at, dtn_entry, density_norm };
  Kind kind = Kind::farfield_at;
  Vec3 point{0.0, 0.0, 1.0};  // direction for farfield_at, position for field_at
  std::size_t index = 0;      // panel for dtn_entry

  static ObservableSpec farfield_at(const Vec3& direction);
  static ObservableSpec field_at(const Vec3& x);
  static ObservableSpec dtn_entry(std::size_t i);
  static ObservableSpec density_norm();

  /// "farfield_at:x,y,z", "field_at:x,y,z", "dtn_entry:i", "density_norm".
  static ObservableSpec parse(const std::string& text);
  std::string describe() const;
};

using Evaluator = std::function<Complex(const Configuration&)>;

/// Full solve + observable at a fixed mesh level.
Complex evaluate_observable(const Configuration& config, const ObservableSpec& obs, int level,
                            const AssemblyOptions& opts = {});
Evaluator bem_evaluator(const ObservableSpec& obs, int level, const AssemblyOptions& opts = {});

enum class SampleGrid { uniform, chebyshev };

/// One-parameter family through a base configuration.
///   shape:      linear_family(base.shape, shape_direction, t)
///   wavenumber: k = base.k + t dk
///   datum:      g = base.datum + t datum_direction
struct FamilySpec {
  enum class Kind { shape, wavenumber, datum };
  Kind kind = Kind::shape;
  Configuration base;
  ShapeMap shape_direction;
  Complex dk{1.0, 0.0};
  DatumSpec datum_direction = DatumSpec::constant(1.0);
  double t_min = -0.2;
  double t_max = 0.2;
  int samples = 5;
  SampleGrid grid = SampleGrid::uniform;

  Configuration at(double t) const;
  std::vector<double> grid_points() const;
  /// ConfigError if the range is empty or some sampled k leaves Im k >= 0.
  void validate() const;
};

struct FamilySample {
  double t;
  Complex value;
};

/// Evaluates the family at its grid points in parallel; output ordered by t
/// as in grid_points(). A failure aborts with the offending t in the message.
std::vector<FamilySample> family_evaluate(const FamilySpec& family, const Evaluator& eval, int threads = 1);

/// Uniform points t_min + i h including both ends.
std::vector<double> uniform_points(double a, double b, int n);
/// Chebyshev points of the first kind mapped to [a, b], x_j = cos(pi (j + 1/2) / n).
std::vector<double> chebyshev_points(double a, double b, int n);

struct DerivativeEstimate {
  int order = 2;
  std::vector<double> t;
  std::vector<Complex> derivative;
  /// |D_order - D_lower|: difference to the order-2 stencil (order 4), or to the
  /// doubled-spacing stencil (order 2; NaN where it does not fit).
  std::vector<double> richardson_gap;
};

/// Central differences on a uniform grid at every node where the stencil fits.
/// DomainError for order not in {2, 4}, non-uniform spacing or too few points.
DerivativeEstimate central_difference(const std::vector<double>& t, const std::vector<Complex>& f, int order);

struct ChebyshevFit {
  std::vector<Complex> coefficients;
  double noise_floor = 0.0;  // absolute cut below which coefficients are ignored
  int resolved = 0;          // index of the last coefficient above the floor
  std::vector<int> fit_indices;
  double rho_hat = 0.0;      // NaN when undefined
  double geometric_residual = 0.0;
  double algebraic_residual = 0.0;
  double algebraic_exponent = 0.0;
  bool flat = false;       // only c_0 above the floor
  bool geometric = false;  // rho_hat >= threshold and the geometric model fits at least as well
};

inline constexpr double kDefaultRhoThreshold = 1.3;

/// Chebyshev coefficients of samples taken at chebyshev_points (n >= 16) and a
/// decay fit of log|c_m| over the upper half of the resolved range. Coefficients
/// below max(relative_floor * max|c|, absolute_noise) are excluded.
ChebyshevFit chebyshev_analyticity(const std::vector<Complex>& samples, double relative_floor = 1e-12,
                                   double absolute_noise = 0.0, double rho_threshold = kDefaultRhoThreshold);

/// Solver noise: |f - f'| where f' re-evaluates with reversed summation order.
double estimate_noise_floor(const Configuration& config, const ObservableSpec& obs, int level, int threads = 0);

// ---------------------------------------------------------------------------
// Joint sweeps
// ---------------------------------------------------------------------------

struct Axis {
  double min = 0.0;
  double max = 0.0;
  int n = 1;
  std::vector<double> values() const;
};

/// Grid over (shape parameter s, Re k shift, datum amplitude a):
/// linear_family(base.shape, shape_direction, s), base.k + kr, base.datum + a datum_direction.
struct JointGrid {
  Configuration base;
  ShapeMap shape_direction;
  DatumSpec datum_direction = DatumSpec::constant(1.0);
  Axis shape, k_re, datum;

  Configuration at(double s, double kr, double a) const;
};

struct JointRow {
  double s = 0.0, k_re = 0.0, a = 0.0;
  Complex value{0.0, 0.0};
  bool ok = true;
  std::string error;
};

struct JointTable {
  int ns = 1, nk = 1, na = 1;
  std::vector<JointRow> rows;  // index (i * nk + j) * na + l
  const JointRow& at(int i, int j, int l) const { return rows[static_cast<std::size_t>((i * nk + j) * na + l)]; }
  std::size_t failures() const;
};

/// Evaluates every grid point. Failures are recorded per row; with `strict`
/// the first failure is rethrown.
JointTable joint_sweep(const JointGrid& grid, const Evaluator& eval, bool strict = false, int threads = 1);

struct JointReport {
  double max_mixed_commutator = 0.0;  // max |D_s D_k f - D_k D_s f| over cells, divided differences
  double max_mixed_difference = 0.0;  // max |D_s D_k f| for scale
  double max_datum_curvature = 0.0;   // max |second difference along a| / max |f|
};

/// Mixed second divided differences over (s, Re k), evaluated in both orders,
/// and the affinity defect along the datum axis.
JointReport joint_report(const JointGrid& grid, const JointTable& table);

}  // namespace helmscat
