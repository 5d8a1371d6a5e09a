#include "helmscat/operators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <iostream>
#include <istream>
#include <limits>
#include <ostream>

#include "helmscat/io.hpp"
#include "helmscat/kernels_batch.hpp"
#include "helmscat/parallel.hpp"

namespace helmscat {

const char* operator_kind_name(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::V: return "V";
    case OperatorKind::W: return "W";
    case OperatorKind::Wstar: return "Wstar";
    case OperatorKind::Lambda: return "Lambda";
    case OperatorKind::custom: return "custom";
  }
  return "custom";
}

namespace {

// Quadrature points gathered into SoA form for the batched kernels.
struct NodeBatch {
  std::vector<double> x, y, z, nx, ny, nz, w;

  void clear() {
    for (auto* v : {&x, &y, &z, &nx, &ny, &nz, &w}) v->clear();
  }
  void push(const PanelPoint& p, double weight) {
    x.push_back(p.position.x());
    y.push_back(p.position.y());
    z.push_back(p.position.z());
    nx.push_back(p.normal.x());
    ny.push_back(p.normal.y());
    nz.push_back(p.normal.z());
    w.push_back(weight * p.jacobian);
  }
  simd::SourceBlock block() const { return {x.data(), y.data(), z.data(), nx.data(), ny.data(), nz.data(), w.size()}; }
};

struct KernelBuffers {
  std::vector<double> s_re, s_im, d_re, d_im, a_re, a_im;

  void resize(std::size_t n) {
    for (auto* v : {&s_re, &s_im, &d_re, &d_im, &a_re, &a_im}) v->resize(n);
  }
  simd::KernelRowOut out() {
    return {s_re.data(), s_im.data(), d_re.data(), d_im.data(), a_re.data(), a_im.data()};
  }
};

struct Triple {
  Complex v, w, ws;
};

// Weighted sum of kernel samples [begin, end) in the chosen order.
Triple weighted_sum(const KernelBuffers& kb, const double* w, std::size_t begin, std::size_t end, bool reverse) {
  double vr = 0, vi = 0, wr = 0, wi = 0, ar = 0, ai = 0;
  auto add = [&](std::size_t q) {
    vr += kb.s_re[q] * w[q - begin];
    vi += kb.s_im[q] * w[q - begin];
    wr += kb.d_re[q] * w[q - begin];
    wi += kb.d_im[q] * w[q - begin];
    ar += kb.a_re[q] * w[q - begin];
    ai += kb.a_im[q] * w[q - begin];
  };
  if (reverse) {
    for (std::size_t q = end; q-- > begin;) add(q);
  } else {
    for (std::size_t q = begin; q < end; ++q) add(q);
  }
  return {{vr, vi}, {wr, wi}, {ar, ai}};
}

class RowAssembler {
 public:
  RowAssembler(const DeformedSurface& surface, const WaveNumber& k, const AssemblyOptions& opts)
      : surface_(surface),
        k_(k),
        opts_(opts),
        regular_(regular_rule(kSurfaceRuleOrder)),
        duffy_(duffy_self_rule(opts.self_order)),
        remainder_(regular_rule(opts.remainder_order)) {}

  void row(std::size_t i, Triple* out) const {
    const SurfaceNodes& nodes = surface_.nodes();
    const std::size_t n = surface_.size();
    const std::size_t q = static_cast<std::size_t>(nodes.per_panel);
    const Vec3& x = surface_.points()[i];
    const Vec3& nu = surface_.normals()[i];

    KernelBuffers kb;
    kb.resize(nodes.size());
    const simd::SourceBlock all{nodes.x.data(),  nodes.y.data(),  nodes.z.data(), nodes.nx.data(),
                                nodes.ny.data(), nodes.nz.data(), nodes.size()};
    simd::kernel_row(x, nu, k_.value(), all, kb.out());

    NodeBatch batch;
    KernelBuffers sub;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) {
        out[j] = self_panel(i);
        continue;
      }
      const double diam = surface_.diameters()[j];
      if ((x - surface_.points()[j]).norm() < (opts_.eta + 1.0) * diam) {
        auto map = [&](const UV& p) { return surface_.map_panel(j, p[0], p[1]).position; };
        const auto parts = near_singular_split(SubPanel{{UV{0, 0}, UV{1, 0}, UV{0, 1}}, 0}, map, x, opts_.eta,
                                               opts_.max_depth);
        if (parts.size() > 1) {
          batch.clear();
          for (const SubPanel& part : parts) {
            const PanelRule r = map_rule(regular_, part);
            for (std::size_t m = 0; m < r.size(); ++m)
              batch.push(surface_.map_panel(j, r.points[m][0], r.points[m][1]), r.weights[m]);
          }
          sub.resize(batch.w.size());
          simd::kernel_row(x, nu, k_.value(), batch.block(), sub.out());
          out[j] = weighted_sum(sub, batch.w.data(), 0, batch.w.size(), opts_.reverse_summation);
          continue;
        }
      }
      out[j] = weighted_sum(kb, nodes.w.data() + j * q, j * q, (j + 1) * q, opts_.reverse_summation);
    }
  }

 private:
  // Laplace parts by the Duffy rule fanned from the collocation point, smooth
  // remainders by a regular rule.
  Triple self_panel(std::size_t i) const {
    const Vec3& x = surface_.points()[i];
    const Vec3& nu_x = surface_.normals()[i];
    Triple acc{};
    auto laplace = [&](std::size_t m) {
      const PanelPoint p = surface_.map_panel(i, duffy_.points[m][0], duffy_.points[m][1]);
      const Vec3 d = x - p.position;
      const double r = d.norm();
      const double w = duffy_.weights[m] * p.jacobian;
      const double f0 = 1.0 / (kFourPi * r * r * r);
      acc.v += -w / (kFourPi * r);
      acc.w += -w * f0 * p.normal.dot(d);
      acc.ws += w * f0 * nu_x.dot(d);
    };
    auto smooth = [&](std::size_t m) {
      const PanelPoint p = surface_.map_panel(i, remainder_.points[m][0], remainder_.points[m][1]);
      const Vec3 d = x - p.position;
      const double r = d.norm();
      const double w = remainder_.weights[m] * p.jacobian;
      const Complex g = gradient_factor_remainder(k_, r);
      acc.v += w * single_layer_remainder(k_, r);
      acc.w += -w * g * p.normal.dot(d);
      acc.ws += w * g * nu_x.dot(d);
    };
    const std::size_t nd = duffy_.size(), nr = remainder_.size();
    if (opts_.reverse_summation) {
      for (std::size_t m = nd; m-- > 0;) laplace(m);
      if (!k_.is_zero())
        for (std::size_t m = nr; m-- > 0;) smooth(m);
    } else {
      for (std::size_t m = 0; m < nd; ++m) laplace(m);
      if (!k_.is_zero())
        for (std::size_t m = 0; m < nr; ++m) smooth(m);
    }
    return acc;
  }

  const DeformedSurface& surface_;
  WaveNumber k_;
  AssemblyOptions opts_;
  PanelRule regular_, duffy_, remainder_;
};

void check_finite(const Eigen::MatrixXcd& m, const char* name) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag()))
        throw InvariantError(std::string("assembly of ") + name + " produced a non-finite entry at (" +
                             std::to_string(i) + "," + std::to_string(j) + ")");
}

DenseOperator make_operator(Eigen::MatrixXcd m, OperatorKind kind, const WaveNumber& k, const std::string& hash) {
  DenseOperator op;
  op.matrix = std::move(m);
  op.kind = kind;
  op.k = k;
  op.surface_hash = hash;
  return op;
}

}  // namespace

LayerOperators assemble_layer_operators(const DeformedSurface& surface, const WaveNumber& k,
                                        const AssemblyOptions& opts) {
  const std::size_t n = surface.size();
  Eigen::MatrixXcd V(n, n), W(n, n), Ws(n, n);
  const RowAssembler assembler(surface, k, opts);
  parallel_for(n, resolve_threads(opts.threads), [&](std::size_t i) {
    std::vector<Triple> row(n);
    assembler.row(i, row.data());
    for (std::size_t j = 0; j < n; ++j) {
      V(i, j) = row[j].v;
      W(i, j) = row[j].w;
      Ws(i, j) = row[j].ws;
    }
  });
  check_finite(V, "V");
  check_finite(W, "W");
  check_finite(Ws, "Wstar");
  const std::string& h = surface.shape_hash();
  return {make_operator(std::move(V), OperatorKind::V, k, h), make_operator(std::move(W), OperatorKind::W, k, h),
          make_operator(std::move(Ws), OperatorKind::Wstar, k, h)};
}

DenseOperator assemble_V(const DeformedSurface& surface, const WaveNumber& k, const AssemblyOptions& opts) {
  return std::move(assemble_layer_operators(surface, k, opts).V);
}

DenseOperator assemble_W(const DeformedSurface& surface, const WaveNumber& k, const AssemblyOptions& opts) {
  return std::move(assemble_layer_operators(surface, k, opts).W);
}

DenseOperator assemble_Wstar(const DeformedSurface& surface, const WaveNumber& k, const AssemblyOptions& opts) {
  return std::move(assemble_layer_operators(surface, k, opts).Wstar);
}

DenseOperator combine_lambda(const DenseOperator& V, const DenseOperator& W) {
  if (V.kind != OperatorKind::V || W.kind != OperatorKind::W)
    throw InvariantError("combine_lambda expects a V and a W operator");
  if (V.surface_hash != W.surface_hash || V.size() != W.size() || V.k.value() != W.k.value())
    throw InvariantError("combine_lambda: V and W were assembled for different inputs");
  Eigen::MatrixXcd m = W.matrix + V.k.coupling() * V.matrix;
  m.diagonal().array() -= 0.5;
  return make_operator(std::move(m), OperatorKind::Lambda, V.k, V.surface_hash);
}

DenseOperator assemble_lambda(const DeformedSurface& surface, const WaveNumber& k, const AssemblyOptions& opts) {
  const LayerOperators ops = assemble_layer_operators(surface, k, opts);
  return combine_lambda(ops.V, ops.W);
}

DenseSolver::DenseSolver(const DenseOperator& op) : op_(&op) {
  if (op.matrix.rows() != op.matrix.cols() || op.matrix.rows() == 0)
    throw InvariantError("DenseSolver: operator must be square and nonempty");
  lu_.compute(op.matrix);
  const double rc = lu_.rcond();
  condition_ = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
}

BoundaryField DenseSolver::solve(const BoundaryField& rhs, SolveDiagnostics* diag, double max_residual) const {
  check_binding(rhs, op_->surface_hash, op_->size(), "solve");
  if (!std::isfinite(condition_))
    throw SolverError(std::string("singular factorization of ") + operator_kind_name(op_->kind));
  BoundaryField x;
  x.surface_hash = op_->surface_hash;
  x.values = lu_.solve(rhs.values);
  const double bn = rhs.values.norm();
  const double rn = (op_->matrix * x.values - rhs.values).norm();
  const double rel = bn > 0.0 ? rn / bn : rn;
  if (diag) *diag = {rel, condition_};
  if (!(rel <= max_residual))
    throw SolverError(std::string("solve with ") + operator_kind_name(op_->kind) + " failed: relative residual " +
                      format_double(rel) + " (condition estimate " + format_double(condition_) + ")");
  return x;
}

DensitySolution solve_density(const DenseOperator& lambda, const BoundaryField& g) {
  const DenseSolver solver(lambda);
  DensitySolution out;
  out.theta = solver.solve(g, &out.diagnostics);
  return out;
}

DirectFluxResult direct_flux_solve(const DenseOperator& V, const DenseOperator& W, const BoundaryField& g,
                                   const DirectFluxOptions& opts) {
  if (V.kind != OperatorKind::V || W.kind != OperatorKind::W)
    throw InvariantError("direct_flux_solve expects a V and a W operator");
  check_binding(g, V.surface_hash, V.size(), "direct_flux_solve");
  const DenseSolver solver(V);
  if (solver.condition_estimate() > opts.max_condition) {
    const std::string msg = "single-layer operator is ill-conditioned (condition estimate " +
                            format_double(solver.condition_estimate()) + " > " + format_double(opts.max_condition) +
                            "); k is close to an interior Dirichlet eigenvalue";
    if (!opts.force) throw SolverError(msg + "; use the combined-field route or force the solve");
    std::cerr << "warning: " << msg << "\n";
  }
  BoundaryField rhs;
  rhs.surface_hash = g.surface_hash;
  rhs.values = 0.5 * g.values + W.matrix * g.values;
  DirectFluxResult out;
  out.psi = solver.solve(rhs, &out.diagnostics);
  return out;
}

DirectFluxResult direct_flux_solve(const DeformedSurface& surface, const WaveNumber& k, const BoundaryField& g,
                                   const DirectFluxOptions& opts) {
  check_binding(g, surface.shape_hash(), surface.size(), "direct_flux_solve");
  const LayerOperators ops = assemble_layer_operators(surface, k, opts.assembly);
  return direct_flux_solve(ops.V, ops.W, g, opts);
}

// ---------------------------------------------------------------------------
// HSOP1 binary format
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[5] = {'H', 'S', 'O', 'P', '1'};

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw ConfigError("HSOP1: truncated input");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_hsop(std::ostream& os, const DenseOperator& op) {
  os.write(kMagic, sizeof(kMagic));
  put_le<std::uint64_t>(os, op.size());
  put_le<std::uint8_t>(os, static_cast<std::uint8_t>(op.kind));
  put_le<double>(os, op.k.re());
  put_le<double>(os, op.k.im());
  for (Eigen::Index i = 0; i < op.matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < op.matrix.cols(); ++j) {
      put_le<double>(os, op.matrix(i, j).real());
      put_le<double>(os, op.matrix(i, j).imag());
    }
  if (!os) throw ConfigError("HSOP1: write failed");
}

DenseOperator read_hsop(std::istream& is) {
  char magic[5];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ConfigError("HSOP1: bad magic");
  const auto n = get_le<std::uint64_t>(is);
  if (n > 100000) throw ConfigError("HSOP1: implausible size " + std::to_string(n));
  const auto kind = get_le<std::uint8_t>(is);
  if (kind > 4) throw ConfigError("HSOP1: unknown kind tag " + std::to_string(kind));
  const double kr = get_le<double>(is);
  const double ki = get_le<double>(is);
  DenseOperator op;
  op.kind = static_cast<OperatorKind>(kind);
  op.k = WaveNumber(kr, ki);
  op.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < op.matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < op.matrix.cols(); ++j) {
      const double re = get_le<double>(is);
      op.matrix(i, j) = {re, get_le<double>(is)};
    }
  return op;
}

}  // namespace helmscat
