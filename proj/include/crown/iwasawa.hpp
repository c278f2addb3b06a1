#pragma once

// Iwasawa decomposition z = n a k and its holomorphic extension to
// G exp(i Omega) K_C.
//
// For z = n a k with k k^T = I one has z z^T = n a^2 n^T, so the LDL^T
// factorization of z z^T (lower unipotent L, no pivoting) gives n = L and
// a^2 = D, whose entries are the leading-minor ratios Delta_j / Delta_{j-1}.
// Along a path from a real base point the ratios start positive; log a is the
// continuous logarithm obtained by unwrapping their arguments.

#include <cmath>
#include <functional>
#include <vector>

#include "crown/lie_core.hpp"
#include "crown/weyl_hull.hpp"

namespace crown {

inline constexpr double kPivotFloor = 1e-13;
inline constexpr int kDefaultSteps = 16;
inline constexpr int kMaxSubdivisions = 1 << 14;

class PivotError : public Error {
 public:
  PivotError(const std::string& what, int index) : Error(ErrorKind::PivotBreakdown, what), index_(index) {}
  int index() const noexcept { return index_; }

 private:
  int index_;
};

template <class Scalar>
struct LdlResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> unit_lower;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> pivots;
};

/// One-pass LDL^T without pivoting for a (complex) symmetric matrix. The j-th
/// pivot equals Delta_j / Delta_{j-1} of the leading principal minors.
template <class Derived>
LdlResult<typename Derived::Scalar> ldl_symmetric(const Eigen::MatrixBase<Derived>& m_in) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat m = m_in;
  const Eigen::Index n = m.rows();
  const double scale = m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1.0))
    throw Error(ErrorKind::NumericalBreakdown, "ldl_symmetric: input is not symmetric");
  LdlResult<Scalar> out{Mat::Identity(n, n), Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar pivot = m(j, j);
    if (!(std::abs(pivot) >= kPivotFloor * scale))
      throw PivotError("leading minor " + std::to_string(j + 1) + " vanishes", static_cast<int>(j));
    out.pivots[j] = pivot;
    for (Eigen::Index i = j + 1; i < n; ++i) out.unit_lower(i, j) = m(i, j) / pivot;
    // Schur complement update of the trailing block.
    for (Eigen::Index c = j + 1; c < n; ++c)
      for (Eigen::Index r = j + 1; r < n; ++r) m(r, c) -= out.unit_lower(r, j) * pivot * out.unit_lower(c, j);
  }
  return out;
}

/// (Delta_1/Delta_0, ..., Delta_m/Delta_{m-1}) with Delta_0 = 1.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> minor_ratios(const Eigen::MatrixBase<Derived>& m) {
  return ldl_symmetric(m).pivots;
}

struct IwasawaFactors {
  MatrixC n_part;
  CartanVectorC log_a;
  MatrixC k_part;
  int path_steps = 0;
  double max_arg_step = 0.0;
  /// Sp: max |log a_j + log a_{j'}| over paired diagonal slots; SL: |sum log a_j|.
  /// Both vanish for an intact branch.
  double branch_residual = 0.0;
};

/// z = base_g * exp(i X) with base_g real.
struct CrownPoint {
  MatrixC z;
  MatrixR base_g;
  CartanVector direction_x;
  OmegaSpec omega_tag;
};

inline CrownPoint make_crown_point(const GroupContext& ctx, const MatrixR& g, const CartanVector& x,
                                   const OmegaSpec& omega = OmegaSpec::scaled(1.0)) {
  return CrownPoint{g.cast<cplx>() * ctx.exp_a(VectorC(kI * x.coords.cast<cplx>())), g, x, omega};
}

inline MatrixC triangular_part(const GroupContext& ctx, const IwasawaFactors& f) {
  return f.n_part * ctx.exp_a(f.log_a.coords);
}

inline MatrixC reconstruct(const GroupContext& ctx, const IwasawaFactors& f) { return triangular_part(ctx, f) * f.k_part; }

inline double reconstruction_residual(const GroupContext& ctx, const IwasawaFactors& f, const MatrixC& z) {
  return (reconstruct(ctx, f) - z).norm() / z.norm();
}

namespace detail {

inline double branch_residual(const GroupContext& ctx, const VectorC& log_diag) {
  const int m = ctx.ambient_size;
  if (!ctx.symplectic()) return std::abs(log_diag.sum());
  double r = 0.0;
  for (int i = 0; i < ctx.coord_dim; ++i) r = std::max(r, std::abs(log_diag[i] + log_diag[m - 1 - i]));
  return r;
}

inline IwasawaFactors finish_factors(const GroupContext& ctx, const MatrixC& z, const MatrixC& unit_lower,
                                     const VectorC& log_diag) {
  IwasawaFactors f;
  f.n_part = unit_lower;
  f.log_a = CartanVectorC(ctx.coords_of_diagonal(log_diag));
  f.branch_residual = branch_residual(ctx, log_diag);
  const MatrixC b = triangular_part(ctx, f);
  f.k_part = b.triangularView<Eigen::Lower>().solve(z);
  return f;
}

}  // namespace detail

/// Real Iwasawa decomposition g = n a k through the LDL^T of g g^T.
inline IwasawaFactors decompose_real(const GroupContext& ctx, const MatrixR& g, double group_tol = 1e-10) {
  if (g.rows() != ctx.ambient_size || g.cols() != ctx.ambient_size)
    throw Error(ErrorKind::NotInGroup, "matrix has the wrong size for " + ctx.spec.to_string());
  if (ctx.group_residual(g) > group_tol) throw Error(ErrorKind::NotInGroup, "input is not in " + ctx.spec.to_string());
  LdlResult<double> ldl;
  try {
    ldl = ldl_symmetric(MatrixR(g * g.transpose()));
  } catch (const PivotError& e) {
    throw Error(ErrorKind::NumericalBreakdown, e.what());
  }
  if ((ldl.pivots.array() <= 0.0).any()) throw Error(ErrorKind::NumericalBreakdown, "non-positive LDL pivot of g g^T");
  const VectorC log_diag = (0.5 * ldl.pivots.array().log()).matrix().cast<cplx>();
  return detail::finish_factors(ctx, g.cast<cplx>(), ldl.unit_lower.cast<cplx>(), log_diag);
}

/// Factors of path(1), with log a continued along t -> path(t) from the real
/// point path(0). Steps are bisected until every minor ratio turns by less
/// than pi/2 per step.
inline IwasawaFactors project_along(const GroupContext& ctx, const std::function<MatrixC(double)>& path,
                                    int steps_hint = kDefaultSteps) {
  const int m = ctx.ambient_size;
  steps_hint = std::max(1, steps_hint);
  auto ratios_at = [&](double t, const MatrixC& z) -> LdlResult<cplx> {
    try {
      return ldl_symmetric(MatrixC(z * z.transpose()));
    } catch (const PivotError& e) {
      throw BranchError(std::string(e.what()) + " at t = " + std::to_string(t), t);
    }
  };

  MatrixC z = path(0.0);
  if (z.imag().cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, z.cwiseAbs().maxCoeff()))
    throw Error(ErrorKind::BranchBreakdown, "path must start at a real group element");
  LdlResult<cplx> ldl = ratios_at(0.0, z);
  for (int p = 0; p < m; ++p)
    if (!(ldl.pivots[p].real() > 0.0))
      throw BranchError("base point has a non-positive minor ratio", 0.0);

  VectorR unwrapped(m);
  for (int p = 0; p < m; ++p) unwrapped[p] = std::arg(ldl.pivots[p]);

  std::vector<double> pending;
  for (int s = steps_hint; s >= 1; --s) pending.push_back(static_cast<double>(s) / steps_hint);
  double t0 = 0.0;
  int subdivisions = 0;
  IwasawaFactors partial;
  while (!pending.empty()) {
    const double t1 = pending.back();
    MatrixC z1 = path(t1);
    LdlResult<cplx> ldl1 = ratios_at(t1, z1);
    double step = 0.0;
    VectorR turn(m);
    for (int p = 0; p < m; ++p) {
      turn[p] = std::arg(ldl1.pivots[p] / ldl.pivots[p]);
      step = std::max(step, std::abs(turn[p]));
    }
    if (step >= kPi / 2.0) {
      if (++subdivisions > kMaxSubdivisions)
        throw BranchError("step control exhausted near t = " + std::to_string(t0), t0);
      pending.push_back(0.5 * (t0 + t1));
      continue;
    }
    pending.pop_back();
    unwrapped += turn;
    partial.max_arg_step = std::max(partial.max_arg_step, step);
    ++partial.path_steps;
    t0 = t1;
    z = std::move(z1);
    ldl = std::move(ldl1);
  }

  VectorC log_diag(m);
  for (int p = 0; p < m; ++p) {
    const cplx d = ldl.pivots[p];
    // snap the accumulated angle to the exact argument of the endpoint ratio
    const double principal = std::arg(d);
    const double winding = std::round((unwrapped[p] - principal) / (2.0 * kPi));
    log_diag[p] = 0.5 * cplx(std::log(std::abs(d)), principal + 2.0 * kPi * winding);
  }
  IwasawaFactors f = detail::finish_factors(ctx, z, ldl.unit_lower, log_diag);
  f.path_steps = partial.path_steps;
  f.max_arg_step = partial.max_arg_step;
  return f;
}

/// Factors of g exp(iX) along t -> g exp(itX), X in Omega.
inline IwasawaFactors project_complex(const GroupContext& ctx, const MatrixR& g, const CartanVector& x,
                                      int steps_hint = kDefaultSteps) {
  if (!(omega_margin(ctx, x) > 0.0)) throw Error(ErrorKind::OmegaViolation, "direction lies outside Omega");
  if (g.rows() != ctx.ambient_size || ctx.group_residual(g) > 1e-10)
    throw Error(ErrorKind::NotInGroup, "base point is not in " + ctx.spec.to_string());
  const MatrixC gc = g.cast<cplx>();
  const VectorC ix = kI * x.coords.cast<cplx>();
  return project_along(ctx, [&](double t) -> MatrixC { return gc * ctx.exp_a(VectorC(t * ix)); }, steps_hint);
}

inline IwasawaFactors project_complex(const GroupContext& ctx, const CrownPoint& p, int steps_hint = kDefaultSteps) {
  return project_complex(ctx, p.base_g, p.direction_x, steps_hint);
}

}  // namespace crown
