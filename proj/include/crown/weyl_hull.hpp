#pragma once

// Weyl group action on a, the polytope Omega and its Weyl-invariant convex
// subsets, and membership in Weyl orbit hulls conv(W X).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "crown/lie_core.hpp"
#include "crown/rng.hpp"

namespace crown {

struct OmegaSpec {
  enum class Shape { ScaledOmega, BallCap };
  Shape shape = Shape::ScaledOmega;
  double scale = 1.0;
  double radius = 0.0;

  static OmegaSpec scaled(double c) { return OmegaSpec{Shape::ScaledOmega, c, 0.0}; }
  static OmegaSpec ball(double rho) { return OmegaSpec{Shape::BallCap, 1.0, rho}; }

  /// Parses "scale:<c>" (0 < c <= 1) or "ball:<rho>" (rho > 0).
  static OmegaSpec parse(const std::string& token) {
    const auto colon = token.find(':');
    if (colon == std::string::npos) throw Error(ErrorKind::Usage, "omega must look like scale:<c> or ball:<rho>");
    const std::string kind = token.substr(0, colon);
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(token.substr(colon + 1), &used);
      if (used != token.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorKind::Usage, "bad number in omega '" + token + "'");
    }
    if (kind == "scale") {
      if (!(v > 0.0 && v <= 1.0)) throw Error(ErrorKind::Usage, "scale must lie in (0, 1]");
      return scaled(v);
    }
    if (kind == "ball") {
      if (!(v > 0.0)) throw Error(ErrorKind::Usage, "ball radius must be positive");
      return ball(v);
    }
    throw Error(ErrorKind::Usage, "unknown omega shape '" + kind + "'");
  }

  std::string to_string() const {
    char buf[64];
    if (shape == Shape::ScaledOmega) {
      std::snprintf(buf, sizeof buf, "scale:%.17g", scale);
    } else {
      std::snprintf(buf, sizeof buf, "ball:%.17g", radius);
    }
    return buf;
  }
};

/// One Weyl group element: its action on a-coordinates and a representative
/// in N_K(a) with Ad(k_rep) a_matrix(X) = a_matrix(action * X).
struct WeylElement {
  MatrixR action;
  MatrixR k_rep;
};

namespace detail {

inline MatrixR action_of(const GroupContext& ctx, const MatrixR& k) {
  const int r = ctx.coord_dim;
  MatrixR act(r, r);
  for (int j = 0; j < r; ++j) {
    const MatrixR conj = k * ctx.a_matrix(VectorR(VectorR::Unit(r, j))) * k.transpose();
    act.col(j) = ctx.coords_of_diagonal(VectorR(conj.diagonal()));
  }
  return act;
}

}  // namespace detail

/// All of W with normalizer representatives: (det-corrected) permutation
/// matrices for SL(n); for Sp(n) the U(n) elements P_sigma * diag(1 or i),
/// which realize signed permutations.
inline std::vector<WeylElement> weyl_group(const GroupContext& ctx) {
  std::vector<WeylElement> out;
  const int r = ctx.coord_dim;
  std::vector<int> perm(static_cast<std::size_t>(r));
  std::iota(perm.begin(), perm.end(), 0);
  do {
    if (!ctx.symplectic()) {
      MatrixR k = MatrixR::Zero(r, r);
      for (int j = 0; j < r; ++j) k(perm[static_cast<std::size_t>(j)], j) = 1.0;
      if (k.determinant() < 0) k.col(0) *= -1.0;
      out.push_back({detail::action_of(ctx, k), k});
    } else {
      for (std::uint32_t signs = 0; signs < (1u << r); ++signs) {
        MatrixC u = MatrixC::Zero(r, r);
        for (int j = 0; j < r; ++j) u(perm[static_cast<std::size_t>(j)], j) = (signs >> j) & 1u ? kI : cplx(1.0);
        MatrixR std_form(2 * r, 2 * r);
        std_form << u.real(), -u.imag(), u.imag(), u.real();
        const MatrixR k = ctx.from_standard(std_form);
        out.push_back({detail::action_of(ctx, k), k});
      }
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

inline std::size_t weyl_order(const GroupContext& ctx) {
  std::size_t f = 1;
  for (int i = 2; i <= ctx.coord_dim; ++i) f *= static_cast<std::size_t>(i);
  return ctx.symplectic() ? f << ctx.coord_dim : f;
}

inline std::vector<CartanVector> weyl_orbit(const GroupContext& ctx, const CartanVector& x) {
  std::vector<CartanVector> orbit;
  for (const auto& w : weyl_group(ctx)) {
    VectorR y = w.action * x.coords;
    const bool seen = std::any_of(orbit.begin(), orbit.end(),
                                  [&](const CartanVector& o) { return (o.coords - y).cwiseAbs().maxCoeff() <= 1e-12; });
    if (!seen) orbit.emplace_back(std::move(y));
  }
  return orbit;
}

inline CartanVector dominant_rep(const GroupContext& ctx, const CartanVector& x) {
  VectorR d = ctx.symplectic() ? VectorR(x.coords.cwiseAbs()) : x.coords;
  std::sort(d.data(), d.data() + d.size(), std::greater<>());
  return CartanVector(d);
}

struct HullResult {
  bool inside = false;
  double margin = 0.0;
};

/// Y in conv(W X) via majorization of dominant representatives: prefix sums
/// of Y+ bounded by those of X+ (type A adds equal totals; type C is weak
/// majorization of |.|-sorted vectors). margin is the smallest slack.
inline HullResult hull_contains(const GroupContext& ctx, const CartanVector& x, const CartanVector& y, double tol = 1e-9) {
  const VectorR xd = dominant_rep(ctx, x).coords;
  const VectorR yd = dominant_rep(ctx, y).coords;
  const Eigen::Index r = xd.size();
  double margin = std::numeric_limits<double>::infinity();
  double sx = 0.0, sy = 0.0;
  const Eigen::Index prefixes = ctx.symplectic() ? r : r - 1;
  for (Eigen::Index k = 0; k < r; ++k) {
    sx += xd[k];
    sy += yd[k];
    if (k < prefixes) margin = std::min(margin, sx - sy);
  }
  if (!ctx.symplectic()) {
    // equal totals; a mismatch at rounding level is not a slack
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (xd.cwiseAbs().sum() + yd.cwiseAbs().sum());
    if (std::abs(sx - sy) > noise) margin = std::min(margin, -std::abs(sx - sy));
  }
  return {margin >= -tol, margin};
}

/// Positive iff X lies in omega.
inline double omega_margin(const GroupContext& ctx, const OmegaSpec& omega, const CartanVector& x) {
  const double c = omega.shape == OmegaSpec::Shape::ScaledOmega ? omega.scale : 1.0;
  double m = std::numeric_limits<double>::infinity();
  for (const auto& alpha : ctx.root_datum.positive_roots) m = std::min(m, c * kPi / 2.0 - std::abs(alpha.dot(x.coords)));
  if (omega.shape == OmegaSpec::Shape::BallCap) m = std::min(m, omega.radius - x.coords.norm());
  return m;
}

inline double omega_margin(const GroupContext& ctx, const CartanVector& x) {
  return omega_margin(ctx, OmegaSpec::scaled(1.0), x);
}

/// One rejection sample from omega using the given stream.
template <class Rng>
CartanVector sample_omega_one(const GroupContext& ctx, const OmegaSpec& omega, Rng& rng) {
  const int r = ctx.coord_dim;
  const double c = omega.shape == OmegaSpec::Shape::ScaledOmega ? omega.scale : 1.0;
  // Type A: |x_i| < (n-1)/n * c*pi/2 on the traceless plane; type C: |h_i| < c*pi/4.
  double box = ctx.symplectic() ? c * kPi / 4.0 : c * kPi / 2.0 * (r - 1) / r;
  if (omega.shape == OmegaSpec::Shape::BallCap) box = std::min(box, omega.radius);
  std::uniform_real_distribution<double> unif(-box, box);
  constexpr int kMaxAttempts = 10000;  // acceptance rate below 1e-4 is a stall
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    VectorR v(r);
    if (ctx.symplectic()) {
      for (int i = 0; i < r; ++i) v[i] = unif(rng);
    } else {
      double sum = 0.0;
      for (int i = 0; i + 1 < r; ++i) {
        v[i] = unif(rng);
        sum += v[i];
      }
      v[r - 1] = -sum;
    }
    CartanVector x(v);
    if (omega_margin(ctx, omega, x) > 0.0) return x;
  }
  throw Error(ErrorKind::RejectionStall, "omega " + omega.to_string() + " rejected 10^4 consecutive proposals");
}

/// i.i.d. samples from omega; sample i uses substream (seed, i).
inline std::vector<CartanVector> sample_omega(const GroupContext& ctx, const OmegaSpec& omega, std::uint64_t seed,
                                              std::size_t count) {
  std::vector<CartanVector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = CounterRng::substream(seed, i);
    out.push_back(sample_omega_one(ctx, omega, rng));
  }
  return out;
}

}  // namespace crown
