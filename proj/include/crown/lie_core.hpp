#pragma once

// Concrete matrix realizations of SL(n,R) and Sp(n,R), their Iwasawa
// subalgebras, restricted roots, Killing forms and the projection onto a_C.
//
// Conventions
//   * K = SO(n) resp. Sp(n,R) ∩ O(2n), theta(g) = (g^T)^{-1}.
//   * a is diagonal, n is strictly LOWER triangular. For Sp(n,R) the standard
//     realization (J = [[0, I], [-I, 0]]) is conjugated by a fixed permutation
//     so the diagonal of a reads (h_1, ..., h_n, -h_n, ..., -h_1).
//   * a-coordinates: the n diagonal entries for SL(n) (traceless), the vector
//     h for Sp(n).

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include "crown/error.hpp"

namespace crown {

using cplx = std::complex<double>;
using MatrixR = Eigen::MatrixXd;
using MatrixC = Eigen::MatrixXcd;
using VectorR = Eigen::VectorXd;
using VectorC = Eigen::VectorXcd;

inline constexpr cplx kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

enum class Family { SpecialLinear, Symplectic };

struct GroupSpec {
  Family family = Family::SpecialLinear;
  int rank_param = 2;

  /// Parses "sl:<n>" or "sp:<n>".
  static GroupSpec parse(const std::string& token) {
    const auto colon = token.find(':');
    if (colon == std::string::npos) throw Error(ErrorKind::Usage, "group must look like sl:<n> or sp:<n>, got '" + token + "'");
    const std::string fam = token.substr(0, colon);
    int n = 0;
    try {
      std::size_t used = 0;
      n = std::stoi(token.substr(colon + 1), &used);
      if (used != token.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorKind::Usage, "bad rank in group '" + token + "'");
    }
    GroupSpec spec;
    if (fam == "sl") {
      spec.family = Family::SpecialLinear;
    } else if (fam == "sp") {
      spec.family = Family::Symplectic;
    } else {
      throw Error(ErrorKind::UnsupportedFamily, "unknown family '" + fam + "'");
    }
    spec.rank_param = n;
    return spec;
  }

  std::string to_string() const {
    return std::string(family == Family::SpecialLinear ? "sl:" : "sp:") + std::to_string(rank_param);
  }

  bool operator==(const GroupSpec&) const = default;
};

/// Element of a (real) in a-coordinates.
struct CartanVector {
  VectorR coords;

  CartanVector() = default;
  explicit CartanVector(VectorR c) : coords(std::move(c)) {}
  CartanVector(std::initializer_list<double> c) : coords(static_cast<Eigen::Index>(c.size())) {
    std::copy(c.begin(), c.end(), coords.data());
  }

  Eigen::Index size() const { return coords.size(); }
  double operator[](Eigen::Index i) const { return coords[i]; }
};

/// Element of a_C in a-coordinates.
struct CartanVectorC {
  VectorC coords;

  CartanVectorC() = default;
  explicit CartanVectorC(VectorC c) : coords(std::move(c)) {}
  static CartanVectorC from_parts(const CartanVector& re, const CartanVector& im) {
    return CartanVectorC(re.coords.cast<cplx>() + kI * im.coords.cast<cplx>());
  }

  Eigen::Index size() const { return coords.size(); }
  CartanVector real() const { return CartanVector(coords.real()); }
  CartanVector imag() const { return CartanVector(coords.imag()); }
};

struct RootDatum {
  char type = 'A';
  int rank = 0;
  std::vector<VectorR> roots;
  std::vector<VectorR> positive_roots;
  std::vector<VectorR> simple_roots;
  /// Aligned with `roots`.
  std::vector<int> multiplicities;
  /// Reflections in the simple roots, acting on a-coordinates.
  std::vector<MatrixR> weyl_generators;
  /// Basis of m = z_k(a), the zero-weight part of k.
  std::vector<MatrixR> centralizer_k;

  double value(std::size_t root, const VectorR& x) const { return roots[root].dot(x); }
};

struct GroupContext {
  GroupSpec spec;
  int ambient_size = 0;
  int coord_dim = 0;
  /// Row p holds the a-weight of the p-th diagonal entry: diag_p = weights.row(p) . coords.
  MatrixR weights;
  /// Adapted-frame matrix = frame * standard-frame matrix * frame^T.
  MatrixR frame;
  /// Symplectic form in the adapted frame (empty for SL).
  MatrixR form;
  std::vector<MatrixR> basis_a;
  std::vector<MatrixR> basis_n;
  std::vector<MatrixR> basis_k;
  RootDatum root_datum;
  double killing_scale = 0.0;

  bool symplectic() const { return spec.family == Family::Symplectic; }
  int algebra_dim() const { return static_cast<int>(basis_a.size() + basis_n.size() + basis_k.size()); }

  template <class Vec>
  auto a_matrix(const Vec& coords) const {
    using Scalar = typename Vec::Scalar;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> diag = weights.cast<Scalar>() * coords;
    return Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>(diag.asDiagonal());
  }
  MatrixR a_matrix(const CartanVector& x) const { return a_matrix(x.coords); }
  MatrixC a_matrix(const CartanVectorC& x) const { return a_matrix(x.coords); }

  /// Least-squares a-coordinates of a diagonal (exact on the image of a_matrix).
  template <class Vec>
  auto coords_of_diagonal(const Vec& diag) const {
    using Scalar = typename Vec::Scalar;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out;
    if (symplectic()) {
      out.resize(coord_dim);
      for (int i = 0; i < coord_dim; ++i) out[i] = (diag[i] - diag[ambient_size - 1 - i]) / 2.0;
    } else {
      out = diag;
    }
    return out;
  }

  /// exp of an element of a_C given in coordinates.
  MatrixC exp_a(const VectorC& coords) const {
    VectorC d = weights.cast<cplx>() * coords;
    return MatrixC(d.array().exp().matrix().asDiagonal());
  }
  MatrixR exp_a(const VectorR& coords) const {
    VectorR d = weights * coords;
    return MatrixR(d.array().exp().matrix().asDiagonal());
  }

  MatrixR to_standard(const MatrixR& g) const { return frame.transpose() * g * frame; }
  MatrixC to_standard(const MatrixC& g) const { return frame.transpose().cast<cplx>() * g * frame.cast<cplx>(); }
  MatrixR from_standard(const MatrixR& g) const { return frame * g * frame.transpose(); }
  MatrixC from_standard(const MatrixC& g) const { return frame.cast<cplx>() * g * frame.transpose().cast<cplx>(); }

  /// Deviation of g from the defining constraint of G_C (det = 1 or g^T J g = J).
  template <class Derived>
  double group_residual(const Eigen::MatrixBase<Derived>& g) const {
    using Scalar = typename Derived::Scalar;
    if (symplectic()) {
      const auto j = form.cast<Scalar>();
      return (g.transpose() * j * g - j).norm() / (1.0 + g.squaredNorm());
    }
    return std::abs(g.determinant() - Scalar(1.0));
  }

  /// Deviation of Z from the Lie algebra (trace or Z^T J + J Z).
  template <class Derived>
  double algebra_residual(const Eigen::MatrixBase<Derived>& z) const {
    using Scalar = typename Derived::Scalar;
    if (symplectic()) {
      const auto j = form.cast<Scalar>();
      return (z.transpose() * j + j * z).norm();
    }
    return std::abs(z.trace());
  }
};

namespace detail {

/// Projector onto sp in the adapted frame: Y -> (Y - J^{-1} Y^T J) / 2.
inline MatrixR project_sp(const MatrixR& form, const MatrixR& y) {
  const MatrixR jinv = form.transpose();  // J orthogonal
  return 0.5 * (y - jinv * y.transpose() * form);
}

/// Appends the linearly independent members of `candidates` to `out`
/// (Gram-Schmidt under the Frobenius product, original vectors kept).
inline void append_independent(std::vector<MatrixR>& out, const std::vector<MatrixR>& candidates) {
  std::vector<MatrixR> ortho;
  for (const auto& c : candidates) {
    MatrixR r = c;
    for (const auto& q : ortho) r -= (r.cwiseProduct(q).sum()) * q;
    const double nrm = r.norm();
    if (nrm > 1e-9 * std::max(1.0, c.norm())) {
      ortho.push_back(r / nrm);
      out.push_back(c);
    }
  }
}

inline bool contains_vec(const std::vector<VectorR>& vs, const VectorR& v) {
  return std::any_of(vs.begin(), vs.end(), [&](const VectorR& w) { return (w - v).norm() < 1e-12; });
}

inline MatrixR reflection(const VectorR& alpha) {
  const auto r = alpha.size();
  return MatrixR::Identity(r, r) - 2.0 * alpha * alpha.transpose() / alpha.squaredNorm();
}

}  // namespace detail

inline GroupContext build_group(const GroupSpec& spec) {
  GroupContext ctx;
  ctx.spec = spec;
  const int n = spec.rank_param;
  switch (spec.family) {
    case Family::SpecialLinear:
      if (n < 2) throw Error(ErrorKind::Usage, "sl:<n> requires n >= 2");
      ctx.ambient_size = n;
      ctx.coord_dim = n;
      ctx.weights = MatrixR::Identity(n, n);
      ctx.frame = MatrixR::Identity(n, n);
      ctx.killing_scale = 2.0 * n;
      break;
    case Family::Symplectic: {
      if (n < 1) throw Error(ErrorKind::Usage, "sp:<n> requires n >= 1");
      const int m = 2 * n;
      ctx.ambient_size = m;
      ctx.coord_dim = n;
      ctx.weights = MatrixR::Zero(m, n);
      ctx.frame = MatrixR::Zero(m, m);
      for (int i = 0; i < n; ++i) {
        ctx.weights(i, i) = 1.0;
        ctx.weights(m - 1 - i, i) = -1.0;
        ctx.frame(i, i) = 1.0;              // standard e_i      -> position i
        ctx.frame(m - 1 - i, n + i) = 1.0;  // standard e_{n+i}  -> position 2n-1-i
      }
      MatrixR j_std = MatrixR::Zero(m, m);
      j_std.topRightCorner(n, n) = MatrixR::Identity(n, n);
      j_std.bottomLeftCorner(n, n) = -MatrixR::Identity(n, n);
      ctx.form = ctx.frame * j_std * ctx.frame.transpose();
      ctx.killing_scale = 2.0 * n + 2.0;
      break;
    }
    default:
      throw Error(ErrorKind::UnsupportedFamily, "family not implemented");
  }

  const int m = ctx.ambient_size;
  auto unit = [m](int p, int q) {
    MatrixR e = MatrixR::Zero(m, m);
    e(p, q) = 1.0;
    return e;
  };

  if (!ctx.symplectic()) {
    for (int i = 0; i + 1 < n; ++i) ctx.basis_a.push_back(unit(i, i) - unit(i + 1, i + 1));
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < p; ++q) ctx.basis_n.push_back(unit(p, q));
    for (int p = 0; p < m; ++p)
      for (int q = p + 1; q < m; ++q) ctx.basis_k.push_back(unit(p, q) - unit(q, p));
  } else {
    for (int i = 0; i < n; ++i) ctx.basis_a.push_back(unit(i, i) - unit(m - 1 - i, m - 1 - i));
    std::vector<MatrixR> cand_n, cand_k;
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < p; ++q) cand_n.push_back(detail::project_sp(ctx.form, unit(p, q)));
    for (int p = 0; p < m; ++p)
      for (int q = p + 1; q < m; ++q) cand_k.push_back(detail::project_sp(ctx.form, unit(p, q) - unit(q, p)));
    detail::append_independent(ctx.basis_n, cand_n);
    detail::append_independent(ctx.basis_k, cand_k);
    for (auto& b : ctx.basis_n) b /= b.cwiseAbs().maxCoeff();
    for (auto& b : ctx.basis_k) b /= b.cwiseAbs().maxCoeff();
  }

  // Roots: weights of the strictly lower-triangular entries carried by n.
  RootDatum& rd = ctx.root_datum;
  rd.type = ctx.symplectic() ? 'C' : 'A';
  rd.rank = ctx.symplectic() ? n : n - 1;
  std::vector<int> pos_mult;
  for (const auto& x : ctx.basis_n) {
    // every basis vector is a single root vector; read its weight off one entry
    int p = 0, q = 0;
    x.cwiseAbs().maxCoeff(&p, &q);
    const VectorR alpha = (ctx.weights.row(p) - ctx.weights.row(q)).transpose();
    auto it = std::find_if(rd.positive_roots.begin(), rd.positive_roots.end(),
                           [&](const VectorR& r) { return (r - alpha).norm() < 1e-12; });
    if (it == rd.positive_roots.end()) {
      rd.positive_roots.push_back(alpha);
      pos_mult.push_back(1);
    } else {
      ++pos_mult[static_cast<std::size_t>(it - rd.positive_roots.begin())];
    }
  }
  for (std::size_t i = 0; i < rd.positive_roots.size(); ++i) {
    rd.roots.push_back(rd.positive_roots[i]);
    rd.multiplicities.push_back(pos_mult[i]);
  }
  for (std::size_t i = 0; i < rd.positive_roots.size(); ++i) {
    rd.roots.push_back(-rd.positive_roots[i]);
    rd.multiplicities.push_back(pos_mult[i]);
  }
  for (const auto& alpha : rd.positive_roots) {
    bool decomposable = false;
    for (const auto& b : rd.positive_roots)
      if (detail::contains_vec(rd.positive_roots, alpha - b)) decomposable = true;
    if (!decomposable) rd.simple_roots.push_back(alpha);
  }
  for (const auto& s : rd.simple_roots) rd.weyl_generators.push_back(detail::reflection(s));
  // Both families are split, so Z_K(a) is finite and centralizer_k stays empty.
  return ctx;
}

/// Holomorphic extension of the Cartan involution, g -> (g^T)^{-1}.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> cartan_involution(
    const GroupContext& ctx, const Eigen::MatrixBase<Derived>& g) {
  using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (g.rows() != ctx.ambient_size || g.cols() != ctx.ambient_size)
    throw Error(ErrorKind::SingularInput, "matrix has the wrong size for " + ctx.spec.to_string());
  Eigen::FullPivLU<Mat> lu(g.transpose());
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw Error(ErrorKind::SingularInput, "cartan_involution of a singular matrix");
  return lu.inverse();
}

/// Real Killing form of g_C viewed as a real Lie algebra: 2 Re(c tr(ZW)).
template <class DA, class DB>
double killing_r(const GroupContext& ctx, const Eigen::MatrixBase<DA>& z, const Eigen::MatrixBase<DB>& w) {
  const cplx t = (z.template cast<cplx>() * w.template cast<cplx>()).trace();
  return 2.0 * ctx.killing_scale * t.real();
}

/// Killing form of the real algebra g, c tr(XY).
inline double killing(const GroupContext& ctx, const MatrixR& x, const MatrixR& y) {
  return ctx.killing_scale * (x * y).trace();
}

/// A functional on a_C that vanishes on a, represented by M with H_lambda = iM.
struct CovectorIA {
  CartanVector m_coords;
  bool regular = false;
};

inline double min_abs_root(const GroupContext& ctx, const VectorR& x) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : ctx.root_datum.positive_roots) best = std::min(best, std::abs(r.dot(x)));
  return best;
}

inline CovectorIA make_covector(const GroupContext& ctx, const CartanVector& m, double regular_floor = 0.0) {
  CovectorIA lam{m, false};
  lam.regular = min_abs_root(ctx, m.coords) > regular_floor;
  return lam;
}

inline MatrixC h_lambda(const GroupContext& ctx, const CovectorIA& lam) {
  return kI * ctx.a_matrix(lam.m_coords.coords).cast<cplx>();
}

/// lambda(Z) = kappa_R(Z, H_lambda) for Z in a_C.
inline double evaluate(const GroupContext& ctx, const CovectorIA& lam, const CartanVectorC& z) {
  return killing_r(ctx, ctx.a_matrix(z), h_lambda(ctx, lam));
}

/// Builds lambda from its values on i*a: lambda(iB) = <mu, B> (Euclidean in
/// a-coordinates). Solves the Gram system of the Killing pairing.
inline CovectorIA covector_from_dual(const GroupContext& ctx, const CartanVector& mu, double regular_floor = 0.0) {
  // lambda(iB) = kappa_R(iB, iM) = -2 c tr(a(B) a(M)) = -2c B^T (W^T W) M
  const MatrixR gram = ctx.weights.transpose() * ctx.weights;
  VectorR rhs = mu.coords;
  if (!ctx.symplectic()) rhs.array() -= rhs.mean();  // mu only matters on traceless B
  VectorR m = gram.ldlt().solve(rhs) / (-2.0 * ctx.killing_scale);
  if (!ctx.symplectic()) m.array() -= m.mean();
  return make_covector(ctx, CartanVector(m), regular_floor);
}

/// p_{a_C}: projection along k_C + n_C. Neither k (antisymmetric) nor n
/// (strictly lower) touches the diagonal, so the a-part is the diagonal.
template <class Derived>
CartanVectorC project_a(const GroupContext& ctx, const Eigen::MatrixBase<Derived>& z) {
  const VectorC d = z.diagonal().template cast<cplx>();
  return CartanVectorC(ctx.coords_of_diagonal(d));
}

struct AlgebraSplit {
  MatrixC n_part;
  MatrixC a_part;
  MatrixC k_part;
};

/// Z = Z_n + Z_a + Z_k. The strictly upper part of Z can only come from k.
template <class Derived>
AlgebraSplit split_algebra(const GroupContext& ctx, const Eigen::MatrixBase<Derived>& z) {
  const MatrixC zc = z.template cast<cplx>();
  AlgebraSplit out;
  out.a_part = ctx.a_matrix(project_a(ctx, zc));
  const MatrixC upper = zc.template triangularView<Eigen::StrictlyUpper>();
  out.k_part = upper - upper.transpose();
  out.n_part = zc - out.a_part - out.k_part;
  return out;
}

// ---- random elements -------------------------------------------------------

/// Haar-distributed element of K. SO(n) from a sign-fixed QR of a Gaussian
/// matrix; for Sp(n,R) the same construction on U(n), embedded as
/// A + iB -> [[A, -B], [B, A]] and moved to the adapted frame.
template <class Rng>
MatrixR haar_k(const GroupContext& ctx, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  if (!ctx.symplectic()) {
    const int n = ctx.ambient_size;
    MatrixR a(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) a(i, j) = normal(rng);
    Eigen::HouseholderQR<MatrixR> qr(a);
    MatrixR q = qr.householderQ();
    const MatrixR r = qr.matrixQR();
    for (int i = 0; i < n; ++i)
      if (r(i, i) < 0) q.col(i) *= -1.0;
    if (q.determinant() < 0) q.col(0) *= -1.0;
    return q;
  }
  const int n = ctx.coord_dim;
  MatrixC a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = cplx(normal(rng), normal(rng));
  Eigen::HouseholderQR<MatrixC> qr(a);
  MatrixC q = qr.householderQ();
  const MatrixC r = qr.matrixQR();
  for (int i = 0; i < n; ++i) {
    const double mag = std::abs(r(i, i));
    if (mag > 0) q.col(i) *= r(i, i) / mag;
  }
  MatrixR std_form(2 * n, 2 * n);
  std_form << q.real(), -q.imag(), q.imag(), q.real();
  return ctx.from_standard(std_form);
}

/// Random element of p (symmetric part of g) with Frobenius norm uniform in [0, max_norm].
template <class Rng>
MatrixR random_p(const GroupContext& ctx, Rng& rng, double max_norm) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int m = ctx.ambient_size;
  MatrixR s(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) s(i, j) = normal(rng);
  s = (0.5 * (s + s.transpose())).eval();
  if (ctx.symplectic()) {
    s = detail::project_sp(ctx.form, s);
  } else {
    s -= (s.trace() / m) * MatrixR::Identity(m, m);
  }
  const double nrm = s.norm();
  if (nrm == 0.0) return s;
  return s * (max_norm * unif(rng) / nrm);
}

/// Random element of k with Frobenius norm 1.
template <class Rng>
MatrixR random_k_direction(const GroupContext& ctx, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixR x = MatrixR::Zero(ctx.ambient_size, ctx.ambient_size);
  for (const auto& b : ctx.basis_k) x += normal(rng) * b;
  return x / x.norm();
}

}  // namespace crown
