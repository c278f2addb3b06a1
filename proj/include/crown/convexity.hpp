#pragma once

// f_a(k) = log a(k a) on K, its lambda-components f_{a,lambda}, their
// gradients, gradient ascent to the critical set, and the Monte-Carlo
// verifiers for the real (Kostant) and complex convexity theorems.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "crown/iwasawa.hpp"
#include "crown/lie_core.hpp"
#include "crown/parallel.hpp"
#include "crown/report.hpp"
#include "crown/rng.hpp"
#include "crown/weyl_hull.hpp"

namespace crown {

inline constexpr double kRegularFloor = 1e-3;
inline constexpr double kReconstructionTol = 1e-10;
inline constexpr double kBranchResidualMax = 1e-8;
inline constexpr double kFullGNorm = 1.5;

enum class SampleMode { KOnly, FullG };

// ---- f_a and f_{a,lambda} ----------------------------------------------------

/// Factors of k exp(a_point), continued along t -> k exp(Re a_point) exp(i t Im a_point).
inline IwasawaFactors f_a_factors(const GroupContext& ctx, const CartanVectorC& a_point, const MatrixR& k,
                                  int steps_hint = kDefaultSteps) {
  const CartanVector x = a_point.imag();
  if (!(omega_margin(ctx, x) > 0.0)) throw Error(ErrorKind::OmegaViolation, "Im(a_point) lies outside Omega");
  const MatrixC base = (k * ctx.exp_a(a_point.real().coords)).cast<cplx>();
  const VectorC ix = kI * x.coords.cast<cplx>();
  return project_along(ctx, [&](double t) -> MatrixC { return base * ctx.exp_a(VectorC(t * ix)); }, steps_hint);
}

inline CartanVectorC f_a(const GroupContext& ctx, const CartanVectorC& a_point, const MatrixR& k) {
  return f_a_factors(ctx, a_point, k).log_a;
}

inline double lambda_of_factors(const GroupContext& ctx, const IwasawaFactors& f, const CovectorIA& lam) {
  if (f.branch_residual > kBranchResidualMax)
    throw Error(ErrorKind::NonRealValue, "branch residual " + std::to_string(f.branch_residual) + " exceeds 1e-8");
  return evaluate(ctx, lam, f.log_a);
}

inline double f_a_lambda(const GroupContext& ctx, const CartanVectorC& a_point, const MatrixR& k, const CovectorIA& lam) {
  return lambda_of_factors(ctx, f_a_factors(ctx, a_point, k), lam);
}

/// Riemannian metric on k: <X, Y> = -kappa_R(X, Y).
inline double k_metric(const GroupContext& ctx, const MatrixR& x, const MatrixR& y) { return -killing_r(ctx, x, y); }

/// d/dt f_{a,lambda}(exp(tX) k) via lambda(p_a(Ad(b)^{-1} X)), b = n(ka) a(ka).
inline double derivative_via_projection(const GroupContext& ctx, const IwasawaFactors& f, const CovectorIA& lam,
                                        const MatrixR& x) {
  const MatrixC b = triangular_part(ctx, f);
  const MatrixC conj = b.triangularView<Eigen::Lower>().solve(MatrixC(x.cast<cplx>() * b));
  return evaluate(ctx, lam, project_a(ctx, conj));
}

/// Ad(n(ka)) H_lambda.
inline MatrixC transported_h(const GroupContext& ctx, const IwasawaFactors& f, const CovectorIA& lam) {
  const MatrixC nh = f.n_part * h_lambda(ctx, lam);
  // (n H) n^{-1} = ((n^{-T}) (n H)^T)^T
  const MatrixC right = f.n_part.transpose().triangularView<Eigen::Upper>().solve(MatrixC(nh.transpose()));
  return right.transpose();
}

/// d/dt f_{a,lambda}(exp(tX) k) via kappa_R(X, Ad(n(ka)) H_lambda).
inline double derivative_via_killing(const GroupContext& ctx, const IwasawaFactors& f, const CovectorIA& lam,
                                     const MatrixR& x) {
  return killing_r(ctx, x, transported_h(ctx, f, lam));
}

struct Gradient {
  MatrixR t;
  double f_value = 0.0;
  double norm = 0.0;
  IwasawaFactors factors;
};

/// Riesz representative of X -> kappa_R(X, Ad(n) H_lambda) on k under the metric -kappa_R.
inline Gradient grad_f(const GroupContext& ctx, const CartanVectorC& a_point, const MatrixR& k, const CovectorIA& lam) {
  Gradient out;
  out.factors = f_a_factors(ctx, a_point, k);
  out.f_value = lambda_of_factors(ctx, out.factors, lam);
  const MatrixC w = transported_h(ctx, out.factors, lam);
  const auto dim = static_cast<Eigen::Index>(ctx.basis_k.size());
  MatrixR gram(dim, dim);
  VectorR rhs(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    rhs[i] = killing_r(ctx, ctx.basis_k[static_cast<std::size_t>(i)], w);
    for (Eigen::Index j = 0; j < dim; ++j)
      gram(i, j) = k_metric(ctx, ctx.basis_k[static_cast<std::size_t>(i)], ctx.basis_k[static_cast<std::size_t>(j)]);
  }
  const VectorR coef = gram.llt().solve(rhs);
  out.t = MatrixR::Zero(ctx.ambient_size, ctx.ambient_size);
  for (Eigen::Index i = 0; i < dim; ++i) out.t += coef[i] * ctx.basis_k[static_cast<std::size_t>(i)];
  out.norm = std::sqrt(std::max(0.0, k_metric(ctx, out.t, out.t)));
  return out;
}

/// max over w of lambda(i w X).
inline double max_weyl_value(const GroupContext& ctx, const CovectorIA& lam, const CartanVector& x) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& w : weyl_group(ctx)) {
    const CartanVector wx(w.action * x.coords);
    best = std::max(best, evaluate(ctx, lam, CartanVectorC::from_parts(CartanVector(VectorR::Zero(wx.size())), wx)));
  }
  return best;
}

// ---- gradient ascent -----------------------------------------------------------

struct AscentOptions {
  int max_iter = 5000;
  double tol = 1e-8;
  double armijo = 0.1;
  double shrink = 0.5;
  double initial_step = 1.0;
};

struct CriticalRun {
  MatrixR start_k;
  MatrixR end_k;
  std::vector<double> f_values;
  double grad_norm_final = 0.0;
  double matched_weyl_value = 0.0;
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Rounding level of a computed f value; increases below this are not resolvable.
inline double f_noise(double f) { return 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f)); }

/// Riemannian gradient ascent k <- exp(eta T) k with Armijo backtracking.
/// Each search starts from a Barzilai-Borwein step (initial_step on the first
/// iteration). Once the Armijo increase drops below the rounding level of f, a
/// step is accepted if it keeps f within rounding and shrinks |T|.
/// Non-convergence is reported through `converged`, not thrown.
inline CriticalRun ascend_critical(const GroupContext& ctx, const CartanVectorC& a_point, const MatrixR& k0,
                                   const CovectorIA& lam, const AscentOptions& opt = {}) {
  const CartanVector x = a_point.imag();
  if (!lam.regular || min_abs_root(ctx, lam.m_coords.coords) == 0.0)
    throw Error(ErrorKind::Precondition, "ascend_critical needs a regular lambda");
  if (!(min_abs_root(ctx, x.coords) > 0.0)) throw Error(ErrorKind::Precondition, "ascend_critical needs regular Im(a)");

  CriticalRun run;
  run.start_k = k0;
  run.matched_weyl_value = max_weyl_value(ctx, lam, x);
  MatrixR k = k0;
  Gradient g = grad_f(ctx, a_point, k, lam);
  run.f_values.push_back(g.f_value);
  double eta0 = opt.initial_step;
  while (g.norm >= opt.tol && run.iterations < opt.max_iter) {
    const double slope = g.norm * g.norm;
    double eta = eta0;
    bool moved = false;
    Gradient next;
    MatrixR trial;
    while (eta > 1e-14) {
      trial = MatrixR((eta * g.t).exp()) * k;
      const double gain = opt.armijo * eta * slope;
      const double noise = f_noise(g.f_value);
      if (gain > noise) {
        const double f_trial = f_a_lambda(ctx, a_point, trial, lam);
        if (f_trial >= g.f_value + gain) {
          next = grad_f(ctx, a_point, trial, lam);
          moved = true;
          break;
        }
      } else {
        next = grad_f(ctx, a_point, trial, lam);
        if (next.f_value >= g.f_value - noise && next.norm < g.norm) {
          moved = true;
          break;
        }
      }
      eta *= opt.shrink;
    }
    if (!moved) break;
    ++run.iterations;
    // BB1 step from s = eta T_old and y = T_old - T_new (ascent sign).
    const MatrixR y = g.t - next.t;
    const double sy = eta * k_metric(ctx, g.t, y);
    const double ss = eta * eta * slope;
    eta0 = sy > 0.0 ? std::clamp(ss / sy, 1e-4, 1e4) : opt.initial_step;
    k = trial;
    g = std::move(next);
    run.f_values.push_back(g.f_value);
  }
  run.end_k = k;
  run.grad_norm_final = g.norm;
  run.converged = g.norm < opt.tol;
  run.gap = std::abs(g.f_value - run.matched_weyl_value);
  return run;
}

// ---- separating functional -----------------------------------------------------

namespace detail {

/// Wolfe's minimum-norm-point algorithm on conv(points).
inline VectorR min_norm_point(const std::vector<VectorR>& points) {
  const std::size_t np = points.size();
  std::size_t first = 0;
  for (std::size_t i = 1; i < np; ++i)
    if (points[i].squaredNorm() < points[first].squaredNorm()) first = i;
  std::vector<std::size_t> active{first};
  std::vector<double> weight{1.0};
  VectorR x = points[first];
  double scale = 0.0;
  for (const auto& p : points) scale = std::max(scale, p.squaredNorm());
  const double eps = 1e-14 * std::max(scale, 1e-300);

  for (int major = 0; major < 1000; ++major) {
    std::size_t j = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < np; ++i) {
      const double v = x.dot(points[i]);
      if (v < best) {
        best = v;
        j = i;
      }
    }
    if (best >= x.squaredNorm() - eps) break;
    if (std::find(active.begin(), active.end(), j) != active.end()) break;
    active.push_back(j);
    weight.push_back(0.0);

    for (int minor = 0; minor < 1000; ++minor) {
      const auto s = static_cast<Eigen::Index>(active.size());
      MatrixR kkt = MatrixR::Zero(s + 1, s + 1);
      VectorR rhs = VectorR::Zero(s + 1);
      for (Eigen::Index a = 0; a < s; ++a) {
        for (Eigen::Index b = 0; b < s; ++b)
          kkt(a, b) = points[active[static_cast<std::size_t>(a)]].dot(points[active[static_cast<std::size_t>(b)]]);
        kkt(a, s) = 1.0;
        kkt(s, a) = 1.0;
      }
      rhs[s] = 1.0;
      const VectorR sol = kkt.completeOrthogonalDecomposition().solve(rhs);
      const VectorR mu = sol.head(s);
      if ((mu.array() > 1e-15).all()) {
        weight.assign(mu.data(), mu.data() + s);
        break;
      }
      double theta = 1.0;
      for (Eigen::Index a = 0; a < s; ++a) {
        const double wa = weight[static_cast<std::size_t>(a)];
        if (mu[a] <= 1e-15 && wa - mu[a] > 0) theta = std::min(theta, wa / (wa - mu[a]));
      }
      std::vector<std::size_t> keep_idx;
      std::vector<double> keep_w;
      for (Eigen::Index a = 0; a < s; ++a) {
        const double wa = weight[static_cast<std::size_t>(a)];
        const double nw = wa + theta * (mu[a] - wa);
        if (nw > 1e-15) {
          keep_idx.push_back(active[static_cast<std::size_t>(a)]);
          keep_w.push_back(nw);
        }
      }
      active = std::move(keep_idx);
      weight = std::move(keep_w);
      if (active.empty()) break;
    }
    const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
    x = VectorR::Zero(x.size());
    for (std::size_t a = 0; a < active.size(); ++a) x += (weight[a] / total) * points[active[a]];
  }
  return x;
}

}  // namespace detail

/// Euclidean separation gap <mu, Y> - max_w <mu, wX>.
inline double separation_gap(const GroupContext& ctx, const VectorR& mu, const CartanVector& x, const CartanVector& y) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& o : weyl_orbit(ctx, x)) best = std::max(best, mu.dot(o.coords));
  return mu.dot(y.coords) - best;
}

/// Regular lambda in i a_R^* with lambda(iY) > max over conv(W X) of lambda(i .).
/// mu = Y - proj_hull(Y), nudged along a fixed regular vector if it sits on a wall.
inline CovectorIA separating_functional(const GroupContext& ctx, const CartanVector& x, const CartanVector& y) {
  if (hull_contains(ctx, x, y, 0.0).inside) throw Error(ErrorKind::InsideHull, "Y lies in conv(W X)");
  std::vector<VectorR> shifted;
  for (const auto& o : weyl_orbit(ctx, x)) shifted.push_back(o.coords - y.coords);
  VectorR mu = -detail::min_norm_point(shifted);
  if (!ctx.symplectic()) mu.array() -= mu.mean();
  const double gap = separation_gap(ctx, mu, x, y);
  if (!(gap > 0.0)) throw Error(ErrorKind::NumericalBreakdown, "projection onto the orbit hull failed to separate");

  VectorR rho(ctx.coord_dim);
  for (int i = 0; i < ctx.coord_dim; ++i)
    rho[i] = ctx.symplectic() ? static_cast<double>(ctx.coord_dim - i) : 0.5 * (ctx.coord_dim - 1) - i;
  const double floor = 1e-9 * mu.norm();
  VectorR candidate = mu;
  const double eps0 = gap / (4.0 * rho.norm() * (x.coords.norm() + y.coords.norm() + 1e-300));
  for (int attempt = 1; min_abs_root(ctx, candidate) <= floor && attempt <= 8; ++attempt)
    candidate = mu + (eps0 / attempt) * rho;
  if (!(separation_gap(ctx, candidate, x, y) > 0.0)) candidate = mu;
  return covector_from_dual(ctx, CartanVector(candidate), floor);
}

// ---- normalizer -------------------------------------------------------------

/// N_K(a) as the products k_w m, m in Z_K(a) = diagonal signs inside K.
inline std::vector<MatrixR> normalizer_elements(const GroupContext& ctx) {
  std::vector<MatrixR> centralizer;
  const int r = ctx.coord_dim;
  for (std::uint32_t s = 0; s < (1u << r); ++s) {
    VectorR eps(r);
    for (int i = 0; i < r; ++i) eps[i] = (s >> i) & 1u ? -1.0 : 1.0;
    if (ctx.symplectic()) {
      VectorR d(2 * r);
      d << eps, eps;
      centralizer.push_back(ctx.from_standard(MatrixR(d.asDiagonal())));
    } else if (eps.prod() > 0) {
      centralizer.push_back(MatrixR(eps.asDiagonal()));
    }
  }
  std::vector<MatrixR> out;
  for (const auto& w : weyl_group(ctx))
    for (const auto& m : centralizer) out.push_back(w.k_rep * m);
  return out;
}

inline double distance_to_normalizer(const std::vector<MatrixR>& normalizer, const MatrixR& k) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& m : normalizer) best = std::min(best, (k - m).norm());
  return best;
}

// ---- verifiers -----------------------------------------------------------------

namespace detail {

inline SampleRecord indeterminate_record(const std::exception& e) {
  SampleRecord r;
  r.indeterminate = true;
  r.error = e.what();
  return r;
}

inline void check_reconstruction(SampleRecord& rec, const GroupContext& ctx, const IwasawaFactors& f, const MatrixC& z) {
  const double res = reconstruction_residual(ctx, f, z);
  auto& slot = rec.max_stats["max_reconstruction_residual"];
  slot = std::max(slot, res);
  if (res > kReconstructionTol) rec.failed_check = true;
}

template <class Rng>
MatrixR sample_base(const GroupContext& ctx, Rng& rng, SampleMode mode) {
  MatrixR k = haar_k(ctx, rng);
  if (mode == SampleMode::FullG) k = k * MatrixR(random_p(ctx, rng, kFullGNorm).exp());
  return k;
}

inline VerificationReport start_report(const std::string& command, const GroupContext& ctx, std::uint64_t seed) {
  VerificationReport r;
  r.command = command;
  r.group = ctx.spec;
  r.seed = seed;
  r.tolerance_set["pivot_floor"] = kPivotFloor;
  r.tolerance_set["reconstruction"] = kReconstructionTol;
  return r;
}

}  // namespace detail

/// Samples k (optionally g = k exp(S)) and X in omega and checks
/// Im log a(g exp(iX)) in conv(W X).
inline VerificationReport verify_complex_convexity(const GroupContext& ctx, const OmegaSpec& omega, std::size_t samples,
                                                   std::uint64_t seed, double tol = 1e-9,
                                                   SampleMode mode = SampleMode::KOnly) {
  Stopwatch clock;
  VerificationReport report = detail::start_report("verify-convexity", ctx, seed);
  report.omega = omega;
  report.tolerance_set["hull"] = tol;
  report.tolerance_set["branch_residual"] = kBranchResidualMax;
  if (mode == SampleMode::FullG) report.tolerance_set["p_norm_bound"] = kFullGNorm;
  report.details["mode"] = mode == SampleMode::FullG ? "full-G" : "K";

  auto records = parallel_map<SampleRecord>(samples, [&](std::size_t i) {
    try {
      auto rng = CounterRng::substream(seed, i);
      const MatrixR g = detail::sample_base(ctx, rng, mode);
      const CartanVector x = sample_omega_one(ctx, omega, rng);
      const IwasawaFactors f = project_complex(ctx, g, x);
      const CartanVector y = f.log_a.imag();
      const HullResult h = hull_contains(ctx, x, y, tol);
      SampleRecord rec;
      rec.margin = h.margin;
      detail::check_reconstruction(rec, ctx, f, make_crown_point(ctx, g, x).z);
      rec.max_stats["max_branch_residual"] = f.branch_residual;
      rec.max_stats["max_path_steps"] = f.path_steps;
      if (f.branch_residual > kBranchResidualMax) rec.failed_check = true;
      rec.witness = Json{{"sample", i}, {"g", to_json(g)}, {"x", to_json(x)}, {"im_log_a", to_json(y)}};
      if (!h.inside) {
        const CovectorIA lam = separating_functional(ctx, x, y);
        rec.witness["separating_m"] = to_json(lam.m_coords);
      }
      return rec;
    } catch (const std::exception& e) {
      return detail::indeterminate_record(e);
    }
  });
  fold_records(report, records, tol);
  report.wall_time_ms = clock.elapsed_ms();
  return report;
}

/// Real convexity: log a(k exp X) in conv(W X), and every vertex w X is
/// attained at the normalizer representative k_w.
inline VerificationReport verify_kostant_real(const GroupContext& ctx, std::size_t samples, std::uint64_t seed,
                                              double tol = 1e-9, double box = 1.5) {
  Stopwatch clock;
  VerificationReport report = detail::start_report("verify-kostant", ctx, seed);
  constexpr double kVertexTol = 1e-10;
  report.tolerance_set["hull"] = tol;
  report.tolerance_set["vertex"] = kVertexTol;
  report.tolerance_set["box"] = box;
  const auto weyl = weyl_group(ctx);

  auto records = parallel_map<SampleRecord>(samples, [&](std::size_t i) {
    try {
      auto rng = CounterRng::substream(seed, i);
      const MatrixR k = haar_k(ctx, rng);
      std::uniform_real_distribution<double> unif(-box, box);
      VectorR xv(ctx.coord_dim);
      for (auto& v : xv) v = unif(rng);
      if (!ctx.symplectic()) xv.array() -= xv.mean();
      const CartanVector x(xv);
      const MatrixR g = k * ctx.exp_a(x.coords);
      const IwasawaFactors f = decompose_real(ctx, g);
      const CartanVector y = f.log_a.real();
      SampleRecord rec;
      rec.margin = hull_contains(ctx, x, y, tol).margin;
      detail::check_reconstruction(rec, ctx, f, g.cast<cplx>());
      double vertex_err = 0.0;
      for (const auto& w : weyl) {
        const IwasawaFactors fw = decompose_real(ctx, MatrixR(w.k_rep * ctx.exp_a(x.coords)));
        vertex_err = std::max(vertex_err, (fw.log_a.real().coords - w.action * x.coords).cwiseAbs().maxCoeff());
      }
      rec.max_stats["max_vertex_error"] = vertex_err;
      if (vertex_err > kVertexTol) rec.failed_check = true;
      rec.witness = Json{{"sample", i}, {"k", to_json(k)}, {"x", to_json(x)}, {"log_a", to_json(y)}};
      return rec;
    } catch (const std::exception& e) {
      return detail::indeterminate_record(e);
    }
  });
  fold_records(report, records, tol);
  report.metrics["vertices_checked"] = static_cast<double>(weyl.size() * report.samples_completed);
  report.wall_time_ms = clock.elapsed_ms();
  return report;
}

/// Contrapositive of "k a in N A_C K_C implies k in N_K(a)": for k far from
/// the normalizer, n(k exp(iX)) must have a non-real entry.
inline VerificationReport lemma24_probe(const GroupContext& ctx, const CartanVector& x, std::size_t samples,
                                        std::uint64_t seed) {
  Stopwatch clock;
  VerificationReport report = detail::start_report("lemma24", ctx, seed);
  constexpr double kImFloor = 1e-10;
  constexpr double kFarFromNormalizer = 0.1;
  report.tolerance_set["im_n_floor"] = kImFloor;
  report.tolerance_set["normalizer_distance"] = kFarFromNormalizer;
  report.tolerance_set["regular_floor"] = kRegularFloor;
  if (!(min_abs_root(ctx, x.coords) > kRegularFloor) || !(omega_margin(ctx, x) > 0.0))
    throw Error(ErrorKind::Precondition, "lemma24 probe needs a regular X in Omega");
  report.details["x"] = to_json(x);
  const auto normalizer = normalizer_elements(ctx);

  auto records = parallel_map<SampleRecord>(samples, [&](std::size_t i) {
    try {
      auto rng = CounterRng::substream(seed, i);
      MatrixR k;
      double dist = 0.0;
      for (int attempt = 0;; ++attempt) {
        if (attempt == 10000) throw Error(ErrorKind::RejectionStall, "no Haar sample far from N_K(a)");
        k = haar_k(ctx, rng);
        dist = distance_to_normalizer(normalizer, k);
        if (dist > kFarFromNormalizer) break;
      }
      const IwasawaFactors f = project_complex(ctx, k, x);
      const double im_n = f.n_part.imag().cwiseAbs().maxCoeff();
      SampleRecord rec;
      rec.margin = im_n - kImFloor;
      rec.min_stats["min_im_n"] = im_n;
      rec.min_stats["min_normalizer_distance"] = dist;
      detail::check_reconstruction(rec, ctx, f, make_crown_point(ctx, k, x).z);
      rec.witness = Json{{"sample", i}, {"k", to_json(k)}, {"max_im_n", im_n}};
      return rec;
    } catch (const std::exception& e) {
      return detail::indeterminate_record(e);
    }
  });
  fold_records(report, records, 0.0);
  report.wall_time_ms = clock.elapsed_ms();
  return report;
}

/// Regular X sampled from scale*Omega with min |alpha(X)| above the floor.
template <class Rng>
CartanVector sample_regular(const GroupContext& ctx, Rng& rng, double scale = 1.0, double floor = kRegularFloor) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    CartanVector x = sample_omega_one(ctx, OmegaSpec::scaled(scale), rng);
    if (min_abs_root(ctx, x.coords) > floor) return x;
  }
  throw Error(ErrorKind::RejectionStall, "no regular sample found");
}

/// Regular lambda with M Gaussian in a-coordinates.
template <class Rng>
CovectorIA sample_lambda(const GroupContext& ctx, Rng& rng, double floor = kRegularFloor) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    VectorR m(ctx.coord_dim);
    for (auto& v : m) v = normal(rng);
    if (!ctx.symplectic()) m.array() -= m.mean();
    CovectorIA lam = make_covector(ctx, CartanVector(m), floor);
    if (lam.regular) return lam;
  }
  throw Error(ErrorKind::RejectionStall, "no regular lambda found");
}

/// Gradient formula against central differences, and the two closed-form
/// derivative evaluations against each other.
inline VerificationReport gradient_check(const GroupContext& ctx, std::size_t configs, std::uint64_t seed,
                                         double h = 1e-5) {
  Stopwatch clock;
  VerificationReport report = detail::start_report("gradient-check", ctx, seed);
  constexpr double kMedianTol = 1e-7;
  constexpr double kMaxTol = 1e-5;
  constexpr double kPathAgreement = 1e-10;
  constexpr double kRelFloor = 1e-6;
  report.tolerance_set["fd_step"] = h;
  report.tolerance_set["fd_median_rel"] = kMedianTol;
  report.tolerance_set["fd_max_rel"] = kMaxTol;
  report.tolerance_set["path_agreement"] = kPathAgreement;
  report.tolerance_set["rel_denominator_floor"] = kRelFloor;

  auto records = parallel_map<SampleRecord>(configs, [&](std::size_t i) {
    try {
      auto rng = CounterRng::substream(seed, i);
      const MatrixR k = haar_k(ctx, rng);
      const CartanVector x = sample_regular(ctx, rng, 0.9);
      const CovectorIA lam = sample_lambda(ctx, rng);
      const MatrixR dir = random_k_direction(ctx, rng);
      const CartanVectorC a_point = CartanVectorC::from_parts(CartanVector(VectorR::Zero(ctx.coord_dim)), x);

      const Gradient g = grad_f(ctx, a_point, k, lam);
      const double analytic = k_metric(ctx, dir, g.t);
      const double plus = f_a_lambda(ctx, a_point, MatrixR((h * dir).exp()) * k, lam);
      const double minus = f_a_lambda(ctx, a_point, MatrixR((-h * dir).exp()) * k, lam);
      const double fd = (plus - minus) / (2.0 * h);
      const double rel = std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), kRelFloor});
      const double via_proj = derivative_via_projection(ctx, g.factors, lam, dir);
      const double via_kill = derivative_via_killing(ctx, g.factors, lam, dir);
      const double path_gap = std::abs(via_proj - via_kill) / std::max(1.0, std::abs(via_kill));

      SampleRecord rec;
      rec.margin = kMaxTol - rel;
      rec.max_stats["max_fd_rel_error"] = rel;
      rec.max_stats["max_path_disagreement"] = path_gap;
      rec.max_stats["max_riesz_disagreement"] = std::abs(analytic - via_kill) / std::max(1.0, std::abs(via_kill));
      if (path_gap > kPathAgreement) rec.failed_check = true;
      rec.witness = Json{{"sample", i}, {"k", to_json(k)}, {"x", to_json(x)}, {"m", to_json(lam.m_coords)},
                         {"analytic", analytic}, {"finite_difference", fd}, {"rel_error", rel}};
      rec.observations["fd_rel_error"] = rel;
      return rec;
    } catch (const std::exception& e) {
      return detail::indeterminate_record(e);
    }
  });
  std::vector<double> rels;
  for (const auto& r : records)
    if (auto it = r.observations.find("fd_rel_error"); it != r.observations.end()) rels.push_back(it->second);
  fold_records(report, records, 0.0);
  if (!rels.empty()) {
    std::sort(rels.begin(), rels.end());
    const std::size_t n = rels.size();
    const double median = n % 2 ? rels[n / 2] : 0.5 * (rels[n / 2 - 1] + rels[n / 2]);
    report.metrics["median_fd_rel_error"] = median;
    if (median >= kMedianTol) ++report.violations;
  }
  report.wall_time_ms = clock.elapsed_ms();
  return report;
}

/// Gradient ascent of f_{exp(iX),lambda} from Haar starts; converged runs
/// must reach max_w lambda(i w X). A run that does not converge is flagged;
/// the batch fails only if fewer than min_rate of the runs converge.
inline VerificationReport critical_points(const GroupContext& ctx, std::size_t runs, std::uint64_t seed,
                                          const AscentOptions& opt = {}, double min_rate = 0.95) {
  Stopwatch clock;
  VerificationReport report = detail::start_report("critical-points", ctx, seed);
  constexpr double kGapTol = 1e-6;
  report.tolerance_set["gap"] = kGapTol;
  report.tolerance_set["grad_tol"] = opt.tol;
  report.tolerance_set["max_iter"] = opt.max_iter;
  report.tolerance_set["armijo"] = opt.armijo;
  report.tolerance_set["shrink"] = opt.shrink;
  report.tolerance_set["initial_step"] = opt.initial_step;
  report.tolerance_set["regular_floor"] = kRegularFloor;
  report.tolerance_set["min_convergence_rate"] = min_rate;

  std::vector<int> converged(runs, 0);
  auto records = parallel_map<SampleRecord>(runs, [&](std::size_t i) {
    try {
      auto rng = CounterRng::substream(seed, i);
      const MatrixR k0 = haar_k(ctx, rng);
      const CartanVector x = sample_regular(ctx, rng, 0.9);
      const CovectorIA lam = sample_lambda(ctx, rng);
      const CartanVectorC a_point = CartanVectorC::from_parts(CartanVector(VectorR::Zero(ctx.coord_dim)), x);
      const CriticalRun run = ascend_critical(ctx, a_point, k0, lam, opt);
      SampleRecord rec;
      bool monotone = true;
      for (std::size_t s = 1; s < run.f_values.size(); ++s)
        if (run.f_values[s] < run.f_values[s - 1] - f_noise(run.f_values[s - 1])) monotone = false;
      if (!monotone) rec.failed_check = true;
      if (run.converged) {
        converged[i] = 1;
        rec.margin = kGapTol - run.gap;
        rec.max_stats["max_gap_converged"] = run.gap;
      }
      rec.max_stats["max_iterations"] = run.iterations;
      rec.witness = Json{{"sample", i},           {"x", to_json(x)},
                         {"m", to_json(lam.m_coords)}, {"converged", run.converged},
                         {"iterations", run.iterations}, {"gap", run.gap},
                         {"grad_norm_final", run.grad_norm_final}, {"matched_weyl_value", run.matched_weyl_value}};
      return rec;
    } catch (const std::exception& e) {
      return detail::indeterminate_record(e);
    }
  });
  fold_records(report, records, 0.0);
  const auto n_conv = static_cast<double>(std::count(converged.begin(), converged.end(), 1));
  const double rate = runs ? n_conv / static_cast<double>(runs) : 1.0;
  report.metrics["convergence_rate"] = rate;
  report.metrics["non_converged"] = static_cast<double>(runs) - n_conv;
  if (rate < min_rate) ++report.violations;
  report.wall_time_ms = clock.elapsed_ms();
  return report;
}

}  // namespace crown
