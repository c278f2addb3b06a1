#pragma once

// Siegel upper half-space S+ = Symm(n) + i Symm_+(n), the leading minors
// Delta_j and their ratios chi_j, and the positivity checks Delta_j != 0 and
// Im chi_j > 0 on S+.
//
// Matrices of Sp(n,R) here use the standard block form [[A, B], [C, D]]
// acting by w -> (A w + B)(C w + D)^{-1}.

#include <cmath>
#include <vector>

#include "crown/convexity.hpp"
#include "crown/iwasawa.hpp"
#include "crown/report.hpp"

namespace crown {

inline constexpr double kSiegelEps = 1e-3;
inline constexpr double kMinorFloor = 1e-12;

struct SiegelPoint {
  MatrixC z;
};

enum class SiegelStrategy { Direct, Orbit, Anchor };

inline const char* to_string(SiegelStrategy s) {
  switch (s) {
    case SiegelStrategy::Direct: return "direct";
    case SiegelStrategy::Orbit: return "orbit";
    case SiegelStrategy::Anchor: return "anchor";
  }
  return "?";
}

struct SiegelSample {
  SiegelPoint point;
  SiegelStrategy strategy = SiegelStrategy::Direct;
};

/// Smallest eigenvalue of Im z (z symmetric).
inline double min_imag_eigenvalue(const MatrixC& z) {
  const MatrixR y = 0.5 * (z.imag() + z.imag().transpose());
  return Eigen::SelfAdjointEigenSolver<MatrixR>(y, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

inline bool in_siegel(const MatrixC& z, double sym_tol = 1e-10) {
  return (z - z.transpose()).cwiseAbs().maxCoeff() <= sym_tol * std::max(1.0, z.cwiseAbs().maxCoeff()) &&
         min_imag_eigenvalue(z) > 0.0;
}

/// (A w + B)(C w + D)^{-1} for g = [[A, B], [C, D]] in Sp(n,R).
inline MatrixC fractional_action(const MatrixR& g, const MatrixC& w) {
  const Eigen::Index n = w.rows();
  const MatrixC a = g.topLeftCorner(n, n).cast<cplx>(), b = g.topRightCorner(n, n).cast<cplx>();
  const MatrixC c = g.bottomLeftCorner(n, n).cast<cplx>(), d = g.bottomRightCorner(n, n).cast<cplx>();
  const MatrixC num = a * w + b;
  const MatrixC den = c * w + d;
  // num * den^{-1} = (den^{-T} num^T)^T
  MatrixC out = den.transpose().partialPivLu().solve(MatrixC(num.transpose())).transpose();
  return 0.5 * (out + out.transpose());
}

/// The worked point [[i, 1/2], [1/2, i]].
inline SiegelPoint siegel_worked_point() {
  MatrixC z(2, 2);
  z << kI, 0.5, 0.5, kI;
  return {z};
}

template <class Rng>
SiegelSample sample_siegel_one(int n, Rng& rng, SiegelStrategy strategy) {
  std::normal_distribution<double> normal(0.0, 1.0);
  if (strategy == SiegelStrategy::Direct) {
    MatrixR x(n, n), l(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        x(i, j) = normal(rng);
        l(i, j) = normal(rng);
      }
    x = (0.5 * (x + x.transpose())).eval();
    const MatrixR y = l * l.transpose() + kSiegelEps * MatrixR::Identity(n, n);
    return {{x.cast<cplx>() + kI * y.cast<cplx>()}, strategy};
  }
  // g iI with g = exp(S), S in p; K = U(n) fixes iI, so this covers S+.
  const GroupContext ctx = build_group({Family::Symplectic, n});
  const MatrixR g = ctx.to_standard(MatrixR(random_p(ctx, rng, kFullGNorm).exp()));
  return {{fractional_action(g, MatrixC(kI * MatrixC::Identity(n, n)))}, strategy};
}

/// Alternates the direct (x + i(LL^T + eps I)) and orbit (g . iI) strategies.
inline std::vector<SiegelSample> sample_siegel(int n, std::size_t count, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::Precondition, "sample_siegel needs n >= 1");
  std::vector<SiegelSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = CounterRng::substream(seed, i);
    out.push_back(sample_siegel_one(n, rng, i % 2 == 0 ? SiegelStrategy::Direct : SiegelStrategy::Orbit));
  }
  return out;
}

/// chi_j = Delta_j / Delta_{j-1}, through the same LDL^T kernel as the Iwasawa projection.
inline VectorC chi(const SiegelPoint& p) { return minor_ratios(p.z); }

/// |Delta_j| divided by the Hadamard bound of the leading j x j block (in (0, 1]).
inline VectorR normalized_minors(const MatrixC& z, const VectorC& ratios) {
  const Eigen::Index n = z.rows();
  VectorR out(n);
  cplx delta = 1.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    delta *= ratios[j];
    double bound = 1.0;
    for (Eigen::Index i = 0; i <= j; ++i) bound *= z.block(i, 0, 1, j + 1).norm();
    out[j] = std::abs(delta) / bound;
  }
  return out;
}

/// Min Im chi_j and min normalized |Delta_j| over samples; sample 0 is the
/// anchor point (the worked point for n = 2, iI otherwise).
inline VerificationReport verify_siegel(int n, std::size_t samples, std::uint64_t seed) {
  Stopwatch clock;
  VerificationReport report;
  report.command = "siegel";
  report.group = {Family::Symplectic, n};
  report.seed = seed;
  report.tolerance_set["pivot_floor"] = kPivotFloor;
  report.tolerance_set["normalized_minor_floor"] = kMinorFloor;
  report.tolerance_set["direct_eps"] = kSiegelEps;
  report.tolerance_set["orbit_p_norm_bound"] = kFullGNorm;

  auto records = parallel_map<SampleRecord>(samples, [&](std::size_t i) {
    SampleRecord rec;
    try {
      SiegelSample s;
      if (i == 0) {
        s = {n == 2 ? siegel_worked_point() : SiegelPoint{MatrixC(kI * MatrixC::Identity(n, n))}, SiegelStrategy::Anchor};
      } else {
        auto rng = CounterRng::substream(seed, i);
        s = sample_siegel_one(n, rng, i % 2 == 0 ? SiegelStrategy::Direct : SiegelStrategy::Orbit);
      }
      rec.witness = Json{{"sample", i}, {"strategy", to_string(s.strategy)}, {"z", to_json(s.point.z)}};
      if (!in_siegel(s.point.z)) throw Error(ErrorKind::NumericalBreakdown, "sample left S+");
      try {
        const VectorC c = chi(s.point);
        const double min_im = c.imag().minCoeff();
        const double min_minor = normalized_minors(s.point.z, c).minCoeff();
        rec.margin = min_im;
        rec.min_stats["min_im_chi"] = min_im;
        rec.min_stats["min_normalized_minor"] = min_minor;
        rec.max_stats["pivot_breakdowns"] = 0.0;
        if (!(min_im > 0.0) || !(min_minor > kMinorFloor)) rec.failed_check = true;
        rec.witness["chi"] = to_json(c);
      } catch (const PivotError& e) {
        // a vanishing leading minor on S+ is a finding, not an indeterminate sample
        rec.failed_check = true;
        rec.margin = 0.0;
        rec.max_stats["pivot_breakdowns"] = 1.0;
        rec.witness["error"] = e.what();
      }
    } catch (const std::exception& e) {
      return detail::indeterminate_record(e);
    }
    return rec;
  });
  fold_records(report, records, 0.0);
  std::size_t breakdowns = 0;
  for (const auto& r : records)
    if (auto it = r.max_stats.find("pivot_breakdowns"); it != r.max_stats.end()) breakdowns += static_cast<std::size_t>(it->second);
  report.metrics["pivot_breakdowns"] = static_cast<double>(breakdowns);
  report.wall_time_ms = clock.elapsed_ms();
  return report;
}

/// The Siegel point matched with g exp(iX): g . (i e^{2iX}) in standard coordinates.
inline MatrixC matched_siegel_point(const GroupContext& ctx, const MatrixR& g, const CartanVector& x) {
  const VectorC d = (2.0 * kI * x.coords.cast<cplx>()).array().exp();
  const MatrixC base = kI * MatrixC(d.asDiagonal());
  return fractional_action(ctx.to_standard(g), base);
}

/// Siegel-side reading of Im log a: y_j = arg(chi_j) / 2 - pi/4.
inline VectorR siegel_angles(const MatrixC& w) {
  const VectorC c = minor_ratios(w);
  VectorR y(c.size());
  for (Eigen::Index j = 0; j < c.size(); ++j) y[j] = 0.5 * std::arg(c[j]) - kPi / 4.0;
  return y;
}

/// Compares the crown verdict (Im log a(g exp(iX)) in Omega) with the Siegel
/// verdict (g . (i e^{2iX}) in S+ with Im chi_j > 0). On the slice
/// g in N_L A (block lower-triangular Levi part), the two readings agree as values.
inline VerificationReport cross_check_crown(const GroupContext& ctx, std::size_t samples, std::uint64_t seed) {
  if (!ctx.symplectic()) throw Error(ErrorKind::Precondition, "cross_check_crown needs a symplectic context");
  Stopwatch clock;
  VerificationReport report = detail::start_report("siegel-crown", ctx, seed);
  constexpr double kSliceTol = 1e-10;
  report.tolerance_set["slice_value_agreement"] = kSliceTol;
  const int n = ctx.coord_dim;

  auto records = parallel_map<SampleRecord>(samples, [&](std::size_t i) {
    try {
      auto rng = CounterRng::substream(seed, i);
      const bool slice = i % 2 == 0;
      MatrixR g;
      if (i == 0) {
        g = MatrixR::Identity(2 * n, 2 * n);
      } else if (slice) {
        std::normal_distribution<double> normal(0.0, 1.0);
        MatrixR l = MatrixR::Identity(n, n);
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < r; ++c) l(r, c) = 0.5 * normal(rng);
        VectorR a0(n);
        for (auto& v : a0) v = std::exp(0.5 * normal(rng));
        const MatrixR la = l * a0.asDiagonal();
        MatrixR std_form = MatrixR::Zero(2 * n, 2 * n);
        std_form.topLeftCorner(n, n) = la;
        std_form.bottomRightCorner(n, n) = la.transpose().inverse();
        g = ctx.from_standard(std_form);
      } else {
        g = detail::sample_base(ctx, rng, SampleMode::FullG);
      }
      const CartanVector x = i == 0 ? CartanVector(VectorR::Zero(n)) : sample_omega_one(ctx, OmegaSpec::scaled(1.0), rng);
      const IwasawaFactors f = project_complex(ctx, g, x);
      const CartanVector y_crown = f.log_a.imag();
      const bool crown_inside = omega_margin(ctx, y_crown) > 0.0;

      const MatrixC w = matched_siegel_point(ctx, g, x);
      bool siegel_inside = in_siegel(w);
      VectorR y_siegel = VectorR::Constant(n, std::nan(""));
      if (siegel_inside) {
        try {
          const VectorC c = minor_ratios(w);
          siegel_inside = (c.imag().array() > 0.0).all();
          y_siegel = siegel_angles(w);
        } catch (const PivotError&) {
          siegel_inside = false;
        }
      }
      SampleRecord rec;
      rec.margin = omega_margin(ctx, y_crown);
      if (crown_inside != siegel_inside) rec.failed_check = true;
      rec.max_stats["verdict_disagreements"] = crown_inside != siegel_inside ? 1.0 : 0.0;
      if (slice && siegel_inside) {
        const double err = (y_siegel - y_crown.coords).cwiseAbs().maxCoeff();
        rec.max_stats["max_slice_value_error"] = err;
        if (!(err <= kSliceTol)) rec.failed_check = true;
      }
      rec.witness = Json{{"sample", i},           {"slice", slice},
                         {"g", to_json(g)},       {"x", to_json(x)},
                         {"crown_im_log_a", to_json(y_crown)}, {"siegel_point", to_json(w)},
                         {"crown_inside", crown_inside}, {"siegel_inside", siegel_inside}};
      return rec;
    } catch (const std::exception& e) {
      return detail::indeterminate_record(e);
    }
  });
  fold_records(report, records, 0.0);
  double agree = 0.0, total = 0.0;
  for (const auto& r : records) {
    if (r.indeterminate) continue;
    total += 1.0;
    if (auto it = r.max_stats.find("verdict_disagreements"); it != r.max_stats.end() && it->second == 0.0) agree += 1.0;
  }
  report.metrics["verdict_agreement"] = total > 0 ? agree / total : 1.0;
  report.wall_time_ms = clock.elapsed_ms();
  return report;
}

}  // namespace crown
