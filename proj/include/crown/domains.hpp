#pragma once

// Crown domains Xi(omega) = G exp(i omega) K_C / K_C, horospherical tubes
// T(k, omega) = k N_C A exp(i omega) K_C / K_C, and their verifiers.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "crown/convexity.hpp"
#include "crown/iwasawa.hpp"
#include "crown/report.hpp"

namespace crown {

struct TubeSpec {
  MatrixR base_k;
  OmegaSpec omega;
};

template <class Rng>
CrownPoint sample_xi_one(const GroupContext& ctx, const OmegaSpec& omega, Rng& rng, SampleMode mode = SampleMode::FullG) {
  const MatrixR g = detail::sample_base(ctx, rng, mode);
  const CartanVector x = sample_omega_one(ctx, omega, rng);
  return make_crown_point(ctx, g, x, omega);
}

/// Points g exp(iX) with g = k exp(S) and X in omega; sample i uses substream (seed, i).
inline std::vector<CrownPoint> sample_xi(const GroupContext& ctx, const OmegaSpec& omega, std::size_t count,
                                         std::uint64_t seed, SampleMode mode = SampleMode::FullG) {
  std::vector<CrownPoint> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = CounterRng::substream(seed, i);
    out.push_back(sample_xi_one(ctx, omega, rng, mode));
  }
  return out;
}

struct TubeResult {
  bool inside = false;
  bool indeterminate = false;
  double margin = 0.0;
  std::string error;
};

/// Membership of z * k_right in T(base_k, omega): project base_k^{-1} z k_right
/// along t -> base_k^T g exp(itX) k_right and test Im log a against omega.
inline TubeResult tube_contains(const GroupContext& ctx, const TubeSpec& tube, const CrownPoint& z, double tol = 1e-9,
                                const MatrixR* k_right = nullptr) {
  TubeResult out;
  try {
    const MatrixC left = (tube.base_k.transpose() * z.base_g).cast<cplx>();
    const MatrixC right = k_right ? MatrixC(k_right->cast<cplx>()) : MatrixC::Identity(ctx.ambient_size, ctx.ambient_size);
    const VectorC ix = kI * z.direction_x.coords.cast<cplx>();
    const IwasawaFactors f =
        project_along(ctx, [&](double t) -> MatrixC { return left * ctx.exp_a(VectorC(t * ix)) * right; });
    out.margin = omega_margin(ctx, tube.omega, f.log_a.imag());
    out.inside = out.margin >= -tol;
  } catch (const BranchError& e) {
    out.indeterminate = true;
    out.error = e.what();
  }
  return out;
}

/// Every sampled crown point lies in every sampled K-tube. Tube 0 is T(1, omega).
inline VerificationReport verify_tube_intersection(const GroupContext& ctx, const OmegaSpec& omega, std::size_t z_count,
                                                   std::size_t k_count, std::uint64_t seed, double tol = 1e-9) {
  Stopwatch clock;
  VerificationReport report = detail::start_report("tubes", ctx, seed);
  report.omega = omega;
  report.tolerance_set["tube"] = tol;
  std::vector<TubeSpec> tubes;
  tubes.reserve(k_count);
  for (std::size_t j = 0; j < k_count; ++j) {
    auto rng = CounterRng::substream(seed, j, /*salt=*/2);
    tubes.push_back({j == 0 ? MatrixR(MatrixR::Identity(ctx.ambient_size, ctx.ambient_size)) : haar_k(ctx, rng), omega});
  }

  auto records = parallel_map<SampleRecord>(z_count, [&](std::size_t i) {
    SampleRecord rec;
    try {
      auto rng = CounterRng::substream(seed, i);
      const CrownPoint z = sample_xi_one(ctx, omega, rng);
      std::size_t worst = 0, failures = 0, indeterminate = 0;
      for (std::size_t j = 0; j < tubes.size(); ++j) {
        const TubeResult t = tube_contains(ctx, tubes[j], z, tol);
        if (t.indeterminate) {
          ++indeterminate;
          rec.error = t.error;
          continue;
        }
        if (!t.inside) ++failures;
        if (t.margin < rec.margin) {
          rec.margin = t.margin;
          worst = j;
        }
      }
      rec.max_stats["pair_failures"] = static_cast<double>(failures);
      rec.max_stats["pair_indeterminate"] = static_cast<double>(indeterminate);
      rec.witness = Json{{"sample", i},       {"g", to_json(z.base_g)},        {"x", to_json(z.direction_x)},
                         {"tube_index", worst}, {"tube_k", to_json(tubes[worst].base_k)}};
      if (indeterminate > 0 && failures == 0) rec.indeterminate = true;
    } catch (const std::exception& e) {
      return detail::indeterminate_record(e);
    }
    return rec;
  });
  std::size_t pair_failures = 0;
  for (const auto& r : records)
    if (auto it = r.max_stats.find("pair_failures"); it != r.max_stats.end()) pair_failures += static_cast<std::size_t>(it->second);
  fold_records(report, records, tol);
  report.metrics["pairs_checked"] = static_cast<double>(z_count * k_count);
  report.metrics["pair_failures"] = static_cast<double>(pair_failures);
  report.wall_time_ms = clock.elapsed_ms();
  return report;
}

/// a(Xi(omega)) = T_omega: sampled crown points project into omega, and every
/// sampled Y in omega is hit by exp(iY).
inline VerificationReport verify_image(const GroupContext& ctx, const OmegaSpec& omega, std::size_t samples,
                                       std::uint64_t seed, double tol = 1e-9) {
  Stopwatch clock;
  VerificationReport report = detail::start_report("image", ctx, seed);
  constexpr double kWitnessTol = 1e-12;
  report.omega = omega;
  report.tolerance_set["image"] = tol;
  report.tolerance_set["surjectivity_witness"] = kWitnessTol;
  const MatrixR identity = MatrixR::Identity(ctx.ambient_size, ctx.ambient_size);

  auto records = parallel_map<SampleRecord>(samples, [&](std::size_t i) {
    try {
      auto rng = CounterRng::substream(seed, i);
      const CrownPoint z = sample_xi_one(ctx, omega, rng);
      const IwasawaFactors f = project_complex(ctx, z);
      SampleRecord rec;
      rec.margin = omega_margin(ctx, omega, f.log_a.imag());
      detail::check_reconstruction(rec, ctx, f, z.z);

      const CartanVector y = sample_omega_one(ctx, omega, rng);
      const IwasawaFactors fy = project_complex(ctx, identity, y);
      const double witness_err = std::max((fy.log_a.imag().coords - y.coords).cwiseAbs().maxCoeff(),
                                          fy.log_a.real().coords.cwiseAbs().maxCoeff());
      rec.max_stats["max_surjectivity_error"] = witness_err;
      if (witness_err > kWitnessTol) rec.failed_check = true;
      rec.witness = Json{{"sample", i}, {"g", to_json(z.base_g)}, {"x", to_json(z.direction_x)},
                         {"im_log_a", to_json(f.log_a.imag())}};
      return rec;
    } catch (const std::exception& e) {
      return detail::indeterminate_record(e);
    }
  });
  fold_records(report, records, tol);
  report.wall_time_ms = clock.elapsed_ms();
  return report;
}

struct BoundaryStep {
  int step = 0;
  double input_distance = 0.0;
  double output_distance = 0.0;
  bool inside = false;
};

/// Margins to the boundary of omega of Im log a(g exp(iX_n)) along a path X_n -> X_0 in the boundary.
inline std::vector<BoundaryStep> boundary_probe(const GroupContext& ctx, const OmegaSpec& omega, const MatrixR& g,
                                                const std::vector<CartanVector>& x_path) {
  std::vector<BoundaryStep> out;
  out.reserve(x_path.size());
  for (std::size_t s = 0; s < x_path.size(); ++s) {
    const IwasawaFactors f = project_complex(ctx, g, x_path[s]);
    BoundaryStep b;
    b.step = static_cast<int>(s);
    b.input_distance = omega_margin(ctx, omega, x_path[s]);
    b.output_distance = omega_margin(ctx, omega, f.log_a.imag());
    b.inside = b.output_distance > 0.0;
    out.push_back(b);
  }
  return out;
}

/// X_n = (1 - 2^{-n}) X_0 with X_0 on the boundary of omega along `direction`,
/// continued until the margin of X_n drops below `final_margin`.
inline std::vector<CartanVector> boundary_path(const GroupContext& ctx, const OmegaSpec& omega, const CartanVector& direction,
                                               double final_margin = 1e-4) {
  double lo = 0.0, hi = 1.0;
  while (omega_margin(ctx, omega, CartanVector(hi * direction.coords)) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (omega_margin(ctx, omega, CartanVector(mid * direction.coords)) > 0.0 ? lo : hi) = mid;
  }
  const VectorR x0 = lo * direction.coords;
  std::vector<CartanVector> path;
  for (int n = 1; n < 60; ++n) {
    CartanVector xn((1.0 - std::ldexp(1.0, -n)) * x0);
    const double m = omega_margin(ctx, omega, xn);
    if (!(m > 0.0)) break;
    path.push_back(xn);
    if (m < final_margin) break;
  }
  return path;
}

/// Spearman rank correlation (average ranks for ties).
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t t = i; t <= j; ++t) r[idx[t]] = 0.5 * static_cast<double>(i + j);
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return (saa > 0 && sbb > 0) ? sab / std::sqrt(saa * sbb) : 0.0;
}

/// Boundary probe driver: Haar base point and a random direction from omega.
inline VerificationReport verify_boundary(const GroupContext& ctx, const OmegaSpec& omega, std::uint64_t seed,
                                          double final_margin = 1e-4) {
  Stopwatch clock;
  VerificationReport report = detail::start_report("boundary", ctx, seed);
  report.omega = omega;
  report.tolerance_set["final_input_margin"] = final_margin;
  auto rng = CounterRng::substream(seed, 0);
  const MatrixR g = haar_k(ctx, rng);
  const CartanVector dir = sample_omega_one(ctx, omega, rng);
  const auto path = boundary_path(ctx, omega, dir, final_margin);
  std::vector<SampleRecord> records;
  std::vector<double> in, out;
  Json trace = Json::array();
  for (std::size_t s = 0; s < path.size(); ++s) {
    SampleRecord rec;
    try {
      const auto steps = boundary_probe(ctx, omega, g, {path[s]});
      rec.margin = steps[0].output_distance;
      in.push_back(steps[0].input_distance);
      out.push_back(steps[0].output_distance);
      trace.push_back({{"step", s}, {"input_distance", steps[0].input_distance}, {"output_distance", steps[0].output_distance}});
      rec.witness = Json{{"step", s}, {"x", to_json(path[s])}};
    } catch (const std::exception& e) {
      rec = detail::indeterminate_record(e);
    }
    records.push_back(std::move(rec));
  }
  fold_records(report, records, 0.0);
  // strict membership: output on the boundary itself is a violation too
  for (const auto& r : records)
    if (!r.indeterminate && r.margin == 0.0) ++report.violations;
  report.details["g"] = to_json(g);
  report.details["direction"] = to_json(dir);
  report.details["trace"] = trace;
  if (!out.empty()) {
    report.metrics["final_input_distance"] = in.back();
    report.metrics["final_output_distance"] = out.back();
    report.metrics["spearman"] = spearman(in, out);
  }
  report.wall_time_ms = clock.elapsed_ms();
  return report;
}

}  // namespace crown
