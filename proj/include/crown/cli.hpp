#pragma once

// Command-line front end. `run` is the whole program; tools/crown.cpp only
// forwards argv.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "crown/convexity.hpp"
#include "crown/domains.hpp"
#include "crown/iwasawa.hpp"
#include "crown/report.hpp"
#include "crown/siegel.hpp"
#include "crown/weyl_hull.hpp"

namespace crown::cli {

inline constexpr int kExitUsage = 64;

inline std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Usage, "cannot parse number '" + item + "'");
    }
  }
  return out;
}

/// "a,b;c,d" -> [[a, b], [c, d]].
inline MatrixR parse_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) rows.push_back(parse_list(row));
  if (rows.empty()) throw Error(ErrorKind::Usage, "empty matrix");
  MatrixR m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw Error(ErrorKind::Usage, "ragged matrix");
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

inline CartanVector parse_cartan(const GroupContext& ctx, const std::string& text) {
  const auto v = parse_list(text);
  if (static_cast<int>(v.size()) != ctx.coord_dim)
    throw Error(ErrorKind::Usage, "expected " + std::to_string(ctx.coord_dim) + " coordinates for " + ctx.spec.to_string());
  CartanVector x(VectorR::Map(v.data(), static_cast<Eigen::Index>(v.size())));
  if (!ctx.symplectic() && std::abs(x.coords.sum()) > 1e-12)
    throw Error(ErrorKind::Usage, "sl coordinates must sum to zero");
  return x;
}

struct Options {
  std::string group = "sl:2";
  std::string omega = "scale:1.0";
  std::size_t samples = 1000;
  std::uint64_t seed = 1;
  double tol = 1e-9;
  std::string format = "json";
  std::string out;
  std::string mode = "k";
  std::string x;
  std::string y;
  std::string matrix;
  int steps = kDefaultSteps;
  double box = 1.5;
  double fd_step = 1e-5;
  int max_iter = 5000;
  double grad_tol = 1e-8;
  std::size_t z_count = 1000;
  std::size_t k_count = 100;
  double final_margin = 1e-4;
  int n = 2;
  bool crown = false;
};

inline void emit(const VerificationReport& report, const Options& opt, std::ostream& out) {
  const std::string text = opt.format == "csv" ? to_csv(report) : to_json(report).dump(2) + "\n";
  if (opt.out.empty()) {
    out << text;
    return;
  }
  std::ofstream file(opt.out, std::ios::binary);
  if (!file) throw Error(ErrorKind::Usage, "cannot open output file '" + opt.out + "'");
  file << text;
}

inline VerificationReport run_decompose(const Options& opt) {
  Stopwatch clock;
  const GroupContext ctx = build_group(GroupSpec::parse(opt.group));
  VerificationReport report = detail::start_report("decompose", ctx, opt.seed);
  MatrixR g;
  if (!opt.matrix.empty()) {
    g = parse_matrix(opt.matrix);
  } else {
    auto rng = CounterRng::substream(opt.seed, 0);
    g = detail::sample_base(ctx, rng, SampleMode::FullG);
  }
  const CartanVector x = opt.x.empty() ? CartanVector(VectorR::Zero(ctx.coord_dim)) : parse_cartan(ctx, opt.x);
  SampleRecord rec;
  try {
    const IwasawaFactors f = opt.x.empty() ? decompose_real(ctx, g) : project_complex(ctx, g, x, opt.steps);
    detail::check_reconstruction(rec, ctx, f, make_crown_point(ctx, g, x).z);
    rec.margin = kReconstructionTol - rec.max_stats["max_reconstruction_residual"];
    rec.witness = Json{{"g", to_json(g)}, {"x", to_json(x)}};
    report.details = Json{{"n", to_json(f.n_part)},
                          {"log_a", to_json(f.log_a)},
                          {"k", to_json(f.k_part)},
                          {"path_steps", f.path_steps},
                          {"max_arg_step", f.max_arg_step},
                          {"branch_residual", f.branch_residual}};
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NotInGroup || e.kind() == ErrorKind::OmegaViolation) throw Error(ErrorKind::Usage, e.what());
    rec = detail::indeterminate_record(e);
  }
  fold_records(report, {rec}, 0.0);
  report.wall_time_ms = clock.elapsed_ms();
  return report;
}

inline VerificationReport run_hull(const Options& opt) {
  Stopwatch clock;
  const GroupContext ctx = build_group(GroupSpec::parse(opt.group));
  if (opt.x.empty() || opt.y.empty()) throw Error(ErrorKind::Usage, "hull needs --x and --y");
  const CartanVector x = parse_cartan(ctx, opt.x), y = parse_cartan(ctx, opt.y);
  const HullResult h = hull_contains(ctx, x, y, opt.tol);
  VerificationReport report = detail::start_report("hull", ctx, opt.seed);
  report.tolerance_set["hull"] = opt.tol;
  report.samples_requested = report.samples_completed = 1;
  report.min_margin = h.margin;
  report.worst_witness = Json{{"x", to_json(x)}, {"y", to_json(y)}};
  report.details = Json{{"verdict", h.inside ? "inside" : "outside"},
                        {"margin", h.margin},
                        {"x_dominant", to_json(dominant_rep(ctx, x))},
                        {"y_dominant", to_json(dominant_rep(ctx, y))}};
  report.wall_time_ms = clock.elapsed_ms();
  return report;
}

inline VerificationReport run_lemma24(const Options& opt) {
  const GroupContext ctx = build_group(GroupSpec::parse(opt.group));
  CartanVector x;
  if (!opt.x.empty()) {
    x = parse_cartan(ctx, opt.x);
  } else {
    auto rng = CounterRng::substream(opt.seed, 0, /*salt=*/3);
    x = sample_regular(ctx, rng, 0.9);
  }
  return lemma24_probe(ctx, x, opt.samples, opt.seed);
}

/// Runs one command; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Complexified Iwasawa projection: convexity and crown-domain verifier", "crown"};
  app.require_subcommand(1);
  Options opt;

  auto common = [&](CLI::App* sub, bool with_group = true) {
    if (with_group) sub->add_option("--group", opt.group, "sl:<n> or sp:<n>");
    sub->add_option("--seed", opt.seed, "run seed");
    sub->add_option("--format", opt.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--out", opt.out, "report file (default stdout)");
  };

  auto* decompose = app.add_subcommand("decompose", "Iwasawa factors of a real g, or of g exp(iX) with --x");
  common(decompose);
  decompose->add_option("--matrix", opt.matrix, "g as 'a,b;c,d' (default: seeded random g)");
  decompose->add_option("--x", opt.x, "imaginary direction X in Omega");
  decompose->add_option("--steps", opt.steps, "initial path steps");

  auto* hull = app.add_subcommand("hull", "membership of Y in conv(W X)");
  common(hull);
  hull->add_option("--x", opt.x)->required();
  hull->add_option("--y", opt.y)->required();
  hull->add_option("--tol", opt.tol);

  auto* convexity = app.add_subcommand("verify-convexity", "Im log a(g exp(iX)) in conv(W X)");
  common(convexity);
  convexity->add_option("--omega", opt.omega, "scale:<c> or ball:<rho>");
  convexity->add_option("--samples", opt.samples);
  convexity->add_option("--tol", opt.tol);
  convexity->add_option("--mode", opt.mode, "k or full")->check(CLI::IsMember({"k", "full"}));

  auto* kostant = app.add_subcommand("verify-kostant", "log a(k exp X) in conv(W X) and vertex attainment");
  common(kostant);
  kostant->add_option("--samples", opt.samples);
  kostant->add_option("--tol", opt.tol);
  kostant->add_option("--box", opt.box, "X drawn from [-box, box]^r");

  auto* gradient = app.add_subcommand("gradient-check", "gradient formula vs central differences");
  common(gradient);
  gradient->add_option("--samples", opt.samples);
  gradient->add_option("--fd-step", opt.fd_step, "finite-difference step");

  auto* critical = app.add_subcommand("critical-points", "gradient ascent to the Weyl maximum");
  common(critical);
  critical->add_option("--samples", opt.samples);
  critical->add_option("--max-iter", opt.max_iter);
  critical->add_option("--grad-tol", opt.grad_tol);

  auto* tubes = app.add_subcommand("tubes", "crown points inside every sampled horospherical tube");
  common(tubes);
  tubes->add_option("--omega", opt.omega);
  tubes->add_option("--z-count", opt.z_count);
  tubes->add_option("--k-count", opt.k_count);
  tubes->add_option("--tol", opt.tol);

  auto* image = app.add_subcommand("image", "a(Xi(omega)) = T_omega");
  common(image);
  image->add_option("--omega", opt.omega);
  image->add_option("--samples", opt.samples);
  image->add_option("--tol", opt.tol);

  auto* boundary = app.add_subcommand("boundary", "Im log a along a path to the boundary of omega");
  common(boundary);
  boundary->add_option("--omega", opt.omega);
  boundary->add_option("--final-margin", opt.final_margin);

  auto* siegel = app.add_subcommand("siegel", "Im chi_j > 0 on the Siegel upper half-space");
  common(siegel, false);
  siegel->add_option("--n", opt.n)->check(CLI::PositiveNumber);
  siegel->add_option("--samples", opt.samples);
  siegel->add_flag("--crown", opt.crown, "compare with the crown projection of sp:<n> instead");

  auto* lemma24 = app.add_subcommand("lemma24", "n(k exp(iX)) is not real for k off the normalizer");
  common(lemma24);
  lemma24->add_option("--samples", opt.samples);
  lemma24->add_option("--x", opt.x, "regular X (default: seeded sample)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    VerificationReport report;
    auto ctx = [&] { return build_group(GroupSpec::parse(opt.group)); };
    if (*decompose) {
      report = run_decompose(opt);
    } else if (*hull) {
      report = run_hull(opt);
    } else if (*convexity) {
      report = verify_complex_convexity(ctx(), OmegaSpec::parse(opt.omega), opt.samples, opt.seed, opt.tol,
                                        opt.mode == "full" ? SampleMode::FullG : SampleMode::KOnly);
    } else if (*kostant) {
      report = verify_kostant_real(ctx(), opt.samples, opt.seed, opt.tol, opt.box);
    } else if (*gradient) {
      report = gradient_check(ctx(), opt.samples, opt.seed, opt.fd_step);
    } else if (*critical) {
      AscentOptions ascent;
      ascent.max_iter = opt.max_iter;
      ascent.tol = opt.grad_tol;
      report = critical_points(ctx(), opt.samples, opt.seed, ascent);
    } else if (*tubes) {
      report = verify_tube_intersection(ctx(), OmegaSpec::parse(opt.omega), opt.z_count, opt.k_count, opt.seed, opt.tol);
    } else if (*image) {
      report = verify_image(ctx(), OmegaSpec::parse(opt.omega), opt.samples, opt.seed, opt.tol);
    } else if (*boundary) {
      report = verify_boundary(ctx(), OmegaSpec::parse(opt.omega), opt.seed, opt.final_margin);
    } else if (*siegel) {
      report = opt.crown ? cross_check_crown(build_group({Family::Symplectic, opt.n}), opt.samples, opt.seed)
                         : verify_siegel(opt.n, opt.samples, opt.seed);
    } else if (*lemma24) {
      report = run_lemma24(opt);
    }
    emit(report, opt, out);
    return report.exit_code();
  } catch (const Error& e) {
    err << "crown: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::Usage:
      case ErrorKind::UnsupportedFamily:
      case ErrorKind::Precondition:
      case ErrorKind::OmegaViolation:
      case ErrorKind::NotInGroup:
        return kExitUsage;
      default:
        return 3;
    }
  }
}

}  // namespace crown::cli
