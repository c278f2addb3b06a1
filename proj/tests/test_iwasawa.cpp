#include <gtest/gtest.h>

#include "crown/convexity.hpp"
#include "crown/iwasawa.hpp"
#include "sl2_oracle.hpp"

using namespace crown;

namespace {

MatrixR random_g(const GroupContext& ctx, std::uint64_t seed, std::uint64_t index) {
  auto rng = CounterRng::substream(seed, index);
  return detail::sample_base(ctx, rng, SampleMode::FullG);
}

CartanVector random_x(const GroupContext& ctx, std::uint64_t seed, std::uint64_t index, double scale = 1.0) {
  auto rng = CounterRng::substream(seed, index, 1);
  return sample_omega_one(ctx, OmegaSpec::scaled(scale), rng);
}

/// Unit lower triangular with random entries below the diagonal, inside G.
MatrixR random_n(const GroupContext& ctx, std::uint64_t seed) {
  auto rng = CounterRng::substream(seed, 0, 7);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixR y = MatrixR::Zero(ctx.ambient_size, ctx.ambient_size);
  for (const auto& b : ctx.basis_n) y += 0.5 * normal(rng) * b;
  return y.exp();
}

}  // namespace

TEST(Ldl, Examples) {
  EXPECT_LT((minor_ratios(MatrixR::Identity(3, 3)) - VectorR::Ones(3)).norm(), 1e-15);
  const VectorR d = (VectorR(3) << 2.0, -1.0, 0.5).finished();
  EXPECT_LT((minor_ratios(MatrixR(d.asDiagonal())) - d).norm(), 1e-15);
  MatrixC w(2, 2);
  w << kI, 0.5, 0.5, kI;
  const VectorC c = minor_ratios(w);
  EXPECT_LT(std::abs(c[0] - kI), 1e-15);
  EXPECT_LT(std::abs(c[1] - 1.25 * kI), 1e-15);
}

TEST(Ldl, RatiosAreMinorQuotients) {
  auto rng = CounterRng::substream(31, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixC m(4, 4);
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i) m(i, j) = cplx(normal(rng), normal(rng));
  m = (m * m.transpose()).eval();
  const VectorC c = minor_ratios(m);
  cplx prev = 1.0;
  for (int j = 1; j <= 4; ++j) {
    const cplx delta = m.topLeftCorner(j, j).determinant();
    EXPECT_LT(std::abs(c[j - 1] - delta / prev), 1e-12 * std::abs(delta / prev));
    prev = delta;
  }
  const auto ldl = ldl_symmetric(m);
  EXPECT_LT((ldl.unit_lower * ldl.pivots.asDiagonal() * ldl.unit_lower.transpose() - m).norm(), 1e-12 * m.norm());
}

TEST(Ldl, Errors) {
  MatrixR swap(2, 2);
  swap << 0.0, 1.0, 1.0, 0.0;
  try {
    (void)ldl_symmetric(swap);
    FAIL();
  } catch (const PivotError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PivotBreakdown);
    EXPECT_EQ(e.index(), 0);
  }
  MatrixR skew(2, 2);
  skew << 1.0, 2.0, 0.0, 1.0;
  try {
    (void)ldl_symmetric(skew);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NumericalBreakdown);
  }
}

TEST(DecomposeReal, IdentityAndA) {
  for (const char* g : {"sl:3", "sp:2"}) {
    const auto ctx = build_group(GroupSpec::parse(g));
    const int m = ctx.ambient_size;
    const auto f = decompose_real(ctx, MatrixR::Identity(m, m));
    EXPECT_LT((f.n_part - MatrixC::Identity(m, m)).norm(), 1e-15);
    EXPECT_LT(f.log_a.coords.norm(), 1e-15);
    EXPECT_LT((f.k_part - MatrixC::Identity(m, m)).norm(), 1e-15);

    const CartanVector h = ctx.symplectic() ? CartanVector{0.4, -0.7} : CartanVector{0.4, 0.3, -0.7};
    const auto fa = decompose_real(ctx, ctx.exp_a(h.coords));
    EXPECT_LT((fa.log_a.real().coords - h.coords).norm(), 1e-14) << g;
    EXPECT_LT(fa.log_a.imag().coords.norm(), 1e-15);
    EXPECT_LT((fa.n_part - MatrixC::Identity(m, m)).norm(), 1e-14);
    EXPECT_LT((fa.k_part - MatrixC::Identity(m, m)).norm(), 1e-14);
  }
}

TEST(DecomposeReal, Rotation) {
  const auto ctx = build_group(GroupSpec::parse("sl:2"));
  const MatrixR k = crown_test::rotation(kPi / 6);
  const auto f = decompose_real(ctx, k);
  EXPECT_LT(f.log_a.coords.norm(), 1e-15);
  EXPECT_LT((f.n_part - MatrixC::Identity(2, 2)).norm(), 1e-15);
  EXPECT_LT((f.k_part - k.cast<cplx>()).norm(), 1e-15);
  EXPECT_LT(reconstruction_residual(ctx, f, k.cast<cplx>()), 1e-12);
}

TEST(DecomposeReal, RandomElements) {
  for (const char* g : {"sl:2", "sl:3", "sl:4", "sp:1", "sp:2", "sp:3"}) {
    const auto ctx = build_group(GroupSpec::parse(g));
    const int m = ctx.ambient_size;
    for (std::uint64_t s = 0; s < 50; ++s) {
      const MatrixR x = random_g(ctx, 32, s);
      const auto f = decompose_real(ctx, x);
      EXPECT_LE(reconstruction_residual(ctx, f, x.cast<cplx>()), 1e-10) << g;
      EXPECT_LT(f.n_part.imag().norm() + f.k_part.imag().norm() + f.log_a.imag().coords.norm(), 1e-15);
      const MatrixR k = f.k_part.real();
      EXPECT_LT((k * k.transpose() - MatrixR::Identity(m, m)).norm(), 1e-12) << g;
      EXPECT_LT(ctx.group_residual(k), 1e-12) << g;
      EXPECT_LT(ctx.group_residual(MatrixR(f.n_part.real())), 1e-12) << g;
      EXPECT_LT(MatrixR(f.n_part.real().triangularView<Eigen::StrictlyUpper>()).norm(), 1e-15);
      // log a read back from the diagonal lies in a
      if (!ctx.symplectic()) EXPECT_NEAR(f.log_a.coords.sum().real(), 0.0, 1e-12);
    }
  }
}

TEST(DecomposeReal, NotInGroup) {
  const auto ctx = build_group(GroupSpec::parse("sl:2"));
  try {
    (void)decompose_real(ctx, 2.0 * MatrixR::Identity(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotInGroup);
  }
  const auto sp = build_group(GroupSpec::parse("sp:2"));
  MatrixR g = MatrixR::Identity(4, 4);
  g(1, 0) = 0.5;  // det 1 but not symplectic
  EXPECT_THROW((void)decompose_real(sp, g), Error);
}

TEST(ProjectComplex, IdentityAndA) {
  for (const char* g : {"sl:3", "sp:2"}) {
    const auto ctx = build_group(GroupSpec::parse(g));
    const int m = ctx.ambient_size;
    const CartanVector x = random_x(ctx, 33, 0);
    const auto f = project_complex(ctx, MatrixR::Identity(m, m), x);
    EXPECT_LT(f.log_a.real().coords.norm(), 1e-14);
    EXPECT_LT((f.log_a.imag().coords - x.coords).norm(), 1e-14) << g;
    EXPECT_LT((f.n_part - MatrixC::Identity(m, m)).norm(), 1e-14);
    EXPECT_LT((f.k_part - MatrixC::Identity(m, m)).norm(), 1e-14);

    const CartanVector h = ctx.symplectic() ? CartanVector{0.4, -0.7} : CartanVector{0.4, 0.3, -0.7};
    const auto fa = project_complex(ctx, ctx.exp_a(h.coords), x);
    EXPECT_LT((fa.log_a.real().coords - h.coords).norm(), 1e-14);
    EXPECT_LT((fa.log_a.imag().coords - x.coords).norm(), 1e-14);
  }
}

TEST(ProjectComplex, Sl2ClosedForm) {
  const auto ctx = build_group(GroupSpec::parse("sl:2"));
  const auto f = project_complex(ctx, crown_test::rotation(kPi / 3), CartanVector{0.3, -0.3});
  const double expected = crown_test::sl2_crown_im_log_a(kPi / 3, 0.3);
  EXPECT_NEAR(expected, -0.16482, 5e-5);
  EXPECT_NEAR(f.log_a.imag().coords[0], expected, 1e-12);
  EXPECT_NEAR(f.log_a.imag().coords[1], -expected, 1e-12);
  for (int s = 0; s < 200; ++s) {
    const double theta = 0.031 * s, t = -0.78 + 0.0078 * s;
    const auto fs = project_complex(ctx, crown_test::rotation(theta), CartanVector{t, -t});
    EXPECT_NEAR(fs.log_a.imag().coords[0], crown_test::sl2_crown_im_log_a(theta, t), 1e-12) << theta << " " << t;
  }
}

TEST(ProjectComplex, Sp1MatchesSl2) {
  const auto sl = build_group(GroupSpec::parse("sl:2"));
  const auto sp = build_group(GroupSpec::parse("sp:1"));
  for (std::uint64_t s = 0; s < 20; ++s) {
    const MatrixR g = random_g(sl, 34, s);
    const CartanVector x = random_x(sl, 34, s);
    const auto a = project_complex(sl, g, x);
    const auto b = project_complex(sp, g, CartanVector{x.coords[0]});
    EXPECT_LT(std::abs(a.log_a.coords[0] - b.log_a.coords[0]), 1e-12);
  }
}

TEST(ProjectComplex, Preconditions) {
  const auto ctx = build_group(GroupSpec::parse("sl:2"));
  try {
    (void)project_complex(ctx, MatrixR::Identity(2, 2), CartanVector{0.8, -0.8});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OmegaViolation);
  }
  try {
    (void)project_complex(ctx, 2.0 * MatrixR::Identity(2, 2), CartanVector{0.1, -0.1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotInGroup);
  }
}

TEST(ProjectComplex, ReconstructionAndFactorShapes) {
  for (const char* g : {"sl:2", "sl:3", "sl:4", "sp:2", "sp:3"}) {
    const auto ctx = build_group(GroupSpec::parse(g));
    const int m = ctx.ambient_size;
    for (std::uint64_t s = 0; s < 50; ++s) {
      const auto p = make_crown_point(ctx, random_g(ctx, 35, s), random_x(ctx, 35, s));
      const auto f = project_complex(ctx, p);
      EXPECT_LE(reconstruction_residual(ctx, f, p.z), 1e-10) << g;
      EXPECT_LT((triangular_part(ctx, f) * f.k_part - p.z).norm(), 1e-10 * p.z.norm());
      // k in K_C: complex orthogonal and in G_C
      EXPECT_LT((f.k_part * f.k_part.transpose() - MatrixC::Identity(m, m)).norm(), 1e-10) << g;
      EXPECT_LT(ctx.group_residual(f.k_part), 1e-10) << g;
      EXPECT_LT(ctx.group_residual(f.n_part), 1e-10) << g;
      EXPECT_LT(MatrixC(f.n_part.triangularView<Eigen::StrictlyUpper>()).norm(), 1e-15);
      EXPECT_LT((f.n_part.diagonal() - VectorC::Ones(m)).norm(), 1e-15);
      EXPECT_LT(f.branch_residual, 1e-10) << g;
      EXPECT_LT(f.max_arg_step, kPi / 2);
    }
  }
}

TEST(ProjectComplex, SymplecticPairing) {
  const auto ctx = build_group(GroupSpec::parse("sp:3"));
  const int m = ctx.ambient_size;
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto f = project_complex(ctx, random_g(ctx, 36, s), random_x(ctx, 36, s));
    const VectorC d = ctx.weights.cast<cplx>() * f.log_a.coords;
    for (int i = 0; i < m / 2; ++i) EXPECT_LT(std::abs(d[i] + d[m - 1 - i]), 1e-12);
  }
}

TEST(ProjectComplex, PathIndependence) {
  // one straight leg 0 -> X against two legs 0 -> X1 -> X, all inside Omega
  for (const char* g : {"sl:2", "sl:3", "sp:2"}) {
    const auto ctx = build_group(GroupSpec::parse(g));
    for (std::uint64_t s = 0; s < 100; ++s) {
      const MatrixR base = random_g(ctx, 37, s);
      const CartanVector x = random_x(ctx, 37, s), x1 = random_x(ctx, 38, s);
      const MatrixC gc = base.cast<cplx>();
      const VectorC ix = kI * x.coords.cast<cplx>(), ix1 = kI * x1.coords.cast<cplx>();
      const auto straight = project_complex(ctx, base, x);
      const auto bent = project_along(ctx, [&](double t) -> MatrixC {
        const VectorC c = t < 0.5 ? VectorC(2.0 * t * ix1) : VectorC(ix1 + (2.0 * t - 1.0) * (ix - ix1));
        return gc * ctx.exp_a(c);
      });
      EXPECT_LT((straight.log_a.coords - bent.log_a.coords).norm(), 1e-8) << g;
    }
  }
}

TEST(ProjectComplex, Equivariance) {
  for (const char* g : {"sl:3", "sp:2"}) {
    const auto ctx = build_group(GroupSpec::parse(g));
    const CartanVector h = ctx.symplectic() ? CartanVector{0.2, -0.5} : CartanVector{0.2, 0.3, -0.5};
    const MatrixR left = random_n(ctx, 39) * ctx.exp_a(h.coords);
    for (std::uint64_t s = 0; s < 20; ++s) {
      const MatrixR base = random_g(ctx, 40, s);
      const CartanVector x = random_x(ctx, 40, s);
      auto rng = CounterRng::substream(41, s);
      const MatrixR k = haar_k(ctx, rng);
      const auto f = project_complex(ctx, base, x);
      // left N A: log a shifts by log a0
      const auto fl = project_complex(ctx, MatrixR(left * base), x);
      EXPECT_LT((fl.log_a.coords - f.log_a.coords - h.coords.cast<cplx>()).norm(), 1e-10) << g;
      // right K: log a unchanged
      const MatrixC gc = base.cast<cplx>(), kc = k.cast<cplx>();
      const VectorC ix = kI * x.coords.cast<cplx>();
      const auto fr = project_along(ctx, [&](double t) -> MatrixC { return gc * ctx.exp_a(VectorC(t * ix)) * kc; });
      EXPECT_LT((fr.log_a.coords - f.log_a.coords).norm(), 1e-10) << g;
    }
  }
}

TEST(ProjectAlong, BranchBreakdownOnBoundary) {
  // theta = pi/4 and t = pi/4: (z z^T)_11 = cos(2t) vanishes at the end of the path
  const auto ctx = build_group(GroupSpec::parse("sl:2"));
  const MatrixC k = crown_test::rotation(kPi / 4).cast<cplx>();
  const VectorC ix = kI * CartanVector{kPi / 4, -kPi / 4}.coords.cast<cplx>();
  try {
    (void)project_along(ctx, [&](double t) -> MatrixC { return k * ctx.exp_a(VectorC(t * ix)); });
    FAIL();
  } catch (const BranchError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BranchBreakdown);
    EXPECT_NEAR(e.offending_t(), 1.0, 1e-12);
  }
}

TEST(ProjectAlong, RejectsComplexStart) {
  const auto ctx = build_group(GroupSpec::parse("sl:2"));
  EXPECT_THROW((void)project_along(ctx, [&](double t) -> MatrixC { return ctx.exp_a(VectorC(kI * (1.0 + t) * CartanVector{0.1, -0.1}.coords.cast<cplx>())); }),
               Error);
}

TEST(ProjectAlong, StepCountsAreReported) {
  const auto ctx = build_group(GroupSpec::parse("sl:2"));
  const auto f = project_complex(ctx, crown_test::rotation(kPi / 4 - 1e-3), CartanVector{0.78, -0.78}, 1);
  EXPECT_GE(f.path_steps, 1);
  EXPECT_LT(f.max_arg_step, kPi / 2);
  EXPECT_NEAR(f.log_a.imag().coords[0], crown_test::sl2_crown_im_log_a(kPi / 4 - 1e-3, 0.78), 1e-10);
}
