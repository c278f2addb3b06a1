#include <gtest/gtest.h>

#include "crown/lie_core.hpp"
#include "crown/rng.hpp"

using namespace crown;

namespace {

MatrixR random_matrix(int m, CounterRng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixR a(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) a(i, j) = normal(rng);
  return a;
}

/// Random element of g: traceless, or projected onto sp in the adapted frame.
MatrixR random_algebra(const GroupContext& ctx, CounterRng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixR z = MatrixR::Zero(ctx.ambient_size, ctx.ambient_size);
  for (const auto* basis : {&ctx.basis_a, &ctx.basis_n, &ctx.basis_k})
    for (const auto& b : *basis) z += normal(rng) * b;
  return z;
}

MatrixC random_algebra_c(const GroupContext& ctx, CounterRng& rng) {
  return random_algebra(ctx, rng).cast<cplx>() + kI * random_algebra(ctx, rng).cast<cplx>();
}

}  // namespace

TEST(GroupSpec, ParsesAndPrints) {
  EXPECT_EQ(GroupSpec::parse("sl:3").to_string(), "sl:3");
  EXPECT_EQ(GroupSpec::parse("sp:2").family, Family::Symplectic);
  EXPECT_EQ(GroupSpec::parse("sp:2").rank_param, 2);
}

TEST(GroupSpec, RejectsMalformedTokens) {
  for (const char* bad : {"sl", "sl:", "sl:x", "sl:2x", ""}) {
    try {
      (void)GroupSpec::parse(bad);
      ADD_FAILURE() << "accepted " << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Usage) << bad;
    }
  }
}

TEST(GroupSpec, UnknownFamily) {
  try {
    (void)GroupSpec::parse("so:3");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsupportedFamily);
  }
}

TEST(BuildGroup, RejectsDegenerateRank) {
  EXPECT_THROW(build_group({Family::SpecialLinear, 1}), Error);
  EXPECT_THROW(build_group({Family::Symplectic, 0}), Error);
}

TEST(RootDatum, Sl2) {
  const auto ctx = build_group(GroupSpec::parse("sl:2"));
  ASSERT_EQ(ctx.root_datum.rank, 1);
  ASSERT_EQ(ctx.root_datum.roots.size(), 2u);
  ASSERT_EQ(ctx.root_datum.positive_roots.size(), 1u);
  const VectorR x = (VectorR(2) << 0.3, -0.3).finished();
  EXPECT_NEAR(std::abs(ctx.root_datum.positive_roots[0].dot(x)), 0.6, 1e-15);
}

TEST(RootDatum, Sl3) {
  const auto ctx = build_group(GroupSpec::parse("sl:3"));
  EXPECT_EQ(ctx.root_datum.rank, 2);
  EXPECT_EQ(ctx.root_datum.roots.size(), 6u);
  EXPECT_EQ(ctx.root_datum.positive_roots.size(), 3u);
  EXPECT_EQ(ctx.root_datum.simple_roots.size(), 2u);
  for (int m : ctx.root_datum.multiplicities) EXPECT_EQ(m, 1);
}

TEST(RootDatum, Sp2IsTypeC2) {
  const auto ctx = build_group(GroupSpec::parse("sp:2"));
  ASSERT_EQ(ctx.root_datum.roots.size(), 8u);
  std::vector<VectorR> expected;
  for (double a : {-1.0, 1.0})
    for (double b : {-1.0, 1.0}) expected.push_back((VectorR(2) << a, b).finished());
  for (double s : {-2.0, 2.0}) {
    expected.push_back((VectorR(2) << s, 0.0).finished());
    expected.push_back((VectorR(2) << 0.0, s).finished());
  }
  for (const auto& e : expected) {
    bool found = false;
    for (const auto& r : ctx.root_datum.roots) found = found || (r - e).norm() < 1e-12;
    EXPECT_TRUE(found) << e.transpose();
  }
}

TEST(RootDatum, BasisDimensions) {
  for (const char* g : {"sl:2", "sl:3", "sl:4", "sp:1", "sp:2", "sp:3"}) {
    const auto ctx = build_group(GroupSpec::parse(g));
    const int n = ctx.spec.rank_param;
    const int dim = ctx.symplectic() ? n * (2 * n + 1) : n * n - 1;
    EXPECT_EQ(ctx.algebra_dim(), dim) << g;
    EXPECT_EQ(static_cast<int>(ctx.basis_a.size()), ctx.root_datum.rank) << g;
    for (const auto& b : ctx.basis_k) EXPECT_LT((b + b.transpose()).norm(), 1e-14) << g;
    for (const auto& b : ctx.basis_n) {
      EXPECT_LT(MatrixR(b.triangularView<Eigen::Upper>()).norm(), 1e-14) << g;
      EXPECT_LT(ctx.algebra_residual(b), 1e-14) << g;
    }
  }
}

TEST(CartanInvolution, Examples) {
  const auto ctx = build_group(GroupSpec::parse("sl:2"));
  const MatrixR id = MatrixR::Identity(2, 2);
  EXPECT_LT((cartan_involution(ctx, id) - id).norm(), 1e-15);
  const double th = 0.7;
  MatrixR k(2, 2);
  k << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  EXPECT_LT((cartan_involution(ctx, k) - k).norm(), 1e-14);
  MatrixR a(2, 2);
  a << 2.0, 0.0, 0.0, 0.5;
  MatrixR inv(2, 2);
  inv << 0.5, 0.0, 0.0, 2.0;
  EXPECT_LT((cartan_involution(ctx, a) - inv).norm(), 1e-15);
}

TEST(CartanInvolution, SingularInput) {
  const auto ctx = build_group(GroupSpec::parse("sl:2"));
  MatrixR s(2, 2);
  s << 1.0, 2.0, 2.0, 4.0;
  try {
    (void)cartan_involution(ctx, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularInput);
  }
  EXPECT_THROW((void)cartan_involution(ctx, MatrixR::Identity(3, 3)), Error);
}

TEST(CartanInvolution, FixesKOnSp) {
  const auto ctx = build_group(GroupSpec::parse("sp:2"));
  auto rng = CounterRng::substream(5, 0);
  const MatrixR k = haar_k(ctx, rng);
  EXPECT_LT(ctx.group_residual(k), 1e-12);
  EXPECT_LT((cartan_involution(ctx, k) - k).norm(), 1e-12);
}

TEST(Killing, RealAndImaginaryDirections) {
  for (const char* g : {"sl:3", "sp:2"}) {
    const auto ctx = build_group(GroupSpec::parse(g));
    auto rng = CounterRng::substream(11, 0);
    const MatrixR x = random_algebra(ctx, rng);
    EXPECT_NEAR(killing_r(ctx, x, x), 2.0 * killing(ctx, x, x), 1e-10);
    const MatrixC iy = kI * x.cast<cplx>();
    EXPECT_NEAR(killing_r(ctx, iy, iy), -2.0 * killing(ctx, x, x), 1e-10);
  }
}

TEST(Killing, ComplexIdentity) {
  for (const char* g : {"sl:2", "sl:3", "sp:2"}) {
    const auto ctx = build_group(GroupSpec::parse(g));
    for (int s = 0; s < 20; ++s) {
      auto rng = CounterRng::substream(12, static_cast<std::uint64_t>(s));
      const MatrixC z = random_algebra_c(ctx, rng), w = random_algebra_c(ctx, rng);
      const double rhs = 2.0 * (killing(ctx, z.real(), w.real()) - killing(ctx, z.imag(), w.imag()));
      EXPECT_NEAR(killing_r(ctx, z, w), rhs, 1e-12 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST(Killing, ScaleMatchesAdjointTrace) {
  // kappa(X, Y) = tr(ad X ad Y), computed in the basis of g.
  for (const char* g : {"sl:2", "sl:3", "sp:2"}) {
    const auto ctx = build_group(GroupSpec::parse(g));
    std::vector<MatrixR> basis;
    for (const auto* b : {&ctx.basis_a, &ctx.basis_n, &ctx.basis_k}) basis.insert(basis.end(), b->begin(), b->end());
    const int d = static_cast<int>(basis.size());
    const int m = ctx.ambient_size;
    MatrixR coords(m * m, d);
    for (int j = 0; j < d; ++j) coords.col(j) = Eigen::Map<const VectorR>(basis[static_cast<std::size_t>(j)].data(), m * m);
    const auto solver = coords.colPivHouseholderQr();
    auto ad = [&](const MatrixR& x) {
      MatrixR out(d, d);
      for (int j = 0; j < d; ++j) {
        const MatrixR c = x * basis[static_cast<std::size_t>(j)] - basis[static_cast<std::size_t>(j)] * x;
        out.col(j) = solver.solve(Eigen::Map<const VectorR>(c.data(), m * m));
      }
      return out;
    };
    auto rng = CounterRng::substream(13, 0);
    const MatrixR x = random_algebra(ctx, rng), y = random_algebra(ctx, rng);
    const double direct = (ad(x) * ad(y)).trace();
    EXPECT_NEAR(killing(ctx, x, y), direct, 1e-9 * std::max(1.0, std::abs(direct))) << g;
  }
}

TEST(Covector, ZeroAndPairing) {
  for (const char* g : {"sl:3", "sp:2"}) {
    const auto ctx = build_group(GroupSpec::parse(g));
    const auto zero = make_covector(ctx, CartanVector(VectorR::Zero(ctx.coord_dim)));
    EXPECT_EQ(h_lambda(ctx, zero).norm(), 0.0);
    EXPECT_FALSE(zero.regular);

    auto rng = CounterRng::substream(14, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorR mu(ctx.coord_dim);
    for (auto& v : mu) v = normal(rng);
    if (!ctx.symplectic()) mu.array() -= mu.mean();
    const CovectorIA lam = covector_from_dual(ctx, CartanVector(mu));
    for (int s = 0; s < 100; ++s) {
      VectorR b(ctx.coord_dim);
      for (auto& v : b) v = normal(rng);
      if (!ctx.symplectic()) b.array() -= b.mean();
      const CartanVectorC ib = CartanVectorC::from_parts(CartanVector(VectorR::Zero(ctx.coord_dim)), CartanVector(b));
      EXPECT_NEAR(evaluate(ctx, lam, ib), mu.dot(b), 1e-12 * (1.0 + std::abs(mu.dot(b))));
      // real directions pair to zero
      const CartanVectorC re = CartanVectorC::from_parts(CartanVector(b), CartanVector(VectorR::Zero(ctx.coord_dim)));
      EXPECT_NEAR(evaluate(ctx, lam, re), 0.0, 1e-12);
    }
  }
}

TEST(Covector, RegularityIsRootNonvanishing) {
  const auto ctx = build_group(GroupSpec::parse("sl:3"));
  const auto lam = make_covector(ctx, CartanVector{0.5, 0.1, -0.6}, 1e-3);
  ASSERT_TRUE(lam.regular);
  const MatrixR im_h = h_lambda(ctx, lam).imag();
  const VectorR d = ctx.coords_of_diagonal(VectorR(im_h.diagonal()));
  for (const auto& a : ctx.root_datum.positive_roots) EXPECT_GT(std::abs(a.dot(d)), 0.0);
  EXPECT_FALSE(make_covector(ctx, CartanVector{0.3, 0.3, -0.6}).regular);
}

TEST(ProjectA, FixesAAndKillsKN) {
  for (const char* g : {"sl:3", "sp:2"}) {
    const auto ctx = build_group(GroupSpec::parse(g));
    auto rng = CounterRng::substream(15, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorC c(ctx.coord_dim);
    for (auto& v : c) v = cplx(normal(rng), normal(rng));
    if (!ctx.symplectic()) c.array() -= c.mean();
    const CartanVectorC a(c);
    EXPECT_LT((project_a(ctx, ctx.a_matrix(a)).coords - c).norm(), 1e-14);
    for (const auto& b : ctx.basis_k) EXPECT_LT(project_a(ctx, b).coords.norm(), 1e-15);
    for (const auto& b : ctx.basis_n) EXPECT_LT(project_a(ctx, b).coords.norm(), 1e-15);
  }
}

TEST(ProjectA, SplitMatchesBasisSolve) {
  for (const char* g : {"sl:2", "sl:3", "sp:2"}) {
    const auto ctx = build_group(GroupSpec::parse(g));
    std::vector<MatrixR> basis;
    for (const auto* b : {&ctx.basis_n, &ctx.basis_a, &ctx.basis_k}) basis.insert(basis.end(), b->begin(), b->end());
    const int m = ctx.ambient_size, d = static_cast<int>(basis.size());
    MatrixR coords(m * m, d);
    for (int j = 0; j < d; ++j) coords.col(j) = Eigen::Map<const VectorR>(basis[static_cast<std::size_t>(j)].data(), m * m);
    for (int s = 0; s < 10; ++s) {
      auto rng = CounterRng::substream(16, static_cast<std::uint64_t>(s));
      const MatrixC z = random_algebra_c(ctx, rng);
      const AlgebraSplit sp = split_algebra(ctx, z);
      EXPECT_LT((sp.n_part + sp.a_part + sp.k_part - z).norm(), 1e-12);
      // oracle: least-squares solve in the concatenated basis, real and imaginary parts separately
      const auto qr = coords.colPivHouseholderQr();
      const MatrixR zr = z.real(), zi = z.imag();
      const VectorR cr = qr.solve(Eigen::Map<const VectorR>(zr.data(), m * m));
      const VectorR ci = qr.solve(Eigen::Map<const VectorR>(zi.data(), m * m));
      MatrixC n_oracle = MatrixC::Zero(m, m);
      const std::size_t nn = ctx.basis_n.size();
      for (std::size_t j = 0; j < nn; ++j) n_oracle += cplx(cr[static_cast<Eigen::Index>(j)], ci[static_cast<Eigen::Index>(j)]) * basis[j].cast<cplx>();
      EXPECT_LT((n_oracle - sp.n_part).norm(), 1e-10) << g;
      EXPECT_LT(MatrixC(sp.n_part.triangularView<Eigen::Upper>()).norm(), 1e-14);
      EXPECT_LT((sp.k_part + sp.k_part.transpose()).norm(), 1e-14);
    }
  }
}

TEST(Samplers, HaarKIsInK) {
  for (const char* g : {"sl:2", "sl:3", "sp:2", "sp:3"}) {
    const auto ctx = build_group(GroupSpec::parse(g));
    for (int s = 0; s < 20; ++s) {
      auto rng = CounterRng::substream(17, static_cast<std::uint64_t>(s));
      const MatrixR k = haar_k(ctx, rng);
      EXPECT_LT((k * k.transpose() - MatrixR::Identity(k.rows(), k.cols())).norm(), 1e-12) << g;
      EXPECT_LT(ctx.group_residual(k), 1e-12) << g;
      EXPECT_NEAR(k.determinant(), 1.0, 1e-12) << g;
    }
  }
}

TEST(Samplers, RandomPAndKDirection) {
  for (const char* g : {"sl:3", "sp:2"}) {
    const auto ctx = build_group(GroupSpec::parse(g));
    auto rng = CounterRng::substream(18, 0);
    const MatrixR s = random_p(ctx, rng, 1.5);
    EXPECT_LT((s - s.transpose()).norm(), 1e-15);
    EXPECT_LE(s.norm(), 1.5 + 1e-12);
    EXPECT_LT(ctx.algebra_residual(s), 1e-12);
    const MatrixR kd = random_k_direction(ctx, rng);
    EXPECT_NEAR(kd.norm(), 1.0, 1e-12);
    EXPECT_LT((kd + kd.transpose()).norm(), 1e-15);
    EXPECT_LT(ctx.algebra_residual(kd), 1e-12);
  }
}

TEST(Rng, SubstreamsAreReproducibleAndDistinct) {
  auto a = CounterRng::substream(1, 2), b = CounterRng::substream(1, 2), c = CounterRng::substream(1, 3);
  const auto x = a(), y = b(), z = c();
  EXPECT_EQ(x, y);
  EXPECT_NE(x, z);
  EXPECT_NE(CounterRng::substream(1, 2, 1)(), x);
}
