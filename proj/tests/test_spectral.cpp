#include <finitetype/spectral.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace finitetype;

namespace {

const HyperellipticSpectralData kWente({cplx(0.1413, 0.1018), cplx(0.1413, -0.1018)});

cplx random_point(std::mt19937& rng, double r_min, double r_max) {
  std::uniform_real_distribution<double> r(r_min, r_max), t(0.0, 2.0 * kPi);
  return std::polar(r(rng), t(rng));
}

// y²·λ^{-2g-2}(λ^{g+1} − 1)² with y² multiplied out factor by factor.
cplx minus_det_xi_oracle(const std::vector<cplx>& a, cplx zeta) {
  const cplx l = zeta * zeta;
  cplx y2 = l;
  for (auto x : a) y2 *= (l - x) * (1.0 - std::conj(x) * l);
  const int g = static_cast<int>(a.size());
  const cplx t = std::pow(l, g + 1) - 1.0;
  return y2 * t * t / std::pow(l, 2 * g + 2);
}

}  // namespace

TEST(Eta, GenusZero) {
  const auto eta = eta_polynomial(HyperellipticSpectralData());
  EXPECT_EQ(eta.d_min(), 1);
  EXPECT_EQ(eta.d_max(), 1);
  EXPECT_LT(sup_norm(Mat(eta.coeff(1) - Mat(generator_a()))), 1e-15);
}

TEST(Eta, GenusOneHalf) {
  const auto eta = eta_polynomial(HyperellipticSpectralData({0.5}));
  EXPECT_EQ(eta.coeff(1)(0, 1), cplx(1.0));
  EXPECT_EQ(eta.coeff(3)(0, 1), cplx(-0.5));
  EXPECT_EQ(eta.coeff(3)(1, 0), cplx(1.0));
  EXPECT_EQ(eta.coeff(1)(1, 0), cplx(-0.5));
  for (int d = eta.d_min(); d <= eta.d_max(); ++d) {
    EXPECT_EQ(eta.coeff(d)(0, 0), cplx(0.0));
    EXPECT_EQ(eta.coeff(d)(1, 1), cplx(0.0));
  }
}

TEST(Eta, WenteDegreeAndTwist) {
  const auto eta = eta_polynomial(kWente);
  EXPECT_EQ(eta.d_min(), 1);
  EXPECT_EQ(eta.d_max(), 5);
  EXPECT_LT(symmetry_residuals(sample_on_circle(eta, 1.0, 64)).twist_residual, 1e-14);
}

TEST(Xi, GenusZeroClosedForm) {
  const auto xi = xi_initial(HyperellipticSpectralData());
  const Mat a = Mat(generator_a());
  for (cplx w : {cplx(0.3, 0.4), cplx(2.0, -1.0)})
    EXPECT_LT(sup_norm(Mat(xi.eval(w) - (w * a - a / w))), 1e-15);
}

TEST(Xi, SymmetriesAndCurve) {
  std::mt19937 rng(5);
  for (const auto& data : {HyperellipticSpectralData({0.5}), kWente,
                           HyperellipticSpectralData({cplx(0.3, 0.2), cplx(-0.1, 0.6), cplx(0.5, -0.5)})}) {
    const auto xi = xi_initial(data);
    EXPECT_EQ(xi.d_min(), -(2 * data.genus() + 1));
    EXPECT_EQ(xi.d_max(), 2 * data.genus() + 1);
    const auto sym = symmetry_residuals(sample_on_circle(xi, 1.0, 64));
    EXPECT_LT(sym.real_residual, 1e-13);
    EXPECT_LT(sym.twist_residual, 1e-13);
    for (int i = 0; i < 10; ++i) {
      const cplx w = random_point(rng, 0.5, 1.5);
      const cplx md = -xi.eval(w).determinant();
      EXPECT_LT(std::abs(md - minus_det_xi_oracle(data.branch_points, w)), 1e-12 * (1.0 + std::abs(md)));
      EXPECT_LT(std::abs(md + xi.eval(-w).determinant()), 1e-12 * (1.0 + std::abs(md)));
      EXPECT_LT(std::abs(std::conj(md) + xi.eval(1.0 / std::conj(w)).determinant()), 1e-12 * (1.0 + std::abs(md)));
    }
  }
}

TEST(Xi, NormalizedKillingFieldCommutesWithExponent) {
  std::mt19937 rng(9);
  for (const auto& data : {HyperellipticSpectralData({0.3}), kWente}) {
    const auto y = symes_exponent(data);
    const auto k = normalized_killing_field(data);
    EXPECT_LT(symmetry_residuals(sample_on_circle(k, 1.0, 64)).real_residual, 1e-13);
    for (int i = 0; i < 10; ++i) {
      const cplx w = random_point(rng, 0.5, 1.5);
      const Mat a = y.eval(w), b = k.eval(w);
      EXPECT_LT(sup_norm(Mat(a * b - b * a)), 1e-12);
    }
  }
}

TEST(Curve, Examples) {
  EXPECT_EQ(curve_discriminant(HyperellipticSpectralData(), 4.0), cplx(4.0));
  EXPECT_LT(std::abs(curve_discriminant(HyperellipticSpectralData({0.5}), 1.0) - 0.25), 1e-15);
  for (auto a : kWente.branch_points) EXPECT_EQ(curve_discriminant(kWente, a), cplx(0.0));
}

TEST(Curve, DataValidation) {
  EXPECT_THROW(HyperellipticSpectralData({1.0}), ArgumentError);
  EXPECT_THROW(HyperellipticSpectralData({0.0}), ArgumentError);
  EXPECT_THROW(HyperellipticSpectralData({0.3, 0.3}), ArgumentError);
  EXPECT_NO_THROW(HyperellipticSpectralData({0.3, 0.3}, true));
  EXPECT_THROW(LobeCounts({0, 2}), ArgumentError);
  EXPECT_THROW(LobeCounts(std::vector<int>{}), ArgumentError);
}

TEST(Dressing, GenusZeroIsIdentity) {
  for (cplx w : {cplx(0.0), cplx(0.2, 0.1), cplx(5.0, 1.0), cplx(0.9)})
    EXPECT_EQ(dressing_matrix(HyperellipticSpectralData(), w), Mat2::Identity());
}

TEST(Dressing, ValueAtOrigin) {
  const Mat2 g = dressing_matrix(HyperellipticSpectralData({0.25}), 0.0);
  const cplx q = std::pow(cplx(-0.25), 0.25);
  EXPECT_LT(std::abs(g(0, 0) - 1.0 / q), 1e-15);
  EXPECT_LT(std::abs(g(1, 1) - q), 1e-15);
  EXPECT_EQ(g(0, 1), cplx(0.0));
  EXPECT_EQ(g(1, 0), cplx(0.0));
}

TEST(Dressing, DeterminantFourthPowerAndRealForm) {
  std::mt19937 rng(3);
  const double rin = std::sqrt(kWente.min_modulus());
  for (int i = 0; i < 20; ++i) {
    const cplx w = random_point(rng, 0.0, 0.95 * rin);
    const Mat2 g = dressing_matrix(kWente, w);
    EXPECT_LT(std::abs(g.determinant() - 1.0), 1e-14);
    cplx h = 1.0;
    for (auto a : kWente.branch_points) h *= (w * w - a) / (1.0 - std::conj(a) * w * w);
    EXPECT_LT(std::abs(std::pow(g(1, 1), 4) - h), 1e-12);
    const Mat2 outer = dressing_matrix(kWente, 1.0 / std::conj(w));
    EXPECT_LT(std::abs(outer.determinant() - 1.0), 1e-14);
    EXPECT_LT(sup_norm(Mat(outer.adjoint() * g - Mat2::Identity())), 1e-13);
  }
}

TEST(Dressing, AnnulusIsExcluded) {
  EXPECT_THROW(dressing_matrix(HyperellipticSpectralData({0.25}), 0.8), DomainError);
  EXPECT_THROW(dressing_matrix(kWente, 1.0), DomainError);
}

TEST(Backlund, Examples) {
  EXPECT_EQ(backlund_product_loop(NodalSpectralData(), cplx(0.3, 2.0)), Mat2::Identity());
  const Mat2 b = backlund_product_loop(NodalSpectralData({0.5}), 1.0);
  EXPECT_LT(std::abs(b(0, 0) + 0.5), 1e-15);
  EXPECT_LT(std::abs(b(1, 1) - 0.5), 1e-15);
}

TEST(Backlund, ScalarMultipleOfDoubledDressing) {
  std::mt19937 rng(21);
  const NodalSpectralData nodes({0.3, 0.1});
  const auto doubled = nodes.doubled();
  const double rin = std::sqrt(doubled.min_modulus());
  for (int i = 0; i < 10; ++i) {
    for (const cplx w : {random_point(rng, 0.05, 0.9 * rin), random_point(rng, 1.1 / rin, 3.0 / rin)}) {
      const Mat2 b = backlund_product_loop(nodes, w);
      const Mat2 g = dressing_matrix(doubled, w);
      const cplx r0 = b(0, 0) / g(0, 0), r1 = b(1, 1) / g(1, 1);
      EXPECT_LT(std::abs(r0 - r1), 1e-12 * std::abs(r0));
    }
  }
}

TEST(Bubbleton, BranchPoints) {
  const auto a23 = bubbleton_branch_points(LobeCounts({2, 3}));
  ASSERT_EQ(a23.r(), 1);
  EXPECT_LT(std::abs(a23.nodes[0] - 0.1458980337503155), 1e-14);
  EXPECT_TRUE(a23.real_flag());
  const auto a12 = bubbleton_branch_points(LobeCounts({1, 2}));
  EXPECT_LT(std::abs(a12.nodes[0] - 0.0717967697244908), 1e-14);
  EXPECT_EQ(a12.arithmetic_genus(), 2);
  EXPECT_THROW(bubbleton_branch_points(LobeCounts({2, 2})), ArgumentError);
  EXPECT_THROW(bubbleton_branch_points(LobeCounts({3, 2})), ArgumentError);
}

TEST(Periodicity, SelfConsistentAndCylinder) {
  for (const auto& p : {std::vector<int>{2, 3}, std::vector<int>{1, 2}, std::vector<int>{1, 3, 5}}) {
    const LobeCounts lobes(p);
    const auto data = bubbleton_branch_points(lobes);
    EXPECT_LT(periodicity_check(data, lobes).residual, 1e-12);
    EXPECT_EQ(lobes_from_nodes(data, p.front()).p, p);
  }
  const auto cyl = periodicity_check(NodalSpectralData(), LobeCounts({1}));
  EXPECT_EQ(cyl.residual, 0.0);
  EXPECT_LT(std::abs(cyl.tau - cplx(0.0, -kPi / 2.0)), 1e-15);
}

TEST(Periodicity, PerturbedNodeFails) {
  EXPECT_GT(periodicity_check(NodalSpectralData({0.15}), LobeCounts({2, 3})).residual, 1e-3);
  EXPECT_THROW(periodicity_check(NodalSpectralData({cplx(0.1, 0.1)}), LobeCounts({1, 2})), ArgumentError);
  EXPECT_THROW(periodicity_check(NodalSpectralData({0.1}), LobeCounts({1})), ArgumentError);
}

TEST(ComplexNode, Examples) {
  const LobeCounts lobes({2, 3});
  EXPECT_LT(complex_node_periodicity(bubbleton_branch_points(lobes), lobes), 1e-12);
  const NodalSpectralData off({std::polar(0.25, 2.0 * kPi / 3.0)});
  EXPECT_LT(std::abs(complex_node_periodicity(off, LobeCounts({1, 2})) - 0.25), 1e-14);
  const double c = std::cos(kPi / 6.0);
  const double r = 3.0 * c - std::sqrt(9.0 * c * c - 1.0);
  const NodalSpectralData root({std::polar(r * r, kPi / 3.0)});
  EXPECT_LT(complex_node_periodicity(root, LobeCounts({1, 3})), 1e-12);
}

TEST(Json, RoundTrip) {
  const auto back = hyperelliptic_from_json(to_json(kWente));
  EXPECT_EQ(back.branch_points, kWente.branch_points);
  const LobeCounts lobes({1, 2});
  const auto [nodes, p] = nodal_from_json(to_json(bubbleton_branch_points(lobes), lobes));
  EXPECT_EQ(nodes.nodes, bubbleton_branch_points(lobes).nodes);
  EXPECT_EQ(p.p, lobes.p);
  EXPECT_THROW(hyperelliptic_from_json(nlohmann::json{{"genus", 2}, {"branch_points", {{0.1, 0.0}}}}), Error);
}
