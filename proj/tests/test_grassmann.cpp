#include <finitetype/frames.hpp>
#include <finitetype/grassmann.hpp>
#include <finitetype/surfaces.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace finitetype;

namespace {

P1SpectralData squared() { return P1SpectralData(1, 1, {0.0}, {}); }
P1SpectralData cubic() { return P1SpectralData(1, 2, {0.0}, {0.5}); }
P1SpectralData generic12() { return P1SpectralData(1, 2, {cplx(0.2, 0.1)}, {cplx(-0.3, 0.4)}); }
P1SpectralData generic24() {
  return P1SpectralData(2, 4, {cplx(0.3, 0.1), cplx(-0.2, 0.4)}, {cplx(0.1, -0.5)});
}

Eigen::VectorXcd vec(std::initializer_list<cplx> v) {
  Eigen::VectorXcd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (auto x : v) out(i++) = x;
  return out;
}

Eigen::VectorXcd random_z(std::mt19937& rng, int k) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXcd z(k);
  for (int j = 0; j < k; ++j) z(j) = cplx(u(rng), u(rng));
  return z;
}

DomainGrid square(double r, int n) { return DomainGrid(cplx(-r, -r), cplx(r, r), n, n); }

}  // namespace

TEST(Lambda, SquaredExamples) {
  const auto d = squared();
  EXPECT_EQ(d.alpha, cplx(1.0));
  EXPECT_LT(std::abs(lambda_eval(d, kI) + 1.0), 1e-15);
  EXPECT_LT(std::abs(lambda_eval(d, 1.0) - 1.0), 1e-15);
}

TEST(Lambda, UnimodularOnCircleAndDoubleZeros) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> t(0.0, 2.0 * kPi);
  for (const auto& d : {cubic(), generic12(), generic24()}) {
    EXPECT_LT(std::abs(lambda_eval(d, 1.0) - 1.0), 1e-14);
    for (int i = 0; i < 20; ++i) EXPECT_NEAR(std::abs(lambda_eval(d, std::polar(1.0, t(rng)))), 1.0, 1e-12);
    for (auto p : d.P) {
      EXPECT_LT(std::abs(lambda_eval(d, p)), 1e-15);
      EXPECT_LT(std::abs(lambda_derivative(d, p)), 1e-10);
    }
    // Product rule against a centered difference.
    const cplx z(0.1, -0.2), h(1e-6, 0.0);
    const cplx fd = (lambda_eval(d, z + h) - lambda_eval(d, z - h)) / (2.0 * h);
    EXPECT_LT(std::abs(fd - lambda_derivative(d, z)), 1e-8);
    for (auto p : d.P)
      if (p != cplx(0.0)) EXPECT_THROW(lambda_eval(d, 1.0 / std::conj(p)), DomainError);
  }
}

TEST(Lambda, DataValidation) {
  EXPECT_THROW(P1SpectralData(2, 2, {0.1, 0.2}, {}), ArgumentError);
  EXPECT_THROW(P1SpectralData(1, 2, {0.1}, {}), ArgumentError);
  EXPECT_THROW(P1SpectralData(1, 2, {0.1}, {0.1}), ArgumentError);
  EXPECT_THROW(P1SpectralData(1, 1, {1.0}, {}), ArgumentError);
  EXPECT_THROW(P1SpectralData(1, 1, {0.0}, {}, cplx(2.0)), ArgumentError);
  EXPECT_NO_THROW(P1SpectralData(1, 1, {0.0}, {}, cplx(0.0, 1.0)));
}

TEST(Fibers, SquaredAndCubic) {
  const auto o = fiber_over_one(squared());
  ASSERT_EQ(o.size(), 2u);
  EXPECT_LT(std::abs(o[0] - 1.0), 1e-14);
  EXPECT_LT(std::abs(o[1] + 1.0), 1e-14);
  const auto d = cubic();
  const auto c = fiber_over_one(d);
  ASSERT_EQ(c.size(), 3u);
  for (auto x : c) {
    EXPECT_NEAR(std::abs(x), 1.0, 1e-10);
    EXPECT_LT(std::abs(lambda_eval(d, x) - 1.0), 1e-10);
  }
  EXPECT_LT(std::abs(c[0] - 1.0), 1e-12);
  EXPECT_LT(std::abs(c[1] - cplx(-0.25, std::sqrt(15.0) / 4.0)), 1e-10);
  EXPECT_LT(std::abs(c[2] - cplx(-0.25, -std::sqrt(15.0) / 4.0)), 1e-10);
}

TEST(Fibers, PerturbationStability) {
  for (const auto& d : {generic12(), generic24()}) {
    auto p = d.P;
    p[0] += cplx(1e-8, 0.0);
    const auto moved = P1SpectralData(d.k, d.n, p, d.E);
    const auto a = fiber_over_one(d), b = fiber_over_one(moved);
    for (std::size_t m = 0; m < a.size(); ++m) EXPECT_LT(std::abs(a[m] - b[m]), 1e-6);
  }
}

TEST(Frequencies, SquaredIsTwo) {
  const auto d = squared();
  const Mat u = frequency_matrix(d, fiber_over_one(d));
  ASSERT_EQ(u.rows(), 1);
  ASSERT_EQ(u.cols(), 1);
  EXPECT_LT(std::abs(u(0, 0) - 2.0), 1e-14);
}

TEST(Frequencies, ConjugationSymmetryAndRows) {
  const P1SpectralData d(1, 4, {0.3}, {-0.2, 0.5, 0.1});
  const auto o = fiber_over_one(d);
  const Mat u = frequency_matrix(d, o);
  std::vector<cplx> row, conj_row;
  for (Eigen::Index m = 0; m < u.cols(); ++m) {
    row.push_back(u(0, m));
    conj_row.push_back(std::conj(u(0, m)));
  }
  for (auto x : conj_row) {
    double best = 1e300;
    for (auto y : row) best = std::min(best, std::abs(x - y));
    EXPECT_LT(best, 1e-10);
  }
  for (const auto& e : {generic12(), generic24()}) {
    const Mat v = frequency_matrix(e, fiber_over_one(e));
    for (Eigen::Index j = 0; j < v.rows(); ++j) EXPECT_GT(v.row(j).norm(), 1e-6);
  }
}

TEST(Frequencies, LiteralIndexingHasZeroColumn) {
  const auto d = generic24();
  const Mat u = frequency_matrix(d, fiber_over_one(d), FrequencyIndexing::kLiteral);
  EXPECT_EQ(u.col(0).norm(), 0.0);
}

TEST(Gamma, HomomorphismAndSquared) {
  std::mt19937 rng(8);
  const auto d = generic24();
  const auto o = fiber_over_one(d);
  const Mat u = frequency_matrix(d, o);
  const auto z = random_z(rng, 2), w = random_z(rng, 2);
  EXPECT_LT((gamma_hom(u, z + w) - gamma_hom(u, z).cwiseProduct(gamma_hom(u, w))).norm(), 1e-13);
  EXPECT_LT((gamma_hom(u, Eigen::VectorXcd::Zero(2)) - Eigen::VectorXcd::Ones(4)).norm(), 0.0 + 1e-300);
  const auto s = squared();
  for (double y : {0.1, -0.4, 1.1}) {
    const auto g = gamma_hom(s, fiber_over_one(s), vec({cplx(0.7, y)}));
    EXPECT_LT(std::abs(g(0) - std::exp(cplx(0.0, 4.0 * y))), 1e-14);
  }
  EXPECT_THROW(gamma_hom(u, vec({1.0})), ArgumentError);
}

TEST(Ramification, SquaredIsInfinity) {
  const auto r = ramification_plus(squared());
  EXPECT_TRUE(r.finite.empty());
  EXPECT_EQ(r.at_infinity, 1);
}

TEST(Ramification, GenericCountsAndDegrees) {
  for (const auto& d : {cubic(), generic12(), generic24(), P1SpectralData(1, 4, {0.3}, {-0.2, 0.5, 0.1})}) {
    const auto r = ramification_plus(d);
    EXPECT_EQ(r.count(), d.n);
    EXPECT_EQ(divisor_d_degree(d), d.n);
    for (auto x : r.finite) {
      bool pole = false;
      for (auto p : d.P) pole = pole || (p != cplx(0.0) && std::abs(x - 1.0 / std::conj(p)) < 1e-8);
      if (!pole) EXPECT_GT(std::abs(lambda_eval(d, x)), 1.0);
    }
    for (int l = 0; l < d.k; ++l) {
      int at_inf = 0;
      for (int j = 0; j < d.k; ++j)
        if (d.P[static_cast<std::size_t>(j)] == cplx(0.0)) at_inf += j == l ? 1 : 2;
      for (auto e : d.E)
        if (e == cplx(0.0)) ++at_inf;
      EXPECT_EQ(static_cast<int>(divisor_d(d, l).size()) + at_inf, d.n);
    }
  }
  EXPECT_EQ(ramification_plus(generic12()).finite.size(), 2u);
}

TEST(Ramification, BoundaryPointIsAnError) {
  EXPECT_THROW(ramification_plus(poly::Poly{1.0, 0.0, 1.0}, poly::Poly{1.0}, 1), DegenerateError);
  EXPECT_THROW(ramification_plus(poly::Poly{0.0, 0.0, 1.0}, poly::Poly{1.0}, 2), DegenerateError);
}

TEST(Sections, SquaredIsConstantRow) {
  const auto m = equivariant_map_data(squared());
  ASSERT_EQ(m.sections.rows(), 1);
  EXPECT_LT(std::abs(m.sections(0, 0) - m.sections(0, 1)), 1e-15);
  const auto lit = equivariant_map_data(squared(), FrequencyIndexing::kShifted, SectionDivisor::kLiteral);
  EXPECT_LT(std::abs(lit.sections(0, 0) - lit.sections(0, 1)), 1e-15);
}

TEST(Sections, FiniteAndScaleInvariant) {
  std::mt19937 rng(12);
  for (const auto& d : {generic12(), generic24()}) {
    const auto m = equivariant_map_data(d);
    EXPECT_TRUE(m.sections.allFinite());
    auto scaled = m;
    scaled.sections.row(0) *= 5.0;
    const auto z = random_z(rng, d.k);
    EXPECT_LT(sup_norm(Mat(pluriharmonic_map(m, z).projection - pluriharmonic_map(scaled, z).projection)), 1e-12);
    const auto p = pluriharmonic_map(m, z);
    EXPECT_LT((pluriharmonic_map(scaled, z).plucker - p.plucker).norm(), 1e-12);
    EXPECT_NEAR(p.plucker.norm(), 1.0, 1e-14);
  }
}

TEST(Map, OriginSpansSectionRows) {
  const auto m = equivariant_map_data(generic24());
  const auto p = pluriharmonic_map(m, Eigen::VectorXcd::Zero(2));
  EXPECT_LT(sup_norm(Mat(p.projection - projection_onto_rows(m.sections))), 1e-13);
  EXPECT_LT(sup_norm(Mat(p.projection * p.projection - p.projection)), 1e-13);
  EXPECT_LT(sup_norm(Mat(p.projection - p.projection.adjoint())), 1e-14);
  EXPECT_NEAR(p.projection.trace().real(), 2.0, 1e-13);
}

TEST(Map, EquivarianceAndFrame) {
  std::mt19937 rng(4);
  for (const auto& d : {squared(), generic12(), generic24()}) {
    const auto m = equivariant_map_data(d);
    for (int i = 0; i < 10; ++i) {
      const auto z = random_z(rng, d.k), w = random_z(rng, d.k);
      EXPECT_LT(equivariance_defect(m, z), 1e-10);
      EXPECT_LT(diagonal_frame_unitarity_defect(m, z), 1e-13);
      EXPECT_LT((diagonal_frame(m, z + w) - diagonal_frame(m, z).cwiseProduct(diagonal_frame(m, w))).norm(), 1e-13);
    }
  }
}

TEST(Map, DegeneratePlaneIsReported) {
  Mat v(2, 3);
  v << 1.0, 2.0, 3.0, 2.0, 4.0, 6.0;
  EXPECT_THROW(plane_from_rows(v), DegenerateError);
  EquivariantMapData m = equivariant_map_data(generic24());
  m.sections.row(1) = 2.0 * m.sections.row(0);
  try {
    pluriharmonic_map(m, vec({cplx(0.1, 0.2), 0.3}));
    FAIL() << "expected a degenerate plane";
  } catch (const DegenerateError& e) {
    EXPECT_NE(std::string(e.what()).find("(0.1,0.2)"), std::string::npos);
  }
}

TEST(Harmonicity, SquaredAtFineSpacing) {
  const auto m = equivariant_map_data(squared());
  const auto grid = DomainGrid(cplx(-0.05, -0.05), cplx(0.05, 0.05), 11, 11);
  for (const auto& a : {vec({1.0}), vec({kI}), vec({cplx(0.6, 0.8)})}) EXPECT_LT(harmonicity_residual(m, a, grid), 1e-5);
}

TEST(Harmonicity, SecondOrderConvergence) {
  for (const auto& [d, a] : {std::make_pair(generic12(), vec({1.0})), std::make_pair(generic24(), vec({1.0, kI})),
                             std::make_pair(generic24(), vec({1.0, 0.5}))}) {
    const auto m = equivariant_map_data(d);
    std::vector<double> r;
    for (int n : {11, 21, 41}) r.push_back(harmonicity_residual(m, a, square(0.25, n)));
    EXPECT_NEAR(r[0] / r[1], 4.0, 1.0);
    EXPECT_NEAR(r[1] / r[2], 4.0, 1.0);
  }
}

TEST(Harmonicity, LiteralSectionsAreNotHarmonic) {
  const auto m = equivariant_map_data(generic12(), FrequencyIndexing::kShifted, SectionDivisor::kLiteral);
  std::vector<double> r;
  for (int n : {11, 21, 41}) r.push_back(harmonicity_residual(m, vec({1.0}), square(0.25, n)));
  EXPECT_GT(r[2], 1e-2);
  EXPECT_LT(r[1] / r[2], 2.0);
}

TEST(Harmonicity, NonExponentialControl) {
  const auto m = equivariant_map_data(generic24());
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  Eigen::VectorXd c(4);
  for (int i = 0; i < 4; ++i) c(i) = u(rng);
  const auto control = [&](cplx t) {
    Mat v = m.sections;
    for (Eigen::Index col = 1; col < v.cols(); ++col)
      v.col(col) *= std::exp(kI * c(col - 1) * (t.real() * t.real() + std::sin(3.0 * t.imag())));
    return projection_onto_rows(v);
  };
  EXPECT_GT(harmonicity_residual(control, square(0.25, 21)), 1e-2);
}

TEST(Conformality, Examples) {
  EXPECT_EQ(conformality_indicator(vec({1.0, kI})), 0.0);
  EXPECT_EQ(conformality_indicator(vec({1.0, 0.0})), 1.0);
  EXPECT_EQ(conformality_indicator(vec({1.0, 1.0})), 2.0);
}

TEST(Specialization, GreatCircleMatchesVacuumGaussMap) {
  const auto m = equivariant_map_data(squared());
  const DomainGrid grid(cplx(-0.5, -1.0), cplx(0.5, 1.0), 5, 33);
  const auto gauss = gauss_map(vacuum_field(grid, 8));
  std::vector<Vec3> a, b;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const Vec3 x = cp1_point(pluriharmonic_map(m, vec({grid.point(p)})).projection);
    EXPECT_NEAR(x.norm(), 1.0, 1e-13);
    a.push_back(x);
    b.push_back(gauss[p]);
  }
  EXPECT_LT(rigid_fit(a, b, false).max_residual, 1e-10);
}

TEST(Json, RoundTrip) {
  const auto d = generic24();
  const auto e = p1_from_json(to_json(d));
  EXPECT_EQ(e.P, d.P);
  EXPECT_EQ(e.E, d.E);
  EXPECT_EQ(e.alpha, d.alpha);
  const auto f = p1_from_json(nlohmann::json{{"k", 1}, {"n", 1}, {"P", {{0.0, 0.0}}}});
  EXPECT_EQ(f.alpha, cplx(1.0));
  EXPECT_THROW(p1_from_json(nlohmann::json{{"k", 1}, {"n", 2}, {"P", {{0.0, 0.0}}}}), ArgumentError);
}
