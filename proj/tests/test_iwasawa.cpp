#include <finitetype/frames.hpp>
#include <finitetype/iwasawa.hpp>
#include <finitetype/spectral.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace finitetype;

namespace {

Mat random_matrix(std::mt19937& rng, int dim) {
  std::normal_distribution<double> n;
  Mat m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = cplx(n(rng), n(rng));
  return m;
}

// I + s·L with L twisted: diagonal in even degrees, off-diagonal in odd degrees.
LaurentMatrixLoop random_twisted_loop(std::mt19937& rng, int deg, double s) {
  std::vector<Mat> c;
  for (int d = -deg; d <= deg; ++d) {
    Mat m = s * random_matrix(rng, 2);
    if (d % 2 == 0) {
      m(0, 1) = 0.0;
      m(1, 0) = 0.0;
    } else {
      m(0, 0) = 0.0;
      m(1, 1) = 0.0;
    }
    if (d == 0) m += Mat::Identity(2, 2);
    c.push_back(m);
  }
  return LaurentMatrixLoop(2, -deg, c);
}

CircleLoopSamples samples_of(const std::function<Mat(cplx)>& f, int n) {
  std::vector<Mat> v;
  for (int k = 0; k < n; ++k) v.push_back(f(root_of_unity(k, n)));
  return CircleLoopSamples(static_cast<int>(v.front().rows()), 1.0, v);
}

double pointwise_product_error(const CircleLoopSamples& in, const IwasawaFactors& f) {
  double e = 0.0;
  for (int k = 0; k < in.size(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    e = std::max(e, sup_norm(Mat(in.values[ks] - f.unitary_part.values[ks] * f.plus_part.values[ks])));
  }
  return e;
}

double unitarity(const CircleLoopSamples& s) {
  double e = 0.0;
  for (const auto& m : s.values) e = std::max(e, sup_norm(Mat(m.adjoint() * m - Mat::Identity(m.rows(), m.cols()))));
  return e;
}

}  // namespace

TEST(UnitCircle, UnitaryInputHasTrivialPlusPart) {
  const auto in = samples_of([](cplx z) { return Mat(vacuum_frame(cplx(0.4, -0.7), z)); }, 256);
  const auto f = iwasawa_unit_circle(in, 32);
  EXPECT_LT(max_sample_distance(f.unitary_part, in), 1e-10);
  for (const auto& b : f.plus_part.values) EXPECT_LT(sup_norm(Mat(b - Mat::Identity(2, 2))), 1e-10);
  EXPECT_LT(f.residual, 1e-10);
}

TEST(UnitCircle, ConstantUpperTriangularIsPlus) {
  Mat b(2, 2);
  b << 2.0, cplx(0.3, -1.0), 0.0, 0.5;
  const auto in = samples_of([&](cplx) { return b; }, 64);
  const auto f = iwasawa_unit_circle(in, 8);
  for (const auto& u : f.unitary_part.values) EXPECT_LT(sup_norm(Mat(u - Mat::Identity(2, 2))), 1e-12);
  EXPECT_LT(sup_norm(Mat(f.plus_coeffs.coeff(0) - b)), 1e-12);
}

TEST(UnitCircle, VacuumExponentSamples) {
  const cplx z(0.3, 0.2);
  const Mat2 a = generator_a();
  const auto in = samples_of([&](cplx w) { return Mat(exp2(Mat2((z / w) * a - w * std::conj(z) * a))); }, 256);
  const auto f = iwasawa_unit_circle(in, 64);
  for (int k = 0; k < in.size(); ++k)
    EXPECT_LT(sup_norm(Mat(f.unitary_part.values[static_cast<std::size_t>(k)] - Mat(vacuum_frame(z, in.zeta(k))))), 1e-8);
}

// exp(ζ^{-1}zA) = F⁽⁰⁾·exp(ζz̄A) with the second factor in the plus group and equal to I at ζ = 0.
TEST(UnitCircle, NegativeHalfOfVacuumSplits) {
  const cplx z(0.3, 0.2);
  const Mat2 a = generator_a();
  const auto in = samples_of([&](cplx w) { return Mat(exp2(Mat2((z / w) * a))); }, 256);
  const auto f = iwasawa_unit_circle(in, 64);
  for (int k = 0; k < in.size(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    EXPECT_LT(sup_norm(Mat(f.unitary_part.values[ks] - Mat(vacuum_frame(z, in.zeta(k))))), 1e-8);
    EXPECT_LT(sup_norm(Mat(f.plus_part.values[ks] - Mat(exp2(Mat2(in.zeta(k) * std::conj(z) * a))))), 1e-8);
  }
  EXPECT_LT(sup_norm(Mat(f.plus_coeffs.coeff(0) - Mat::Identity(2, 2))), 1e-8);
}

TEST(UnitCircle, RandomTwistedCorpus) {
  std::mt19937 rng(2024);
  int used = 0;
  while (used < 50) {
    const auto l = random_twisted_loop(rng, 5, 0.08);
    const auto in = sample_on_circle(l, 1.0, 256);
    double min_det = 1e300;
    for (const auto& m : in.values) min_det = std::min(min_det, std::abs(m.determinant()));
    if (min_det < 0.2) continue;
    ++used;
    const auto f = iwasawa_unit_circle(in, 64);
    EXPECT_LT(pointwise_product_error(in, f), 1e-8);
    EXPECT_LT(unitarity(f.unitary_part), 1e-8);
    EXPECT_LT(plus_part_minus_mass(in, f), 1e-8);
    const Mat b0 = f.plus_coeffs.coeff(0);
    EXPECT_EQ(b0(1, 0), cplx(0.0));
    EXPECT_GT(b0(0, 0).real(), 0.0);
    EXPECT_GT(b0(1, 1).real(), 0.0);
    EXPECT_EQ(b0(0, 0).imag(), 0.0);
    EXPECT_EQ(b0(1, 1).imag(), 0.0);
    EXPECT_EQ(winding_number(determinant_samples(f.plus_part)), 0);
    EXPECT_LT(symmetry_residuals(f.unitary_part, SymmetryKind::kUnitary).real_residual, 1e-8);
    EXPECT_LT(symmetry_residuals(f.unitary_part, SymmetryKind::kUnitary).twist_residual, 1e-8);
  }
}

TEST(UnitCircle, RefactoringIsIdempotent) {
  std::mt19937 rng(7);
  const auto in = sample_on_circle(random_twisted_loop(rng, 4, 0.08), 1.0, 256);
  const auto f = iwasawa_unit_circle(in, 64);
  const auto g = iwasawa_unit_circle(multiply_pointwise(f.unitary_part, f.plus_part), 64);
  EXPECT_LT(max_sample_distance(f.unitary_part, g.unitary_part), 1e-9);
  EXPECT_LT(max_sample_distance(f.plus_part, g.plus_part), 1e-9);
}

TEST(UnitCircle, WindowDoublingConverges) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const auto in = sample_on_circle(random_twisted_loop(rng, 5, 0.08), 1.0, 512);
    const auto f64 = iwasawa_unit_circle(in, 64);
    const auto f128 = iwasawa_unit_circle(in, 128);
    EXPECT_LT(max_sample_distance(f64.unitary_part, f128.unitary_part), 1e-8);
  }
}

TEST(UnitCircle, Errors) {
  Mat sing = Mat::Zero(2, 2);
  sing(0, 0) = 1.0;
  const auto in = samples_of([&](cplx) { return sing; }, 64);
  EXPECT_THROW(iwasawa_unit_circle(in, 8), FactorizationError);
  const auto ok = samples_of([](cplx) { return Mat(Mat::Identity(2, 2)); }, 16);
  EXPECT_THROW(iwasawa_unit_circle(ok, 8), ArgumentError);
  const auto off = CircleLoopSamples(2, 0.5, ok.values);
  EXPECT_THROW(iwasawa_unit_circle(off, 2), ArgumentError);
}

TEST(TwoCircle, IdentityInput) {
  std::vector<Mat> id(128, Mat::Identity(2, 2));
  const auto f = birkhoff_two_circle(CircleLoopSamples(2, 0.5, id), CircleLoopSamples(2, 2.0, id), 16);
  for (cplx w : {cplx(1.0), cplx(0.0, 1.0), cplx(0.6, 0.8)})
    EXPECT_LT(sup_norm(Mat(f.annulus_at(w) - Mat::Identity(2, 2))), 1e-12);
  EXPECT_LT(sup_norm(Mat(f.inner_factor.eval(0.1) - Mat::Identity(2, 2))), 1e-12);
  EXPECT_LT(f.residual, 1e-12);
}

TEST(TwoCircle, DressingMatrixIsInInnerOuterGroup) {
  const HyperellipticSpectralData wente({cplx(0.1413, 0.1018), cplx(0.1413, -0.1018)});
  const double eps = default_epsilon(wente);
  const int n = 128;
  std::vector<Mat> in, out;
  for (int k = 0; k < n; ++k) {
    in.push_back(Mat(dressing_matrix(wente, eps * root_of_unity(k, n))));
    out.push_back(Mat(dressing_matrix(wente, root_of_unity(k, n) / eps)));
  }
  const auto f = birkhoff_two_circle(CircleLoopSamples(2, eps, in), CircleLoopSamples(2, 1.0 / eps, out), 24);
  EXPECT_LT(f.residual, 1e-8);
  for (int k = 0; k < 16; ++k)
    EXPECT_LT(sup_norm(Mat(f.annulus_at(root_of_unity(k, 16)) - Mat::Identity(2, 2))), 1e-8);
  for (int k = 0; k < 8; ++k) {
    const cplx w = 0.5 * eps * root_of_unity(k, 8);
    EXPECT_LT(sup_norm(Mat(f.inner_factor.eval(w) - Mat(dressing_matrix(wente, w)))), 1e-8);
  }
}

TEST(TwoCircle, DressedVacuumAtOriginGivesUnitaryConstant) {
  const HyperellipticSpectralData data({cplx(0.3, 0.0)});
  const double eps = default_epsilon(data);
  const int n = 128;
  std::vector<Mat> in, out;
  for (int k = 0; k < n; ++k) {
    const cplx wi = eps * root_of_unity(k, n);
    const cplx wo = root_of_unity(k, n) / eps;
    in.push_back(Mat(dressing_matrix(data, wi) * vacuum_frame(0.0, wi)));
    out.push_back(Mat(dressing_matrix(data, wo) * vacuum_frame(0.0, wo)));
  }
  const auto f = birkhoff_two_circle(CircleLoopSamples(2, eps, in), CircleLoopSamples(2, 1.0 / eps, out), 24);
  const Mat f1 = f.annulus_at(1.0);
  for (int k = 0; k < 16; ++k) {
    const Mat fk = f.annulus_at(root_of_unity(k, 16));
    EXPECT_LT(sup_norm(Mat(fk - f1)), 1e-8);
    EXPECT_LT(sup_norm(Mat(fk.adjoint() * fk - Mat::Identity(2, 2))), 1e-8);
  }
}

TEST(TwoCircle, RankDeficientInput) {
  std::vector<Mat> z(64, Mat::Zero(2, 2));
  try {
    birkhoff_two_circle(CircleLoopSamples(2, 0.5, z), CircleLoopSamples(2, 2.0, z), 8);
    FAIL() << "expected a factorization error";
  } catch (const FactorizationError& e) {
    EXPECT_GE(e.smallest_singular_value(), 0.0);
    EXPECT_LT(e.smallest_singular_value(), 1e-12);
  }
  std::vector<Mat> id(16, Mat::Identity(2, 2));
  EXPECT_THROW(birkhoff_two_circle(CircleLoopSamples(2, 0.5, id), CircleLoopSamples(2, 3.0, id), 4), ArgumentError);
}
