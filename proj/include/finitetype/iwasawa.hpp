#pragma once

#include "loops.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace finitetype {

inline constexpr int kDefaultWindow = 64;

struct IwasawaFactors {
  CircleLoopSamples unitary_part;
  CircleLoopSamples plus_part;
  LaurentMatrixLoop plus_coeffs;
  double reconstruction_error = 0.0;
  double unitarity_defect = 0.0;
  double residual = 0.0;
};

namespace detail {

// In-place lower Cholesky factor of a Hermitian matrix (upper triangle ignored).
inline void cholesky_lower_inplace(Mat& t) {
  const Eigen::Index n = t.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double d = t(j, j).real() - t.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw FactorizationError("Cholesky breakdown of the Gram-Toeplitz matrix at pivot " + std::to_string(j),
                               static_cast<long>(j));
    }
    const double ljj = std::sqrt(d);
    t(j, j) = ljj;
    const Eigen::Index rest = n - j - 1;
    if (rest > 0) {
      if (j > 0) t.col(j).tail(rest).noalias() -= t.block(j + 1, 0, rest, j) * t.row(j).head(j).adjoint();
      t.col(j).tail(rest) /= ljj;
    }
  }
  t.triangularView<Eigen::StrictlyUpper>().setZero();
}

inline double min_hermitian_eigenvalue(const Mat& h) {
  if (h.rows() == 2) {
    const double a = h(0, 0).real();
    const double d = h(1, 1).real();
    const double off = std::norm(h(0, 1));
    return 0.5 * (a + d) - std::sqrt(0.25 * (a - d) * (a - d) + off);
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace detail

// Unitary × plus factorization on |ζ| = 1 via the block-Toeplitz Cholesky factor of the Gram loop.
inline IwasawaFactors iwasawa_unit_circle(const CircleLoopSamples& input, int window = kDefaultWindow) {
  if (std::abs(input.radius - 1.0) > 1e-14) throw ArgumentError("unit-circle factorization needs radius-1 samples");
  const int n = input.size();
  const int dim = input.dim;
  if (window < 0) throw ArgumentError("window must be non-negative");
  if (n < 2 * (window + 1)) throw ArgumentError("sample count too small for the requested window");

  std::vector<Mat> gram(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const Mat& g = input.values[static_cast<std::size_t>(k)];
    gram[static_cast<std::size_t>(k)] = g.adjoint() * g;
    if (detail::min_hermitian_eigenvalue(gram[static_cast<std::size_t>(k)]) < 1e-12)
      throw FactorizationError("Gram loop numerically singular at sample " + std::to_string(k));
  }
  const auto bins = detail::dft_bins(gram);

  const int blocks = window + 1;
  const Eigen::Index size = static_cast<Eigen::Index>(blocks) * dim;
  Mat t(size, size);
  for (int i = 0; i < blocks; ++i)
    for (int j = 0; j <= i; ++j)
      t.block(i * dim, j * dim, dim, dim) = bins[detail::bin_of(i - j, n)].transpose();
  detail::cholesky_lower_inplace(t);

  // Last block row of L, read right to left, gives the transposed plus coefficients.
  std::vector<Mat> b(static_cast<std::size_t>(blocks));
  for (int k = 0; k < blocks; ++k)
    b[static_cast<std::size_t>(k)] = t.block(window * dim, (window - k) * dim, dim, dim).transpose();
  LaurentMatrixLoop plus(dim, 0, b);

  std::vector<Mat> padded(static_cast<std::size_t>(n), Mat::Zero(dim, dim));
  for (int k = 0; k < blocks; ++k) padded[static_cast<std::size_t>(k)] = b[static_cast<std::size_t>(k)];
  std::vector<Mat> plus_samples = detail::idft_bins(padded);

  IwasawaFactors out;
  std::vector<Mat> unitary(static_cast<std::size_t>(n));
  const Mat id = Mat::Identity(dim, dim);
  for (int k = 0; k < n; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    unitary[ks] = input.values[ks] * inverse_small(plus_samples[ks]);
    out.reconstruction_error =
        std::max(out.reconstruction_error, sup_norm(input.values[ks] - unitary[ks] * plus_samples[ks]));
    out.unitarity_defect = std::max(out.unitarity_defect, sup_norm(unitary[ks].adjoint() * unitary[ks] - id));
  }
  out.residual = out.reconstruction_error + out.unitarity_defect;
  out.unitary_part = CircleLoopSamples(dim, 1.0, std::move(unitary));
  out.plus_part = CircleLoopSamples(dim, 1.0, std::move(plus_samples));
  out.plus_coeffs = std::move(plus);
  return out;
}

// Fourier mass of F^{-1}·input in negative degrees: zero for an exact plus factor.
inline double plus_part_minus_mass(const CircleLoopSamples& input, const IwasawaFactors& f) {
  std::vector<Mat> b(input.values.size());
  for (std::size_t k = 0; k < b.size(); ++k) b[k] = inverse_small(f.unitary_part.values[k]) * input.values[k];
  const auto bins = detail::dft_bins(b);
  const int n = input.size();
  double m = 0.0;
  for (int d = -n / 2 + 1; d < 0; ++d) m = std::max(m, sup_norm(bins[detail::bin_of(d, n)]));
  return m;
}

// Winding number of a closed sampled curve around 0.
inline int winding_number(const std::vector<cplx>& curve) {
  double total = 0.0;
  for (std::size_t k = 0; k < curve.size(); ++k) total += std::arg(curve[(k + 1) % curve.size()] / curve[k]);
  return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

inline std::vector<cplx> determinant_samples(const CircleLoopSamples& s) {
  std::vector<cplx> d;
  d.reserve(s.values.size());
  for (const auto& m : s.values) d.push_back(m.determinant());
  return d;
}

struct TwoCircleFactors {
  double epsilon = 0.5;
  CircleLoopSamples annulus_inner;  // on |ζ| = ε
  CircleLoopSamples annulus_outer;  // on |ζ| = 1/ε
  LaurentMatrixLoop annulus;        // degrees [−N, N]
  LaurentMatrixLoop inner_factor;   // Taylor in ζ
  LaurentMatrixLoop outer_factor;   // Taylor in ζ^{-1}
  double matching_residual = 0.0;
  double unitarity_defect = 0.0;
  double residual = 0.0;

  Mat annulus_at(cplx zeta) const { return inverse_small(inverse_annulus.eval(zeta)); }

  // X = F^{-1}, whose Laurent coefficients are the primary unknowns.
  LaurentMatrixLoop inverse_annulus;
};

// Factorization φ = F·b on the two circles |ζ| = ε and 1/ε, with F holomorphic on the annulus
// and unitary on |ζ| = 1, b holomorphic inside |ζ| < ε and outside |ζ| > 1/ε.
inline TwoCircleFactors birkhoff_two_circle(const CircleLoopSamples& inner, const CircleLoopSamples& outer,
                                            int window) {
  const double eps = inner.radius;
  if (!(eps < 1.0)) throw ArgumentError("inner circle radius must be below 1");
  if (std::abs(outer.radius * eps - 1.0) > 1e-12) throw ArgumentError("outer radius must be the reciprocal of the inner one");
  if (inner.size() != outer.size() || inner.dim != outer.dim) throw ArgumentError("circle sample sets do not match");
  const int n = inner.size();
  const int dim = inner.dim;
  const int nn = window;
  if (n < 2 * nn + 2) throw ArgumentError("sample count too small for the requested window");

  const auto bin_in = detail::dft_bins(inner.values);
  const auto bin_out = detail::dft_bins(outer.values);
  const int half = n / 2;
  const int unknowns = dim * (2 * nn + 1);
  const int rows = dim * (2 * (half - 1) + 1);
  Mat a = Mat::Zero(rows, unknowns);
  Mat rhs = Mat::Zero(rows, dim);

  // Row layout per matrix column e: modes −(half−1)..0 on the inner circle, then 1..half−1 on the outer.
  auto row_index = [&](int e, int slot) { return e * (2 * (half - 1) + 1) + slot; };
  for (int c = 0; c < dim; ++c) {
    for (int d = -nn; d <= nn; ++d) {
      const int col = c * (2 * nn + 1) + (d + nn);
      const double w_in = std::pow(eps, std::abs(d) + d);
      const double w_out = std::pow(eps, std::abs(d) - d);
      for (int e = 0; e < dim; ++e) {
        for (int m = -(half - 1); m <= 0; ++m)
          a(row_index(e, m + half - 1), col) = w_in * bin_in[detail::bin_of(m - d, n)](c, e);
        for (int m = 1; m <= half - 1; ++m)
          a(row_index(e, half - 1 + m), col) = w_out * bin_out[detail::bin_of(m - d, n)](c, e);
      }
    }
  }
  for (int e = 0; e < dim; ++e) rhs(row_index(e, half - 1), e) = 1.0;

  Eigen::ColPivHouseholderQR<Mat> qr(a);
  const auto rdiag = qr.matrixR().diagonal().cwiseAbs();
  const double smin = rdiag.minCoeff();
  if (!(smin > 1e-13 * rdiag.maxCoeff()))
    throw FactorizationError("two-circle system is rank deficient", -1, -1, smin);
  // Each column of the solution holds one row of X.
  const Mat y = qr.solve(rhs);
  const double ls_residual = sup_norm(a * y - rhs);

  std::vector<Mat> xc(static_cast<std::size_t>(2 * nn + 1), Mat::Zero(dim, dim));
  for (int d = -nn; d <= nn; ++d) {
    const double s = std::pow(eps, std::abs(d));
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) xc[static_cast<std::size_t>(d + nn)](r, c) = s * y(c * (2 * nn + 1) + (d + nn), r);
  }
  LaurentMatrixLoop x0(dim, -nn, xc);

  // Left constant fixing unitarity: X = M·X0 with M upper triangular, M^†M = H = F0^†F0.
  Mat h = Mat::Zero(dim, dim);
  std::vector<Mat> f0(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    f0[static_cast<std::size_t>(k)] = inverse_small(x0.eval(root_of_unity(k, n)));
    h += f0[static_cast<std::size_t>(k)].adjoint() * f0[static_cast<std::size_t>(k)];
  }
  h /= static_cast<double>(n);
  h = 0.5 * (h + h.adjoint());
  Eigen::LLT<Mat> llt(h);
  if (llt.info() != Eigen::Success) throw FactorizationError("annulus factor is not unitarizable");
  const Mat m = llt.matrixL().adjoint();
  std::vector<Mat> xs(xc.size());
  for (std::size_t i = 0; i < xc.size(); ++i) xs[i] = m * xc[i];

  TwoCircleFactors out;
  out.epsilon = eps;
  out.inverse_annulus = LaurentMatrixLoop(dim, -nn, xs);
  const Mat id = Mat::Identity(dim, dim);
  std::vector<Mat> unit(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    unit[static_cast<std::size_t>(k)] = inverse_small(out.inverse_annulus.eval(root_of_unity(k, n)));
    out.unitarity_defect =
        std::max(out.unitarity_defect, sup_norm(unit[static_cast<std::size_t>(k)].adjoint() * unit[static_cast<std::size_t>(k)] - id));
  }
  out.annulus = fourier_coefficients(CircleLoopSamples(dim, 1.0, unit), -nn, nn).loop;

  std::vector<Mat> fin(static_cast<std::size_t>(n)), fout(static_cast<std::size_t>(n));
  std::vector<Mat> bin(static_cast<std::size_t>(n)), bout(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const Mat xi = out.inverse_annulus.eval(inner.zeta(k));
    const Mat xo = out.inverse_annulus.eval(outer.zeta(k));
    fin[ks] = inverse_small(xi);
    fout[ks] = inverse_small(xo);
    bin[ks] = xi * inner.values[ks];
    bout[ks] = xo * outer.values[ks];
  }
  out.inner_factor = fourier_coefficients(CircleLoopSamples(dim, eps, bin), 0, half - 1).loop;
  out.outer_factor = fourier_coefficients(CircleLoopSamples(dim, 1.0 / eps, bout), -(half - 1), 0).loop;
  double match = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    match = std::max(match, sup_norm(inner.values[ks] - fin[ks] * out.inner_factor.eval(inner.zeta(k))));
    match = std::max(match, sup_norm(outer.values[ks] - fout[ks] * out.outer_factor.eval(outer.zeta(k))));
  }
  out.annulus_inner = CircleLoopSamples(dim, eps, std::move(fin));
  out.annulus_outer = CircleLoopSamples(dim, 1.0 / eps, std::move(fout));
  out.matching_residual = std::max(match, ls_residual);
  out.residual = out.matching_residual + out.unitarity_defect;
  return out;
}

}  // namespace finitetype
