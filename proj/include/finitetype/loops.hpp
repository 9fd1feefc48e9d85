#pragma once

#include "core.hpp"

#include <json.hpp>
#include <unsupported/Eigen/FFT>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <utility>

namespace finitetype {

// Finitely supported Laurent series Σ_d c_d ζ^d of dim×dim complex matrices,
// stored contiguously over [d_min, d_max].
class LaurentMatrixLoop {
 public:
  LaurentMatrixLoop() = default;

  LaurentMatrixLoop(int dim, int d_min, std::vector<Mat> coeffs)
      : dim_(dim), d_min_(d_min), coeffs_(std::move(coeffs)) {
    if (dim <= 0) throw ArgumentError("loop dimension must be positive");
    for (const auto& c : coeffs_) {
      if (c.rows() != dim || c.cols() != dim) throw ArgumentError("coefficient has wrong dimension");
    }
  }

  static LaurentMatrixLoop zero(int dim) { return LaurentMatrixLoop(dim, 0, {}); }

  static LaurentMatrixLoop monomial(int degree, const Mat& c) {
    return LaurentMatrixLoop(static_cast<int>(c.rows()), degree, {c});
  }

  static LaurentMatrixLoop constant(const Mat& c) { return monomial(0, c); }

  int dim() const { return dim_; }
  int d_min() const { return d_min_; }
  int d_max() const { return d_min_ + static_cast<int>(coeffs_.size()) - 1; }
  bool empty() const { return coeffs_.empty(); }
  const std::vector<Mat>& coeffs() const { return coeffs_; }

  Mat coeff(int d) const {
    if (d < d_min_ || d > d_max()) return Mat::Zero(dim_, dim_);
    return coeffs_[static_cast<std::size_t>(d - d_min_)];
  }

  Mat eval(cplx zeta) const {
    Mat result = Mat::Zero(dim_, dim_);
    if (coeffs_.empty()) return result;
    if (zeta == cplx(0.0) && d_min_ < 0) throw DomainError("Laurent loop evaluated at zeta = 0");
    // Horner in ζ for degrees ≥ 0, in ζ^{-1} for degrees < 0.
    const int top = d_max();
    if (top >= 0) {
      for (int d = top; d >= std::max(d_min_, 0); --d) {
        result = result * zeta + coeff(d);
      }
      for (int d = 0; d < d_min_; ++d) result *= zeta;
    }
    if (d_min_ < 0) {
      const cplx inv = 1.0 / zeta;
      Mat neg = Mat::Zero(dim_, dim_);
      for (int d = d_min_; d <= std::min(top, -1); ++d) neg = neg * inv + coeff(d);
      for (int d = std::min(top, -1); d < -1; ++d) neg *= inv;
      result += neg * inv;
    }
    return result;
  }

  // Multiplication by ζ^k.
  LaurentMatrixLoop shifted(int k) const { return LaurentMatrixLoop(dim_, d_min_ + k, coeffs_); }

  friend LaurentMatrixLoop operator+(const LaurentMatrixLoop& a, const LaurentMatrixLoop& b) {
    return combine(a, b, 1.0);
  }
  friend LaurentMatrixLoop operator-(const LaurentMatrixLoop& a, const LaurentMatrixLoop& b) {
    return combine(a, b, -1.0);
  }
  friend LaurentMatrixLoop operator*(cplx s, const LaurentMatrixLoop& a) {
    auto c = a.coeffs_;
    for (auto& m : c) m *= s;
    return LaurentMatrixLoop(a.dim_, a.d_min_, std::move(c));
  }
  friend LaurentMatrixLoop operator*(const LaurentMatrixLoop& a, const LaurentMatrixLoop& b) {
    if (a.dim_ != b.dim_) throw ArgumentError("loop dimension mismatch");
    if (a.empty() || b.empty()) return zero(a.dim_);
    const std::size_t n = a.coeffs_.size() + b.coeffs_.size() - 1;
    std::vector<Mat> c(n, Mat::Zero(a.dim_, a.dim_));
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
      for (std::size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
    return LaurentMatrixLoop(a.dim_, a.d_min_ + b.d_min_, std::move(c));
  }

  double max_coeff_norm() const {
    double m = 0.0;
    for (const auto& c : coeffs_) m = std::max(m, sup_norm(c));
    return m;
  }

 private:
  static LaurentMatrixLoop combine(const LaurentMatrixLoop& a, const LaurentMatrixLoop& b, double sb) {
    if (a.dim_ != b.dim_) throw ArgumentError("loop dimension mismatch");
    if (a.empty()) return sb * b;
    if (b.empty()) return a;
    const int lo = std::min(a.d_min_, b.d_min_);
    const int hi = std::max(a.d_max(), b.d_max());
    std::vector<Mat> c;
    c.reserve(static_cast<std::size_t>(hi - lo + 1));
    for (int d = lo; d <= hi; ++d) c.push_back(a.coeff(d) + sb * b.coeff(d));
    return LaurentMatrixLoop(a.dim_, lo, std::move(c));
  }

  int dim_ = 1;
  int d_min_ = 0;
  std::vector<Mat> coeffs_;
};

// Values of a loop at ζ_k = radius·exp(2πik/n).
struct CircleLoopSamples {
  int dim = 1;
  double radius = 1.0;
  std::vector<Mat> values;

  CircleLoopSamples() = default;
  CircleLoopSamples(int dim_, double radius_, std::vector<Mat> values_)
      : dim(dim_), radius(radius_), values(std::move(values_)) {
    if (!is_power_of_two(static_cast<long>(values.size())))
      throw ArgumentError("sample count must be a power of two");
    if (!(radius > 0.0)) throw ArgumentError("sample radius must be positive");
  }

  int size() const { return static_cast<int>(values.size()); }

  cplx zeta(int k) const { return std::polar(radius, 2.0 * kPi * k / size()); }
};

inline cplx root_of_unity(int k, int n) { return std::polar(1.0, 2.0 * kPi * k / n); }

inline CircleLoopSamples sample_on_circle(const LaurentMatrixLoop& loop, double radius, int n) {
  if (!is_power_of_two(n)) throw ArgumentError("sample count must be a power of two");
  if (!loop.empty() && n < 2 * (loop.d_max() - loop.d_min() + 1))
    throw ArgumentError("sample count below twice the loop support");
  std::vector<Mat> v(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) v[static_cast<std::size_t>(k)] = loop.eval(radius * root_of_unity(k, n));
  return CircleLoopSamples(loop.dim(), radius, std::move(v));
}

namespace detail {

// Entrywise DFT: bin m holds (1/n) Σ_k values[k]·ω^{-mk}.
inline std::vector<Mat> dft_bins(const std::vector<Mat>& values) {
  thread_local Eigen::FFT<double> fft;
  const std::size_t n = values.size();
  const Eigen::Index dim = values.front().rows();
  std::vector<Mat> bins(n, Mat(dim, dim));
  std::vector<cplx> in(n), out(n);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      for (std::size_t k = 0; k < n; ++k) in[k] = values[k](i, j);
      fft.fwd(out, in);
      for (std::size_t k = 0; k < n; ++k) bins[k](i, j) = out[k] / static_cast<double>(n);
    }
  }
  return bins;
}

// Entrywise inverse: values[k] = Σ_m bins[m]·ω^{mk}.
inline std::vector<Mat> idft_bins(const std::vector<Mat>& bins) {
  thread_local Eigen::FFT<double> fft;
  const std::size_t n = bins.size();
  const Eigen::Index dim = bins.front().rows();
  std::vector<Mat> values(n, Mat(dim, dim));
  std::vector<cplx> in(n), out(n);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      for (std::size_t k = 0; k < n; ++k) in[k] = bins[k](i, j);
      fft.inv(out, in);
      for (std::size_t k = 0; k < n; ++k) values[k](i, j) = out[k] * static_cast<double>(n);
    }
  }
  return values;
}

inline std::size_t bin_of(int d, int n) { return static_cast<std::size_t>(((d % n) + n) % n); }

}  // namespace detail

struct TruncatedLoop {
  LaurentMatrixLoop loop;
  // Largest sample-scale coefficient among the DFT bins outside the window.
  double aliased_residual = 0.0;
};

inline TruncatedLoop fourier_coefficients(const CircleLoopSamples& samples, int d_min, int d_max) {
  const int n = samples.size();
  if (d_max < d_min) throw ArgumentError("empty Fourier window");
  if (d_max - d_min >= n) throw ArgumentError("Fourier window wider than the sample count");
  const auto bins = detail::dft_bins(samples.values);
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  std::vector<Mat> c;
  c.reserve(static_cast<std::size_t>(d_max - d_min + 1));
  for (int d = d_min; d <= d_max; ++d) {
    const std::size_t b = detail::bin_of(d, n);
    used[b] = true;
    c.push_back(bins[b] * std::pow(samples.radius, -d));
  }
  double residual = 0.0;
  for (int b = 0; b < n; ++b)
    if (!used[static_cast<std::size_t>(b)]) residual = std::max(residual, sup_norm(bins[static_cast<std::size_t>(b)]));
  return {LaurentMatrixLoop(samples.dim, d_min, std::move(c)), residual};
}

// ζ ↦ loop(1/ζ̄)^†: degree-d coefficient becomes the adjoint at degree −d.
inline LaurentMatrixLoop dagger_flip(const LaurentMatrixLoop& loop) {
  if (loop.empty()) return loop;
  std::vector<Mat> c;
  c.reserve(loop.coeffs().size());
  for (int d = -loop.d_max(); d <= -loop.d_min(); ++d) c.push_back(loop.coeff(-d).adjoint());
  return LaurentMatrixLoop(loop.dim(), -loop.d_max(), std::move(c));
}

enum class SymmetryKind {
  kSkew,     // g(1/ζ̄)^† = −g(ζ): connection forms and Killing fields
  kUnitary,  // g(1/ζ̄)^† g(ζ) = I: frames
};

struct SymmetryResiduals {
  double real_residual = 0.0;
  double twist_residual = 0.0;
};

inline SymmetryResiduals symmetry_residuals(const CircleLoopSamples& samples,
                                            SymmetryKind kind = SymmetryKind::kSkew) {
  if (std::abs(samples.radius - 1.0) > 1e-14) throw ArgumentError("symmetry check needs unit-circle samples");
  const int n = samples.size();
  if (n % 2 != 0) throw ArgumentError("symmetry check needs an even sample count");
  SymmetryResiduals r;
  const bool twistable = samples.dim == 2;
  for (int k = 0; k < n; ++k) {
    const Mat& g = samples.values[static_cast<std::size_t>(k)];
    const double real = kind == SymmetryKind::kSkew
                            ? sup_norm(g + g.adjoint())
                            : sup_norm(g.adjoint() * g - Mat::Identity(samples.dim, samples.dim));
    r.real_residual = std::max(r.real_residual, real);
    if (twistable) {
      const Mat& opposite = samples.values[static_cast<std::size_t>((k + n / 2) % n)];
      const Mat2 tau = twist_tau();
      r.twist_residual = std::max(r.twist_residual, sup_norm(opposite - tau * g * tau));
    }
  }
  return r;
}

inline Mat2 exp_traceless2(const Mat2& m) {
  const cplx s2 = m(0, 0) * m(0, 0) + m(0, 1) * m(1, 0);  // = −det m for trace-free m
  cplx c, sc;
  if (std::abs(s2) < 1e-8) {
    c = 1.0 + s2 / 2.0 + s2 * s2 / 24.0 + s2 * s2 * s2 / 720.0;
    sc = 1.0 + s2 / 6.0 + s2 * s2 / 120.0 + s2 * s2 * s2 / 5040.0;
  } else {
    const cplx s = std::sqrt(s2);
    c = std::cosh(s);
    sc = std::sinh(s) / s;
  }
  return c * Mat2::Identity() + sc * m;
}

inline Mat2 exp2(const Mat2& m) {
  const cplx half_trace = 0.5 * (m(0, 0) + m(1, 1));
  const Mat2 shifted = m - half_trace * Mat2::Identity();
  const Mat2 e = exp_traceless2(shifted);
  return half_trace == cplx(0.0) ? e : Mat2(std::exp(half_trace) * e);
}

inline Mat exp_matrix(const Mat& m) {
  if (m.rows() == 2) return Mat(exp2(Mat2(m)));
  return m.exp();
}

inline CircleLoopSamples exp_pointwise(const CircleLoopSamples& exponent) {
  std::vector<Mat> v;
  v.reserve(exponent.values.size());
  for (const auto& m : exponent.values) v.push_back(exp_matrix(m));
  return CircleLoopSamples(exponent.dim, exponent.radius, std::move(v));
}

inline CircleLoopSamples multiply_pointwise(const CircleLoopSamples& a, const CircleLoopSamples& b) {
  if (a.size() != b.size() || a.dim != b.dim) throw ArgumentError("sample sets do not match");
  std::vector<Mat> v(a.values.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = a.values[k] * b.values[k];
  return CircleLoopSamples(a.dim, a.radius, std::move(v));
}

inline double max_sample_distance(const CircleLoopSamples& a, const CircleLoopSamples& b) {
  if (a.size() != b.size()) throw ArgumentError("sample sets do not match");
  double m = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) m = std::max(m, sup_norm(a.values[k] - b.values[k]));
  return m;
}

inline nlohmann::json loop_to_json(const LaurentMatrixLoop& loop) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& c : loop.coeffs())
    for (Eigen::Index i = 0; i < c.rows(); ++i)
      for (Eigen::Index j = 0; j < c.cols(); ++j) entries.push_back({c(i, j).real(), c(i, j).imag()});
  return {{"dim", loop.dim()}, {"d_min", loop.d_min()}, {"entries", entries}};
}

inline LaurentMatrixLoop loop_from_json(const nlohmann::json& j) {
  const int dim = j.at("dim").get<int>();
  const int d_min = j.at("d_min").get<int>();
  const auto& entries = j.at("entries");
  if (dim <= 0 || entries.size() % static_cast<std::size_t>(dim * dim) != 0)
    throw ArgumentError("loop JSON entry count is not a multiple of dim^2");
  std::vector<Mat> c(entries.size() / static_cast<std::size_t>(dim * dim), Mat(dim, dim));
  std::size_t e = 0;
  for (auto& m : c)
    for (int i = 0; i < dim; ++i)
      for (int k = 0; k < dim; ++k, ++e) m(i, k) = cplx(entries[e].at(0).get<double>(), entries[e].at(1).get<double>());
  return LaurentMatrixLoop(dim, d_min, std::move(c));
}

}  // namespace finitetype
