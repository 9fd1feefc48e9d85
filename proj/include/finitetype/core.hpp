#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace finitetype {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Mat2 = Eigen::Matrix2cd;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Point outside the domain of a function (pole, excluded annulus, ζ = 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class FactorizationError : public Error {
 public:
  FactorizationError(const std::string& what, long pivot = -1, long grid_index = -1,
                     double smallest_singular_value = -1.0)
      : Error(what), pivot_(pivot), grid_index_(grid_index), sigma_min_(smallest_singular_value) {}

  long pivot() const { return pivot_; }
  long grid_index() const { return grid_index_; }
  double smallest_singular_value() const { return sigma_min_; }

  FactorizationError at_grid_index(long index) const {
    return FactorizationError(std::string(what()) + " (grid point " + std::to_string(index) + ")",
                              pivot_, index, sigma_min_);
  }

 private:
  long pivot_;
  long grid_index_;
  double sigma_min_;
};

class DegenerateError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  IoError(const std::string& what, std::string path) : Error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Largest entry modulus; the matrix norm used for every residual in the library.
template <class Derived>
double sup_norm(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool is_power_of_two(long n) { return n > 0 && (n & (n - 1)) == 0; }

inline int next_power_of_two(long n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline Mat2 pauli(int k) {
  Mat2 s;
  switch (k) {
    case 1: s << 0, 1, 1, 0; break;
    case 2: s << 0, -kI, kI, 0; break;
    default: s << 1, 0, 0, -1; break;
  }
  return s;
}

// Off-diagonal generator [[0,1],[1,0]].
inline Mat2 generator_a() { return pauli(1); }

inline Mat2 twist_tau() { return pauli(3); }

inline Mat2 inverse2(const Mat2& m) {
  const cplx det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  Mat2 r;
  r << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
  return r / det;
}

inline Mat inverse_small(const Mat& m) {
  if (m.rows() == 2) return Mat(inverse2(Mat2(m)));
  return m.partialPivLu().inverse();
}

}  // namespace finitetype
