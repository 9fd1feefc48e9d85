#pragma once

#include "frames.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <functional>
#include <optional>

namespace finitetype {

namespace poly {

// Coefficients low to high.
using Poly = std::vector<cplx>;

inline Poly mul(const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {};
  Poly c(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}

inline Poly sub(const Poly& a, const Poly& b) {
  Poly c(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) c[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) c[i] -= b[i];
  return c;
}

inline Poly derivative(const Poly& a) {
  if (a.size() <= 1) return {};
  Poly d(a.size() - 1);
  for (std::size_t i = 1; i < a.size(); ++i) d[i - 1] = static_cast<double>(i) * a[i];
  return d;
}

inline cplx eval(const Poly& a, cplx x) {
  cplx r = 0.0;
  for (auto it = a.rbegin(); it != a.rend(); ++it) r = r * x + *it;
  return r;
}

// Drops leading coefficients with modulus ≤ tol·max|c|.
inline Poly trimmed(Poly a, double tol = 0.0) {
  double m = 0.0;
  for (auto c : a) m = std::max(m, std::abs(c));
  while (!a.empty() && std::abs(a.back()) <= tol * m) a.pop_back();
  return a;
}

inline int degree(const Poly& a) { return static_cast<int>(trimmed(a).size()) - 1; }

// Companion-matrix eigenvalues.
inline std::vector<cplx> roots(const Poly& a) {
  const Poly p = trimmed(a);
  const int m = static_cast<int>(p.size()) - 1;
  if (m < 1) return {};
  Mat c = Mat::Zero(m, m);
  for (int i = 1; i < m; ++i) c(i, i - 1) = 1.0;
  for (int i = 0; i < m; ++i) c(i, m - 1) = -p[static_cast<std::size_t>(i)] / p.back();
  Eigen::ComplexEigenSolver<Mat> es(c, false);
  std::vector<cplx> r(es.eigenvalues().data(), es.eigenvalues().data() + m);
  return r;
}

inline cplx newton_polish(const Poly& a, cplx x, int iterations = 4) {
  const Poly d = derivative(a);
  for (int it = 0; it < iterations; ++it) {
    const cplx fd = eval(d, x);
    if (fd == cplx(0.0)) break;
    const cplx step = eval(a, x) / fd;
    if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
    x -= step;
  }
  return x;
}

}  // namespace poly

// λ(ζ) = α∏ b_{P_j}(ζ)² ∏ b_{E_i}(ζ), b_P(ζ) = (ζ − P)/(1 − P̄ζ).
struct P1SpectralData {
  int k = 1;
  int n = 1;
  std::vector<cplx> P;
  std::vector<cplx> E;
  cplx alpha{1.0, 0.0};

  P1SpectralData() = default;
  P1SpectralData(int k_, int n_, std::vector<cplx> p, std::vector<cplx> e, std::optional<cplx> alpha_ = std::nullopt)
      : k(k_), n(n_), P(std::move(p)), E(std::move(e)) {
    if (k < 1 || n < 1 || 2 * k > n + 1) throw ArgumentError("need 1 <= k <= (n+1)/2");
    if (static_cast<int>(P.size()) != k) throw ArgumentError("need exactly k double points");
    if (static_cast<int>(E.size()) != n + 1 - 2 * k) throw ArgumentError("need exactly n+1-2k simple points");
    std::vector<cplx> all = P;
    all.insert(all.end(), E.begin(), E.end());
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (!(std::abs(all[i]) < 1.0)) throw ArgumentError("spectral points must lie inside the unit disk");
      for (std::size_t j = 0; j < i; ++j)
        if (std::abs(all[i] - all[j]) < 1e-14) throw ArgumentError("spectral points must be pairwise distinct");
    }
    if (alpha_) {
      if (std::abs(std::abs(*alpha_) - 1.0) > 1e-12) throw ArgumentError("alpha must be unimodular");
      alpha = *alpha_;
    } else {
      cplx v = 1.0;
      for (auto x : P) v *= std::pow((1.0 - x) / (1.0 - std::conj(x)), 2);
      for (auto x : E) v *= (1.0 - x) / (1.0 - std::conj(x));
      alpha = std::conj(v) / std::abs(v);
    }
  }

  poly::Poly numerator() const {
    poly::Poly p{alpha};
    for (auto x : P) p = poly::mul(p, poly::mul({-x, 1.0}, {-x, 1.0}));
    for (auto x : E) p = poly::mul(p, {-x, 1.0});
    return p;
  }

  poly::Poly denominator() const {
    poly::Poly p{1.0};
    for (auto x : P) p = poly::mul(p, poly::mul({1.0, -std::conj(x)}, {1.0, -std::conj(x)}));
    for (auto x : E) p = poly::mul(p, {1.0, -std::conj(x)});
    return p;
  }
};

inline cplx blaschke(cplx p, cplx zeta) {
  const cplx den = 1.0 - std::conj(p) * zeta;
  if (std::abs(den) < 1e-14) throw DomainError("spectral function evaluated at a pole");
  return (zeta - p) / den;
}

inline cplx lambda_eval(const P1SpectralData& d, cplx zeta) {
  cplx v = d.alpha;
  for (auto p : d.P) {
    const cplx b = blaschke(p, zeta);
    v *= b * b;
  }
  for (auto e : d.E) v *= blaschke(e, zeta);
  return v;
}

inline cplx lambda_derivative(const P1SpectralData& d, cplx zeta) {
  std::vector<cplx> f, df;
  for (auto p : d.P) {
    for (int r = 0; r < 2; ++r) {
      f.push_back(blaschke(p, zeta));
      const cplx den = 1.0 - std::conj(p) * zeta;
      df.push_back((1.0 - std::norm(p)) / (den * den));
    }
  }
  for (auto e : d.E) {
    f.push_back(blaschke(e, zeta));
    const cplx den = 1.0 - std::conj(e) * zeta;
    df.push_back((1.0 - std::norm(e)) / (den * den));
  }
  cplx s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    cplx t = df[i];
    for (std::size_t j = 0; j < f.size(); ++j)
      if (j != i) t *= f[j];
    s += t;
  }
  return d.alpha * s;
}

// The n+1 points over λ = 1: O_1 nearest to ζ = 1, the rest by increasing argument from O_1.
inline std::vector<cplx> fiber_over_one(const P1SpectralData& d) {
  const poly::Poly f = poly::sub(d.numerator(), d.denominator());
  auto r = poly::roots(f);
  if (static_cast<int>(r.size()) != d.n + 1) throw DegenerateError("fiber over 1 has the wrong number of points");
  for (auto& x : r) x = poly::newton_polish(f, x);
  double disc = 1.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) disc *= std::norm(r[i] - r[j]);
  if (disc < 1e-12) throw DegenerateError("fiber over 1 has (nearly) multiple points");
  for (auto x : r) {
    if (std::abs(std::abs(x) - 1.0) > 1e-10 || std::abs(lambda_eval(d, x) - 1.0) > 1e-10)
      throw DegenerateError("fiber point is not on the unit circle to 1e-10");
  }
  std::size_t first = 0;
  for (std::size_t i = 1; i < r.size(); ++i)
    if (std::abs(r[i] - 1.0) < std::abs(r[first] - 1.0)) first = i;
  const cplx o1 = r[first];
  auto turn = [&](cplx x) {
    double a = std::arg(x / o1);
    return a < 0.0 ? a + 2.0 * kPi : a;
  };
  std::swap(r[0], r[first]);
  std::sort(r.begin() + 1, r.end(), [&](cplx a, cplx b) { return turn(a) < turn(b); });
  return r;
}

enum class FrequencyIndexing {
  kShifted,  // coordinate m pairs with O_{m+1}
  kLiteral,  // coordinate m pairs with O_m (first column vanishes)
};

inline Mat frequency_matrix(const P1SpectralData& d, const std::vector<cplx>& fibers,
                            FrequencyIndexing indexing = FrequencyIndexing::kShifted) {
  if (static_cast<int>(fibers.size()) != d.n + 1) throw ArgumentError("need n+1 fiber points");
  Mat u(d.k, d.n);
  for (int j = 0; j < d.k; ++j) {
    const cplx pj = d.P[static_cast<std::size_t>(j)];
    for (int m = 0; m < d.n; ++m) {
      const cplx o = fibers[static_cast<std::size_t>(indexing == FrequencyIndexing::kShifted ? m + 1 : m)];
      u(j, m) = 1.0 / (pj - o) - 1.0 / (pj - fibers.front());
    }
  }
  return u;
}

// γ_m = exp(Σ_j z_jU_{jm} − z̄_jŪ_{jm}).
inline Eigen::VectorXcd gamma_hom(const Mat& u, const Eigen::VectorXcd& z) {
  if (z.size() != u.rows()) throw ArgumentError("z must have k components");
  Eigen::VectorXcd g(u.cols());
  for (Eigen::Index m = 0; m < u.cols(); ++m) {
    cplx s = 0.0;
    for (Eigen::Index j = 0; j < u.rows(); ++j) s += z(j) * u(j, m) - std::conj(z(j)) * std::conj(u(j, m));
    g(m) = std::exp(s);
  }
  return g;
}

inline Eigen::VectorXcd gamma_hom(const P1SpectralData& d, const std::vector<cplx>& fibers, const Eigen::VectorXcd& z) {
  return gamma_hom(frequency_matrix(d, fibers), z);
}

struct Ramification {
  std::vector<cplx> finite;
  int at_infinity = 0;
  int count() const { return static_cast<int>(finite.size()) + at_infinity; }
};

// Critical points of λ = num/den over |λ| > 1; expected_count is n.
inline Ramification ramification_plus(const poly::Poly& numerator, const poly::Poly& denominator, int expected_count) {
  const poly::Poly num = poly::trimmed(numerator);
  const poly::Poly den = poly::trimmed(denominator);
  poly::Poly w = poly::sub(poly::mul(poly::derivative(num), den), poly::mul(num, poly::derivative(den)));
  const int dn = static_cast<int>(num.size()) - 1, dd = static_cast<int>(den.size()) - 1;
  if (dn == dd && dn + dd - 1 >= 0 && static_cast<int>(w.size()) > dn + dd - 1)
    w[static_cast<std::size_t>(dn + dd - 1)] = 0.0;  // cancels identically
  w = poly::trimmed(w, 1e-13);
  const int deg_w = static_cast<int>(w.size()) - 1;
  const int degree = std::max(dn, dd);
  const int infinite = 2 * degree - 2 - deg_w;
  Ramification r;
  for (auto x : poly::roots(w)) {
    x = poly::newton_polish(w, x);
    const double an = std::abs(poly::eval(num, x)), ad = std::abs(poly::eval(den, x));
    if (std::abs(an - ad) <= 1e-8 * std::max(an, ad)) throw DegenerateError("ramification point over |lambda| = 1");
    if (an > ad) r.finite.push_back(x);
  }
  if (infinite > 0) {
    const bool over_plus = dd < dn || (dd == dn && std::abs(num.back()) > std::abs(den.back()));
    if (dd == dn && std::abs(std::abs(num.back()) - std::abs(den.back())) <= 1e-8 * std::abs(den.back()))
      throw DegenerateError("ramification point over |lambda| = 1");
    if (over_plus) r.at_infinity = infinite;
  }
  if (r.count() != expected_count)
    throw DegenerateError("ramification over |lambda| > 1 has degree " + std::to_string(r.count()) + ", expected " +
                          std::to_string(expected_count));
  return r;
}

inline Ramification ramification_plus(const P1SpectralData& d) {
  return ramification_plus(d.numerator(), d.denominator(), d.n);
}

// Finite points of D_l = 2Q_1 + … + Q_l + … + 2Q_k + Σ Ē_i^{-1}, Q_j = P̄_j^{-1}; points at ∞ omitted.
inline std::vector<cplx> divisor_d(const P1SpectralData& d, int l) {
  std::vector<cplx> pts;
  for (int j = 0; j < d.k; ++j) {
    const cplx p = d.P[static_cast<std::size_t>(j)];
    if (p == cplx(0.0)) continue;
    const cplx q = 1.0 / std::conj(p);
    pts.push_back(q);
    if (j != l) pts.push_back(q);
  }
  for (auto e : d.E)
    if (e != cplx(0.0)) pts.push_back(1.0 / std::conj(e));
  return pts;
}

inline int divisor_d_degree(const P1SpectralData& d) { return 2 * d.k - 1 + static_cast<int>(d.E.size()); }

enum class SectionDivisor {
  kTrivialized,  // e_l/s_L, divisor D_l − R_+ (harmonic)
  kLiteral,      // divisor R_+ − D_l
};

// f_l(O_m) for the rational function with divisor D_l − R_+ (or its inverse); rows l, columns m.
inline Mat section_functions(const P1SpectralData& d, const std::vector<cplx>& fibers, const Ramification& rplus,
                             SectionDivisor divisor = SectionDivisor::kTrivialized) {
  if (rplus.count() != d.n || divisor_d_degree(d) != d.n) throw Error("divisor degree mismatch");
  Mat s(d.k, static_cast<Eigen::Index>(fibers.size()));
  for (int l = 0; l < d.k; ++l) {
    const auto poles = divisor_d(d, l);
    for (std::size_t m = 0; m < fibers.size(); ++m) {
      cplx v = 1.0;
      for (auto r : rplus.finite) v *= fibers[m] - r;
      for (auto q : poles) v /= fibers[m] - q;
      s(l, static_cast<Eigen::Index>(m)) = divisor == SectionDivisor::kLiteral ? v : 1.0 / v;
    }
  }
  return s;
}

struct EquivariantMapData {
  std::vector<cplx> fibers;
  Mat frequencies;                        // k × n
  Mat sections;                           // k × (n+1)
  std::vector<Eigen::VectorXcd> diag_frame;  // D_j as diagonals of length n+1
  Ramification rplus;
};

inline EquivariantMapData equivariant_map_data(const P1SpectralData& d,
                                               FrequencyIndexing indexing = FrequencyIndexing::kShifted,
                                               SectionDivisor divisor = SectionDivisor::kTrivialized) {
  EquivariantMapData m;
  m.fibers = fiber_over_one(d);
  m.frequencies = frequency_matrix(d, m.fibers, indexing);
  m.rplus = ramification_plus(d);
  m.sections = section_functions(d, m.fibers, m.rplus, divisor);
  for (int j = 0; j < d.k; ++j) {
    Eigen::VectorXcd v(d.n + 1);
    v(0) = 0.0;
    v.tail(d.n) = m.frequencies.row(j).transpose();
    m.diag_frame.push_back(v);
  }
  return m;
}

// G(z) = exp(Σ_j z_jD_j − z̄_jD̄_j) as a diagonal.
inline Eigen::VectorXcd diagonal_frame(const EquivariantMapData& m, const Eigen::VectorXcd& z) {
  const Eigen::Index size = m.sections.cols();
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(size);
  for (std::size_t j = 0; j < m.diag_frame.size(); ++j)
    e += z(static_cast<Eigen::Index>(j)) * m.diag_frame[j] - std::conj(z(static_cast<Eigen::Index>(j))) * m.diag_frame[j].conjugate();
  return e.array().exp();
}

struct PlaneSample {
  Mat spanning;             // rows v_l
  Mat projection;           // Hermitian (n+1)×(n+1)
  Eigen::VectorXcd plucker; // k×k minors in lexicographic column order, unit norm
};

inline std::vector<std::vector<int>> k_subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> s(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) s[static_cast<std::size_t>(i)] = i;
  while (true) {
    out.push_back(s);
    int i = k - 1;
    while (i >= 0 && s[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++s[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) s[static_cast<std::size_t>(j)] = s[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

inline Mat projection_onto_rows(const Mat& v) {
  Eigen::HouseholderQR<Mat> qr(v.transpose());
  const Mat q = qr.householderQ() * Mat::Identity(v.cols(), v.rows());
  return q * q.adjoint();
}

inline PlaneSample plane_from_rows(const Mat& v) {
  Eigen::JacobiSVD<Mat> svd(v);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 1e-10 * sv(0))) throw DegenerateError("spanning vectors are linearly dependent");
  PlaneSample out;
  out.spanning = v;
  out.projection = projection_onto_rows(v);
  const int k = static_cast<int>(v.rows());
  const auto subsets = k_subsets(static_cast<int>(v.cols()), k);
  out.plucker.resize(static_cast<Eigen::Index>(subsets.size()));
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    Mat minor(k, k);
    for (int c = 0; c < k; ++c) minor.col(c) = v.col(subsets[s][static_cast<std::size_t>(c)]);
    out.plucker(static_cast<Eigen::Index>(s)) = minor.determinant();
  }
  out.plucker.normalize();
  const double top = out.plucker.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < out.plucker.size(); ++i) {
    if (std::abs(out.plucker(i)) > 1e-8 * top) {
      out.plucker *= std::abs(out.plucker(i)) / out.plucker(i);
      break;
    }
  }
  return out;
}

// v_l(z) = (f_l(O_1), f_l(O_2)γ_1, …, f_l(O_{n+1})γ_n).
inline PlaneSample pluriharmonic_map(const EquivariantMapData& m, const Eigen::VectorXcd& z) {
  const Eigen::VectorXcd g = gamma_hom(m.frequencies, z);
  Mat v = m.sections;
  for (Eigen::Index c = 1; c < v.cols(); ++c) v.col(c) *= g(c - 1);
  try {
    return plane_from_rows(v);
  } catch (const DegenerateError&) {
    std::ostringstream os;
    os << "degenerate plane at z = (";
    for (Eigen::Index j = 0; j < z.size(); ++j) os << (j ? ", " : "") << z(j);
    os << ")";
    throw DegenerateError(os.str());
  }
}

// Point of S² for a line in ℂ², x_k = tr(Πσ_k).
inline Vec3 cp1_point(const Mat& projection) {
  if (projection.rows() != 2 || projection.cols() != 2) throw ArgumentError("cp1_point needs a 2x2 projection");
  Vec3 x;
  for (int k = 1; k <= 3; ++k) x(k - 1) = (Mat2(projection) * pauli(k)).trace().real();
  return x;
}

// max over interior points of ‖[ΔΠ, Π]‖ with the five-point Laplacian.
inline double harmonicity_residual(const std::function<Mat(cplx)>& projection_map, const DomainGrid& grid) {
  grid.require_interior();
  std::vector<Mat> pi(grid.size());
  parallel_for(grid.size(), [&](std::size_t p) { pi[p] = projection_map(grid.point(p)); });
  const double hx2 = grid.hx() * grid.hx(), hy2 = grid.hy() * grid.hy();
  double r = 0.0;
  for (int j = 1; j < grid.ny - 1; ++j) {
    for (int i = 1; i < grid.nx - 1; ++i) {
      const Mat& c = pi[grid.index(i, j)];
      const Mat lap = (pi[grid.index(i + 1, j)] + pi[grid.index(i - 1, j)] - 2.0 * c) / hx2 +
                      (pi[grid.index(i, j + 1)] + pi[grid.index(i, j - 1)] - 2.0 * c) / hy2;
      r = std::max(r, sup_norm(Mat(lap * c - c * lap)));
    }
  }
  return r;
}

inline double harmonicity_residual(const EquivariantMapData& m, const Eigen::VectorXcd& direction, const DomainGrid& grid) {
  if (direction.norm() == 0.0) throw ArgumentError("direction must be nonzero");
  return harmonicity_residual([&](cplx t) { return pluriharmonic_map(m, t * direction).projection; }, grid);
}

inline double conformality_indicator(const Eigen::VectorXcd& direction) { return std::abs(direction.array().square().sum()); }

inline double conformality_indicator(const EquivariantMapData&, const Eigen::VectorXcd& direction) {
  return conformality_indicator(direction);
}

// max |G(z)G(z)^† − I| for the diagonal frame.
inline double diagonal_frame_unitarity_defect(const EquivariantMapData& m, const Eigen::VectorXcd& z) {
  const Eigen::VectorXcd g = diagonal_frame(m, z);
  double r = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) r = std::max(r, std::abs(std::norm(g(i)) - 1.0));
  return r;
}

// max |Π(z) − GΠ(0)G^{-1}|.
inline double equivariance_defect(const EquivariantMapData& m, const Eigen::VectorXcd& z) {
  const Eigen::VectorXcd g = diagonal_frame(m, z);
  const Mat p0 = pluriharmonic_map(m, Eigen::VectorXcd::Zero(z.size())).projection;
  const Mat pz = pluriharmonic_map(m, z).projection;
  Mat conj = p0;
  for (Eigen::Index i = 0; i < conj.rows(); ++i)
    for (Eigen::Index j = 0; j < conj.cols(); ++j) conj(i, j) *= g(i) / g(j);
  return sup_norm(Mat(pz - conj));
}

inline nlohmann::json to_json(const P1SpectralData& d) {
  return {{"k", d.k}, {"n", d.n}, {"P", complex_list_to_json(d.P)}, {"E", complex_list_to_json(d.E)},
          {"alpha", {d.alpha.real(), d.alpha.imag()}}};
}

inline P1SpectralData p1_from_json(const nlohmann::json& j) {
  std::optional<cplx> alpha;
  if (j.contains("alpha")) alpha = cplx(j.at("alpha")[0].get<double>(), j.at("alpha")[1].get<double>());
  return P1SpectralData(j.at("k").get<int>(), j.at("n").get<int>(), complex_list_from_json(j.at("P")),
                        complex_list_from_json(j.value("E", nlohmann::json::array())), alpha);
}

}  // namespace finitetype
