#pragma once

#include "loops.hpp"

namespace finitetype {

// Branch points a_j of y² = λ∏(λ − a_j)(1 − ā_jλ).
struct HyperellipticSpectralData {
  std::vector<cplx> branch_points;
  bool nodal = false;

  HyperellipticSpectralData() = default;
  explicit HyperellipticSpectralData(std::vector<cplx> a, bool nodal_flag = false)
      : branch_points(std::move(a)), nodal(nodal_flag) {
    for (std::size_t i = 0; i < branch_points.size(); ++i) {
      const double m = std::abs(branch_points[i]);
      if (!(m > 0.0 && m < 1.0)) throw ArgumentError("branch points must satisfy 0 < |a| < 1");
      if (!nodal) {
        for (std::size_t j = 0; j < i; ++j)
          if (std::abs(branch_points[i] - branch_points[j]) < 1e-14)
            throw ArgumentError("repeated branch point without the nodal flag");
      }
    }
  }

  int genus() const { return static_cast<int>(branch_points.size()); }

  double min_modulus() const {
    double m = 1.0;
    for (auto a : branch_points) m = std::min(m, std::abs(a));
    return m;
  }
};

// Nodes a_j = r_j²·exp(2iθ_j) of μ² = λ∏(λ − a_j)²(1 − a_jλ)².
struct NodalSpectralData {
  std::vector<cplx> nodes;

  NodalSpectralData() = default;
  explicit NodalSpectralData(std::vector<cplx> a) : nodes(std::move(a)) {
    for (auto x : nodes) {
      const double m = std::abs(x);
      if (!(m > 0.0 && m < 1.0)) throw ArgumentError("nodes must satisfy 0 < |a| < 1");
    }
  }

  int r() const { return static_cast<int>(nodes.size()); }
  int arithmetic_genus() const { return 2 * r(); }

  bool real_flag() const {
    for (auto a : nodes)
      if (a.imag() != 0.0 || !(a.real() > 0.0 && a.real() < 1.0)) return false;
    return true;
  }

  // Each node as a doubled branch point.
  HyperellipticSpectralData doubled() const {
    std::vector<cplx> a;
    for (auto x : nodes) {
      a.push_back(x);
      a.push_back(x);
    }
    return HyperellipticSpectralData(std::move(a), true);
  }
};

struct LobeCounts {
  std::vector<int> p;

  LobeCounts() = default;
  explicit LobeCounts(std::vector<int> counts) : p(std::move(counts)) {
    if (p.empty()) throw ArgumentError("lobe counts need at least p0");
    for (int x : p)
      if (x < 1) throw ArgumentError("lobe counts must be positive");
  }
};

namespace detail {

// Coefficients (low to high) of ∏ (c_j·λ + d_j).
inline std::vector<cplx> product_of_linear(const std::vector<std::pair<cplx, cplx>>& factors) {
  std::vector<cplx> p{1.0};
  for (const auto& [c, d] : factors) {
    std::vector<cplx> q(p.size() + 1, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      q[i] += d * p[i];
      q[i + 1] += c * p[i];
    }
    p = std::move(q);
  }
  return p;
}

// P(λ) = ∏(1 − ā_jλ)
inline std::vector<cplx> p_poly(const HyperellipticSpectralData& data) {
  std::vector<std::pair<cplx, cplx>> f;
  for (auto a : data.branch_points) f.emplace_back(-std::conj(a), 1.0);
  return product_of_linear(f);
}

// Q(λ) = ∏(λ − a_j)
inline std::vector<cplx> q_poly(const HyperellipticSpectralData& data) {
  std::vector<std::pair<cplx, cplx>> f;
  for (auto a : data.branch_points) f.emplace_back(1.0, -a);
  return product_of_linear(f);
}

// Off-diagonal loop with (1,2) entry s12·ζ^{shift}·P(ζ²) and (2,1) entry s21·ζ^{shift}·Q(ζ²).
inline LaurentMatrixLoop off_diagonal_loop(const HyperellipticSpectralData& data, int shift, cplx s12, cplx s21) {
  const auto p = p_poly(data);
  const auto q = q_poly(data);
  const int g = data.genus();
  std::vector<Mat> c(static_cast<std::size_t>(2 * g + 1), Mat::Zero(2, 2));
  for (int m = 0; m <= g; ++m) {
    c[static_cast<std::size_t>(2 * m)](0, 1) = s12 * p[static_cast<std::size_t>(m)];
    c[static_cast<std::size_t>(2 * m)](1, 0) = s21 * q[static_cast<std::size_t>(m)];
  }
  return LaurentMatrixLoop(2, shift, std::move(c));
}

inline cplx product_minus_a(const HyperellipticSpectralData& data) {
  cplx c = 1.0;
  for (auto a : data.branch_points) c *= cplx(0.0) - a;  // keeps +0 imaginary parts off the branch cut
  return c;
}

}  // namespace detail

inline LaurentMatrixLoop eta_polynomial(const HyperellipticSpectralData& data) {
  return detail::off_diagonal_loop(data, 1, 1.0, 1.0);
}

inline LaurentMatrixLoop xi_initial(const HyperellipticSpectralData& data) {
  const auto eta = eta_polynomial(data);
  return eta - dagger_flip(eta);
}

// Exponent Y with frame exp(zY)_E; degrees −1..2g−1. The constant diagonal rescaling
// (|c|^{-1/2}, |c|^{1/2}/c), c = ∏(−a_j), puts the frame in the gauge of the dressed vacuum.
inline LaurentMatrixLoop symes_exponent(const HyperellipticSpectralData& data) {
  const cplx c = detail::product_minus_a(data);
  const double m = std::abs(c);
  return detail::off_diagonal_loop(data, -1, 1.0 / std::sqrt(m), std::sqrt(m) / c);
}

// Killing field in the same gauge as symes_exponent; commutes with it pointwise.
inline LaurentMatrixLoop normalized_killing_field(const HyperellipticSpectralData& data) {
  const auto eta = symes_exponent(data).shifted(2);
  return eta - dagger_flip(eta);
}

inline cplx curve_discriminant(const HyperellipticSpectralData& data, cplx lambda) {
  cplx y2 = lambda;
  for (auto a : data.branch_points) y2 *= (lambda - a) * (1.0 - std::conj(a) * lambda);
  return y2;
}

namespace detail {

// Branch of h^{1/4} on |ζ|² < min|a_j|, principal at ζ = 0 and continued radially.
inline cplx h_quarter_inner(const HyperellipticSpectralData& data, cplx zeta) {
  const cplx l = zeta * zeta;
  cplx s = 0.0;
  for (auto a : data.branch_points) s += std::log(1.0 - l / a) - std::log(1.0 - std::conj(a) * l);
  return std::pow(product_minus_a(data), 0.25) * std::exp(0.25 * s);
}

}  // namespace detail

// g = diag(h^{-1/4}, h^{1/4}), h = ∏(ζ² − a_j)/(1 − ā_jζ²); outside the unit disk the branch
// is the reflection g(ζ) = g(1/ζ̄)^{-†}.
inline Mat2 dressing_matrix(const HyperellipticSpectralData& data, cplx zeta) {
  const double amin = data.min_modulus();
  const double r2 = std::norm(zeta);
  cplx q;
  if (data.genus() == 0) {
    q = 1.0;
  } else if (r2 < amin) {
    q = detail::h_quarter_inner(data, zeta);
  } else if (r2 * amin > 1.0) {
    q = 1.0 / std::conj(detail::h_quarter_inner(data, 1.0 / std::conj(zeta)));
  } else {
    throw DomainError("dressing matrix evaluated inside the excluded annulus");
  }
  Mat2 g = Mat2::Zero();
  g(0, 0) = 1.0 / q;
  g(1, 1) = q;
  return g;
}

inline Mat2 backlund_product_loop(const NodalSpectralData& data, cplx zeta) {
  Mat2 g = Mat2::Identity();
  const cplx l = zeta * zeta;
  for (auto a : data.nodes) {
    g(0, 0) *= std::conj(a) * l - 1.0;
    g(1, 1) *= l - a;
  }
  return g;
}

inline NodalSpectralData bubbleton_branch_points(const LobeCounts& lobes) {
  std::vector<cplx> a;
  const double p0 = lobes.p.front();
  for (std::size_t j = 1; j < lobes.p.size(); ++j) {
    const double q = lobes.p[j] / p0;
    if (!(q > 1.0)) throw ArgumentError("no bubbleton node: lobe count p_j must exceed p_0");
    const double alpha = q - std::sqrt(q * q - 1.0);
    a.emplace_back(alpha * alpha, 0.0);
  }
  return NodalSpectralData(std::move(a));
}

struct PeriodicityResult {
  double residual = 0.0;
  cplx tau;
};

inline PeriodicityResult periodicity_check(const NodalSpectralData& data, const LobeCounts& lobes) {
  if (!data.real_flag()) throw ArgumentError("periodicity check needs real nodes");
  if (lobes.p.size() != data.nodes.size() + 1) throw ArgumentError("need one lobe count per node plus p0");
  const double y = -kPi * lobes.p.front() / 2.0;
  PeriodicityResult r;
  r.tau = cplx(0.0, y);
  for (std::size_t j = 0; j < data.nodes.size(); ++j) {
    const double alpha = std::sqrt(data.nodes[j].real());
    r.residual = std::max(r.residual, std::abs(y * (alpha + 1.0 / alpha) + kPi * lobes.p[j + 1]));
  }
  return r;
}

// Lobe counts p_1.. implied by real nodes for a given p_0.
inline LobeCounts lobes_from_nodes(const NodalSpectralData& data, int p0) {
  std::vector<int> p{p0};
  for (auto a : data.nodes) {
    const double alpha = std::sqrt(a.real());
    p.push_back(static_cast<int>(std::lround(p0 * (alpha + 1.0 / alpha) / 2.0)));
  }
  return LobeCounts(std::move(p));
}

inline double complex_node_periodicity(const NodalSpectralData& data, const LobeCounts& lobes) {
  if (lobes.p.size() != data.nodes.size() + 1) throw ArgumentError("need one lobe count per node plus p0");
  double res = 0.0;
  const double p0 = lobes.p.front();
  for (std::size_t j = 0; j < data.nodes.size(); ++j) {
    const double r = std::sqrt(std::abs(data.nodes[j]));
    const double theta = 0.5 * std::arg(data.nodes[j]);
    res = std::max(res, std::abs(r * r - 2.0 * lobes.p[j + 1] / p0 * std::cos(theta) * r + 1.0));
  }
  return res;
}

inline nlohmann::json complex_list_to_json(const std::vector<cplx>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (auto x : v) a.push_back({x.real(), x.imag()});
  return a;
}

inline std::vector<cplx> complex_list_from_json(const nlohmann::json& j) {
  std::vector<cplx> v;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2) throw ArgumentError("complex numbers must be [re, im] pairs");
    v.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  return v;
}

inline nlohmann::json to_json(const HyperellipticSpectralData& d) {
  return {{"genus", d.genus()}, {"branch_points", complex_list_to_json(d.branch_points)}};
}

inline HyperellipticSpectralData hyperelliptic_from_json(const nlohmann::json& j) {
  auto a = complex_list_from_json(j.at("branch_points"));
  if (j.contains("genus") && j.at("genus").get<int>() != static_cast<int>(a.size()))
    throw ArgumentError("genus does not match the number of branch points");
  return HyperellipticSpectralData(std::move(a), j.value("nodal", false));
}

inline nlohmann::json to_json(const NodalSpectralData& d, const LobeCounts& lobes) {
  return {{"r", d.r()}, {"nodes", complex_list_to_json(d.nodes)}, {"lobes", lobes.p}};
}

inline std::pair<NodalSpectralData, LobeCounts> nodal_from_json(const nlohmann::json& j) {
  NodalSpectralData d(complex_list_from_json(j.at("nodes")));
  if (j.contains("r") && j.at("r").get<int>() != d.r()) throw ArgumentError("r does not match the number of nodes");
  LobeCounts l(j.at("lobes").get<std::vector<int>>());
  return {d, l};
}

}  // namespace finitetype
