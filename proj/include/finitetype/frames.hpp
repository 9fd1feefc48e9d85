#pragma once

#include "iwasawa.hpp"
#include "parallel.hpp"
#include "spectral.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

namespace finitetype {

// Rectangular grid z = z_min + i·h_x + j·h_y·i, i < nx, j < ny; points are numbered j·nx + i.
struct DomainGrid {
  cplx z_min{0.0, 0.0};
  cplx z_max{1.0, 1.0};
  int nx = 3;
  int ny = 3;

  DomainGrid() = default;
  DomainGrid(cplx lo, cplx hi, int nx_, int ny_) : z_min(lo), z_max(hi), nx(nx_), ny(ny_) {
    if (nx < 2 || ny < 2) throw ArgumentError("grid needs at least two samples per direction");
    if (!(hi.real() > lo.real()) || !(hi.imag() > lo.imag())) throw ArgumentError("grid corners must be ordered");
  }

  double hx() const { return (z_max.real() - z_min.real()) / (nx - 1); }
  double hy() const { return (z_max.imag() - z_min.imag()) / (ny - 1); }
  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i); }
  cplx point(int i, int j) const { return z_min + cplx(i * hx(), j * hy()); }
  cplx point(std::size_t p) const { return point(static_cast<int>(p % static_cast<std::size_t>(nx)), static_cast<int>(p / static_cast<std::size_t>(nx))); }

  void require_interior() const {
    if (nx < 3 || ny < 3) throw ArgumentError("finite differences need at least three samples per direction");
  }
};

struct ExtendedFrameField {
  DomainGrid grid;
  int n_zeta = 64;
  std::vector<Mat2> frames;  // frames[p·n_zeta + k] = F(z_p, ζ_k)
  bool base_normalized = false;
  double factorization_residual = 0.0;

  ExtendedFrameField() = default;
  ExtendedFrameField(const DomainGrid& g, int n) : grid(g), n_zeta(n), frames(g.size() * static_cast<std::size_t>(n)) {
    if (!is_power_of_two(n) || n < 2) throw ArgumentError("n_zeta must be a power of two");
  }

  cplx zeta(int k) const { return root_of_unity(k, n_zeta); }
  Mat2& at(std::size_t p, int k) { return frames[p * static_cast<std::size_t>(n_zeta) + static_cast<std::size_t>(k)]; }
  const Mat2& at(std::size_t p, int k) const { return frames[p * static_cast<std::size_t>(n_zeta) + static_cast<std::size_t>(k)]; }
  const Mat2& at(int i, int j, int k) const { return at(grid.index(i, j), k); }

  int zeta_index(cplx zeta) const {
    for (int k = 0; k < n_zeta; ++k)
      if (std::abs(this->zeta(k) - zeta) < 1e-12) return k;
    throw ArgumentError("spectral parameter is not among the circle samples");
  }
};

inline Mat2 vacuum_frame(cplx z, cplx zeta) {
  if (zeta == cplx(0.0)) throw DomainError("vacuum frame evaluated at zeta = 0");
  return exp_traceless2((z / zeta - zeta * std::conj(z)) * generator_a());
}

inline ExtendedFrameField vacuum_field(const DomainGrid& grid, int n_zeta) {
  ExtendedFrameField f(grid, n_zeta);
  for (std::size_t p = 0; p < grid.size(); ++p)
    for (int k = 0; k < n_zeta; ++k) f.at(p, k) = vacuum_frame(grid.point(p), f.zeta(k));
  f.base_normalized = true;
  return f;
}

struct SymesOptions {
  int window = kDefaultWindow;
  // Largest |δ|·max‖Y‖ handled by a single factorization.
  double step_bound = 1.5;
};

// Frames exp(zY)_E. Beyond the step bound, F(z) = A·exp(δ·Y')_E with A the frame at the nearest
// lattice anchor, Y' = A^{-1}YA restricted to the Laurent window of Y, and δ = z − anchor.
class SymesSolver {
 public:
  SymesSolver(const HyperellipticSpectralData& data, int n_zeta, SymesOptions opt = {})
      : opt_(opt), n_zeta_(n_zeta) {
    if (!is_power_of_two(n_zeta) || n_zeta < 2) throw ArgumentError("n_zeta must be a power of two");
    if (opt_.window < 1) throw ArgumentError("window must be positive");
    if (!(opt_.step_bound > 0.0)) throw ArgumentError("step bound must be positive");
    y_ = symes_exponent(data);
    n_fact_ = std::max(n_zeta, next_power_of_two(2 * (opt_.window + 1)));
    y_samples_.resize(static_cast<std::size_t>(n_fact_));
    for (int k = 0; k < n_fact_; ++k) {
      y_samples_[static_cast<std::size_t>(k)] = Mat2(y_.eval(root_of_unity(k, n_fact_)));
      y_norm_ = std::max(y_norm_, y_samples_[static_cast<std::size_t>(k)].norm());
    }
    spacing_ = opt_.step_bound / y_norm_;
    identity_.assign(static_cast<std::size_t>(n_fact_), Mat2::Identity());
  }

  int factorization_samples() const { return n_fact_; }
  double exponent_norm() const { return y_norm_; }
  double anchor_spacing() const { return spacing_; }
  const LaurentMatrixLoop& exponent() const { return y_; }

  // Frame at the n_zeta output samples, and the factorization residual of this point.
  std::pair<std::vector<Mat2>, double> frame(cplx z) {
    const auto [p, q] = anchor_of(z);
    const Anchor& a = anchor(p, q);
    const cplx delta = z - spacing_ * cplx(p, q);
    auto [full, res] = step(a.frame, delta);
    const int stride = n_fact_ / n_zeta_;
    std::vector<Mat2> out(static_cast<std::size_t>(n_zeta_));
    for (int k = 0; k < n_zeta_; ++k) out[static_cast<std::size_t>(k)] = full[static_cast<std::size_t>(k * stride)];
    return {std::move(out), std::max(res, a.residual)};
  }

  // Ensures the anchors for all points exist, so later frame() calls only read the cache.
  void prepare(const std::vector<cplx>& points) {
    for (auto z : points) {
      const auto [p, q] = anchor_of(z);
      anchor(p, q);
    }
  }

 private:
  struct Anchor {
    std::vector<Mat2> frame;
    double residual = 0.0;
  };

  std::pair<int, int> anchor_of(cplx z) const {
    if (std::abs(z) * y_norm_ <= opt_.step_bound) return {0, 0};
    return {static_cast<int>(std::lround(z.real() / spacing_)), static_cast<int>(std::lround(z.imag() / spacing_))};
  }

  const Anchor& anchor(int p, int q) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (anchors_.empty()) anchors_[{0, 0}] = Anchor{identity_, 0.0};
    std::vector<std::pair<int, int>> path;
    std::pair<int, int> cur{p, q};
    while (!anchors_.count(cur)) {
      path.push_back(cur);
      if (cur.second != 0) cur.second -= (cur.second > 0 ? 1 : -1);
      else cur.first -= (cur.first > 0 ? 1 : -1);
    }
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      const auto parent = it->second != 0 ? std::make_pair(it->first, it->second - (it->second > 0 ? 1 : -1))
                                          : std::make_pair(it->first - (it->first > 0 ? 1 : -1), 0);
      const cplx delta = spacing_ * cplx(it->first - parent.first, it->second - parent.second);
      const Anchor& base = anchors_.at(parent);
      auto [f, res] = step(base.frame, delta);
      anchors_[*it] = Anchor{std::move(f), std::max(res, base.residual)};
    }
    return anchors_.at({p, q});
  }

  std::pair<std::vector<Mat2>, double> step(const std::vector<Mat2>& base, cplx delta) const {
    const auto n = static_cast<std::size_t>(n_fact_);
    const bool from_identity = &base == &identity_ || base == identity_;
    std::vector<Mat> exponent(n);
    double leak = 0.0;
    if (from_identity) {
      for (std::size_t k = 0; k < n; ++k) exponent[k] = Mat(delta * y_samples_[k]);
    } else {
      std::vector<Mat> conj(n);
      for (std::size_t k = 0; k < n; ++k) conj[k] = Mat(inverse2(base[k]) * y_samples_[k] * base[k]);
      auto bins = detail::dft_bins(conj);
      std::vector<Mat> kept(n, Mat::Zero(2, 2));
      std::vector<bool> in_window(n, false);
      for (int d = y_.d_min(); d <= y_.d_max(); ++d) {
        const std::size_t b = detail::bin_of(d, n_fact_);
        kept[b] = bins[b];
        in_window[b] = true;
      }
      for (std::size_t b = 0; b < n; ++b)
        if (!in_window[b]) leak = std::max(leak, sup_norm(bins[b]));
      exponent = detail::idft_bins(kept);
      for (auto& m : exponent) m *= delta;
    }
    CircleLoopSamples e = exp_pointwise(CircleLoopSamples(2, 1.0, std::move(exponent)));
    const IwasawaFactors f = iwasawa_unit_circle(e, opt_.window);
    std::vector<Mat2> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = from_identity ? Mat2(f.unitary_part.values[k]) : Mat2(base[k] * f.unitary_part.values[k]);
    return {std::move(out), f.residual + leak};
  }

  SymesOptions opt_;
  int n_zeta_;
  int n_fact_ = 0;
  LaurentMatrixLoop y_;
  std::vector<Mat2> y_samples_;
  std::vector<Mat2> identity_;
  double y_norm_ = 0.0;
  double spacing_ = 1.0;
  std::mutex mutex_;
  std::map<std::pair<int, int>, Anchor> anchors_;
};

inline ExtendedFrameField symes_frame(const HyperellipticSpectralData& data, const DomainGrid& grid, int n_zeta,
                                      int window = kDefaultWindow, double step_bound = 1.5) {
  SymesSolver solver(data, n_zeta, SymesOptions{window, step_bound});
  std::vector<cplx> pts(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) pts[p] = grid.point(p);
  solver.prepare(pts);
  ExtendedFrameField field(grid, n_zeta);
  std::vector<double> res(grid.size(), 0.0);
  parallel_for(grid.size(), [&](std::size_t p) {
    try {
      auto [f, r] = solver.frame(pts[p]);
      for (int k = 0; k < n_zeta; ++k) field.at(p, k) = f[static_cast<std::size_t>(k)];
      res[p] = r;
    } catch (const FactorizationError& e) {
      throw e.at_grid_index(static_cast<long>(p));
    }
  });
  for (double r : res) field.factorization_residual = std::max(field.factorization_residual, r);
  field.base_normalized = true;
  return field;
}

// exp(Σ_j t_jζ^jA − t̄_jζ^{-j}A), j odd.
struct HigherFlowFactor {
  LaurentMatrixLoop exponent = LaurentMatrixLoop::zero(2);

  Mat2 operator()(cplx zeta) const {
    if (exponent.empty()) return Mat2::Identity();
    return exp_traceless2(Mat2(exponent.eval(zeta)));
  }
};

// t[m] is the time of flow 2m+1.
inline HigherFlowFactor higher_flow_dressing(const HyperellipticSpectralData& data, const std::map<int, cplx>& t) {
  HigherFlowFactor f;
  for (const auto& [j, tj] : t) {
    if (j < 1 || j % 2 == 0 || j > 2 * data.genus() - 1)
      throw ArgumentError("flow index " + std::to_string(j) + " must be odd and at most 2g-1");
    const Mat a = generator_a();
    f.exponent = f.exponent + LaurentMatrixLoop::monomial(j, tj * a) - LaurentMatrixLoop::monomial(-j, std::conj(tj) * a);
  }
  return f;
}

inline double default_epsilon(const HyperellipticSpectralData& data) {
  return data.genus() == 0 ? 0.5 : 0.6 * std::sqrt(data.min_modulus());
}

struct DressOptions {
  int window = 32;
  int n_circle = 0;  // samples per circle; 0 picks a power of two ≥ 4·window
  HigherFlowFactor flow;
  bool normalize_base = true;
};

namespace detail {

inline TwoCircleFactors dress_point(const HyperellipticSpectralData& data, double eps, int n_circle, int window,
                                    const HigherFlowFactor& flow, cplx z) {
  std::vector<Mat> in(static_cast<std::size_t>(n_circle)), out(static_cast<std::size_t>(n_circle));
  for (int k = 0; k < n_circle; ++k) {
    const cplx w = root_of_unity(k, n_circle);
    const cplx zi = eps * w;
    const cplx zo = w / eps;
    in[static_cast<std::size_t>(k)] = Mat(dressing_matrix(data, zi) * flow(zi) * vacuum_frame(z, zi));
    out[static_cast<std::size_t>(k)] = Mat(dressing_matrix(data, zo) * flow(zo) * vacuum_frame(z, zo));
  }
  return birkhoff_two_circle(CircleLoopSamples(2, eps, std::move(in)), CircleLoopSamples(2, 1.0 / eps, std::move(out)),
                             window);
}

}  // namespace detail

inline ExtendedFrameField dress_frame(const HyperellipticSpectralData& data, const DomainGrid& grid, double epsilon,
                                      int n_zeta, DressOptions opt = {}) {
  if (!(epsilon > 0.0) || !(epsilon * epsilon < data.min_modulus()))
    throw ArgumentError("epsilon must satisfy 0 < epsilon < min|a_j|^{1/2}");
  const int n_circle = opt.n_circle > 0 ? opt.n_circle : std::max(64, next_power_of_two(4 * opt.window));
  if (!is_power_of_two(n_circle)) throw ArgumentError("circle sample count must be a power of two");
  ExtendedFrameField field(grid, n_zeta);

  std::vector<Mat2> base_inv(static_cast<std::size_t>(n_zeta), Mat2::Identity());
  double base_res = 0.0;
  if (opt.normalize_base) {
    const auto f0 = detail::dress_point(data, epsilon, n_circle, opt.window, opt.flow, 0.0);
    base_res = f0.residual;
    for (int k = 0; k < n_zeta; ++k) base_inv[static_cast<std::size_t>(k)] = Mat2(f0.inverse_annulus.eval(field.zeta(k)));
  }
  std::vector<double> res(grid.size(), 0.0);
  parallel_for(grid.size(), [&](std::size_t p) {
    try {
      const auto f = detail::dress_point(data, epsilon, n_circle, opt.window, opt.flow, grid.point(p));
      for (int k = 0; k < n_zeta; ++k)
        field.at(p, k) = base_inv[static_cast<std::size_t>(k)] * inverse2(Mat2(f.inverse_annulus.eval(field.zeta(k))));
      res[p] = f.residual;
    } catch (const FactorizationError& e) {
      throw e.at_grid_index(static_cast<long>(p));
    }
  });
  field.factorization_residual = base_res;
  for (double r : res) field.factorization_residual = std::max(field.factorization_residual, r);
  field.base_normalized = opt.normalize_base;
  return field;
}

inline ExtendedFrameField dress_frame(const HyperellipticSpectralData& data, const DomainGrid& grid, double epsilon,
                                      int n_zeta, int window) {
  DressOptions opt;
  opt.window = window;
  return dress_frame(data, grid, epsilon, n_zeta, opt);
}

// ---------------------------------------------------------------------------------------------
// Verification battery

namespace detail {

inline Mat2 alpha_x(const ExtendedFrameField& f, int i, int j, int k) {
  return inverse2(f.at(i, j, k)) * (f.at(i + 1, j, k) - f.at(i - 1, j, k)) / (2.0 * f.grid.hx());
}

inline Mat2 alpha_y(const ExtendedFrameField& f, int i, int j, int k) {
  return inverse2(f.at(i, j, k)) * (f.at(i, j + 1, k) - f.at(i, j - 1, k)) / (2.0 * f.grid.hy());
}

}  // namespace detail

struct ConnectionForm {
  DomainGrid grid;
  std::vector<std::size_t> points;  // interior grid indices
  std::vector<LaurentMatrixLoop> alpha_z;
  std::vector<LaurentMatrixLoop> alpha_zbar;
  double window_violation = 0.0;
};

inline ConnectionForm connection_form(const ExtendedFrameField& field) {
  const auto& g = field.grid;
  g.require_interior();
  ConnectionForm out;
  out.grid = g;
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i) out.points.push_back(g.index(i, j));
  out.alpha_z.resize(out.points.size());
  out.alpha_zbar.resize(out.points.size());
  std::vector<double> viol(out.points.size(), 0.0);
  parallel_for(out.points.size(), [&](std::size_t q) {
    const int i = static_cast<int>(out.points[q] % static_cast<std::size_t>(g.nx));
    const int j = static_cast<int>(out.points[q] / static_cast<std::size_t>(g.nx));
    std::vector<Mat> az(static_cast<std::size_t>(field.n_zeta)), azb(static_cast<std::size_t>(field.n_zeta));
    for (int k = 0; k < field.n_zeta; ++k) {
      const Mat2 ax = detail::alpha_x(field, i, j, k);
      const Mat2 ay = detail::alpha_y(field, i, j, k);
      az[static_cast<std::size_t>(k)] = Mat(0.5 * (ax - kI * ay));
      azb[static_cast<std::size_t>(k)] = Mat(0.5 * (ax + kI * ay));
    }
    auto tz = fourier_coefficients(CircleLoopSamples(2, 1.0, std::move(az)), -1, 1);
    auto tzb = fourier_coefficients(CircleLoopSamples(2, 1.0, std::move(azb)), -1, 1);
    out.alpha_z[q] = std::move(tz.loop);
    out.alpha_zbar[q] = std::move(tzb.loop);
    viol[q] = std::max(tz.aliased_residual, tzb.aliased_residual);
  });
  for (double v : viol) out.window_violation = std::max(out.window_violation, v);
  return out;
}

inline double flatness_residual_at(const ExtendedFrameField& field, int k) {
  const auto& g = field.grid;
  g.require_interior();
  double r = 0.0;
  for (int j = 1; j < g.ny - 1; ++j) {
    for (int i = 1; i < g.nx - 1; ++i) {
      const Mat2 dy_ax = (detail::alpha_x(field, i, j + 1, k) - detail::alpha_x(field, i, j - 1, k)) / (2.0 * g.hy());
      const Mat2 dx_ay = (detail::alpha_y(field, i + 1, j, k) - detail::alpha_y(field, i - 1, j, k)) / (2.0 * g.hx());
      const Mat2 ax = detail::alpha_x(field, i, j, k);
      const Mat2 ay = detail::alpha_y(field, i, j, k);
      r = std::max(r, sup_norm(Mat2(dx_ay - dy_ax + ax * ay - ay * ax)));
    }
  }
  return r;
}

inline double flatness_residual(const ExtendedFrameField& field, cplx zeta) {
  return flatness_residual_at(field, field.zeta_index(zeta));
}

inline double flatness_residual_max(const ExtendedFrameField& field) {
  std::vector<double> r(static_cast<std::size_t>(field.n_zeta));
  parallel_for(r.size(), [&](std::size_t k) { r[k] = flatness_residual_at(field, static_cast<int>(k)); });
  return *std::max_element(r.begin(), r.end());
}

struct KillingResidual {
  double fd_defect = 0.0;
  double window_defect = 0.0;
  double total() const { return fd_defect + window_defect; }
};

inline KillingResidual killing_field_residual(const ExtendedFrameField& field, const LaurentMatrixLoop& xi0) {
  if (!field.base_normalized) throw ArgumentError("Killing field check needs a base-normalized frame field");
  const auto& g = field.grid;
  const int n = field.n_zeta;
  std::vector<Mat2> xi0s(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) xi0s[static_cast<std::size_t>(k)] = Mat2(xi0.eval(field.zeta(k)));
  auto xi_at = [&](int i, int j, int k) {
    const Mat2& f = field.at(i, j, k);
    return Mat2(inverse2(f) * xi0s[static_cast<std::size_t>(k)] * f);
  };
  std::vector<double> win(g.size(), 0.0), fd(g.size(), 0.0);
  parallel_for(g.size(), [&](std::size_t p) {
    const int i = static_cast<int>(p % static_cast<std::size_t>(g.nx));
    const int j = static_cast<int>(p / static_cast<std::size_t>(g.nx));
    std::vector<Mat> xs(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) xs[static_cast<std::size_t>(k)] = Mat(xi_at(i, j, k));
    win[p] = fourier_coefficients(CircleLoopSamples(2, 1.0, std::move(xs)), xi0.d_min(), xi0.d_max()).aliased_residual;
    if (i < 1 || j < 1 || i > g.nx - 2 || j > g.ny - 2) return;
    for (int k = 0; k < n; ++k) {
      const Mat2 x = xi_at(i, j, k);
      const Mat2 ax = detail::alpha_x(field, i, j, k);
      const Mat2 ay = detail::alpha_y(field, i, j, k);
      const Mat2 dx = (xi_at(i + 1, j, k) - xi_at(i - 1, j, k)) / (2.0 * g.hx());
      const Mat2 dy = (xi_at(i, j + 1, k) - xi_at(i, j - 1, k)) / (2.0 * g.hy());
      fd[p] = std::max(fd[p], std::max(sup_norm(Mat2(dx - (x * ax - ax * x))), sup_norm(Mat2(dy - (x * ay - ay * x)))));
    }
  });
  KillingResidual r;
  for (std::size_t p = 0; p < g.size(); ++p) {
    r.window_defect = std::max(r.window_defect, win[p]);
    r.fd_defect = std::max(r.fd_defect, fd[p]);
  }
  return r;
}

// Line of a unit 2-vector as a point of S² (the line [1,0] maps to (0,0,1)).
inline Vec3 hopf(const Eigen::Vector2cd& v) {
  const cplx w = std::conj(v(0)) * v(1);
  const double n2 = v.squaredNorm();
  return Vec3(2.0 * w.real(), 2.0 * w.imag(), std::norm(v(0)) - std::norm(v(1))) / n2;
}

inline std::vector<Vec3> gauss_map(const ExtendedFrameField& field) {
  std::vector<Vec3> n(field.grid.size());
  for (std::size_t p = 0; p < n.size(); ++p) n[p] = hopf(field.at(p, 0).col(0));
  return n;
}

inline double unitarity_defect(const ExtendedFrameField& f) {
  double d = 0.0;
  for (const auto& m : f.frames) d = std::max(d, sup_norm(Mat2(m.adjoint() * m - Mat2::Identity())));
  return d;
}

inline double determinant_defect(const ExtendedFrameField& f) {
  double d = 0.0;
  for (const auto& m : f.frames) d = std::max(d, std::abs(m.determinant() - 1.0));
  return d;
}

inline double twist_defect(const ExtendedFrameField& f) {
  const Mat2 tau = twist_tau();
  double d = 0.0;
  const int n = f.n_zeta;
  for (std::size_t p = 0; p < f.grid.size(); ++p)
    for (int k = 0; k < n; ++k) d = std::max(d, sup_norm(Mat2(f.at(p, (k + n / 2) % n) - tau * f.at(p, k) * tau)));
  return d;
}

inline double frame_distance(const ExtendedFrameField& a, const ExtendedFrameField& b) {
  if (a.frames.size() != b.frames.size()) throw ArgumentError("frame fields have different shapes");
  double d = 0.0;
  for (std::size_t i = 0; i < a.frames.size(); ++i) d = std::max(d, sup_norm(Mat2(a.frames[i] - b.frames[i])));
  return d;
}

// ---------------------------------------------------------------------------------------------
// JSON metadata + flat CSV of matrix entries

inline void write_frame_field(const ExtendedFrameField& f, const std::string& json_path) {
  std::string csv_path = json_path;
  const auto dot = csv_path.rfind(".json");
  csv_path = (dot == std::string::npos ? csv_path : csv_path.substr(0, dot)) + ".csv";
  const auto slash = csv_path.find_last_of('/');
  const std::string csv_name = slash == std::string::npos ? csv_path : csv_path.substr(slash + 1);
  nlohmann::json meta = {
      {"grid",
       {{"z_min", {f.grid.z_min.real(), f.grid.z_min.imag()}},
        {"z_max", {f.grid.z_max.real(), f.grid.z_max.imag()}},
        {"nx", f.grid.nx},
        {"ny", f.grid.ny}}},
      {"n_zeta", f.n_zeta},
      {"base_normalized", f.base_normalized},
      {"factorization_residual", f.factorization_residual},
      {"csv", csv_name}};
  std::ofstream js(json_path);
  if (!js) throw IoError("cannot write frame metadata", json_path);
  js << meta.dump(2) << "\n";
  std::ofstream cs(csv_path);
  if (!cs) throw IoError("cannot write frame samples", csv_path);
  cs << "i,j,k,re00,im00,re01,im01,re10,im10,re11,im11\n";
  char buf[64];
  for (int j = 0; j < f.grid.ny; ++j) {
    for (int i = 0; i < f.grid.nx; ++i) {
      for (int k = 0; k < f.n_zeta; ++k) {
        cs << i << ',' << j << ',' << k;
        const Mat2& m = f.at(i, j, k);
        for (int r = 0; r < 2; ++r)
          for (int c = 0; c < 2; ++c) {
            std::snprintf(buf, sizeof buf, ",%.17g,%.17g", m(r, c).real(), m(r, c).imag());
            cs << buf;
          }
        cs << '\n';
      }
    }
  }
  if (!cs) throw IoError("failed while writing frame samples", csv_path);
}

inline ExtendedFrameField read_frame_field(const std::string& json_path) {
  std::ifstream js(json_path);
  if (!js) throw IoError("cannot read frame metadata", json_path);
  nlohmann::json meta;
  try {
    js >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed frame metadata (") + e.what() + ")", json_path);
  }
  const auto& g = meta.at("grid");
  DomainGrid grid(cplx(g.at("z_min")[0].get<double>(), g.at("z_min")[1].get<double>()),
                  cplx(g.at("z_max")[0].get<double>(), g.at("z_max")[1].get<double>()), g.at("nx").get<int>(),
                  g.at("ny").get<int>());
  ExtendedFrameField f(grid, meta.at("n_zeta").get<int>());
  f.base_normalized = meta.value("base_normalized", false);
  f.factorization_residual = meta.value("factorization_residual", 0.0);
  std::string csv_path = meta.at("csv").get<std::string>();
  const auto slash = json_path.find_last_of('/');
  if (slash != std::string::npos && (csv_path.empty() || csv_path[0] != '/')) csv_path = json_path.substr(0, slash + 1) + csv_path;
  std::ifstream cs(csv_path);
  if (!cs) throw IoError("cannot read frame samples", csv_path);
  std::string line;
  std::getline(cs, line);
  std::vector<bool> seen(f.frames.size(), false);
  while (std::getline(cs, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> v;
    while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
    if (v.size() != 11) throw IoError("frame sample row has wrong field count", csv_path);
    const int i = static_cast<int>(v[0]), j = static_cast<int>(v[1]), k = static_cast<int>(v[2]);
    if (i < 0 || j < 0 || k < 0 || i >= grid.nx || j >= grid.ny || k >= f.n_zeta)
      throw IoError("frame sample index out of range", csv_path);
    Mat2 m;
    m << cplx(v[3], v[4]), cplx(v[5], v[6]), cplx(v[7], v[8]), cplx(v[9], v[10]);
    const std::size_t slot = grid.index(i, j) * static_cast<std::size_t>(f.n_zeta) + static_cast<std::size_t>(k);
    f.frames[slot] = m;
    seen[slot] = true;
  }
  for (bool s : seen)
    if (!s) throw IoError("frame sample file is incomplete", csv_path);
  return f;
}

}  // namespace finitetype
