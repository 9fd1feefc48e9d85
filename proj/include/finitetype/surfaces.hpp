#pragma once

#include "frames.hpp"

#include <array>
#include <limits>

namespace finitetype {

struct ImmersionMesh {
  DomainGrid grid;
  std::vector<Vec3> vertices;              // row-major over the grid
  std::vector<std::array<int, 4>> faces;   // 0-based quads
  double mean_curvature_target = 1.0;

  const Vec3& vertex(int i, int j) const { return vertices[grid.index(i, j)]; }
};

inline std::vector<std::array<int, 4>> grid_quads(const DomainGrid& g) {
  std::vector<std::array<int, 4>> f;
  f.reserve(static_cast<std::size_t>((g.nx - 1) * (g.ny - 1)));
  for (int j = 0; j + 1 < g.ny; ++j)
    for (int i = 0; i + 1 < g.nx; ++i)
      f.push_back({static_cast<int>(g.index(i, j)), static_cast<int>(g.index(i + 1, j)),
                   static_cast<int>(g.index(i + 1, j + 1)), static_cast<int>(g.index(i, j + 1))});
  return f;
}

inline ImmersionMesh make_mesh(const DomainGrid& g, std::vector<Vec3> vertices, double h) {
  if (vertices.size() != g.size()) throw ArgumentError("vertex count does not match the grid");
  for (const auto& v : vertices)
    if (!v.allFinite()) throw ArgumentError("mesh vertex is not finite");
  return ImmersionMesh{g, std::move(vertices), grid_quads(g), h};
}

// su(2) ↔ ℝ³: X = i·Σ x_kσ_k.
inline Vec3 su2_to_r3(const Mat2& x) {
  Vec3 v;
  for (int k = 1; k <= 3; ++k) v(k - 1) = ((x * pauli(k)).trace() / (2.0 * kI)).real();
  return v;
}

// f = −(1/2H)(i·Fσ₃F^{-1} + 2i·ζ∂_ζF·F^{-1}) at ζ0, translated so that f(0) = 0. The ζ-derivative
// is taken spectrally from the Fourier coefficients of the circle samples.
inline ImmersionMesh sym_bobenko(const ExtendedFrameField& field, cplx zeta0, double H) {
  if (std::abs(std::abs(zeta0) - 1.0) > 1e-12) throw ArgumentError("zeta0 must lie on the unit circle");
  if (H == 0.0 || !std::isfinite(H)) throw ArgumentError("mean curvature must be a nonzero real");
  if (!field.base_normalized) throw ArgumentError("Sym-Bobenko translation needs a base-normalized frame field");
  const int n = field.n_zeta;
  const int top = n / 2 - 1;
  std::vector<cplx> powers(static_cast<std::size_t>(2 * top + 1));
  for (int d = -top; d <= top; ++d) powers[static_cast<std::size_t>(d + top)] = std::pow(zeta0, d);
  const Mat2 s3 = pauli(3);
  const Vec3 origin(0.0, 0.0, -1.0 / (2.0 * H));
  std::vector<Vec3> verts(field.grid.size());
  parallel_for(field.grid.size(), [&](std::size_t p) {
    std::vector<Mat> s(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) s[static_cast<std::size_t>(k)] = Mat(field.at(p, k));
    const auto c = fourier_coefficients(CircleLoopSamples(2, 1.0, std::move(s)), -top, top).loop;
    Mat2 f = Mat2::Zero(), df = Mat2::Zero();
    for (int d = -top; d <= top; ++d) {
      const Mat2 cd = c.coeff(d);
      f += powers[static_cast<std::size_t>(d + top)] * cd;
      df += (static_cast<double>(d) * powers[static_cast<std::size_t>(d + top)]) * cd;
    }
    const Mat2 fi = inverse2(f);
    const Mat2 x = (-1.0 / (2.0 * H)) * (kI * f * s3 * fi + 2.0 * kI * df * fi);
    verts[p] = su2_to_r3(x) - origin;
  });
  return make_mesh(field.grid, std::move(verts), H);
}

struct MeanCurvatureEstimate {
  std::vector<double> values;           // |H| per vertex; NaN on the boundary
  std::vector<std::size_t> interior;    // vertices carrying an estimate
  int degenerate_faces = 0;
};

// Cotangent-Laplacian mean-curvature normal with barycentric vertex areas. Every quad is split
// along both diagonals with weight ½ each, so the stencil stays symmetric and second order.
inline MeanCurvatureEstimate discrete_mean_curvature(const ImmersionMesh& mesh) {
  const auto& g = mesh.grid;
  g.require_interior();
  const std::size_t nv = mesh.vertices.size();
  std::vector<Vec3> lap(nv, Vec3::Zero());
  std::vector<double> area(nv, 0.0);
  MeanCurvatureEstimate out;
  auto triangle = [&](int a, int b, int c, double w) {
    const Vec3& pa = mesh.vertices[static_cast<std::size_t>(a)];
    const Vec3& pb = mesh.vertices[static_cast<std::size_t>(b)];
    const Vec3& pc = mesh.vertices[static_cast<std::size_t>(c)];
    const double twice_area = (pb - pa).cross(pc - pa).norm();
    if (twice_area < 2e-14) {
      ++out.degenerate_faces;
      return;
    }
    const int idx[3] = {a, b, c};
    const Vec3* pts[3] = {&pa, &pb, &pc};
    for (int k = 0; k < 3; ++k) {
      const Vec3& o = *pts[k];
      const Vec3& u = *pts[(k + 1) % 3];
      const Vec3& v = *pts[(k + 2) % 3];
      const double cot = (u - o).dot(v - o) / twice_area;
      const auto iu = static_cast<std::size_t>(idx[(k + 1) % 3]);
      const auto iv = static_cast<std::size_t>(idx[(k + 2) % 3]);
      lap[iu] += 0.5 * w * cot * (u - v);
      lap[iv] += 0.5 * w * cot * (v - u);
    }
    for (int k = 0; k < 3; ++k) area[static_cast<std::size_t>(idx[k])] += w * twice_area / 6.0;
  };
  for (const auto& q : mesh.faces) {
    triangle(q[0], q[1], q[2], 0.5);
    triangle(q[0], q[2], q[3], 0.5);
    triangle(q[0], q[1], q[3], 0.5);
    triangle(q[1], q[2], q[3], 0.5);
  }
  out.values.assign(nv, std::numeric_limits<double>::quiet_NaN());
  for (int j = 1; j < g.ny - 1; ++j) {
    for (int i = 1; i < g.nx - 1; ++i) {
      const std::size_t v = g.index(i, j);
      if (area[v] <= 0.0) continue;
      out.values[v] = lap[v].norm() / (2.0 * area[v]);
      out.interior.push_back(v);
    }
  }
  return out;
}

struct SinhGordonResult {
  double residual = 0.0;
  double scale = 1.0;
  double offset = 0.0;
  bool calibrated = false;  // false when the two-point fit was singular and (1, 0) was kept
  int excluded = 0;
  std::vector<double> pointwise;  // per Laplacian point, row-major over the doubly interior grid
};

// u = ¼·log|M₂₁/M₁₂| from the ζ^{-1} coefficient M of α_z, checked against u_zz̄ + sinh(4u) = 0
// after the affine calibration u ↦ s·u + c fitted at the points of extreme u.
inline SinhGordonResult sinh_gordon_residual(const ExtendedFrameField& field) {
  const auto form = connection_form(field);
  const auto& g = field.grid;
  const int mx = g.nx - 2, my = g.ny - 2;
  if (mx < 3 || my < 3) throw ArgumentError("sinh-Gordon check needs at least five samples per direction");
  std::vector<double> u(form.points.size(), 0.0);
  std::vector<bool> ok(form.points.size(), true);
  SinhGordonResult out;
  for (std::size_t q = 0; q < form.points.size(); ++q) {
    const Mat m = form.alpha_z[q].coeff(-1);
    const double a12 = std::abs(m(0, 1)), a21 = std::abs(m(1, 0));
    if (a12 < 1e-12 || a21 < 1e-12) {
      ok[q] = false;
      ++out.excluded;
      continue;
    }
    u[q] = 0.25 * std::log(a21 / a12);
  }
  auto at = [&](int i, int j) { return static_cast<std::size_t>(j) * static_cast<std::size_t>(mx) + static_cast<std::size_t>(i); };
  const double hx2 = g.hx() * g.hx(), hy2 = g.hy() * g.hy();
  std::vector<std::size_t> pts;
  std::vector<double> lap;
  for (int j = 1; j < my - 1; ++j) {
    for (int i = 1; i < mx - 1; ++i) {
      if (!ok[at(i, j)] || !ok[at(i + 1, j)] || !ok[at(i - 1, j)] || !ok[at(i, j + 1)] || !ok[at(i, j - 1)]) continue;
      pts.push_back(at(i, j));
      lap.push_back((u[at(i + 1, j)] + u[at(i - 1, j)] - 2.0 * u[at(i, j)]) / hx2 +
                    (u[at(i, j + 1)] + u[at(i, j - 1)] - 2.0 * u[at(i, j)]) / hy2);
    }
  }
  if (pts.empty()) throw DegenerateError("no grid point admits the sinh-Gordon stencil");

  std::size_t lo = 0, hi = 0;
  for (std::size_t q = 0; q < pts.size(); ++q) {
    if (u[pts[q]] < u[pts[lo]]) lo = q;
    if (u[pts[q]] > u[pts[hi]]) hi = q;
  }
  double s = 1.0, c = 0.0;
  bool converged = false;
  if (u[pts[hi]] - u[pts[lo]] > 1e-8) {
    for (int it = 0; it < 50; ++it) {
      double r[2], j00[2], j01[2];
      const std::size_t ref[2] = {lo, hi};
      for (int e = 0; e < 2; ++e) {
        const double uu = u[pts[ref[e]]], l = lap[ref[e]];
        const double arg = 4.0 * (s * uu + c);
        r[e] = s * l / 4.0 + std::sinh(arg);
        j00[e] = l / 4.0 + 4.0 * uu * std::cosh(arg);
        j01[e] = 4.0 * std::cosh(arg);
      }
      const double det = j00[0] * j01[1] - j01[0] * j00[1];
      if (!(std::abs(det) > 1e-12)) break;
      const double ds = (r[0] * j01[1] - j01[0] * r[1]) / det;
      const double dc = (j00[0] * r[1] - r[0] * j00[1]) / det;
      s -= ds;
      c -= dc;
      if (!std::isfinite(s) || !std::isfinite(c)) break;
      if (std::abs(ds) + std::abs(dc) < 1e-15) {
        converged = true;
        break;
      }
    }
  }
  if (!converged || !(s > 0.0)) {
    s = 1.0;
    c = 0.0;
  }
  out.scale = s;
  out.offset = c;
  out.calibrated = converged && s > 0.0;
  out.pointwise.resize(pts.size());
  for (std::size_t q = 0; q < pts.size(); ++q) {
    out.pointwise[q] = std::abs(s * lap[q] / 4.0 + std::sinh(4.0 * (s * u[pts[q]] + c)));
    out.residual = std::max(out.residual, out.pointwise[q]);
  }
  return out;
}

enum class MeshFormat { kObj, kPly };

inline void export_mesh(const ImmersionMesh& mesh, const std::string& path, MeshFormat format) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw IoError("cannot open mesh file for writing", path);
  bool ok = true;
  if (format == MeshFormat::kPly) {
    ok &= std::fprintf(fp,
                       "ply\nformat ascii 1.0\nelement vertex %zu\nproperty double x\nproperty double y\n"
                       "property double z\nelement face %zu\nproperty list uchar int vertex_indices\nend_header\n",
                       mesh.vertices.size(), mesh.faces.size()) > 0;
    for (const auto& v : mesh.vertices) ok &= std::fprintf(fp, "%.17g %.17g %.17g\n", v(0), v(1), v(2)) > 0;
    for (const auto& f : mesh.faces) ok &= std::fprintf(fp, "4 %d %d %d %d\n", f[0], f[1], f[2], f[3]) > 0;
  } else {
    for (const auto& v : mesh.vertices) ok &= std::fprintf(fp, "v %.17g %.17g %.17g\n", v(0), v(1), v(2)) > 0;
    for (const auto& f : mesh.faces) ok &= std::fprintf(fp, "f %d %d %d %d\n", f[0] + 1, f[1] + 1, f[2] + 1, f[3] + 1) > 0;
  }
  ok &= std::fclose(fp) == 0;
  if (!ok) throw IoError("failed while writing mesh", path);
}

// Vertex normals from central differences of the grid immersion (one-sided on the boundary).
inline std::vector<Vec3> mesh_normals(const ImmersionMesh& mesh) {
  const auto& g = mesh.grid;
  std::vector<Vec3> n(mesh.vertices.size());
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const Vec3 fx = mesh.vertex(std::min(i + 1, g.nx - 1), j) - mesh.vertex(std::max(i - 1, 0), j);
      const Vec3 fy = mesh.vertex(i, std::min(j + 1, g.ny - 1)) - mesh.vertex(i, std::max(j - 1, 0));
      n[g.index(i, j)] = fx.cross(fy).normalized();
    }
  }
  return n;
}

struct CylinderFit {
  Vec3 direction = Vec3::UnitX();
  Vec3 point = Vec3::Zero();
  double radius = 0.0;
  std::vector<double> distances;
  double max_relative_deviation(double target) const {
    double m = 0.0;
    for (double d : distances) m = std::max(m, std::abs(d - target) / target);
    return m;
  }
};

// Axis = direction orthogonal to all normals; center and radius from an algebraic circle fit of
// the points projected along the axis.
inline CylinderFit fit_cylinder(const std::vector<Vec3>& points, const std::vector<Vec3>& normals) {
  if (points.size() < 3 || points.size() != normals.size()) throw ArgumentError("cylinder fit needs matching points and normals");
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  for (const auto& n : normals) m += n * n.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
  CylinderFit fit;
  fit.direction = es.eigenvectors().col(0);
  const Vec3 e1 = es.eigenvectors().col(1), e2 = es.eigenvectors().col(2);
  Eigen::MatrixXd a(points.size(), 3);
  Eigen::VectorXd b(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double x = points[k].dot(e1), y = points[k].dot(e2);
    a.row(static_cast<Eigen::Index>(k)) << 2.0 * x, 2.0 * y, 1.0;
    b(static_cast<Eigen::Index>(k)) = x * x + y * y;
  }
  const Eigen::Vector3d sol = a.colPivHouseholderQr().solve(b);
  fit.point = sol(0) * e1 + sol(1) * e2;
  fit.radius = std::sqrt(sol(2) + sol(0) * sol(0) + sol(1) * sol(1));
  for (const auto& p : points) {
    const Vec3 r = p - fit.point;
    fit.distances.push_back((r - r.dot(fit.direction) * fit.direction).norm());
  }
  return fit;
}

struct RigidFit {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();
  double max_residual = 0.0;
};

// Least-squares rigid motion b ≈ R·a + t (Kabsch); with_translation = false fits a pure rotation.
inline RigidFit rigid_fit(const std::vector<Vec3>& a, const std::vector<Vec3>& b, bool with_translation = true) {
  if (a.size() != b.size() || a.empty()) throw ArgumentError("rigid fit needs matching non-empty point sets");
  Vec3 ca = Vec3::Zero(), cb = Vec3::Zero();
  if (with_translation) {
    for (std::size_t k = 0; k < a.size(); ++k) {
      ca += a[k];
      cb += b[k];
    }
    ca /= static_cast<double>(a.size());
    cb /= static_cast<double>(b.size());
  }
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t k = 0; k < a.size(); ++k) h += (a[k] - ca) * (b[k] - cb).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0 ? -1.0 : 1.0;
  RigidFit fit;
  fit.rotation = svd.matrixV() * d * svd.matrixU().transpose();
  fit.translation = cb - fit.rotation * ca;
  for (std::size_t k = 0; k < a.size(); ++k)
    fit.max_residual = std::max(fit.max_residual, (fit.rotation * a[k] + fit.translation - b[k]).norm());
  return fit;
}

}  // namespace finitetype
