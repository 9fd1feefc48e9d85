#pragma once

#include "grassmann.hpp"
#include "surfaces.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace finitetype::cli {

enum class Command { kBubbleton, kTorus, kSymes, kDress, kGrassmann, kVerify };

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitFactorization = 3,
  kExitTolerance = 4,
  kExitIo = 5,
};

inline const char* command_name(Command c) {
  switch (c) {
    case Command::kBubbleton: return "bubbleton";
    case Command::kTorus: return "torus";
    case Command::kSymes: return "symes";
    case Command::kDress: return "dress";
    case Command::kGrassmann: return "grassmann";
    case Command::kVerify: return "verify";
  }
  return "unknown";
}

struct GridSpec {
  double x_min = -2.0, x_max = 2.0, y_min = -1.0, y_max = 1.0;
  int nx = 200, ny = 100;

  DomainGrid grid() const { return DomainGrid({x_min, y_min}, {x_max, y_max}, nx, ny); }
  double h() const { return std::max((x_max - x_min) / (nx - 1), (y_max - y_min) / (ny - 1)); }
};

// "x0,x1,y0,y1,nx,ny"
inline GridSpec parse_grid(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw ArgumentError("bad grid entry '" + item + "'");
    } catch (const std::logic_error&) {
      throw ArgumentError("bad grid entry '" + item + "'");
    }
  }
  if (v.size() != 6) throw ArgumentError("grid needs x0,x1,y0,y1,nx,ny");
  GridSpec g{v[0], v[1], v[2], v[3], static_cast<int>(v[4]), static_cast<int>(v[5])};
  if (v[4] != g.nx || v[5] != g.ny || g.nx < 3 || g.ny < 3) throw ArgumentError("grid sizes must be integers >= 3");
  if (!(g.x_max > g.x_min) || !(g.y_max > g.y_min)) throw ArgumentError("grid corners must be ordered");
  return g;
}

// "name=value"
inline std::pair<std::string, double> parse_tolerance(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ArgumentError("tolerance override must be name=value");
  try {
    return {text.substr(0, eq), std::stod(text.substr(eq + 1))};
  } catch (const std::logic_error&) {
    throw ArgumentError("bad tolerance value in '" + text + "'");
  }
}

// Absolute tolerances, except names ending in _h2 which are multiplied by h².
inline std::map<std::string, double> default_tolerances() {
  return {
      {"factorization", 1e-8}, {"unitarity", 1e-8},     {"determinant", 1e-8},  {"twist", 1e-7},
      {"killing_window", 1e-7}, {"periodicity", 1e-5},  {"fiber", 1e-10},       {"equivariance", 1e-10},
      {"frame_unitarity", 1e-10}, {"flatness_h2", 2.5e4}, {"killing_fd_h2", 2.5e4}, {"sinh_gordon_h2", 2.5e4},
      {"harmonicity_h2", 10.0},
  };
}

struct RunConfig {
  Command command = Command::kBubbleton;
  std::string spec_path;
  std::vector<int> lobes;
  GridSpec grid;
  int n_zeta = 64;
  int window = kDefaultWindow;
  std::optional<double> epsilon;
  cplx zeta0{1.0, 0.0};
  double H = 1.0;
  std::string out_path;
  std::string format;  // obj, ply; empty picks from the extension
  std::string frames_out;
  std::string frames_in;
  std::string report_path = "report.json";
  std::vector<cplx> direction;
  std::map<std::string, double> tolerance_overrides;

  void validate() const {
    if (grid.nx < 3 || grid.ny < 3) throw ArgumentError("grid sizes must be >= 3");
    if (n_zeta < 4 || !is_power_of_two(n_zeta)) throw ArgumentError("n_zeta must be a power of two >= 4");
    if (window < 1) throw ArgumentError("window must be positive");
    if (epsilon && !(*epsilon > 0.0 && *epsilon < 1.0)) throw ArgumentError("epsilon must lie in (0, 1)");
    if (!(H > 0.0)) throw ArgumentError("H must be positive");
    if (std::abs(std::abs(zeta0) - 1.0) > 1e-12) throw ArgumentError("zeta0 must be unimodular");
    const auto defaults = default_tolerances();
    for (const auto& [name, value] : tolerance_overrides) {
      if (!defaults.count(name)) throw ArgumentError("unknown tolerance '" + name + "'");
      if (!(value > 0.0)) throw ArgumentError("tolerance '" + name + "' must be positive");
    }
  }
};

class Report {
 public:
  explicit Report(const RunConfig& cfg) : h_(cfg.grid.h()), tolerances_(default_tolerances()) {
    for (const auto& [k, v] : cfg.tolerance_overrides) tolerances_[k] = v;
    doc_["command"] = command_name(cfg.command);
    doc_["input"] = {{"spec_path", cfg.spec_path},
                     {"grid", {cfg.grid.x_min, cfg.grid.x_max, cfg.grid.y_min, cfg.grid.y_max, cfg.grid.nx, cfg.grid.ny}},
                     {"n_zeta", cfg.n_zeta},
                     {"window", cfg.window},
                     {"zeta0", {cfg.zeta0.real(), cfg.zeta0.imag()}},
                     {"H", cfg.H},
                     {"tolerance_overrides", cfg.tolerance_overrides}};
    if (cfg.epsilon) doc_["input"]["epsilon"] = *cfg.epsilon;
    if (!cfg.lobes.empty()) doc_["input"]["lobes"] = cfg.lobes;
    doc_["residuals"] = nlohmann::json::object();
    doc_["diagnostics"] = nlohmann::json::object();
    doc_["timings"] = nlohmann::json::object();
  }

  void set_h(double h) { h_ = h; }

  void check(const std::string& name, const std::string& tolerance, double value) {
    double tol = tolerances_.at(tolerance);
    if (tolerance.size() > 3 && tolerance.compare(tolerance.size() - 3, 3, "_h2") == 0) tol *= h_ * h_;
    const bool pass = value <= tol;
    doc_["residuals"][name] = {{"value", value}, {"tolerance", tol}, {"pass", pass}};
    if (!pass) breached_ = true;
  }

  void timing(const std::string& stage, double seconds) { doc_["timings"][stage] = seconds; }
  void diagnostic(const std::string& name, nlohmann::json value) { doc_["diagnostics"][name] = std::move(value); }
  nlohmann::json& input() { return doc_["input"]; }

  template <class F>
  auto timed(const std::string& stage, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      doc_["timings"][stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      finish();
    } else {
      auto r = f();
      finish();
      return r;
    }
  }

  void fail(int code, const std::string& message) {
    doc_["error"] = {{"exit_code", code}, {"message", message}};
  }

  bool breached() const { return breached_; }

  void write(const std::string& path, int exit_code) {
    doc_["exit_code"] = exit_code;
    std::ofstream os(path);
    if (!os) throw IoError("cannot write report", path);
    os << doc_.dump(2) << "\n";
    if (!os) throw IoError("cannot write report", path);
  }

  const nlohmann::json& json() const { return doc_; }

 private:
  double h_;
  std::map<std::string, double> tolerances_;
  nlohmann::json doc_;
  bool breached_ = false;
};

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open", path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(path + ": " + e.what());
  }
}

inline MeshFormat mesh_format(const RunConfig& cfg) {
  std::string f = cfg.format;
  if (f.empty()) {
    const auto dot = cfg.out_path.rfind('.');
    f = dot == std::string::npos ? "obj" : cfg.out_path.substr(dot + 1);
  }
  if (f == "obj") return MeshFormat::kObj;
  if (f == "ply") return MeshFormat::kPly;
  throw ArgumentError("unknown mesh format '" + f + "'");
}

// Shared checks for a frame field; xi0 enables the Killing-field check.
inline void check_frames(Report& report, const ExtendedFrameField& field, const LaurentMatrixLoop* xi0) {
  report.check("factorization", "factorization", field.factorization_residual);
  report.check("unitarity", "unitarity", unitarity_defect(field));
  report.check("determinant", "determinant", determinant_defect(field));
  report.check("twist", "twist", twist_defect(field));
  report.timed("flatness", [&] { report.check("flatness", "flatness_h2", flatness_residual_max(field)); });
  if (xi0) {
    const auto k = report.timed("killing", [&] { return killing_field_residual(field, *xi0); });
    report.check("killing_fd", "killing_fd_h2", k.fd_defect);
    report.check("killing_window", "killing_window", k.window_defect);
  }
  if (field.base_normalized && field.grid.nx >= 5 && field.grid.ny >= 5) {
    const auto sg = report.timed("sinh_gordon", [&] { return sinh_gordon_residual(field); });
    report.check("sinh_gordon", "sinh_gordon_h2", sg.residual);
    report.diagnostic("sinh_gordon_calibration", {{"scale", sg.scale}, {"offset", sg.offset}, {"calibrated", sg.calibrated}});
  }
}

inline void emit_surface(Report& report, const RunConfig& cfg, const ExtendedFrameField& field) {
  if (cfg.out_path.empty()) return;
  const auto format = mesh_format(cfg);
  const auto mesh = report.timed("mesh", [&] { return sym_bobenko(field, cfg.zeta0, cfg.H); });
  const auto mc = report.timed("mean_curvature", [&] { return discrete_mean_curvature(mesh); });
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, dev = 0.0;
  for (auto p : mc.interior) {
    lo = std::min(lo, mc.values[p]);
    hi = std::max(hi, mc.values[p]);
    dev = std::max(dev, std::abs(mc.values[p] - cfg.H) / cfg.H);
  }
  report.diagnostic("mean_curvature", {{"min", lo}, {"max", hi}, {"max_relative_deviation", dev},
                                       {"degenerate_faces", mc.degenerate_faces}});
  report.timed("export", [&] { export_mesh(mesh, cfg.out_path, format); });
}

inline void emit_frames(Report& report, const RunConfig& cfg, const ExtendedFrameField& field) {
  if (cfg.frames_out.empty()) return;
  report.timed("write_frames", [&] { write_frame_field(field, cfg.frames_out); });
}

// max ‖φ(z+τ) − φ(z)‖ over a line of sample points, φ the Gauss map.
inline double gauss_period_defect(SymesSolver& solver, const GridSpec& g, cplx tau, int samples = 21) {
  std::vector<cplx> pts;
  const double y = 0.5 * (g.y_min + g.y_max);
  for (int s = 0; s < samples; ++s) {
    const cplx z(g.x_min + (g.x_max - g.x_min) * s / (samples - 1), y);
    pts.push_back(z);
    pts.push_back(z + tau);
  }
  solver.prepare(pts);
  double d = 0.0;
  for (std::size_t s = 0; s < pts.size(); s += 2) {
    const Vec3 a = hopf(solver.frame(pts[s]).first[0].col(0));
    const Vec3 b = hopf(solver.frame(pts[s + 1]).first[0].col(0));
    d = std::max(d, (a - b).norm());
  }
  return d;
}

inline ExtendedFrameField symes_field(Report& report, const RunConfig& cfg, const HyperellipticSpectralData& data) {
  return report.timed("frames", [&] { return symes_frame(data, cfg.grid.grid(), cfg.n_zeta, cfg.window); });
}

inline void run_bubbleton(Report& report, const RunConfig& cfg) {
  std::optional<NodalSpectralData> nodes;
  std::optional<LobeCounts> lobes;
  if (!cfg.spec_path.empty()) {
    auto [d, l] = nodal_from_json(read_json_file(cfg.spec_path));
    nodes = d;
    lobes = l;
  } else {
    if (cfg.lobes.size() < 2) throw ArgumentError("bubbleton needs --p p0,p1,... or --spec");
    lobes = LobeCounts(cfg.lobes);
    nodes = bubbleton_branch_points(*lobes);
  }
  report.input()["spec"] = to_json(*nodes, *lobes);
  const auto per = periodicity_check(*nodes, *lobes);
  report.check("periodicity_relation", "periodicity", per.residual);
  report.diagnostic("tau", {per.tau.real(), per.tau.imag()});
  const auto data = nodes->doubled();
  const auto field = symes_field(report, cfg, data);
  const auto xi0 = normalized_killing_field(data);
  check_frames(report, field, &xi0);
  SymesSolver solver(data, cfg.n_zeta, SymesOptions{cfg.window, 1.5});
  const double defect = report.timed("periodicity", [&] { return gauss_period_defect(solver, cfg.grid, per.tau); });
  report.check("gauss_period", "periodicity", defect);
  emit_surface(report, cfg, field);
  emit_frames(report, cfg, field);
}

inline HyperellipticSpectralData hyperelliptic_spec(Report& report, const RunConfig& cfg) {
  if (cfg.spec_path.empty()) throw ArgumentError("--spec is required");
  const auto data = hyperelliptic_from_json(read_json_file(cfg.spec_path));
  report.input()["spec"] = to_json(data);
  return data;
}

inline void run_symes(Report& report, const RunConfig& cfg) {
  const auto data = hyperelliptic_spec(report, cfg);
  const auto field = symes_field(report, cfg, data);
  const auto xi0 = normalized_killing_field(data);
  check_frames(report, field, &xi0);
  emit_surface(report, cfg, field);
  emit_frames(report, cfg, field);
}

inline void run_dress(Report& report, const RunConfig& cfg) {
  const auto data = hyperelliptic_spec(report, cfg);
  const double eps = cfg.epsilon.value_or(default_epsilon(data));
  report.diagnostic("epsilon", eps);
  const auto field = report.timed("frames", [&] {
    DressOptions opt;
    opt.window = cfg.window;
    return dress_frame(data, cfg.grid.grid(), eps, cfg.n_zeta, opt);
  });
  const auto xi0 = normalized_killing_field(data);
  check_frames(report, field, &xi0);
  emit_surface(report, cfg, field);
  emit_frames(report, cfg, field);
}

inline void run_verify(Report& report, const RunConfig& cfg) {
  if (cfg.frames_in.empty()) throw ArgumentError("verify needs --frames");
  const auto field = report.timed("read_frames", [&] { return read_frame_field(cfg.frames_in); });
  report.set_h(std::max(field.grid.hx(), field.grid.hy()));
  std::optional<LaurentMatrixLoop> xi0;
  if (!cfg.spec_path.empty() && field.base_normalized) xi0 = normalized_killing_field(hyperelliptic_spec(report, cfg));
  check_frames(report, field, xi0 ? &*xi0 : nullptr);
}

inline void run_grassmann(Report& report, const RunConfig& cfg) {
  if (cfg.spec_path.empty()) throw ArgumentError("--spec is required");
  const auto data = p1_from_json(read_json_file(cfg.spec_path));
  report.input()["spec"] = to_json(data);
  const auto map = report.timed("map_data", [&] { return equivariant_map_data(data); });

  double fiber = 0.0;
  for (auto o : map.fibers) fiber = std::max({fiber, std::abs(std::abs(o) - 1.0), std::abs(lambda_eval(data, o) - 1.0)});
  report.check("fiber", "fiber", fiber);
  report.diagnostic("ramification_plus", {{"finite", complex_list_to_json(map.rplus.finite)}, {"at_infinity", map.rplus.at_infinity}});

  Eigen::VectorXcd a = Eigen::VectorXcd::Zero(data.k);
  if (cfg.direction.empty()) {
    a(0) = 1.0;
  } else {
    if (static_cast<int>(cfg.direction.size()) != data.k) throw ArgumentError("direction needs k complex components");
    for (int j = 0; j < data.k; ++j) a(j) = cfg.direction[static_cast<std::size_t>(j)];
    if (a.norm() == 0.0) throw ArgumentError("direction must be nonzero");
  }
  report.input()["direction"] = complex_list_to_json(std::vector<cplx>(a.data(), a.data() + a.size()));
  report.diagnostic("conformality_indicator", conformality_indicator(map, a));

  const DomainGrid grid = cfg.grid.grid();
  std::vector<PlaneSample> planes(grid.size());
  report.timed("map", [&] {
    parallel_for(grid.size(), [&](std::size_t p) { planes[p] = pluriharmonic_map(map, grid.point(p) * a); });
  });

  double equiv = 0.0, unit = 0.0;
  const Mat p0 = pluriharmonic_map(map, Eigen::VectorXcd::Zero(data.k)).projection;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const Eigen::VectorXcd z = grid.point(p) * a;
    const Eigen::VectorXcd g = diagonal_frame(map, z);
    Mat conj = p0;
    for (Eigen::Index i = 0; i < conj.rows(); ++i)
      for (Eigen::Index j = 0; j < conj.cols(); ++j) conj(i, j) *= g(i) / g(j);
    equiv = std::max(equiv, sup_norm(Mat(planes[p].projection - conj)));
    unit = std::max(unit, diagonal_frame_unitarity_defect(map, z));
  }
  report.check("equivariance", "equivariance", equiv);
  report.check("frame_unitarity", "frame_unitarity", unit);

  const double harm = report.timed("harmonicity", [&] {
    double r = 0.0;
    const double hx2 = grid.hx() * grid.hx(), hy2 = grid.hy() * grid.hy();
    for (int j = 1; j < grid.ny - 1; ++j)
      for (int i = 1; i < grid.nx - 1; ++i) {
        const Mat& c = planes[grid.index(i, j)].projection;
        const Mat lap = (planes[grid.index(i + 1, j)].projection + planes[grid.index(i - 1, j)].projection - 2.0 * c) / hx2 +
                        (planes[grid.index(i, j + 1)].projection + planes[grid.index(i, j - 1)].projection - 2.0 * c) / hy2;
        r = std::max(r, sup_norm(Mat(lap * c - c * lap)));
      }
    return r;
  });
  report.check("harmonicity", "harmonicity_h2", harm);

  if (!cfg.out_path.empty()) {
    report.timed("export", [&] {
      std::FILE* f = std::fopen(cfg.out_path.c_str(), "w");
      if (!f) throw IoError("cannot write", cfg.out_path);
      for (int j = 1; j <= data.k; ++j) std::fprintf(f, "%sz%d_re,z%d_im", j > 1 ? "," : "", j, j);
      for (Eigen::Index s = 0; s < planes.front().plucker.size(); ++s) std::fprintf(f, ",p%ld_re,p%ld_im", static_cast<long>(s), static_cast<long>(s));
      std::fprintf(f, "\n");
      for (std::size_t p = 0; p < grid.size(); ++p) {
        const Eigen::VectorXcd z = grid.point(p) * a;
        for (int j = 0; j < data.k; ++j) std::fprintf(f, "%s%.17g,%.17g", j ? "," : "", z(j).real(), z(j).imag());
        for (Eigen::Index s = 0; s < planes[p].plucker.size(); ++s)
          std::fprintf(f, ",%.17g,%.17g", planes[p].plucker(s).real(), planes[p].plucker(s).imag());
        std::fprintf(f, "\n");
      }
      const bool ok = std::fclose(f) == 0;
      if (!ok) throw IoError("cannot write", cfg.out_path);
    });
  }
}

// Runs one command, writes the report and returns the process exit code.
inline int run(const RunConfig& cfg) {
  Report report(cfg);
  int code = kExitOk;
  try {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    switch (cfg.command) {
      case Command::kBubbleton: run_bubbleton(report, cfg); break;
      case Command::kTorus:
      case Command::kSymes: run_symes(report, cfg); break;
      case Command::kDress: run_dress(report, cfg); break;
      case Command::kGrassmann: run_grassmann(report, cfg); break;
      case Command::kVerify: run_verify(report, cfg); break;
    }
    report.timing("total", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (report.breached()) code = kExitTolerance;
  } catch (const IoError& e) {
    code = kExitIo;
    report.fail(code, e.what());
  } catch (const FactorizationError& e) {
    code = kExitFactorization;
    report.fail(code, e.what());
  } catch (const nlohmann::json::exception& e) {
    code = kExitConfig;
    report.fail(code, e.what());
  } catch (const Error& e) {
    code = kExitConfig;
    report.fail(code, e.what());
  }
  try {
    report.write(cfg.report_path, code);
  } catch (const IoError&) {
    return kExitIo;
  }
  return code;
}

}  // namespace finitetype::cli
