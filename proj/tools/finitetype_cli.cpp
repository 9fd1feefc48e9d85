#include <finitetype/cli.hpp>

#include <CLI11.hpp>

#include <iostream>

using namespace finitetype;

namespace {

std::vector<double> split_numbers(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw ArgumentError("bad number '" + item + "'");
    } catch (const std::logic_error&) {
      throw ArgumentError("bad number '" + item + "'");
    }
  }
  return v;
}

struct RawOptions {
  std::string grid, lobes, zeta0, direction;
  std::vector<std::string> tolerances;
};

void add_common(CLI::App* sub, cli::RunConfig& cfg, RawOptions& raw) {
  sub->add_option("--spec", cfg.spec_path, "spectral data JSON");
  sub->add_option("--grid", raw.grid, "x0,x1,y0,y1,nx,ny");
  sub->add_option("--n-zeta", cfg.n_zeta, "samples on the unit circle (power of two)");
  sub->add_option("--window", cfg.window, "Laurent truncation window");
  sub->add_option("--report", cfg.report_path, "report JSON path");
  sub->add_option("--tol", raw.tolerances, "tolerance override name=value")->take_all();
}

void add_surface(CLI::App* sub, cli::RunConfig& cfg, RawOptions& raw) {
  sub->add_option("--out", cfg.out_path, "mesh output (.obj or .ply)");
  sub->add_option("--format", cfg.format, "obj or ply");
  sub->add_option("--frames-out", cfg.frames_out, "frame field JSON (CSV written alongside)");
  sub->add_option("--zeta0", raw.zeta0, "Sym point re,im on the unit circle");
  sub->add_option("--H", cfg.H, "mean curvature");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-type harmonic maps, CMC surfaces and equivariant Grassmannian maps"};
  app.require_subcommand(1);
  cli::RunConfig cfg;
  RawOptions raw;

  auto* bub = app.add_subcommand("bubbleton", "bubbleton from lobe counts or a nodal spec");
  bub->add_option("--p", raw.lobes, "lobe counts p0,p1,...");
  auto* torus = app.add_subcommand("torus", "surface from hyperelliptic data (Symes)");
  auto* symes = app.add_subcommand("symes", "frames by the Symes formula");
  auto* dress = app.add_subcommand("dress", "frames by dressing the vacuum");
  dress->add_option("--epsilon", cfg.epsilon, "inner circle radius");
  auto* grass = app.add_subcommand("grassmann", "equivariant map into a Grassmannian");
  grass->add_option("--out", cfg.out_path, "CSV of z and Pluecker coordinates");
  grass->add_option("--direction", raw.direction, "complex line direction re,im,re,im,...");
  auto* verify = app.add_subcommand("verify", "verify a stored frame field");
  verify->add_option("--frames", cfg.frames_in, "frame field JSON")->required();

  for (auto* s : {bub, torus, symes, dress, grass, verify}) add_common(s, cfg, raw);
  for (auto* s : {bub, torus, symes, dress}) add_surface(s, cfg, raw);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kExitConfig;
  }

  if (bub->parsed()) cfg.command = cli::Command::kBubbleton;
  if (torus->parsed()) cfg.command = cli::Command::kTorus;
  if (symes->parsed()) cfg.command = cli::Command::kSymes;
  if (dress->parsed()) cfg.command = cli::Command::kDress;
  if (grass->parsed()) cfg.command = cli::Command::kGrassmann;
  if (verify->parsed()) cfg.command = cli::Command::kVerify;

  try {
    if (!raw.grid.empty()) cfg.grid = cli::parse_grid(raw.grid);
    if (!raw.lobes.empty())
      for (double p : split_numbers(raw.lobes)) {
        if (p != static_cast<int>(p)) throw ArgumentError("lobe counts must be integers");
        cfg.lobes.push_back(static_cast<int>(p));
      }
    if (!raw.zeta0.empty()) {
      const auto v = split_numbers(raw.zeta0);
      if (v.size() != 2) throw ArgumentError("--zeta0 needs re,im");
      cfg.zeta0 = cplx(v[0], v[1]);
    }
    if (!raw.direction.empty()) {
      const auto v = split_numbers(raw.direction);
      if (v.size() % 2 != 0) throw ArgumentError("--direction needs re,im pairs");
      for (std::size_t i = 0; i < v.size(); i += 2) cfg.direction.emplace_back(v[i], v[i + 1]);
    }
    for (const auto& t : raw.tolerances) cfg.tolerance_overrides.insert(cli::parse_tolerance(t));
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitConfig;
  }

  const int code = cli::run(cfg);
  if (code != 0) std::cerr << "finitetype_cli: exit " << code << ", see " << cfg.report_path << "\n";
  return code;
}
