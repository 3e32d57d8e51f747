#include "ffent/cli.hpp"

#include "ffent/io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <numbers>
#include <sstream>

namespace ffent::cli {

using nlohmann::json;

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"bands",           "entropy",     "spectrum",
                                          "sweep-filling",   "scaling",     "scan-transition",
                                          "cylinder-es",     "ribbon",      "pipeline",
                                          "zak"};
  return c;
}

const std::vector<std::string>& figure_panels() {
  static const std::vector<std::string> p{"2d", "2e", "2f", "3d", "3e", "3f",
                                          "3g", "4c", "4d", "4e", "4f"};
  return p;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void require_dimension(const ExperimentConfig& c, int d, const std::string& command) {
  if (c.model.dimension() != d)
    throw ConfigError(command + " needs a " + std::to_string(d) + "D model");
}

std::vector<ScalingLaw> resolve_laws(const ExperimentConfig& c) {
  std::vector<ScalingLaw> laws;
  for (const auto& s : c.scaling.laws) laws.push_back(scaling_law_from_string(s));
  if (laws.empty()) {
    if (c.model.dimension() == 1)
      laws = {ScalingLaw::log1d, ScalingLaw::area};
    else
      laws = {ScalingLaw::gkw2d, ScalingLaw::subarea, ScalingLaw::area};
  }
  return laws;
}

Output run_scaling(const ExperimentConfig& c) {
  const LatticeModel model = c.model.build();
  const int dim = model.dimension();
  const KMesh mesh = c.mesh.build(dim);
  const auto family = c.mask.family(dim, model.sublattice_count());
  for (int L : c.scaling.sizes) family(L).check_within(mesh.divisions, model.sublattice_count());
  const auto laws = resolve_laws(c);
  const auto bands = band_solve(model, mesh, c.workers);
  const FillingWindow window = c.window.build(bands);

  io::ScalingSeries series{model.name(), entropy_vs_size(bands, family, window, c.scaling.sizes, c.workers), {}};
  Output out;
  json fits = json::array();
  if (series.points.size() >= 3) {
    for (auto law : laws) {
      series.fits.push_back(fit_scaling(series.points, law));
      fits.push_back(io::to_json(series.fits.back()));
    }
  }
  json pts = json::array();
  for (const auto& [L, S] : series.points) pts.push_back({L, S});
  json report = {{"points", pts}, {"fits", fits}, {"omega_F", window.omega_F}};

  const int min_div = dim == 1 ? mesh.divisions[0] : std::min(mesh.divisions[0], mesh.divisions[1]);
  if (min_div >= 24) {
    const auto contour = fermi_contour(bands, window.omega_F);
    const double a = gkw_prefactor(contour, SubsystemBoundary::block(model.lattice_vectors()));
    report["gkw_prefactor"] = a;
    report["codimension_anomalous"] = contour.codimension_anomalous;
    out.notes.push_back("gkw prefactor " + fmt("%.6g", a) +
                        (contour.codimension_anomalous ? " (codimension-anomalous contour)" : ""));
  } else {
    report["gkw_prefactor"] = nullptr;
  }
  for (const auto& f : series.fits)
    out.notes.push_back(to_string(f.law) + " leading coefficient " + fmt("%.6g", f.coefficients[0]) +
                        ", R^2 " + fmt("%.6f", f.r_squared));
  out.files["scaling.csv"] = io::scaling_csv({series});
  out.files["scaling_fit.json"] = report.dump(2) + "\n";
  return out;
}

Output run_pipeline(const ExperimentConfig& c) {
  const LatticeModel model = c.model.build();
  const int dim = model.dimension();
  const KMesh mesh = c.mesh.build(dim);
  const auto mask = c.mask.build(dim, model.sublattice_count());
  mask.check_within(mesh.divisions, model.sublattice_count());
  PipelineOptions opt;
  opt.damping.uniform = c.pipeline.gamma;
  opt.noise = {c.pipeline.snr, c.seed};
  opt.omega_lo = c.pipeline.omega_lo;
  opt.omega_hi = c.pipeline.omega_hi;
  opt.omega_step = c.pipeline.step;
  opt.samples_per_halfwidth = c.pipeline.samples_per_halfwidth;
  opt.workers = c.workers;
  std::optional<FillingWindow> window;
  if (c.window.fill == "up_to") {
    const auto bands = band_solve(model, mesh, c.workers);
    window = c.window.build(bands);
  }
  const auto res = reconstruct_pipeline(model, mesh, mask, window, opt);
  Output out;
  out.files["pipeline.json"] = io::to_json(res).dump(2) + "\n";
  if (res.complete()) {
    out.files["recovered_bands.csv"] = io::bands_csv(res.recovered);
    out.notes.push_back("entropy exact " + fmt("%.10g", res.exact_result.entropy) + ", recovered " +
                        fmt("%.10g", res.recovered_result->entropy) + ", relative error " +
                        fmt("%.3g", res.entropy_rel_error));
  }
  out.notes.push_back("max center error " + fmt("%.3g", res.max_center_error) + " krad/s");
  const auto flagged = res.flagged_k();
  if (!flagged.empty()) {
    out.partial = true;
    out.notes.push_back(std::to_string(flagged.size()) + " k-points flagged");
  }
  return out;
}

Output run_zak(const ExperimentConfig& c) {
  const LatticeModel model = c.model.build();
  const int band = c.zak.band;
  std::ostringstream csv;
  csv << "k2,band,zak_phase\n";
  Output out;
  if (model.dimension() == 1) {
    const auto bands = band_solve(model, c.mesh.build(1), c.workers);
    const double phase = zak_phase(bands, band);
    csv << "," << band << "," << io::num(phase) << "\n";
    out.notes.push_back("zak phase " + fmt("%.6f", phase));
  } else {
    const int n1 = c.mesh.build(2).divisions[0];
    const auto grid = angle_grid(c.zak.k2_points);
    const auto phases = parallel_map<double>(grid.size(), c.workers, [&](std::size_t i) {
      return zak_phase(cylinder_bands(model, grid[i], n1, c.mesh.offset), band);
    });
    for (std::size_t i = 0; i < grid.size(); ++i)
      csv << io::num(grid[i]) << "," << band << "," << io::num(phases[i]) << "\n";
    out.notes.push_back(std::to_string(grid.size()) + " k2 slices");
  }
  out.files["zak.csv"] = csv.str();
  return out;
}

}  // namespace

Output execute(const std::string& command, const ExperimentConfig& c) {
  c.validate();
  Output out;
  if (command == "scaling") {
    out = run_scaling(c);
  } else if (command == "pipeline") {
    out = run_pipeline(c);
  } else if (command == "zak") {
    out = run_zak(c);
  } else if (command == "scan-transition") {
    require_dimension(c, 1, command);
    if (c.scan.values.empty()) throw ConfigError("scan.values: required for scan-transition");
    ScanOptions opt;
    opt.n_cells = c.scan.n_cells;
    opt.mesh_offset = c.mesh.offset;
    opt.subsystem_cells = c.scan.subsystem_cells;
    opt.delta = c.scan.delta;
    opt.workers = c.workers;
    const auto spec = c.model;
    const auto scan = transition_scan([&](double v) { return spec.with(c.scan.parameter, v).build(); },
                                      c.scan.parameter, c.scan.values, opt);
    out.files["transition.csv"] = io::transition_csv(scan);
    out.files["transition_spectra.csv"] = io::transition_spectra_csv(scan);
    out.notes.push_back("entropy maximum at " + c.scan.parameter + " = " +
                        fmt("%.6g", scan.points[scan.argmax_entropy()].parameter));
  } else if (command == "cylinder-es") {
    require_dimension(c, 2, command);
    const auto es = cylinder_es(c.model.build(), c.cylinder.n1, c.cylinder.subsystem_cells,
                                angle_grid(c.cylinder.k2_points), c.cylinder.delta, c.workers);
    out.files["cylinder_es.csv"] = io::cylinder_csv(es);
    out.files["entropy_vs_k2.csv"] = io::k2_entropy_csv(es);
    std::size_t skipped = 0;
    for (const auto& s : es.slices) skipped += s.skipped ? 1 : 0;
    out.notes.push_back(std::to_string(es.flagged_k2().size()) + " of " +
                        std::to_string(es.slices.size()) + " k2 slices carry in-gap modes");
    if (skipped > 0) {
      out.partial = true;
      out.notes.push_back(std::to_string(skipped) + " k2 slices skipped (bands touch on the mesh)");
    }
  } else if (command == "ribbon") {
    require_dimension(c, 2, command);
    const auto r = ribbon_bands(c.model.build(), c.ribbon.n_open, angle_grid(c.ribbon.k2_points),
                                c.workers);
    out.files["ribbon.csv"] = io::ribbon_csv(r);
  } else {
    const LatticeModel model = c.model.build();
    const int dim = model.dimension();
    const KMesh mesh = c.mesh.build(dim);
    const auto bands = band_solve(model, mesh, c.workers);
    if (command == "bands") {
      out.files["bands.csv"] = io::bands_csv(bands);
    } else if (command == "entropy" || command == "spectrum" || command == "sweep-filling") {
      const auto mask = c.mask.build(dim, model.sublattice_count());
      mask.check_within(mesh.divisions, model.sublattice_count());
      if (command == "sweep-filling") {
        const auto sweep = filling_sweep(bands, mask, c.sweep.grid(bands), c.workers);
        out.files["sweep.csv"] = io::sweep_csv(sweep);
      } else {
        const auto res = entanglement(correlation_matrix(bands, mask, c.window.build(bands), c.workers));
        out.files["entropy.json"] = io::to_json(res).dump(2) + "\n";
        if (command == "spectrum") out.files["spectrum.csv"] = io::spectrum_csv(res.spectrum);
        out.notes.push_back("S = " + fmt("%.12g", res.entropy));
      }
    } else {
      throw ConfigError("unknown command '" + command + "'");
    }
  }
  out.manifest = c.to_json();
  return out;
}

namespace {

ExperimentConfig ssh_config(double t1, double t2, int n, int L) {
  ExperimentConfig c;
  c.model = {"ssh", t1, t2, 0.0, 48.0, 0.0, 0.0};
  c.mesh.divisions = {n};
  c.mask.geometry = "interval";
  c.mask.length = L;
  return c;
}

ExperimentConfig honeycomb_config(double m) {
  ExperimentConfig c;
  c.model = {"honeycomb", 0.0, 0.0, 2.5, 48.5, m, 0.0};
  c.mesh.divisions = {40, 40};
  c.mask.geometry = "rhombus";
  c.mask.side = 4;
  return c;
}

// Runs several configs of one command, each into its own subdirectory.
Output combine(const std::string& command,
               const std::vector<std::pair<std::string, ExperimentConfig>>& runs) {
  Output out;
  out.manifest = json::object();
  for (const auto& [name, cfg] : runs) {
    auto part = execute(command, cfg);
    for (auto& [file, content] : part.files) out.files[name + "/" + file] = std::move(content);
    for (auto& n : part.notes) out.notes.push_back(name + ": " + n);
    out.partial = out.partial || part.partial;
    out.manifest[name] = {{"command", command}, {"config", part.manifest}};
  }
  return out;
}

}  // namespace

Output figure(const std::string& panel, int workers) {
  Output out;
  auto with_workers = [&](ExperimentConfig c) {
    c.workers = workers;
    return c;
  };
  if (panel == "2d" || panel == "2f") {
    auto c = with_workers(ssh_config(0.5, 2.0, 40, 10));
    c.scan.values.clear();
    for (int i = 0; i <= 12; ++i) c.scan.values.push_back(0.5 + 0.25 * i);
    c.scan.n_cells = 40;
    c.scan.subsystem_cells = 10;
    out = combine("scan-transition", {{"scan", c}});
  } else if (panel == "2e") {
    std::vector<int> sizes;
    for (int L = 4; L <= 16; ++L) sizes.push_back(L);
    auto topo = with_workers(ssh_config(2.0, 4.0, 40, 10));
    auto triv = with_workers(ssh_config(4.0, 2.0, 40, 10));
    auto gapless = with_workers(ssh_config(1.0, 1.0, 200, 10));
    topo.scaling.laws = triv.scaling.laws = {"area", "log1d"};
    gapless.scaling.laws = {"log1d", "area"};
    topo.scaling.sizes = triv.scaling.sizes = gapless.scaling.sizes = sizes;
    out = combine("scaling", {{"topological", topo}, {"trivial", triv}, {"gapless", gapless}});
  } else if (panel == "3d" || panel == "3e") {
    auto c = with_workers(honeycomb_config(panel == "3d" ? 0.0 : 2.0));
    // the few states around K need a fine mesh to give a clean Dirac cusp
    c.mesh.divisions = {120, 120};
    c.sweep.step = 0.1;
    out = combine("sweep-filling", {{"sweep", c}});
  } else if (panel == "3f" || panel == "3g") {
    std::vector<std::pair<std::string, ExperimentConfig>> runs;
    auto add = [&](const std::string& name, double m, double wf) {
      auto c = with_workers(honeycomb_config(m));
      c.scaling.sizes = {3, 4, 5, 6, 7, 8};
      c.scaling.laws = {"gkw2d", "subarea", "area"};
      c.window.fill = "up_to";
      c.window.omega_F = wf;
      runs.emplace_back(name, c);
    };
    if (panel == "3f") {
      add("van_hove", 0.0, 48.5 - 2.5);
      add("dirac", 0.0, 48.5);
      add("ring", 0.0, 48.5 - 2.0 * 2.5);
    } else {
      add("gapped", 2.0, 48.5);
    }
    out = combine("scaling", runs);
  } else if (panel == "4c" || panel == "4e" || panel == "4f") {
    auto c = with_workers(honeycomb_config(panel == "4f" ? 1.0 : 0.0));
    c.cylinder = {40, 5, 24, 0.05};
    out = combine("cylinder-es", {{"cylinder", c}});
  } else if (panel == "4d") {
    auto c = with_workers(honeycomb_config(0.0));
    c.ribbon = {20, 120};
    out = combine("ribbon", {{"ribbon", c}});
  } else {
    throw ConfigError("unknown figure panel '" + panel + "'");
  }
  out.manifest = {{"figure", panel}, {"runs", out.manifest}};
  return out;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Free-fermion entanglement toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  std::string config_path, out_dir;
  int workers = 0;
  std::uint64_t seed = 0;
  bool quiet = false;
  auto* opt_workers = app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  auto* opt_seed = app.add_option("--seed", seed, "Seed for optional noise");
  app.add_option("--config", config_path, "JSON experiment config");
  app.add_option("--out", out_dir, "Output directory");
  app.add_flag("--quiet", quiet, "Suppress progress output");
  for (const auto& name : commands()) app.add_subcommand(name)->fallthrough();
  std::string panel;
  auto* fig = app.add_subcommand("figure", "Figure preset");
  fig->fallthrough();
  fig->add_option("panel", panel, "Panel id")->required()->check(CLI::IsMember(figure_panels()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : config_error;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    Output out;
    std::string dir;
    if (command == "figure") {
      out = figure(panel, workers > 0 ? workers : 1);
      dir = out_dir.empty() ? "out/figure_" + panel : out_dir;
    } else {
      if (config_path.empty()) throw ConfigError("--config is required for " + command);
      auto cfg = ExperimentConfig::load(config_path);
      if (opt_workers->count() > 0) cfg.workers = workers;
      if (opt_seed->count() > 0) cfg.seed = seed;
      if (!out_dir.empty()) cfg.output = out_dir;
      cfg.validate();
      out = execute(command, cfg);
      dir = cfg.output;
    }
    json manifest = {{"toolkit", "ffent"}, {"version", kVersion}, {"command", command}};
    if (command == "figure") manifest["panel"] = panel;
    manifest["resolved"] = out.manifest;
    manifest["partial"] = out.partial;
    out.files["manifest.json"] = manifest.dump(2) + "\n";
    io::write_files(dir, out.files);
    if (!quiet) {
      for (const auto& n : out.notes) std::cout << n << "\n";
      std::cout << "wrote " << out.files.size() << " files to " << dir << "\n";
    }
    return out.partial ? partial : ok;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure [" << e.stage() << "]: " << e.what() << "\n";
    return numerical_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return numerical_error;
  }
}

}  // namespace ffent::cli
