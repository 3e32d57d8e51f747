#include "ffent/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace ffent {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError(path + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& path) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + "." + key + ": wrong type");
  }
}

template <typename T>
void read(const json& j, const char* key, std::optional<T>& out, const std::string& path) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  T v{};
  read(j, key, v, path);
  out = v;
}

double require(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(path + ": missing required key '" + key + "'");
  double v = 0.0;
  read(j, key, v, path);
  if (!std::isfinite(v)) throw ConfigError(path + "." + key + ": must be finite");
  return v;
}

std::vector<double> range_values(const json& j, const std::string& path) {
  if (j.is_array()) {
    try {
      return j.get<std::vector<double>>();
    } catch (const json::exception&) {
      throw ConfigError(path + ": expected a number list");
    }
  }
  check_keys(j, {"start", "stop", "step"}, path);
  const double a = require(j, "start", path);
  const double b = require(j, "stop", path);
  const double s = require(j, "step", path);
  if (!(s > 0.0) || b < a) throw ConfigError(path + ": need step > 0 and stop >= start");
  std::vector<double> v;
  const auto n = static_cast<long>(std::floor((b - a) / s + 1e-9));
  for (long i = 0; i <= n; ++i) v.push_back(a + static_cast<double>(i) * s);
  return v;
}

}  // namespace

LatticeModel ModelSpec::build() const {
  if (kind == "ssh") return ssh(t1, t2, omega0);
  if (kind == "ssh_no_chiral") return ssh_no_chiral(t1, t2, omega0, delta);
  if (kind == "honeycomb") return honeycomb(t, omega0, m);
  throw ConfigError("model.kind: unknown model '" + kind + "'");
}

ModelSpec ModelSpec::with(const std::string& parameter, double value) const {
  ModelSpec out = *this;
  if (parameter == "t1") out.t1 = value;
  else if (parameter == "t2") out.t2 = value;
  else if (parameter == "t") out.t = value;
  else if (parameter == "omega0") out.omega0 = value;
  else if (parameter == "m") out.m = value;
  else if (parameter == "delta") out.delta = value;
  else throw ConfigError("scan.parameter: unknown parameter '" + parameter + "'");
  return out;
}

KMesh MeshSpec::build(int dimension) const {
  std::vector<int> d = divisions;
  if (d.empty()) d = dimension == 1 ? std::vector<int>{40} : std::vector<int>{40, 40};
  if (static_cast<int>(d.size()) != dimension)
    throw ConfigError("mesh.divisions: expected " + std::to_string(dimension) + " entries");
  KMesh m = dimension == 1 ? KMesh::line(d[0], offset) : KMesh::grid(d[0], d[1], offset);
  m.validate();
  return m;
}

SubsystemMask MaskSpec::build(int dimension, int sublattices) const {
  const std::string g = geometry.empty() ? (dimension == 1 ? "interval" : "rhombus") : geometry;
  if (start.size() != 2) throw ConfigError("mask.start: expected two entries");
  const CellOffset s{start[0], start[1]};
  if (g == "interval") {
    if (dimension != 1) throw ConfigError("mask.geometry: interval needs a 1D model");
    return SubsystemMask::interval(length, s[0], sublattices);
  }
  if (dimension != 2 && g != "custom")
    throw ConfigError("mask.geometry: " + g + " needs a 2D model");
  if (g == "rectangle") return SubsystemMask::rectangle(l1, l2, s, sublattices);
  if (g == "rhombus") return SubsystemMask::rhombus(side, s, sublattices);
  if (g == "custom") return SubsystemMask::custom(sites);
  throw ConfigError("mask.geometry: unknown geometry '" + g + "'");
}

MaskFamily MaskSpec::family(int dimension, int sublattices) const {
  const std::string g = geometry.empty() ? (dimension == 1 ? "interval" : "rhombus") : geometry;
  if (g == "interval") return [=](int L) { return SubsystemMask::interval(L, 0, sublattices); };
  if (g == "rhombus") return [=](int L) { return SubsystemMask::rhombus(L, {0, 0}, sublattices); };
  if (g == "rectangle")
    return [=](int L) { return SubsystemMask::rectangle(L, L, {0, 0}, sublattices); };
  throw ConfigError("mask.geometry: scaling needs interval, rhombus or rectangle");
}

FillingWindow WindowSpec::build(const BandSolution& bands) const {
  FillingWindow w;
  if (fill == "half") {
    w = FillingWindow::half(bands);
  } else if (fill == "up_to") {
    if (!omega_F) throw ConfigError("window.omega_F is required for fill = up_to");
    w = FillingWindow::up_to(bands, *omega_F);
  } else {
    throw ConfigError("window.fill: expected 'half' or 'up_to'");
  }
  if (omega_b) w.omega_b = *omega_b;
  w.validate();
  return w;
}

std::vector<double> SweepSpec::grid(const BandSolution& bands) const {
  const double lo = omega_min.value_or(std::floor((bands.min_omega() - 0.5) / step) * step);
  const double hi = omega_max.value_or(std::ceil((bands.max_omega() + 0.5) / step) * step);
  std::vector<double> g;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= n; ++i) g.push_back(lo + static_cast<double>(i) * step);
  return g;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  check_keys(j, {"experiment", "model", "mesh", "mask", "window", "sweep", "scaling", "scan",
                 "cylinder", "ribbon", "pipeline", "zak", "seed", "workers", "output"},
             "config");
  ExperimentConfig c;
  read(j, "experiment", c.experiment, "config");
  read(j, "seed", c.seed, "config");
  read(j, "workers", c.workers, "config");
  read(j, "output", c.output, "config");

  if (!j.contains("model")) throw ConfigError("config: missing required section 'model'");
  {
    const json& m = j.at("model");
    check_keys(m, {"kind", "t1", "t2", "t", "omega0", "m", "delta"}, "model");
    if (!m.contains("kind")) throw ConfigError("model: missing required key 'kind'");
    read(m, "kind", c.model.kind, "model");
    c.model.omega0 = require(m, "omega0", "model");
    if (c.model.kind == "ssh" || c.model.kind == "ssh_no_chiral") {
      if (m.contains("t") || m.contains("m")) throw ConfigError("model: 't'/'m' belong to honeycomb");
      c.model.t1 = require(m, "t1", "model");
      c.model.t2 = require(m, "t2", "model");
      if (c.model.kind == "ssh_no_chiral")
        c.model.delta = require(m, "delta", "model");
      else if (m.contains("delta"))
        throw ConfigError("model: 'delta' belongs to ssh_no_chiral");
    } else if (c.model.kind == "honeycomb") {
      if (m.contains("t1") || m.contains("t2") || m.contains("delta"))
        throw ConfigError("model: 't1'/'t2'/'delta' belong to the chain models");
      c.model.t = require(m, "t", "model");
      read(m, "m", c.model.m, "model");
    } else {
      throw ConfigError("model.kind: unknown model '" + c.model.kind + "'");
    }
  }
  if (j.contains("mesh")) {
    const json& m = j.at("mesh");
    check_keys(m, {"divisions", "offset"}, "mesh");
    read(m, "divisions", c.mesh.divisions, "mesh");
    read(m, "offset", c.mesh.offset, "mesh");
  }
  if (j.contains("mask")) {
    const json& m = j.at("mask");
    check_keys(m, {"geometry", "length", "l1", "l2", "side", "start", "sites"}, "mask");
    read(m, "geometry", c.mask.geometry, "mask");
    read(m, "length", c.mask.length, "mask");
    read(m, "l1", c.mask.l1, "mask");
    read(m, "l2", c.mask.l2, "mask");
    read(m, "side", c.mask.side, "mask");
    read(m, "start", c.mask.start, "mask");
    if (m.contains("sites")) {
      std::vector<std::array<int, 3>> raw;
      read(m, "sites", raw, "mask");
      for (const auto& s : raw) c.mask.sites.push_back({{s[0], s[1]}, s[2]});
    }
  }
  if (j.contains("window")) {
    const json& w = j.at("window");
    check_keys(w, {"fill", "omega_F", "omega_b"}, "window");
    read(w, "fill", c.window.fill, "window");
    read(w, "omega_F", c.window.omega_F, "window");
    read(w, "omega_b", c.window.omega_b, "window");
    if (c.window.omega_F && !w.contains("fill")) c.window.fill = "up_to";
  }
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    check_keys(s, {"omega_min", "omega_max", "step"}, "sweep");
    read(s, "omega_min", c.sweep.omega_min, "sweep");
    read(s, "omega_max", c.sweep.omega_max, "sweep");
    read(s, "step", c.sweep.step, "sweep");
  }
  if (j.contains("scaling")) {
    const json& s = j.at("scaling");
    check_keys(s, {"sizes", "laws"}, "scaling");
    read(s, "sizes", c.scaling.sizes, "scaling");
    read(s, "laws", c.scaling.laws, "scaling");
  }
  if (j.contains("scan")) {
    const json& s = j.at("scan");
    check_keys(s, {"parameter", "values", "n_cells", "subsystem_cells", "delta"}, "scan");
    read(s, "parameter", c.scan.parameter, "scan");
    if (s.contains("values")) c.scan.values = range_values(s.at("values"), "scan.values");
    read(s, "n_cells", c.scan.n_cells, "scan");
    read(s, "subsystem_cells", c.scan.subsystem_cells, "scan");
    read(s, "delta", c.scan.delta, "scan");
  }
  if (j.contains("cylinder")) {
    const json& s = j.at("cylinder");
    check_keys(s, {"n1", "subsystem_cells", "k2_points", "delta"}, "cylinder");
    read(s, "n1", c.cylinder.n1, "cylinder");
    read(s, "subsystem_cells", c.cylinder.subsystem_cells, "cylinder");
    read(s, "k2_points", c.cylinder.k2_points, "cylinder");
    read(s, "delta", c.cylinder.delta, "cylinder");
  }
  if (j.contains("ribbon")) {
    const json& s = j.at("ribbon");
    check_keys(s, {"n_open", "k2_points"}, "ribbon");
    read(s, "n_open", c.ribbon.n_open, "ribbon");
    read(s, "k2_points", c.ribbon.k2_points, "ribbon");
  }
  if (j.contains("pipeline")) {
    const json& s = j.at("pipeline");
    check_keys(s, {"gamma", "omega_lo", "omega_hi", "step", "snr", "samples_per_halfwidth"},
               "pipeline");
    read(s, "gamma", c.pipeline.gamma, "pipeline");
    read(s, "omega_lo", c.pipeline.omega_lo, "pipeline");
    read(s, "omega_hi", c.pipeline.omega_hi, "pipeline");
    read(s, "step", c.pipeline.step, "pipeline");
    read(s, "snr", c.pipeline.snr, "pipeline");
    read(s, "samples_per_halfwidth", c.pipeline.samples_per_halfwidth, "pipeline");
  }
  if (j.contains("zak")) {
    const json& s = j.at("zak");
    check_keys(s, {"band", "k2_points"}, "zak");
    read(s, "band", c.zak.band, "zak");
    read(s, "k2_points", c.zak.k2_points, "zak");
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(f, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  return from_json(j);
}

void ExperimentConfig::validate() const {
  const LatticeModel mdl = model.build();
  const int dim = model.dimension();
  const KMesh mk = mesh.build(dim);
  mask.build(dim, mdl.sublattice_count()).check_within(mk.divisions, mdl.sublattice_count());
  if (window.fill != "half" && window.fill != "up_to")
    throw ConfigError("window.fill: expected 'half' or 'up_to'");
  if (window.fill == "up_to" && !window.omega_F)
    throw ConfigError("window.omega_F is required for fill = up_to");
  if (window.omega_F && !std::isfinite(*window.omega_F)) throw ConfigError("window.omega_F: not finite");
  if (!(sweep.step > 0.0)) throw ConfigError("sweep.step: must be > 0");
  if (sweep.omega_min && sweep.omega_max && *sweep.omega_max < *sweep.omega_min)
    throw ConfigError("sweep: omega_max < omega_min");
  for (int L : scaling.sizes)
    if (L < 1) throw ConfigError("scaling.sizes: entries must be >= 1");
  for (const auto& l : scaling.laws) scaling_law_from_string(l);
  if (!scan.values.empty()) {
    for (std::size_t i = 1; i < scan.values.size(); ++i)
      if (!(scan.values[i] > scan.values[i - 1])) throw ConfigError("scan.values: must ascend");
    model.with(scan.parameter, scan.values.front());
  }
  if (scan.n_cells < 2 || scan.subsystem_cells < 1 || scan.subsystem_cells > scan.n_cells)
    throw ConfigError("scan: need 1 <= subsystem_cells <= n_cells");
  if (!(scan.delta > 0.0 && scan.delta < 0.5)) throw ConfigError("scan.delta: must lie in (0, 0.5)");
  if (cylinder.subsystem_cells < 1 || cylinder.n1 < 4 * cylinder.subsystem_cells)
    throw ConfigError("cylinder: need n1 >= 4 * subsystem_cells");
  if (cylinder.k2_points < 1) throw ConfigError("cylinder.k2_points: must be >= 1");
  if (!(cylinder.delta > 0.0 && cylinder.delta < 0.5))
    throw ConfigError("cylinder.delta: must lie in (0, 0.5)");
  if (ribbon.n_open < 4 || ribbon.k2_points < 1)
    throw ConfigError("ribbon: need n_open >= 4 and k2_points >= 1");
  if (!(pipeline.gamma > 0.0)) throw ConfigError("pipeline.gamma: must be > 0");
  if (!(pipeline.omega_hi > pipeline.omega_lo) || !(pipeline.step > 0.0))
    throw ConfigError("pipeline: need omega_hi > omega_lo and step > 0");
  if (pipeline.samples_per_halfwidth < 2)
    throw ConfigError("pipeline.samples_per_halfwidth: must be >= 2");
  if (pipeline.snr < 0.0) throw ConfigError("pipeline.snr: must be >= 0");
  if (zak.band < 0 || zak.band >= mdl.sublattice_count()) throw ConfigError("zak.band: out of range");
  if (zak.k2_points < 1) throw ConfigError("zak.k2_points: must be >= 1");
  if (workers < 1) throw ConfigError("workers: must be >= 1");
  if (output.empty()) throw ConfigError("output: must not be empty");
}

json ExperimentConfig::to_json() const {
  json m = {{"kind", model.kind}, {"omega0", model.omega0}};
  if (model.kind == "honeycomb") {
    m["t"] = model.t;
    m["m"] = model.m;
  } else {
    m["t1"] = model.t1;
    m["t2"] = model.t2;
    if (model.kind == "ssh_no_chiral") m["delta"] = model.delta;
  }
  const int dim = model.dimension();
  const KMesh mk = mesh.build(dim);
  json divisions = dim == 1 ? json::array({mk.divisions[0]})
                            : json::array({mk.divisions[0], mk.divisions[1]});
  json mask_j = {{"geometry", mask.geometry.empty() ? (dim == 1 ? "interval" : "rhombus")
                                                    : mask.geometry},
                 {"length", mask.length}, {"l1", mask.l1}, {"l2", mask.l2},
                 {"side", mask.side}, {"start", mask.start}};
  if (!mask.sites.empty()) {
    json s = json::array();
    for (const auto& site : mask.sites) s.push_back({site.cell[0], site.cell[1], site.sublattice});
    mask_j["sites"] = s;
  }
  json window_j = {{"fill", window.fill}};
  if (window.omega_F) window_j["omega_F"] = *window.omega_F;
  if (window.omega_b) window_j["omega_b"] = *window.omega_b;
  json sweep_j = {{"step", sweep.step}};
  if (sweep.omega_min) sweep_j["omega_min"] = *sweep.omega_min;
  if (sweep.omega_max) sweep_j["omega_max"] = *sweep.omega_max;
  return {{"experiment", experiment},
          {"model", m},
          {"mesh", {{"divisions", divisions}, {"offset", mesh.offset}}},
          {"mask", mask_j},
          {"window", window_j},
          {"sweep", sweep_j},
          {"scaling", {{"sizes", scaling.sizes}, {"laws", scaling.laws}}},
          {"scan", {{"parameter", scan.parameter}, {"values", scan.values}, {"n_cells", scan.n_cells},
                    {"subsystem_cells", scan.subsystem_cells}, {"delta", scan.delta}}},
          {"cylinder", {{"n1", cylinder.n1}, {"subsystem_cells", cylinder.subsystem_cells},
                        {"k2_points", cylinder.k2_points}, {"delta", cylinder.delta}}},
          {"ribbon", {{"n_open", ribbon.n_open}, {"k2_points", ribbon.k2_points}}},
          {"pipeline", {{"gamma", pipeline.gamma}, {"omega_lo", pipeline.omega_lo},
                        {"omega_hi", pipeline.omega_hi}, {"step", pipeline.step},
                        {"snr", pipeline.snr},
                        {"samples_per_halfwidth", pipeline.samples_per_halfwidth}}},
          {"zak", {{"band", zak.band}, {"k2_points", zak.k2_points}}},
          {"seed", seed},
          {"workers", workers},
          {"output", output}};
}

}  // namespace ffent
