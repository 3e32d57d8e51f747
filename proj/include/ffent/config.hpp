#pragma once

// JSON experiment configuration. Every section is validated up front and
// unknown keys are rejected; to_json() returns the fully resolved form that
// the CLI echoes into manifest.json.

#include "ffent/pumprobe.hpp"
#include "ffent/scaling.hpp"
#include "ffent/topology.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ffent {

struct ModelSpec {
  std::string kind;  // ssh | ssh_no_chiral | honeycomb
  double t1 = 0.0, t2 = 0.0, t = 0.0, omega0 = 0.0, m = 0.0, delta = 0.0;

  int dimension() const { return kind == "honeycomb" ? 2 : 1; }
  LatticeModel build() const;
  /// Same model with one named parameter replaced (for scans).
  ModelSpec with(const std::string& parameter, double value) const;
};

struct MeshSpec {
  std::vector<int> divisions;  // empty: 40 (1D) or 40 x 40 (2D)
  double offset = 0.5;
  KMesh build(int dimension) const;
};

struct MaskSpec {
  std::string geometry;  // interval | rectangle | rhombus | custom; empty: by dimension
  int length = 10;       // interval
  int l1 = 4, l2 = 4;    // rectangle
  int side = 4;          // rhombus
  std::vector<int> start{0, 0};
  std::vector<Site> sites;  // custom
  SubsystemMask build(int dimension, int sublattices) const;
  /// Mask family over the linear size for scaling runs.
  MaskFamily family(int dimension, int sublattices) const;
};

struct WindowSpec {
  std::string fill = "half";  // half | up_to
  std::optional<double> omega_F;
  std::optional<double> omega_b;
  FillingWindow build(const BandSolution& bands) const;
};

struct SweepSpec {
  std::optional<double> omega_min, omega_max;  // default: band range +- 0.5
  double step = 0.1;
  std::vector<double> grid(const BandSolution& bands) const;
};

struct ScalingSpec {
  std::vector<int> sizes{4, 6, 8, 10, 12, 16};
  std::vector<std::string> laws;  // empty: log1d+area (1D) or gkw2d+subarea+area (2D)
};

struct ScanSpec {
  std::string parameter = "t1";
  std::vector<double> values;
  int n_cells = 40;
  int subsystem_cells = 10;
  double delta = 0.05;
};

struct CylinderSpec {
  int n1 = 40;
  int subsystem_cells = 5;
  int k2_points = 24;
  double delta = 0.05;
};

struct RibbonSpec {
  int n_open = 20;
  int k2_points = 120;
};

struct PipelineSpec {
  double gamma = 0.02;
  double omega_lo = 40.0;
  double omega_hi = 60.0;
  double step = 0.05;
  double snr = 0.0;
  int samples_per_halfwidth = 8;
};

struct ZakSpec {
  int band = 0;
  int k2_points = 24;  // 2D models: one chain per k2
};

struct ExperimentConfig {
  std::string experiment;
  ModelSpec model;
  MeshSpec mesh;
  MaskSpec mask;
  WindowSpec window;
  SweepSpec sweep;
  ScalingSpec scaling;
  ScanSpec scan;
  CylinderSpec cylinder;
  RibbonSpec ribbon;
  PipelineSpec pipeline;
  ZakSpec zak;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string output = "out";

  /// Throws ConfigError with the offending key path.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void validate() const;
};

}  // namespace ffent
