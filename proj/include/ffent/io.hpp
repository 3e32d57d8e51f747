#pragma once

// CSV / JSON serialization of results. Numbers are written with 17
// significant digits so files round-trip exactly.

#include "ffent/pumprobe.hpp"
#include "ffent/scaling.hpp"
#include "ffent/topology.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace ffent::io {

using nlohmann::json;

std::string num(double v);

/// (k indices..., band, omega_krad_s, gamma_krad_s, re_u_1, im_u_1, ...), with a
/// leading '#' line recording the mesh.
std::string bands_csv(const BandSolution& bands);
/// Inverse of bands_csv (lattice vectors are not stored and stay empty).
BandSolution read_bands_csv(const std::string& text);

std::string spectrum_csv(const std::vector<double>& spectrum);
json to_json(const EntanglementResult& r);

struct ScalingSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
  std::vector<ScalingFit> fits;
};
/// (series, L, S, law, fitted_prediction)
std::string scaling_csv(const std::vector<ScalingSeries>& series);
json to_json(const ScalingFit& fit);

std::string sweep_csv(const std::vector<std::pair<double, double>>& sweep);
/// (parameter, entropy, es_min_dist_to_half, n_modes_at_half, es_gap)
std::string transition_csv(const TransitionScan& scan);
/// (parameter, index, epsilon)
std::string transition_spectra_csv(const TransitionScan& scan);
/// (k2, index, epsilon, in_gap_flag); skipped slices appear as one row with
/// empty index/epsilon and flag "skipped".
std::string cylinder_csv(const CylinderES& es);
/// (k2, entropy)
std::string k2_entropy_csv(const CylinderES& es);
/// (k2, index, omega_krad_s, edge_weight, edge_flag)
std::string ribbon_csv(const RibbonSpectrum& r);
json to_json(const PipelineResult& r);

/// Writes every (relative path, content) pair under dir, creating it.
void write_files(const std::filesystem::path& dir, const std::map<std::string, std::string>& files);

}  // namespace ffent::io
