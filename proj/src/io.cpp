#include "ffent/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ffent::io {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string bands_csv(const BandSolution& bands) {
  std::ostringstream out;
  const int nsub = bands.states.empty() ? 0 : static_cast<int>(bands.states.front().u.size());
  out << "# mesh " << bands.mesh.divisions[0];
  if (bands.dimension == 2) out << " " << bands.mesh.divisions[1];
  out << " offset " << num(bands.mesh.offset[0]);
  if (bands.dimension == 2) out << " " << num(bands.mesh.offset[1]);
  if (bands.k2_parameter) out << " k2 " << num(*bands.k2_parameter);
  out << "\n";
  out << "k1_index";
  if (bands.dimension == 2) out << ",k2_index";
  out << ",band,omega_krad_s,gamma_krad_s";
  for (int a = 1; a <= nsub; ++a) out << ",re_u_" << a << ",im_u_" << a;
  out << "\n";
  for (std::size_t k = 0; k < bands.mesh.size(); ++k) {
    const auto idx = bands.mesh.indices(k);
    for (int b = 0; b < bands.bands; ++b) {
      const auto& s = bands.state(k, b);
      out << idx[0];
      if (bands.dimension == 2) out << "," << idx[1];
      out << "," << b << "," << num(s.omega) << "," << num(s.gamma);
      for (Eigen::Index a = 0; a < s.u.size(); ++a)
        out << "," << num(s.u(a).real()) << "," << num(s.u(a).imag());
      out << "\n";
    }
  }
  return out.str();
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw ConfigError("bad number '" + s + "'");
  return v;
}

}  // namespace

BandSolution read_bands_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# mesh ", 0) != 0)
    throw ConfigError("band CSV must start with a '# mesh' line");
  BandSolution bs;
  {
    const auto tok = split(line.substr(7), ' ');
    std::size_t i = 0;
    std::vector<int> div;
    while (i < tok.size() && tok[i] != "offset") div.push_back(std::stoi(tok[i++]));
    if (div.empty() || div.size() > 2 || i == tok.size()) throw ConfigError("bad '# mesh' line");
    ++i;
    std::vector<double> off;
    while (i < tok.size() && tok[i] != "k2") off.push_back(parse_double(tok[i++]));
    if (off.size() != div.size()) throw ConfigError("bad '# mesh' line");
    if (i < tok.size()) {
      if (i + 2 != tok.size()) throw ConfigError("bad '# mesh' line");
      bs.k2_parameter = parse_double(tok[i + 1]);
    }
    bs.dimension = static_cast<int>(div.size());
    bs.mesh.divisions = {div[0], div.size() == 2 ? div[1] : 1};
    bs.mesh.offset = {off[0], off.size() == 2 ? off[1] : 0.0};
    bs.mesh.validate();
  }
  if (!std::getline(in, line)) throw ConfigError("band CSV has no header");
  const auto header = split(line, ',');
  const std::size_t nidx = static_cast<std::size_t>(bs.dimension);
  if (header.size() < nidx + 3 || (header.size() - nidx - 3) % 2 != 0)
    throw ConfigError("band CSV header has the wrong column count");
  const auto nsub = static_cast<Eigen::Index>((header.size() - nidx - 3) / 2);
  std::vector<std::vector<std::string>> rows;
  int max_band = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto r = split(line, ',');
    if (r.size() != header.size()) throw ConfigError("band CSV row has the wrong column count");
    max_band = std::max(max_band, std::stoi(r[nidx]));
    rows.push_back(std::move(r));
  }
  bs.bands = max_band + 1;
  if (rows.size() != bs.mesh.size() * static_cast<std::size_t>(bs.bands))
    throw ConfigError("band CSV does not cover the mesh");
  bs.states.assign(rows.size(), BlochState{});
  for (const auto& r : rows) {
    const int i1 = std::stoi(r[0]);
    const int i2 = bs.dimension == 2 ? std::stoi(r[1]) : 0;
    const int b = std::stoi(r[nidx]);
    if (i1 < 0 || i1 >= bs.mesh.divisions[0] || i2 < 0 || i2 >= bs.mesh.divisions[1] || b < 0)
      throw ConfigError("band CSV index out of range");
    auto& s = bs.state(static_cast<std::size_t>(i1 * bs.mesh.divisions[1] + i2), b);
    s.omega = parse_double(r[nidx + 1]);
    s.gamma = parse_double(r[nidx + 2]);
    s.u.resize(nsub);
    for (Eigen::Index a = 0; a < nsub; ++a)
      s.u(a) = cplx(parse_double(r[nidx + 3 + 2 * static_cast<std::size_t>(a)]),
                    parse_double(r[nidx + 4 + 2 * static_cast<std::size_t>(a)]));
  }
  return bs;
}

std::string spectrum_csv(const std::vector<double>& spectrum) {
  std::ostringstream out;
  out << "index,epsilon\n";
  for (std::size_t i = 0; i < spectrum.size(); ++i) out << i << "," << num(spectrum[i]) << "\n";
  return out.str();
}

json to_json(const EntanglementResult& r) {
  return {{"mask_tag", r.mask_tag},
          {"omega_b", r.omega_b},
          {"omega_F", r.omega_F},
          {"spectrum", r.spectrum},
          {"entropy", r.entropy}};
}

std::string scaling_csv(const std::vector<ScalingSeries>& series) {
  std::ostringstream out;
  out << "series,L,S,law,fitted_prediction\n";
  for (const auto& s : series) {
    for (const auto& [L, S] : s.points) {
      if (s.fits.empty()) out << s.name << "," << num(L) << "," << num(S) << ",,\n";
      for (const auto& f : s.fits)
        out << s.name << "," << num(L) << "," << num(S) << "," << to_string(f.law) << ","
            << num(f.predict(L)) << "\n";
    }
  }
  return out.str();
}

json to_json(const ScalingFit& fit) {
  json coef = json::object();
  const auto names = fit.basis_names();
  for (std::size_t i = 0; i < names.size(); ++i) coef[names[i]] = fit.coefficients[i];
  return {{"law", to_string(fit.law)},
          {"coefficients", coef},
          {"residual_norm", fit.residual_norm},
          {"r_squared", fit.r_squared}};
}

std::string sweep_csv(const std::vector<std::pair<double, double>>& sweep) {
  std::ostringstream out;
  out << "omega_F_krad_s,entropy\n";
  for (const auto& [w, s] : sweep) out << num(w) << "," << num(s) << "\n";
  return out.str();
}

std::string transition_csv(const TransitionScan& scan) {
  std::ostringstream out;
  out << "parameter,entropy,es_min_dist_to_half,n_modes_at_half,es_gap\n";
  for (const auto& p : scan.points)
    out << num(p.parameter) << "," << num(p.entropy) << "," << num(p.es_min_dist_to_half) << ","
        << p.n_modes_at_half << "," << num(p.es_gap) << "\n";
  return out.str();
}

std::string transition_spectra_csv(const TransitionScan& scan) {
  std::ostringstream out;
  out << "parameter,index,epsilon\n";
  for (const auto& p : scan.points)
    for (std::size_t i = 0; i < p.spectrum.size(); ++i)
      out << num(p.parameter) << "," << i << "," << num(p.spectrum[i]) << "\n";
  return out.str();
}

std::string cylinder_csv(const CylinderES& es) {
  std::ostringstream out;
  out << "k2,index,epsilon,in_gap_flag\n";
  for (const auto& s : es.slices) {
    if (s.skipped) {
      out << num(s.k2) << ",,,skipped\n";
      continue;
    }
    for (std::size_t i = 0; i < s.spectrum.size(); ++i)
      out << num(s.k2) << "," << i << "," << num(s.spectrum[i]) << "," << (s.in_gap ? 1 : 0)
          << "\n";
  }
  return out.str();
}

std::string k2_entropy_csv(const CylinderES& es) {
  std::ostringstream out;
  out << "k2,entropy\n";
  for (const auto& s : es.slices)
    if (!s.skipped) out << num(s.k2) << "," << num(s.entropy) << "\n";
  return out.str();
}

std::string ribbon_csv(const RibbonSpectrum& r) {
  std::ostringstream out;
  out << "k2,index,omega_krad_s,edge_weight,edge_flag\n";
  for (const auto& s : r.slices)
    for (std::size_t i = 0; i < s.omega.size(); ++i)
      out << num(s.k2) << "," << i << "," << num(s.omega[i]) << "," << num(s.edge_weight[i]) << ","
          << (s.edge_flag[i] ? 1 : 0) << "\n";
  return out.str();
}

json to_json(const PipelineResult& r) {
  json per_k = json::array();
  for (const auto& k : r.per_k) {
    json e = {{"k", k.k},
              {"ok", k.ok},
              {"residual_norm", k.residual_norm},
              {"iterations", k.iterations},
              {"samples", k.samples},
              {"unresolved", k.unresolved},
              {"contaminated", k.contaminated},
              {"center_error", k.center_error},
              {"gamma_error", k.gamma_error},
              {"sigma_ratio", k.sigma_ratio},
              {"overlap", k.overlap}};
    if (!k.ok) e["error"] = k.error;
    per_k.push_back(std::move(e));
  }
  json out = {{"complete", r.complete()},
              {"flagged_k", r.flagged_k()},
              {"exact", to_json(r.exact_result)},
              {"max_center_error", r.max_center_error},
              {"min_overlap", r.min_overlap},
              {"per_k", per_k}};
  if (r.recovered_result) {
    out["recovered"] = to_json(*r.recovered_result);
    out["entropy_abs_error"] = r.entropy_abs_error;
    out["entropy_rel_error"] = r.entropy_rel_error;
    out["max_spectral_deviation"] = r.max_spectral_deviation;
  }
  return out;
}

void write_files(const std::filesystem::path& dir, const std::map<std::string, std::string>& files) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, content] : files) {
    const auto path = dir / name;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << content;
    if (!f) throw std::runtime_error("write failed for " + path.string());
  }
}

}  // namespace ffent::io
