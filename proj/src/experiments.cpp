#include "u1chaos/experiments.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "u1chaos/parallel.hpp"
#include "u1chaos/weingarten.hpp"

namespace u1chaos {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- settings map

std::map<std::string, std::string> config_to_map(const RunConfig& c) {
  std::map<std::string, std::string> m;
  m["experiment"] = c.experiment;
  m["ensemble.kind"] = kind_name(c.ensemble.kind);
  m["ensemble.size"] = std::to_string(c.ensemble.size);
  m["ensemble.coupling"] = fmt17(c.ensemble.coupling);
  m["ensemble.scale"] = fmt17(c.ensemble.scale);
  m["ensemble.seed"] = std::to_string(c.ensemble.seed);
  m["ensemble.realizations"] = std::to_string(c.ensemble.realizations);
  m["time_grid.t_min"] = fmt17(c.grid.t_min);
  m["time_grid.t_max"] = fmt17(c.grid.t_max);
  m["time_grid.points"] = std::to_string(c.grid.points);
  m["time_grid.spacing"] = c.grid.log_spacing ? "log" : "linear";
  m["output"] = c.output_dir;
  m["plot"] = c.plot ? "true" : "false";
  m["threads"] = std::to_string(c.threads);
  m["cache"] = c.use_cache ? "true" : "false";
  m["large"] = c.large ? "true" : "false";
  m["scope.sector"] = std::to_string(c.sector);
  m["dos.bins"] = std::to_string(c.dos_bins);
  m["sff.kind"] = c.sff_kind;
  m["fp.k"] = std::to_string(c.fp_order);
  m["kinv.rounds"] = std::to_string(c.kinv_rounds);
  m["otoc.a"] = c.otoc_a;
  m["otoc.b"] = c.otoc_b;
  m["page.n_a"] = std::to_string(c.page_n_a);
  m["page.n_b"] = std::to_string(c.page_n_b);
  m["page.q"] = std::to_string(c.page_q);
  m["mc.realizations"] = std::to_string(c.mc_realizations);
  m["hp.n_a"] = std::to_string(c.hp.n_A);
  m["hp.n_b"] = std::to_string(c.hp.n_B);
  m["hp.n_c"] = std::to_string(c.hp.n_C);
  m["hp.n_d"] = std::to_string(c.hp.n_D);
  m["hp.m_a"] = std::to_string(c.hp.m_A);
  m["hp.m_b"] = std::to_string(c.hp.m_B);
  m["hp.mc"] = c.hp_with_mc ? "true" : "false";
  m["kl.case"] = c.kl_case;
  m["kl.dimension"] = std::to_string(c.kl_dimension);
  m["kl.qubits"] = std::to_string(c.kl_qubits);
  m["kl.charge"] = std::to_string(c.kl_charge);
  m["kl.op_a"] = c.kl_op_a;
  m["kl.op_b"] = c.kl_op_b;
  m["kl.codeword_a"] = std::to_string(c.kl_codeword_a);
  m["kl.codeword_b"] = std::to_string(c.kl_codeword_b);
  m["moment.pattern"] = c.moment_pattern;
  m["moment.trace"] = c.moment_traced ? "true" : "false";
  m["moment.dim"] = std::to_string(c.moment_dim);
  return m;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::domain_error("expected a boolean, got '" + v + "'");
}

}  // namespace

void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  try {
    if (key == "experiment") c.experiment = value;
    else if (key == "ensemble.kind") c.ensemble.kind = kind_from_name(value);
    else if (key == "ensemble.size") c.ensemble.size = std::stoi(value);
    else if (key == "ensemble.coupling") c.ensemble.coupling = std::stod(value);
    else if (key == "ensemble.scale") c.ensemble.scale = std::stod(value);
    else if (key == "ensemble.seed") c.ensemble.seed = std::stoull(value);
    else if (key == "ensemble.realizations") c.ensemble.realizations = std::stoi(value);
    else if (key == "time_grid.t_min") c.grid.t_min = std::stod(value);
    else if (key == "time_grid.t_max") c.grid.t_max = std::stod(value);
    else if (key == "time_grid.points") c.grid.points = std::stoi(value);
    else if (key == "time_grid.spacing") {
      if (value != "log" && value != "linear")
        throw std::domain_error("spacing must be log or linear");
      c.grid.log_spacing = value == "log";
    } else if (key == "output") c.output_dir = value;
    else if (key == "plot") c.plot = parse_bool(value);
    else if (key == "threads") c.threads = std::stoi(value);
    else if (key == "cache") c.use_cache = parse_bool(value);
    else if (key == "large") c.large = parse_bool(value);
    else if (key == "scope.sector") c.sector = std::stoi(value);
    else if (key == "dos.bins") c.dos_bins = std::stoi(value);
    else if (key == "sff.kind") c.sff_kind = value;
    else if (key == "fp.k") c.fp_order = std::stoi(value);
    else if (key == "kinv.rounds") c.kinv_rounds = std::stoi(value);
    else if (key == "otoc.a") c.otoc_a = value;
    else if (key == "otoc.b") c.otoc_b = value;
    else if (key == "page.n_a") c.page_n_a = std::stoi(value);
    else if (key == "page.n_b") c.page_n_b = std::stoi(value);
    else if (key == "page.q") c.page_q = std::stoi(value);
    else if (key == "mc.realizations") c.mc_realizations = std::stoi(value);
    else if (key == "hp.n_a") c.hp.n_A = std::stoi(value);
    else if (key == "hp.n_b") c.hp.n_B = std::stoi(value);
    else if (key == "hp.n_c") c.hp.n_C = std::stoi(value);
    else if (key == "hp.n_d") c.hp.n_D = std::stoi(value);
    else if (key == "hp.m_a") c.hp.m_A = std::stoi(value);
    else if (key == "hp.m_b") c.hp.m_B = std::stoi(value);
    else if (key == "hp.mc") c.hp_with_mc = parse_bool(value);
    else if (key == "kl.case") c.kl_case = value;
    else if (key == "kl.dimension") c.kl_dimension = std::stoi(value);
    else if (key == "kl.qubits") c.kl_qubits = std::stoi(value);
    else if (key == "kl.charge") c.kl_charge = std::stoi(value);
    else if (key == "kl.op_a") c.kl_op_a = value;
    else if (key == "kl.op_b") c.kl_op_b = value;
    else if (key == "kl.codeword_a") c.kl_codeword_a = std::stoi(value);
    else if (key == "kl.codeword_b") c.kl_codeword_b = std::stoi(value);
    else if (key == "moment.pattern") c.moment_pattern = value;
    else if (key == "moment.trace") c.moment_traced = parse_bool(value);
    else if (key == "moment.dim") c.moment_dim = std::stoi(value);
    else throw std::domain_error("unknown configuration key: " + key);
  } catch (const std::invalid_argument&) {
    throw std::domain_error("invalid value for " + key + ": '" + value + "'");
  }
}

RunConfig config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    apply_setting(cfg, key, value);
  }
  return cfg;
}

void write_manifest(const RunConfig& cfg, const std::string& path) {
  ordered_json j;
  for (const auto& [k, v] : config_to_map(cfg)) j[k] = v;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, cfg.ensemble.content_hash());
  j["ensemble.content_hash"] = buf;
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

RunConfig config_from_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  ordered_json j;
  in >> j;
  RunConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "ensemble.content_hash") continue;
    apply_setting(cfg, key, value.get<std::string>());
  }
  return cfg;
}

// ------------------------------------------------------------------- validation

std::vector<Diagnostic> validate_config(const RunConfig& cfg) {
  std::vector<Diagnostic> out;
  const std::vector<std::string> experiments = {
      "dos", "sff", "sff-sectors", "r2-check", "r4-check", "fp", "fp-analytic",
      "kinv", "otoc", "page", "hp", "hp-scan", "kl", "ek-scan", "moment"};
  if (std::find(experiments.begin(), experiments.end(), cfg.experiment) ==
      experiments.end())
    out.push_back({"experiment", "unknown experiment '" + cfg.experiment + "'"});
  try {
    cfg.ensemble.validate();
  } catch (const std::exception& e) {
    out.push_back({"ensemble.size", e.what()});
  }
  const bool needs_grid = cfg.experiment == "sff" || cfg.experiment == "sff-sectors" ||
                          cfg.experiment == "r2-check" || cfg.experiment == "r4-check" ||
                          cfg.experiment == "fp" || cfg.experiment == "fp-analytic" ||
                          cfg.experiment == "kinv" || cfg.experiment == "otoc";
  if (needs_grid) {
    try {
      cfg.grid.validate();
    } catch (const std::exception& e) {
      const std::string what = e.what();
      std::string field = "time_grid.points";
      if (what.find("t_min") != std::string::npos) field = "time_grid.t_min";
      if (what.find("t_max") != std::string::npos) field = "time_grid.t_max";
      out.push_back({field, what});
    }
  }
  if (cfg.experiment == "dos" && cfg.dos_bins < 10)
    out.push_back({"dos.bins", "bins must be >= 10"});
  if (cfg.experiment == "fp" && cfg.fp_order < 1)
    out.push_back({"fp.k", "k must be >= 1"});
  if (cfg.experiment == "kinv" && cfg.kinv_rounds < 1)
    out.push_back({"kinv.rounds", "rounds must be >= 1"});
  if (cfg.experiment == "hp" || cfg.experiment == "hp-scan" || cfg.experiment == "ek-scan") {
    try {
      cfg.hp.validate();
    } catch (const std::exception& e) {
      out.push_back({"hp.n_a", e.what()});
    }
  }
  if (cfg.experiment == "kl" && cfg.kl_case != "haar" && cfg.kl_case != "u1")
    out.push_back({"kl.case", "case must be haar or u1"});
  if (cfg.experiment == "moment") {
    for (char ch : cfg.moment_pattern)
      if (ch != '1' && ch != '2' && ch != ',')
        out.push_back({"moment.pattern",
                       "pattern must be a comma list of 1 (U) and 2 (U^dag)"});
  }
  if (cfg.mc_realizations < 1)
    out.push_back({"mc.realizations", "must be >= 1"});
  return out;
}

// ------------------------------------------------------------------ CSV and SVG

void write_series_csv(const ObservableSeries& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,value,std_error,n\n";
  for (std::size_t i = 0; i < s.times.size(); ++i)
    out << fmt17(s.times[i]) << ',' << fmt17(s.values[i]) << ','
        << fmt17(s.std_errors[i]) << ',' << s.realizations << '\n';
}

void write_histogram_csv(const Histogram& h, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "bin_left,bin_right,count,density\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    out << fmt17(h.edges[b]) << ',' << fmt17(h.edges[b + 1]) << ',' << h.counts[b]
        << ',' << fmt17(h.density(static_cast<int>(b))) << '\n';
}

namespace {

// minimal SVG line plot; log-log axes by default for sff/fp-style series
void write_svg_plot(const ObservableSeries& s, const std::string& path, bool loglog) {
  const int W = 640, H = 420, ML = 60, MR = 20, MT = 20, MB = 40;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    double x = s.times[i], y = s.values[i];
    if (std::isnan(y)) continue;
    if (loglog) {
      if (x <= 0 || y <= 0) continue;
      x = std::log10(x);
      y = std::log10(y);
    }
    pts.emplace_back(x, y);
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  if (pts.empty()) return;
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  std::ofstream out(path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << W / 2 << "' y='" << H - 8 << "' text-anchor='middle' "
      << "font-size='13'>" << (loglog ? "log10 t" : "t") << "</text>\n";
  out << "<text x='14' y='" << H / 2 << "' font-size='13' transform='rotate(-90 14 "
      << H / 2 << ")' text-anchor='middle'>" << s.label << "</text>\n";
  out << "<polyline fill='none' stroke='#27598e' stroke-width='1.5' points='";
  for (const auto& [x, y] : pts) {
    const double px = ML + (x - xmin) / (xmax - xmin) * (W - ML - MR);
    const double py = H - MB - (y - ymin) / (ymax - ymin) * (H - MT - MB);
    out << px << ',' << py << ' ';
  }
  out << "'/>\n</svg>\n";
}

ordered_json estimate_json(const Estimate& e) {
  ordered_json j;
  j["value"] = e.value;
  j["std_error"] = e.std_error;
  j["n"] = e.n;
  return j;
}

// --------------------------------------------------------------- experiment bodies

SpectralEnsemble spectra_with_cache(const RunConfig& cfg) {
  const fs::path cache_dir = fs::path(cfg.output_dir) / "cache";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, cfg.ensemble.content_hash());
  const fs::path cache = cache_dir / (std::string("spectra-") + buf + ".csv");
  if (cfg.use_cache && fs::exists(cache)) {
    try {
      return load_spectra_csv(cache.string(), cfg.ensemble);
    } catch (const std::exception&) {
      // stale or corrupt cache: fall through and recompute
    }
  }
  auto se = spectral_ensemble(cfg.ensemble, cfg.threads);
  if (cfg.use_cache) {
    fs::create_directories(cache_dir);
    save_spectra_csv(se, cache.string());
  }
  return se;
}

Scope scope_of(const RunConfig& cfg) {
  return cfg.sector < 0 ? Scope::Whole() : Scope::Sector(cfg.sector);
}

int run_dos(const RunConfig& cfg, const fs::path& dir, ordered_json& summary) {
  const auto se = spectra_with_cache(cfg);
  const auto whole = density_of_states(se, cfg.dos_bins, Scope::Whole(), true);
  write_histogram_csv(whole, (dir / "dos.csv").string());
  summary["whole.exponent"] = dos_edge_exponent(se, Scope::Whole());
  for (int q = 0; q < se.sectors(); ++q) {
    if (se.dims[q] < 2) continue;
    const auto h = density_of_states(se, cfg.dos_bins, Scope::Sector(q), true);
    write_histogram_csv(h, (dir / ("dos_q" + std::to_string(q) + ".csv")).string());
    if (se.dims[q] >= 20)
      summary["q" + std::to_string(q) + ".exponent"] =
          dos_edge_exponent(se, Scope::Sector(q));
  }
  return 0;
}

int run_sff(const RunConfig& cfg, const fs::path& dir, ordered_json& summary) {
  const auto se = spectra_with_cache(cfg);
  const auto kind = form_factor_from_name(cfg.sff_kind);
  const auto series = form_factor_series(se, kind, cfg.grid, scope_of(cfg));
  write_series_csv(series, (dir / "sff.csv").string());
  if (cfg.plot) write_svg_plot(series, (dir / "sff.svg").string(), true);
  // late-time plateau versus the sector-sum prediction
  const auto ts = traces_at(se, cfg.grid.t_max);
  summary["rhs_sector_sum_at_t_max"] = general_r2k_partition(ts, 1);
  double late = 0;
  int n_late = 0;
  for (std::size_t i = series.values.size() - std::min<std::size_t>(8, series.values.size());
       i < series.values.size(); ++i) {
    late += series.values[i];
    ++n_late;
  }
  summary["plateau_mean"] = late / std::max(1, n_late);
  return 0;
}

int run_sff_sectors(const RunConfig& cfg, const fs::path& dir, ordered_json&) {
  const auto se = spectra_with_cache(cfg);
  const auto kind = form_factor_from_name(cfg.sff_kind);
  for (int q = 0; q < se.sectors(); ++q) {
    const auto series = form_factor_series(se, kind, cfg.grid, Scope::Sector(q));
    const auto path = dir / ("sff_q" + std::to_string(q) + ".csv");
    write_series_csv(series, path.string());
    if (cfg.plot)
      write_svg_plot(series, (dir / ("sff_q" + std::to_string(q) + ".svg")).string(),
                     true);
  }
  return 0;
}

double series_max(const ObservableSeries& s) {
  double mx = 0;
  for (double v : s.values)
    if (!std::isnan(v)) mx = std::max(mx, v);
  return mx;
}

int run_r2_check(const RunConfig& cfg, const fs::path& dir, ordered_json& summary) {
  const auto se = spectra_with_cache(cfg);
  const auto series = r2_decomposition_check(se, cfg.grid);
  write_series_csv(series, (dir / "r2_check.csv").string());
  if (cfg.plot) write_svg_plot(series, (dir / "r2_check.svg").string(), true);
  summary["max_rel_error"] = series_max(series);
  return 0;
}

int run_r4_check(const RunConfig& cfg, const fs::path& dir, ordered_json& summary) {
  const auto se = spectra_with_cache(cfg);
  const auto check = r4_decomposition_check(se, cfg.grid);
  write_series_csv(check.rel_error, (dir / "r4_check.csv").string());
  summary["max_rel_error"] = series_max(check.rel_error);
  summary["max_representation_gap"] = check.max_representation_gap;
  return 0;
}

int run_fp(const RunConfig& cfg, const fs::path& dir, ordered_json&) {
  const auto ee = eigen_ensemble(cfg.ensemble, cfg.threads);
  const auto series = fp_direct_series(ee, cfg.grid, cfg.fp_order, cfg.threads);
  write_series_csv(series, (dir / "fp.csv").string());
  if (cfg.plot) write_svg_plot(series, (dir / "fp.svg").string(), true);
  return 0;
}

int run_fp_analytic(const RunConfig& cfg, const fs::path& dir, ordered_json& summary) {
  const auto ee = eigen_ensemble(cfg.ensemble, cfg.threads);
  const auto direct = fp_direct_series(ee, cfg.grid, 1, cfg.threads);
  const auto analytic = f1_analytic(ee.spectra(), cfg.grid);
  write_series_csv(direct, (dir / "f1_direct.csv").string());
  write_series_csv(analytic, (dir / "f1_analytic.csv").string());
  ObservableSeries rel;
  rel.label = "f1secs_rel_error";
  rel.times = direct.times;
  rel.realizations = direct.realizations;
  rel.values.resize(direct.values.size());
  rel.std_errors.resize(direct.values.size());
  for (std::size_t i = 0; i < rel.values.size(); ++i) {
    rel.values[i] = std::abs(direct.values[i] - analytic.values[i]) /
                    std::abs(direct.values[i]);
    rel.std_errors[i] = std::sqrt(direct.std_errors[i] * direct.std_errors[i] +
                                  analytic.std_errors[i] * analytic.std_errors[i]) /
                        std::abs(direct.values[i]);
  }
  write_series_csv(rel, (dir / "f1_check.csv").string());
  if (cfg.plot) write_svg_plot(rel, (dir / "f1_check.svg").string(), true);
  summary["max_rel_error"] = series_max(rel);
  return 0;
}

int run_kinv(const RunConfig& cfg, const fs::path& dir, ordered_json&) {
  const auto ee = eigen_ensemble(cfg.ensemble, cfg.threads);
  ObservableSeries series;
  series.label = cfg.sector < 0 ? "kinv" : "kinv_q" + std::to_string(cfg.sector);
  series.times = cfg.grid.times();
  series.realizations = ee.count();
  series.values.resize(series.times.size());
  series.std_errors.resize(series.times.size());
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    Estimate est;
    if (cfg.sector < 0) {
      est = k_invariance_at(ee, series.times[i], cfg.fp_order, cfg.kinv_rounds,
                            cfg.ensemble.seed ^ 0xFEED);
    } else {
      // single-sector ensemble: restrict to the chosen block
      std::vector<std::vector<Eigen::MatrixXcd>> blocks(ee.count());
      for (int r = 0; r < ee.count(); ++r)
        blocks[r] = {ee.unitary_at(r, series.times[i]).at(cfg.sector)};
      UnitarySet us;
      us.dims = {ee.dims.at(cfg.sector)};
      us.samples = std::move(blocks);
      est = k_invariance(us, cfg.fp_order, cfg.kinv_rounds, cfg.ensemble.seed ^ 0xFEED);
    }
    series.values[i] = est.value;
    series.std_errors[i] = est.std_error;
  }
  write_series_csv(series, (dir / "kinv.csv").string());
  return 0;
}

int run_otoc(const RunConfig& cfg, const fs::path& dir, ordered_json& summary) {
  const auto A = pauli_matrix(PauliString(cfg.otoc_a));
  const auto B = pauli_matrix(PauliString(cfg.otoc_b));
  if (cfg.ensemble.kind == EnsembleKind::haar || cfg.ensemble.kind == EnsembleKind::u1_haar) {
    const auto us = sample_unitary_set(cfg.ensemble, cfg.threads);
    const auto res = otoc(us, {A, B}, scope_of(cfg));
    summary["otoc"] = estimate_json(res.est);
    if (res.max_sector_residual) summary["max_sector_residual"] = *res.max_sector_residual;
    return 0;
  }
  const auto ee = eigen_ensemble(cfg.ensemble, cfg.threads);
  ObservableSeries series;
  series.label = "otoc";
  series.times = cfg.grid.times();
  series.realizations = ee.count();
  series.values.resize(series.times.size());
  series.std_errors.resize(series.times.size());
  double worst_residual = 0;
  bool have_residual = false;
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    const auto res = otoc_at(ee, series.times[i], {A, B}, scope_of(cfg));
    series.values[i] = res.est.value;
    series.std_errors[i] = res.est.std_error;
    if (res.max_sector_residual) {
      have_residual = true;
      worst_residual = std::max(worst_residual, *res.max_sector_residual);
    }
  }
  write_series_csv(series, (dir / "otoc.csv").string());
  if (cfg.plot) write_svg_plot(series, (dir / "otoc.svg").string(), false);
  if (have_residual) summary["max_sector_residual"] = worst_residual;
  return 0;
}

int run_page(const RunConfig& cfg, const fs::path& dir, ordered_json& summary) {
  const auto mc = page_purity_mc(cfg.page_n_a, cfg.page_n_b, cfg.page_q,
                                 cfg.mc_realizations, cfg.ensemble.seed);
  summary["analytic"] = page_purity_analytic(cfg.page_n_a, cfg.page_n_b, cfg.page_q);
  summary["mc.value"] = mc.purity.value;
  summary["mc.std_error"] = mc.purity.std_error;
  summary["mc.n"] = mc.purity.n;
  summary["one_norm_bound"] = mc.one_norm_bound;
  (void)dir;
  return 0;
}

ordered_json hp_report(const HpConfig& hp) {
  ordered_json j;
  const auto pur = hp_purities(hp);
  j["purity_AC"] = pur.purity_AC;
  j["purity_C_over_dA"] = pur.purity_C_over_dA;
  j["purity_A"] = 1.0 / static_cast<double>(hp.code_dim());
  j["cmi2"] = hp_cmi2(hp);
  j["margin"] = decoupling_margin(hp);
  j["ek_bound"] = eastin_knill_bound(hp.m_A, hp.n_C + hp.n_D);
  const auto ek = ek_consistency_check(hp);
  j["ek_lhs"] = ek.lhs;
  j["ek_satisfied"] = ek.satisfied;
  return j;
}

int run_hp(const RunConfig& cfg, const fs::path& dir, ordered_json& summary) {
  summary = hp_report(cfg.hp);
  if (cfg.hp_with_mc) {
    const auto mc = hp_mc(cfg.hp, cfg.mc_realizations, cfg.ensemble.seed);
    summary["mc.purity_AC"] = mc.purity_AC.value;
    summary["mc.purity_AC_std_error"] = mc.purity_AC.std_error;
    summary["mc.purity_C"] = mc.purity_C.value;
    summary["mc.purity_C_std_error"] = mc.purity_C.std_error;
    summary["mc.cmi2"] = mc.cmi2;
    summary["mc.cmi2_std_error"] = mc.cmi2_std_error;
  }
  (void)dir;
  return 0;
}

int run_hp_scan(const RunConfig& cfg, const fs::path& dir, ordered_json&) {
  // scan the C/D split at fixed total size and charges
  std::ofstream out(dir / "hp_scan.csv");
  out << "n_c,n_d,margin,cmi2,ek_lhs,ek_satisfied\n";
  const int total = cfg.hp.n_C + cfg.hp.n_D;
  for (int nd = 1; nd < total; ++nd) {
    HpConfig hp = cfg.hp;
    hp.n_D = nd;
    hp.n_C = total - nd;
    const auto ek = ek_consistency_check(hp);
    out << hp.n_C << ',' << hp.n_D << ',' << fmt17(decoupling_margin(hp)) << ','
        << fmt17(hp_cmi2(hp)) << ',' << fmt17(ek.lhs) << ',' << (ek.satisfied ? 1 : 0)
        << '\n';
  }
  return 0;
}

int run_kl(const RunConfig& cfg, const fs::path& dir, ordered_json& summary) {
  KlStatistics stats;
  if (cfg.kl_case == "haar") {
    const auto Pa = pauli_matrix(PauliString(cfg.kl_op_a));
    const auto Pb = pauli_matrix(PauliString(cfg.kl_op_b));
    if (Pa.rows() != cfg.kl_dimension)
      throw std::domain_error("kl: pauli strings must match kl.dimension");
    const Eigen::MatrixXcd O = Pa.adjoint() * Pb;
    stats = kl_statistics_haar(cfg.kl_dimension, O, cfg.kl_codeword_a, cfg.kl_codeword_b,
                               cfg.mc_realizations, cfg.ensemble.seed);
  } else {
    const auto Pa = pauli_matrix(PauliString(cfg.kl_op_a));
    const auto Pb = pauli_matrix(PauliString(cfg.kl_op_b));
    const Eigen::MatrixXcd O = Pa.adjoint() * Pb;
    auto basis = build_charge_basis(cfg.kl_qubits);
    const auto& states = basis->sector_states.at(cfg.kl_charge);
    stats = kl_statistics_u1(cfg.kl_qubits, cfg.kl_charge, O,
                             states.at(cfg.kl_codeword_a), states.at(cfg.kl_codeword_b),
                             cfg.mc_realizations, cfg.ensemble.seed);
  }
  summary["mean.re"] = stats.mean.real();
  summary["mean.im"] = stats.mean.imag();
  summary["mean.std_error"] = stats.mean_std_error;
  summary["variance"] = stats.variance;
  summary["variance.std_error"] = stats.variance_std_error;
  summary["analytic.mean.re"] = stats.analytic.mean.real();
  summary["analytic.variance_paper"] = stats.analytic.variance_paper;
  summary["analytic.variance_exact"] = stats.analytic.variance_exact;
  (void)dir;
  return 0;
}

int run_ek_scan(const RunConfig& cfg, const fs::path& dir, ordered_json&) {
  std::ofstream out(dir / "ek_scan.csv");
  out << "n_a,n_b,n_c,n_d,m_a,m_b,lhs,rhs,satisfied\n";
  for (int na = 1; na <= 3; ++na)
    for (int nd = 4; nd <= 10; ++nd) {
      HpConfig hp;
      hp.n_A = na;
      hp.n_D = nd;
      hp.n_C = nd + 2;
      hp.n_B = hp.n_C + hp.n_D - na;
      hp.m_A = std::min(1, na);
      hp.m_B = nd - hp.m_A;
      const auto ek = ek_consistency_check(hp);
      out << na << ',' << hp.n_B << ',' << hp.n_C << ',' << nd << ',' << hp.m_A << ','
          << hp.m_B << ',' << fmt17(ek.lhs) << ',' << fmt17(ek.rhs) << ','
          << (ek.satisfied ? 1 : 0) << '\n';
    }
  (void)cfg;
  return 0;
}

int run_moment(const RunConfig& cfg, const fs::path& dir, ordered_json& summary) {
  // pattern "1,2,1,2" means X1 U Y1 U^dag X2 U Y2 U^dag ...
  WiringSpec w;
  MomentWord word;
  word.traced = cfg.moment_traced;
  int op_id = 0;
  std::vector<std::string> names;
  std::stringstream ss(cfg.moment_pattern);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    word.letters.push_back({LetterKind::Op, op_id, 0});
    names.push_back((op_id % 2 == 0 ? "X" : "Y") + std::to_string(op_id / 2 + 1));
    ++op_id;
    if (tok == "1")
      word.letters.push_back({LetterKind::U, -1, 0});
    else if (tok == "2")
      word.letters.push_back({LetterKind::Udag, -1, 0});
    else
      throw std::domain_error("moment.pattern entries must be 1 or 2");
  }
  w.words.push_back(word);
  const auto result = haar_moment(w);
  const std::string rendered = moment_to_string(result, names);
  std::ofstream out(dir / "moment.txt");
  out << rendered << "\n";
  std::printf("%s\n", rendered.c_str());
  summary["expression"] = rendered;
  if (cfg.moment_dim > 0) {
    // numeric sanity column: evaluate each coefficient at the given dimension
    ordered_json coeffs;
    for (const auto& [mono, rat] : result)
      coeffs[mono.str(names)] = rat.eval(cfg.moment_dim);
    summary["coefficients_at_dim"] = coeffs;
  }
  return 0;
}

}  // namespace

int run_experiment(const RunConfig& cfg) {
  const auto diagnostics = validate_config(cfg);
  if (!diagnostics.empty()) {
    for (const auto& d : diagnostics)
      std::fprintf(stderr, "config error: %s: %s\n", d.field.c_str(),
                   d.message.c_str());
    return 2;
  }
  try {
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    write_manifest(cfg, (dir / "manifest.json").string());
    ordered_json summary;
    int rc = 0;
    if (cfg.experiment == "dos") rc = run_dos(cfg, dir, summary);
    else if (cfg.experiment == "sff") rc = run_sff(cfg, dir, summary);
    else if (cfg.experiment == "sff-sectors") rc = run_sff_sectors(cfg, dir, summary);
    else if (cfg.experiment == "r2-check") rc = run_r2_check(cfg, dir, summary);
    else if (cfg.experiment == "r4-check") rc = run_r4_check(cfg, dir, summary);
    else if (cfg.experiment == "fp") rc = run_fp(cfg, dir, summary);
    else if (cfg.experiment == "fp-analytic") rc = run_fp_analytic(cfg, dir, summary);
    else if (cfg.experiment == "kinv") rc = run_kinv(cfg, dir, summary);
    else if (cfg.experiment == "otoc") rc = run_otoc(cfg, dir, summary);
    else if (cfg.experiment == "page") rc = run_page(cfg, dir, summary);
    else if (cfg.experiment == "hp") rc = run_hp(cfg, dir, summary);
    else if (cfg.experiment == "hp-scan") rc = run_hp_scan(cfg, dir, summary);
    else if (cfg.experiment == "kl") rc = run_kl(cfg, dir, summary);
    else if (cfg.experiment == "ek-scan") rc = run_ek_scan(cfg, dir, summary);
    else if (cfg.experiment == "moment") rc = run_moment(cfg, dir, summary);
    if (rc == 0) {
      std::ofstream out(dir / "summary.json");
      out << summary.dump(2) << "\n";
    }
    return rc;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
}

}  // namespace u1chaos
