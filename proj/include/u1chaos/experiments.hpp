#pragma once

#include <string>
#include <vector>

#include "u1chaos/chaos.hpp"
#include "u1chaos/decoupling.hpp"
#include "u1chaos/ensembles.hpp"

namespace u1chaos {

struct Diagnostic {
  std::string field;
  std::string message;
};

// Flat experiment configuration; every field maps to one key in the config
// file and the manifest.
struct RunConfig {
  std::string experiment = "sff";
  EnsembleSpec ensemble;
  TimeGrid grid;
  std::string output_dir = "out";
  bool plot = false;
  int threads = 0;       // 0 = hardware
  bool use_cache = true;
  bool large = false;    // paper-parity realization counts

  int sector = -1;       // -1 = whole spectrum scope
  int dos_bins = 60;
  std::string sff_kind = "R2";
  int fp_order = 1;
  int kinv_rounds = 1;
  std::string otoc_a = "ZI";
  std::string otoc_b = "IZ";

  int page_n_a = 2, page_n_b = 4, page_q = 3;
  int mc_realizations = 1000;

  HpConfig hp;
  bool hp_with_mc = false;

  std::string kl_case = "haar";  // haar | u1
  int kl_dimension = 16;
  int kl_qubits = 5;
  int kl_charge = 2;
  std::string kl_op_a = "XZII";  // Pauli pair O = P_a^+ P_b (haar case)
  std::string kl_op_b = "XZIZ";
  int kl_codeword_a = 0, kl_codeword_b = 0;

  std::string moment_pattern = "1,2,1,2";
  bool moment_traced = false;
  int moment_dim = 0;  // 0 = symbolic only
};

// Empty list iff run() would accept the configuration.
std::vector<Diagnostic> validate_config(const RunConfig& cfg);

// Runs the experiment, writing manifest.json plus per-experiment CSV/JSON
// artifacts under cfg.output_dir. Returns the process exit status
// (0 success, 2 invalid configuration, 3 numerical failure).
int run_experiment(const RunConfig& cfg);

// flat key=value assignment; unknown keys throw std::domain_error
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
RunConfig config_from_file(const std::string& path);
RunConfig config_from_manifest(const std::string& path);
void write_manifest(const RunConfig& cfg, const std::string& path);

// CSV emission (17 significant digits; byte-stable)
void write_series_csv(const ObservableSeries& s, const std::string& path);
void write_histogram_csv(const Histogram& h, const std::string& path);

}  // namespace u1chaos
