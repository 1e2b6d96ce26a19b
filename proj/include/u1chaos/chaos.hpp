#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "u1chaos/ensembles.hpp"

namespace u1chaos {

struct TimeGrid {
  double t_min = 0.1;
  double t_max = 100.0;
  int points = 64;
  bool log_spacing = true;

  void validate() const;
  std::vector<double> times() const;
};

struct ObservableSeries {
  std::string label;
  std::vector<double> times;
  std::vector<double> values;      // NaN marks a masked (statistically undefined) point
  std::vector<double> std_errors;
  long realizations = 0;
};

struct Histogram {
  std::vector<double> edges;          // bins+1
  std::vector<std::int64_t> counts;   // bins
  std::int64_t total = 0;
  double density(int bin) const;
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::complex<double> complex_value{0.0, 0.0};
  long n = 0;
};

struct Scope {
  bool whole = true;
  int sector = -1;
  static Scope Whole() { return {true, -1}; }
  static Scope Sector(int q) { return {false, q}; }
};

enum class FormFactorKind { R2, R21, R22, R3, R31, R4, P2, P21, P22, P3, P31, P4 };
std::string form_factor_name(FormFactorKind k);
FormFactorKind form_factor_from_name(const std::string& name);

// Tr(U) and Tr(U^2) per (realization, sector): everything the form-factor
// family needs after one spectral pass.
struct TraceSamples {
  std::vector<std::int64_t> dims;
  std::vector<std::vector<std::complex<double>>> t1;  // [realization][sector]
  std::vector<std::vector<std::complex<double>>> t2;
  int realizations() const { return static_cast<int>(t1.size()); }
  int sectors() const { return static_cast<int>(dims.size()); }
  std::int64_t total_dim() const;
};

TraceSamples traces_at(const SpectralEnsemble& se, double t);
TraceSamples traces_of(const UnitarySet& us);

struct NoDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Realization average of the trace monomial selected by `kind`; complex kinds
// report the real part as `value` with the full mean in `complex_value`.
Estimate form_factor(const TraceSamples& ts, FormFactorKind kind, Scope scope);
// |Tr U|^{2k} for generic order k.
Estimate form_factor_r2k(const TraceSamples& ts, int k, Scope scope);
ObservableSeries form_factor_series(const SpectralEnsemble& se, FormFactorKind kind,
                                    const TimeGrid& grid, Scope scope);

// --- sector-decomposition identities ----------------------------------------

// |LHS - RHS| / LHS with RHS the sector decomposition built from per-sector
// form factors. `std_errors` hold the combined standard error divided by LHS,
// so `value < 3 * std_error` is the decoupled-consistency band. Points with
// LHS below 10 of its own standard errors are masked (value = NaN).
ObservableSeries r2_decomposition_check(const SpectralEnsemble& se, const TimeGrid& grid);

struct R4Check {
  ObservableSeries rel_error;       // against the cycle-sum representation
  double max_representation_gap = 0.0;  // cycle-sum vs diagonal-split, relative
};
R4Check r4_decomposition_check(const SpectralEnsemble& se, const TimeGrid& grid);

// Partition-sum RHS at a single time point; k = 1 or 2.
double general_r2k_partition(const TraceSamples& ts, int k);

// Analytic frame-potential prediction assembled from per-sector form factors.
ObservableSeries f1_analytic(const SpectralEnsemble& se, const TimeGrid& grid);

// --- frame potential and k-invariance ---------------------------------------

// Pair-average of |Tr(U V^+)|^{2k} over distinct realizations (diagonal
// excluded); the standard error is a delete-one-realization jackknife.
Estimate frame_potential(const UnitarySet& us, int k);
Estimate frame_potential_at(const EigenEnsemble& ee, double t, int k);

// Direct F^(k)(t) series (pairwise Gram per time point).
ObservableSeries fp_direct_series(const EigenEnsemble& ee, const TimeGrid& grid,
                                  int k = 1, int threads = 0);

// I^(k) = F_E - F_{conjugated E}; each realization is conjugated by `rounds`
// fresh full-dimension Haar unitaries per round (lane-keyed substreams).
Estimate k_invariance(const UnitarySet& us, int k, int rounds, std::uint64_t seed);
Estimate k_invariance_at(const EigenEnsemble& ee, double t, int k, int rounds,
                         std::uint64_t seed);

// --- OTOCs -------------------------------------------------------------------

struct OtocResult {
  Estimate est;
  // max over realizations of |whole-space value - d_p/L weighted sector sum|;
  // set only when all operators are block diagonal and scope is whole
  std::optional<double> max_sector_residual;
};

// ops = {A1, B1} or {A1, B1, A2, B2}, dense on the full space; the estimator
// averages (1/L) Tr(A1 U^+ B1 U ...) over realizations.
OtocResult otoc(const UnitarySet& us, const std::vector<Eigen::MatrixXcd>& ops,
                Scope scope);
OtocResult otoc_at(const EigenEnsemble& ee, double t,
                   const std::vector<Eigen::MatrixXcd>& ops, Scope scope);

struct OtocApprox {
  ObservableSeries approx;  // sector form-factor approximation
  ObservableSeries direct;  // companion direct series from the same realizations
};
// Operators must be block diagonal; k <= 2.
OtocApprox otoc_kinv_approx(const EigenEnsemble& ee,
                            const std::vector<Eigen::MatrixXcd>& ops, int k,
                            const TimeGrid& grid);

// --- density of states --------------------------------------------------------

// Pooled histogram; shift_to_ground subtracts each realization's ground energy
// of the chosen scope before pooling.
Histogram density_of_states(const SpectralEnsemble& se, int bins, Scope scope,
                            bool shift_to_ground);

// Low-energy exponent: least-squares slope of log density vs log E on a
// linear-bin histogram of the first `decile` of the pooled shifted energies.
double dos_edge_exponent(const SpectralEnsemble& se, Scope scope, double decile = 0.10,
                         int bins = 12);

}  // namespace u1chaos
