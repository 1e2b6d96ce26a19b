#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "u1chaos/hilbert.hpp"
#include "u1chaos/rng.hpp"

namespace u1chaos {

enum class EnsembleKind { haar, u1_haar, gue_per_sector, csyk };

std::string kind_name(EnsembleKind k);
EnsembleKind kind_from_name(const std::string& name);

// For haar, `size` is the Hilbert-space dimension; for the block ensembles it
// is the qubit count D (csyk: one qubit per Dirac fermion, D = N).
struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::csyk;
  int size = 8;
  double coupling = 1.0;  // csyk J
  double scale = 1.0;     // gue spectral half-radius / 2
  std::uint64_t seed = 1;
  int realizations = 1;

  void validate() const;  // throws std::domain_error
  std::uint64_t content_hash() const;
  std::string canonical_string() const;
};

// --- samplers ---------------------------------------------------------------

// Ginibre + QR with the R-diagonal phase fix; exactly Haar.
Eigen::MatrixXcd sample_haar_unitary(int d, RandomStream& rng);

// Independent Haar block per sector; block q uses substream lane q.
BlockMatrix sample_u1_haar(ChargeBasisPtr basis, std::uint64_t seed,
                           std::uint64_t realization);

// Independent GUE block per sector; entry variance scale^2/d_q puts the
// spectral radius at ~2*scale in every sector.
BlockMatrix sample_gue_blocks(ChargeBasisPtr basis, std::uint64_t seed,
                              std::uint64_t realization, double scale);

// --- complex SYK -------------------------------------------------------------

// Couplings J_{ijkl}, i,j,k,l in [0, N): antisymmetric in (i,j) and (k,l),
// J_{ijkl} = conj(J_{klij}), independent entries drawn on the canonical set
// i<j, k<l, (i,j) <= (k,l) with <|J|^2> = 4 J^2 / N^3.
struct SykCouplings {
  int n_fermions = 0;
  double coupling = 1.0;
  std::vector<std::complex<double>> tensor;  // dense N^4, all constraints filled

  std::complex<double> at(int i, int j, int k, int l) const {
    const int n = n_fermions;
    return tensor[((static_cast<std::size_t>(i) * n + j) * n + k) * n + l];
  }
  double max_constraint_violation() const;  // exact-zero check helper
};

SykCouplings sample_syk_couplings(int N, double J, RandomStream& rng);

// H = sum_{ijkl} J_{ijkl} f_i^+ f_j^+ f_k f_l under Jordan-Wigner with qubit 1
// leftmost and f_i^+ f_i = (1 + Z_i)/2; massless. Built sector-by-sector; the
// construction conserves charge exactly.
BlockMatrix build_syk_hamiltonian(const SykCouplings& c);

// Block-wise exp(i t H) by eigendecomposition (paper sign convention: +i).
BlockMatrix evolve(const BlockMatrix& h, double t);

// --- realized ensembles ------------------------------------------------------

struct SectorEigensystem {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXcd vectors; // columns; empty when only values were requested
};

// Eigenvalues per (realization, sector); the raw material for form factors.
struct SpectralEnsemble {
  ChargeBasisPtr basis;  // null for kind=haar (single block)
  std::vector<std::int64_t> dims;
  std::vector<std::vector<Eigen::VectorXd>> eigenvalues;  // [realization][sector]
  EnsembleSpec spec;

  int realizations() const { return static_cast<int>(eigenvalues.size()); }
  int sectors() const { return static_cast<int>(dims.size()); }
  std::int64_t total_dim() const;
};

// Eigenpairs per (realization, sector); supports time evolution.
struct EigenEnsemble {
  ChargeBasisPtr basis;
  std::vector<std::int64_t> dims;
  std::vector<std::vector<SectorEigensystem>> realizations;
  EnsembleSpec spec;

  int count() const { return static_cast<int>(realizations.size()); }
  // blocks of exp(i t H_r)
  std::vector<Eigen::MatrixXcd> unitary_at(int realization, double t) const;
  SpectralEnsemble spectra() const;
};

// Sampled unitary ensembles (haar / u1_haar) at a fixed "time".
struct UnitarySet {
  ChargeBasisPtr basis;  // null for haar
  std::vector<std::int64_t> dims;
  std::vector<std::vector<Eigen::MatrixXcd>> samples;  // [realization][sector]
  int count() const { return static_cast<int>(samples.size()); }
};

// Hamiltonian kinds only (gue_per_sector, csyk).
SpectralEnsemble spectral_ensemble(const EnsembleSpec& spec, int threads = 0);
EigenEnsemble eigen_ensemble(const EnsembleSpec& spec, int threads = 0);

// haar / u1_haar kinds only.
UnitarySet sample_unitary_set(const EnsembleSpec& spec, int threads = 0);

// --- spectra cache -----------------------------------------------------------

void save_spectra_csv(const SpectralEnsemble& se, const std::string& path);
// Throws std::runtime_error if the file's content hash does not match `spec`.
SpectralEnsemble load_spectra_csv(const std::string& path, const EnsembleSpec& spec);

}  // namespace u1chaos
