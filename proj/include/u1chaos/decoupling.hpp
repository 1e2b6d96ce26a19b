#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

#include "u1chaos/hilbert.hpp"
#include "u1chaos/symbolic.hpp"

namespace u1chaos {

struct DegenerateSectorError : std::domain_error {
  using std::domain_error::domain_error;
};

// G(n_A, n_B, q) = sum_f C(n_A, f) C(n_B, q-f)^2 over the admissible f range.
std::int64_t g_function(int n_A, int n_B, int q);
BigInt g_function_exact(int n_A, int n_B, int q);

// (G(n_A,n_B,q) + G(n_B,n_A,q)) / (d_q (d_q + 1)), the sector-Haar average of
// Tr rho_A^2 for a fixed-charge initial state. `two_term_assembly` evaluates
// the identity+swap Weingarten form instead; the two agree identically.
double page_purity_analytic(int n_A, int n_B, int q, bool two_term_assembly = false);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long n = 0;
};

struct PagePurityMc {
  McEstimate purity;
  double one_norm_bound = 0.0;  // d_A * purity - 1
};

// Exact per-realization reduced purity, averaged over sampled block-Haar
// unitaries applied to a charge-q product basis state.
PagePurityMc page_purity_mc(int n_A, int n_B, int q, int realizations,
                            std::uint64_t seed);
// Full-Haar baseline (no symmetry).
PagePurityMc page_purity_mc_haar(int n_A, int n_B, int realizations, std::uint64_t seed);

struct HpConfig {
  int n_A = 1, n_B = 5;
  int n_C = 3, n_D = 3;
  int m_A = 1, m_B = 2;

  int total_qubits() const { return n_A + n_B; }
  int total_charge() const { return m_A + m_B; }
  std::int64_t code_dim() const { return binomial(n_A, m_A); }   // d~_A
  std::int64_t bath_dim() const { return binomial(n_B, m_B); }   // d~_B
  std::int64_t sector_dim() const { return binomial(n_C + n_D, total_charge()); }
  void validate() const;  // throws std::domain_error
};

struct HpPurities {
  double purity_AC = 0.0;
  double purity_C_over_dA = 0.0;
};

HpPurities hp_purities(const HpConfig& cfg);
// No-symmetry baseline purities 1/(dA dC) + 1/(dB dD) and its rho_C companion.
HpPurities hp_purities_haar(int n_A, int n_B, int n_C, int n_D);

// -log2(1 - margin) in bits; returns +infinity (saturated sentinel) when the
// ratio reaches 1.
double hp_cmi2(const HpConfig& cfg);
double hp_cmi2_haar(int n_A, int n_B, int n_C, int n_D);  // §the no-symmetry baseline

// d~_A G(n_D, n_C, m) / (d~_B G(n_C, n_D, m))
double decoupling_margin(const HpConfig& cfg);

struct SmallChargeProfile {
  double exact_lhs = 0.0;        // G(n_C,n_D,2)/d~_A
  double exact_rhs = 0.0;        // G(n_D,n_C,2)/d~_B
  double asymptotic_lhs = 0.0;   // n_D^4 / (4 n_A)
  double asymptotic_rhs = 0.0;   // n_C^4 / (4 n_B)
};
// m = 2, m_A = m_B = 1 closed forms.
SmallChargeProfile small_charge_profile(int n_A, int n_B, int n_C, int n_D);

double eastin_knill_bound(int m_A, int D);

struct EkConsistency {
  double lhs = 0.0;  // m_A^2 / (4 D^2), D = n_C + n_D
  double rhs = 0.0;  // decoupling margin
  bool satisfied = false;
};
EkConsistency ek_consistency_check(const HpConfig& cfg);

// --- Knill-Laflamme statistics -------------------------------------------------

struct KlAnalytic {
  std::complex<double> mean{0.0, 0.0};
  double variance_paper = 0.0;  // -|<O>|^2 delta/(L+1) + <OO+>/(L+1)
  double variance_exact = 0.0;  // (<OO+> - |<O>|^2)(delta/(L+1) + (1-delta) L/(L^2-1))
};

struct KlStatistics {
  std::complex<double> mean{0.0, 0.0};
  double mean_std_error = 0.0;
  double variance = 0.0;
  double variance_std_error = 0.0;
  KlAnalytic analytic;
  long n = 0;
};

// Haar encoding of computational codewords a, b in dimension L.
KlStatistics kl_statistics_haar(int L, const Eigen::MatrixXcd& O, int a, int b,
                                int realizations, std::uint64_t seed);
// Block-Haar encoding; codewords are global basis states, both of charge m.
KlStatistics kl_statistics_u1(int D, int m, const Eigen::MatrixXcd& O,
                              std::int64_t codeword_a, std::int64_t codeword_b,
                              int realizations, std::uint64_t seed);

// --- exact-state Hayden-Preskill Monte Carlo ------------------------------------

struct HpMc {
  McEstimate purity_AC;
  McEstimate purity_C;
  double purity_Abar = 0.0;  // exactly 1/d~_A by construction
  double cmi2 = 0.0;
  double cmi2_std_error = 0.0;
};

// Builds the charged Hayden-Preskill state exactly (maximally entangled pairs
// on the fixed-charge subspaces of A and B) and measures purities per sampled
// sector unitary.
HpMc hp_mc(const HpConfig& cfg, int realizations, std::uint64_t seed);

// Full-Haar Hayden-Preskill baseline with ordinary Bell pairs.
HpMc hp_mc_haar(int n_A, int n_B, int n_C, int n_D, int realizations,
                std::uint64_t seed);

}  // namespace u1chaos
