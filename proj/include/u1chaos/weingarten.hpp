#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "u1chaos/symbolic.hpp"

namespace u1chaos {

struct UnsupportedOrderError : std::domain_error {
  using std::domain_error::domain_error;
};

// Weingarten function of the unitary group for a permutation of the given
// cycle type, as an exact rational in the dimension symbol. Supported for
// moment order p = |cycle_type| <= 4; the table is produced once per p by
// solving the class-algebra Gram system exactly.
SymbolicRational wg_unitary(const std::vector<int>& cycle_type);
double wg_unitary_at(const std::vector<int>& cycle_type, std::int64_t L);

// COE Weingarten constants as listed in the source material (p <= 2).
SymbolicRational wg_coe(const std::vector<int>& cycle_type);

// Number of permutations of {1..k} whose longest increasing subsequence has
// length <= L; equals the Haar form factor R_{2k}(L). k <= 8.
std::int64_t lis_count(int k, int L);

// ---------------------------------------------------------------------------
// Symbolic Haar-moment engine (RTNI-style).
//
// A moment is a product of words; each word is a (traced or open) product of
// letters: U, U^dag, or a formal operator symbol. Example:
//   int dU X1 U Y1 U^dag X2 U Y2 U^dag
// is one open word [X1, U, Y1, Udag, X2, U, Y2, Udag]. The engine returns the
// expectation as exact rational coefficients on trace monomials of the
// inserted symbols.

enum class LetterKind { U, Udag, Op };

struct MomentLetter {
  LetterKind kind;
  int op_id = -1;   // for Op letters; ids are assigned by the caller
  int sector = 0;   // used by u1_haar_moment (independent block per sector)
};

struct MomentWord {
  bool traced = true;
  std::vector<MomentLetter> letters;
};

struct WiringSpec {
  std::vector<MomentWord> words;
  int count_u() const;
  int count_udag() const;
};

// Canonical trace-monomial in the inserted symbols: a multiset of cyclic
// op-id sequences plus (for an untraced moment) one open chain.
struct TraceMonomial {
  std::vector<std::vector<int>> traces;
  std::optional<std::vector<int>> open;
  bool operator<(const TraceMonomial& o) const;
  bool operator==(const TraceMonomial& o) const;
  std::string str(const std::vector<std::string>& names) const;
};

using MomentResult = std::map<TraceMonomial, SymbolicRational>;

// Haar moment over a single unitary of formal dimension L. Unbalanced U/Udag
// counts give the zero polynomial (empty map). Throws UnsupportedOrderError
// for p > 4.
MomentResult haar_moment(const WiringSpec& w);

// Product of independent per-sector rationals (sector id -> factor).
struct SectorRational {
  std::map<int, SymbolicRational> factors;
  double eval(const std::vector<std::int64_t>& sector_dims) const;
  std::string str() const;
};

using U1MomentResult = std::map<TraceMonomial, SectorRational>;

// Block-Haar moment: every word must live in a single sector; the moment
// factorizes across sectors and vanishes if any sector is unbalanced.
// p <= 2 per sector.
U1MomentResult u1_haar_moment(const WiringSpec& w);

// --- numeric evaluation against concrete operators --------------------------

// Fully traced moment: ops[id] substitutes symbol id (all on one space of
// dimension `dim`).
std::complex<double> evaluate_traced(const MomentResult& r,
                                     const std::vector<Eigen::MatrixXcd>& ops,
                                     std::int64_t dim);

// Untraced moment: returns the matrix-valued expectation. Monomials without
// an open chain count as multiples of the identity.
Eigen::MatrixXcd evaluate_open(const MomentResult& r,
                               const std::vector<Eigen::MatrixXcd>& ops,
                               std::int64_t dim);

std::complex<double> evaluate_traced_u1(const U1MomentResult& r,
                                        const std::vector<Eigen::MatrixXcd>& ops,
                                        const std::vector<std::int64_t>& sector_dims);

// Rendering of a full result, e.g. "(1/L) Tr[X1] Tr[X2] + ...".
std::string moment_to_string(const MomentResult& r, const std::vector<std::string>& names);
std::string moment_to_string(const U1MomentResult& r, const std::vector<std::string>& names);

}  // namespace u1chaos
