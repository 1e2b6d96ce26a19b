#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace u1chaos {

// Exact binomial coefficient in checked 64-bit arithmetic (Pascal recurrence).
std::int64_t binomial(int n, int k);

// d_q = C(D, q); throws std::domain_error for q outside [0, D].
std::int64_t sector_dim(int D, int q);

// Charge-sector structure of a D-qubit space under Q = sum_i (1+Z_i)/2.
// Convention: global basis index b has qubit 1 as the leftmost (most
// significant) bit, a set bit means Z = +1, and charge(b) = popcount(b).
// Intra-sector ordering is ascending global index.
struct ChargeBasis {
  int qubits = 0;
  std::vector<std::int64_t> sector_dims;                // size D+1
  std::vector<int> charge_of;                           // size 2^D
  std::vector<std::int64_t> index_in_sector;            // size 2^D
  std::vector<std::vector<std::int64_t>> sector_states; // per sector, ascending

  std::int64_t dim() const { return std::int64_t(1) << qubits; }
  int sectors() const { return qubits + 1; }

  std::pair<int, std::int64_t> to_sector(std::int64_t global) const {
    return {charge_of[static_cast<std::size_t>(global)],
            index_in_sector[static_cast<std::size_t>(global)]};
  }
  std::int64_t to_global(int q, std::int64_t i) const {
    return sector_states[static_cast<std::size_t>(q)][static_cast<std::size_t>(i)];
  }
};

using ChargeBasisPtr = std::shared_ptr<const ChargeBasis>;

// 1 <= D <= 20 (memory guard); throws std::domain_error otherwise.
ChargeBasisPtr build_charge_basis(int D);

enum class MatrixFlavor { unitary, hermitian, general };

struct NotBlockDiagonalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Block-diagonal operator, one dense block per charge sector.
struct BlockMatrix {
  ChargeBasisPtr basis;
  std::vector<Eigen::MatrixXcd> blocks;
  MatrixFlavor flavor = MatrixFlavor::general;

  // max-norm violation of the flavor contract (unitarity / hermiticity)
  double flavor_violation() const;
  void check_flavor() const;  // throws std::runtime_error beyond tolerance
};

BlockMatrix identity_blocks(ChargeBasisPtr basis);

// Places blocks by sector_to_global; zeros elsewhere.
Eigen::MatrixXcd embed_blocks(const BlockMatrix& m);

// Inverse of embed_blocks. Off-block mass above tol throws NotBlockDiagonalError
// (this is the [H,Q] = 0 check).
BlockMatrix extract_blocks(const Eigen::MatrixXcd& M, ChargeBasisPtr basis,
                           MatrixFlavor flavor = MatrixFlavor::general,
                           double tol = 1e-10);

// Pauli chain over {I, X, Y, Z}; letter 0 acts on qubit 1 (leftmost).
struct PauliString {
  std::string letters;
  explicit PauliString(std::string s);
  int size() const { return static_cast<int>(letters.size()); }
};

// (number of Z letters, number of I letters)
std::pair<int, int> pauli_charge_profile(const PauliString& p);

// Dense 2^D matrix in the basis convention above (Z_i = +1 on set bits).
Eigen::MatrixXcd pauli_matrix(const PauliString& p);

}  // namespace u1chaos
