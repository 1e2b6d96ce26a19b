#include "u1chaos/hilbert.hpp"

#include <bit>
#include <limits>

namespace u1chaos {

std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) throw std::domain_error("binomial: k out of range");
  if (k > n - k) k = n - k;
  std::int64_t acc = 1;
  for (int i = 1; i <= k; ++i) {
    // acc * (n - k + i) stays exact for the sizes this library touches;
    // guard anyway so misuse is an error, not silent wraparound.
    const std::int64_t num = n - k + i;
    if (acc > std::numeric_limits<std::int64_t>::max() / num)
      throw std::overflow_error("binomial: 64-bit overflow");
    acc = acc * num / i;
  }
  return acc;
}

std::int64_t sector_dim(int D, int q) {
  if (D < 0 || q < 0 || q > D) throw std::domain_error("sector_dim: q out of range");
  return binomial(D, q);
}

ChargeBasisPtr build_charge_basis(int D) {
  if (D < 1 || D > 20) throw std::domain_error("build_charge_basis: D must be in [1,20]");
  auto basis = std::make_shared<ChargeBasis>();
  basis->qubits = D;
  basis->sector_dims.resize(D + 1);
  for (int q = 0; q <= D; ++q) basis->sector_dims[q] = sector_dim(D, q);
  const std::int64_t dim = std::int64_t(1) << D;
  basis->charge_of.resize(dim);
  basis->index_in_sector.resize(dim);
  basis->sector_states.assign(D + 1, {});
  for (int q = 0; q <= D; ++q)
    basis->sector_states[q].reserve(static_cast<std::size_t>(basis->sector_dims[q]));
  for (std::int64_t b = 0; b < dim; ++b) {
    const int q = std::popcount(static_cast<std::uint64_t>(b));
    basis->charge_of[b] = q;
    basis->index_in_sector[b] = static_cast<std::int64_t>(basis->sector_states[q].size());
    basis->sector_states[q].push_back(b);
  }
  return basis;
}

double BlockMatrix::flavor_violation() const {
  double worst = 0.0;
  for (const auto& b : blocks) {
    if (b.rows() == 0) continue;
    if (flavor == MatrixFlavor::unitary) {
      const Eigen::MatrixXcd r =
          b * b.adjoint() - Eigen::MatrixXcd::Identity(b.rows(), b.cols());
      worst = std::max(worst, r.cwiseAbs().maxCoeff());
    } else if (flavor == MatrixFlavor::hermitian) {
      const Eigen::MatrixXcd r = b - b.adjoint();
      worst = std::max(worst, r.cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

void BlockMatrix::check_flavor() const {
  const double v = flavor_violation();
  if (flavor == MatrixFlavor::unitary && v > 1e-10)
    throw std::runtime_error("BlockMatrix: unitarity violated: " + std::to_string(v));
  if (flavor == MatrixFlavor::hermitian && v > 1e-12)
    throw std::runtime_error("BlockMatrix: hermiticity violated: " + std::to_string(v));
}

BlockMatrix identity_blocks(ChargeBasisPtr basis) {
  BlockMatrix m;
  m.basis = std::move(basis);
  m.flavor = MatrixFlavor::unitary;
  for (int q = 0; q < m.basis->sectors(); ++q) {
    const auto d = m.basis->sector_dims[q];
    m.blocks.push_back(Eigen::MatrixXcd::Identity(d, d));
  }
  return m;
}

Eigen::MatrixXcd embed_blocks(const BlockMatrix& m) {
  const auto& basis = *m.basis;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(basis.dim(), basis.dim());
  for (int q = 0; q < basis.sectors(); ++q) {
    const auto& states = basis.sector_states[q];
    const auto& blk = m.blocks[q];
    for (Eigen::Index i = 0; i < blk.rows(); ++i)
      for (Eigen::Index j = 0; j < blk.cols(); ++j)
        out(states[i], states[j]) = blk(i, j);
  }
  return out;
}

BlockMatrix extract_blocks(const Eigen::MatrixXcd& M, ChargeBasisPtr basis,
                           MatrixFlavor flavor, double tol) {
  const auto& b = *basis;
  if (M.rows() != b.dim() || M.cols() != b.dim())
    throw std::domain_error("extract_blocks: dimension mismatch");
  double off = 0.0;
  for (Eigen::Index r = 0; r < M.rows(); ++r)
    for (Eigen::Index c = 0; c < M.cols(); ++c)
      if (b.charge_of[r] != b.charge_of[c]) off = std::max(off, std::abs(M(r, c)));
  if (off > tol)
    throw NotBlockDiagonalError("extract_blocks: off-block mass " + std::to_string(off) +
                                " exceeds tolerance");
  BlockMatrix out;
  out.basis = std::move(basis);
  out.flavor = flavor;
  out.blocks.reserve(b.sectors());
  for (int q = 0; q < b.sectors(); ++q) {
    const auto& states = b.sector_states[q];
    Eigen::MatrixXcd blk(states.size(), states.size());
    for (std::size_t i = 0; i < states.size(); ++i)
      for (std::size_t j = 0; j < states.size(); ++j) blk(i, j) = M(states[i], states[j]);
    out.blocks.push_back(std::move(blk));
  }
  return out;
}

PauliString::PauliString(std::string s) : letters(std::move(s)) {
  for (char c : letters)
    if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z')
      throw std::domain_error("PauliString: letters must be I, X, Y or Z");
}

std::pair<int, int> pauli_charge_profile(const PauliString& p) {
  int z = 0, i = 0;
  for (char c : p.letters) {
    if (c == 'Z') ++z;
    if (c == 'I') ++i;
  }
  return {z, i};
}

Eigen::MatrixXcd pauli_matrix(const PauliString& p) {
  const int D = p.size();
  const std::int64_t dim = std::int64_t(1) << D;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
  const std::complex<double> im(0.0, 1.0);
  for (std::int64_t b = 0; b < dim; ++b) {
    std::int64_t target = b;
    std::complex<double> amp = 1.0;
    for (int site = 0; site < D; ++site) {
      const int bit = static_cast<int>((b >> (D - 1 - site)) & 1);
      const std::int64_t mask = std::int64_t(1) << (D - 1 - site);
      switch (p.letters[site]) {
        case 'I':
          break;
        case 'X':
          target ^= mask;
          break;
        case 'Z':
          amp *= (bit == 1) ? 1.0 : -1.0;  // Z = +1 on set bits
          break;
        case 'Y':
          // Y = i X Z in this convention
          amp *= im * ((bit == 1) ? 1.0 : -1.0);
          target ^= mask;
          break;
      }
    }
    out(target, b) += amp;
  }
  return out;
}

}  // namespace u1chaos
