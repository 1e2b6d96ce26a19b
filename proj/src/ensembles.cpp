#include "u1chaos/ensembles.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "u1chaos/parallel.hpp"

namespace u1chaos {

namespace {
// substream lane reserved for coupling draws (sectors use lanes 0..D)
constexpr std::uint64_t kCouplingLane = 0x5Cull;
}  // namespace

std::string kind_name(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::haar: return "haar";
    case EnsembleKind::u1_haar: return "u1_haar";
    case EnsembleKind::gue_per_sector: return "gue_per_sector";
    case EnsembleKind::csyk: return "csyk";
  }
  return "?";
}

EnsembleKind kind_from_name(const std::string& name) {
  if (name == "haar") return EnsembleKind::haar;
  if (name == "u1_haar") return EnsembleKind::u1_haar;
  if (name == "gue_per_sector" || name == "gue") return EnsembleKind::gue_per_sector;
  if (name == "csyk") return EnsembleKind::csyk;
  throw std::domain_error("unknown ensemble kind: " + name);
}

void EnsembleSpec::validate() const {
  if (realizations < 1) throw std::domain_error("ensemble.realizations must be >= 1");
  switch (kind) {
    case EnsembleKind::haar:
      if (size < 1) throw std::domain_error("ensemble.size (dimension) must be >= 1");
      break;
    case EnsembleKind::u1_haar:
    case EnsembleKind::gue_per_sector:
      if (size < 1 || size > 14)
        throw std::domain_error("ensemble.size (qubits) must be in [1,14]");
      if (kind == EnsembleKind::gue_per_sector && scale <= 0)
        throw std::domain_error("ensemble.scale must be positive");
      break;
    case EnsembleKind::csyk:
      if (size < 4 || size > 14 || size % 2 != 0)
        throw std::domain_error("ensemble.size (fermions) must be even and in [4,14]");
      break;
  }
}

std::string EnsembleSpec::canonical_string() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "kind=%s;size=%d;coupling=%.17g;scale=%.17g;seed=%" PRIu64
                ";realizations=%d",
                kind_name(kind).c_str(), size, coupling, scale, seed, realizations);
  return buf;
}

std::uint64_t EnsembleSpec::content_hash() const {
  // FNV-1a over the canonical string
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canonical_string()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Eigen::MatrixXcd sample_haar_unitary(int d, RandomStream& rng) {
  if (d < 1) throw std::domain_error("sample_haar_unitary: d >= 1");
  Eigen::MatrixXcd g(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) g(r, c) = rng.complex_normal();
  if (d == 1) {
    const std::complex<double> z = g(0, 0);
    return (Eigen::MatrixXcd(1, 1) << z / std::abs(z)).finished();
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd Q = qr.householderQ();
  const Eigen::MatrixXcd& R = qr.matrixQR();
  for (int c = 0; c < d; ++c) {
    const std::complex<double> r = R(c, c);
    Q.col(c) *= std::conj(r / std::abs(r));
  }
  return Q;
}

BlockMatrix sample_u1_haar(ChargeBasisPtr basis, std::uint64_t seed,
                           std::uint64_t realization) {
  BlockMatrix m;
  m.basis = basis;
  m.flavor = MatrixFlavor::unitary;
  for (int q = 0; q < basis->sectors(); ++q) {
    auto rng = substream(seed, realization, static_cast<std::uint64_t>(q));
    m.blocks.push_back(sample_haar_unitary(static_cast<int>(basis->sector_dims[q]), rng));
  }
  return m;
}

BlockMatrix sample_gue_blocks(ChargeBasisPtr basis, std::uint64_t seed,
                              std::uint64_t realization, double scale) {
  if (scale <= 0) throw std::domain_error("sample_gue_blocks: scale > 0");
  BlockMatrix m;
  m.basis = basis;
  m.flavor = MatrixFlavor::hermitian;
  for (int q = 0; q < basis->sectors(); ++q) {
    auto rng = substream(seed, realization, static_cast<std::uint64_t>(q));
    const int d = static_cast<int>(basis->sector_dims[q]);
    const double sigma = scale / std::sqrt(static_cast<double>(d));
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
    for (int r = 0; r < d; ++r) {
      h(r, r) = sigma * rng.normal();
      for (int c = r + 1; c < d; ++c) {
        const std::complex<double> z = sigma * rng.complex_normal();
        h(r, c) = z;
        h(c, r) = std::conj(z);
      }
    }
    m.blocks.push_back(std::move(h));
  }
  return m;
}

double SykCouplings::max_constraint_violation() const {
  const int n = n_fermions;
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const auto v = at(i, j, k, l);
          worst = std::max(worst, std::abs(v + at(j, i, k, l)));
          worst = std::max(worst, std::abs(v + at(i, j, l, k)));
          worst = std::max(worst, std::abs(v - std::conj(at(k, l, i, j))));
        }
  return worst;
}

SykCouplings sample_syk_couplings(int N, double J, RandomStream& rng) {
  if (N < 4 || N > 14 || N % 2 != 0)
    throw std::domain_error("sample_syk_couplings: N must be even and in [4,14]");
  SykCouplings c;
  c.n_fermions = N;
  c.coupling = J;
  c.tensor.assign(static_cast<std::size_t>(N) * N * N * N, {0.0, 0.0});
  // <|J|^2> = 4 J^2 / N^3
  const double sigma = 2.0 * J / (static_cast<double>(N) * std::sqrt(static_cast<double>(N)));
  auto set = [&](int i, int j, int k, int l, std::complex<double> v) {
    const auto idx = [&](int a, int b, int cc, int d) {
      return ((static_cast<std::size_t>(a) * N + b) * N + cc) * N + d;
    };
    c.tensor[idx(i, j, k, l)] = v;
    c.tensor[idx(j, i, k, l)] = -v;
    c.tensor[idx(i, j, l, k)] = -v;
    c.tensor[idx(j, i, l, k)] = v;
    const auto w = std::conj(v);
    c.tensor[idx(k, l, i, j)] = w;
    c.tensor[idx(l, k, i, j)] = -w;
    c.tensor[idx(k, l, j, i)] = -w;
    c.tensor[idx(l, k, j, i)] = w;
  };
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j)
      for (int k = 0; k < N; ++k)
        for (int l = k + 1; l < N; ++l) {
          if (std::make_pair(k, l) < std::make_pair(i, j)) continue;
          if (i == k && j == l) {
            set(i, j, k, l, {sigma * rng.normal(), 0.0});  // hermiticity forces real
          } else {
            set(i, j, k, l, sigma * rng.complex_normal());
          }
        }
  return c;
}

BlockMatrix build_syk_hamiltonian(const SykCouplings& c) {
  const int N = c.n_fermions;
  auto basis = build_charge_basis(N);
  BlockMatrix m;
  m.basis = basis;
  m.flavor = MatrixFlavor::hermitian;

  // occupied-count phase for sites strictly left of `site` (site 0 leftmost)
  const auto jw_phase = [N](std::int64_t state, int site) -> double {
    if (site == 0) return 1.0;
    const auto upper = static_cast<std::uint64_t>(state) >> (N - site);
    return (std::popcount(upper) & 1) ? -1.0 : 1.0;
  };
  const auto bit_of = [N](std::int64_t state, int site) {
    return (state >> (N - 1 - site)) & 1;
  };
  const auto mask_of = [N](int site) { return std::int64_t(1) << (N - 1 - site); };

  for (int q = 0; q < basis->sectors(); ++q) {
    const auto& states = basis->sector_states[q];
    const auto d = basis->sector_dims[q];
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j)
        for (int k = 0; k < N; ++k)
          for (int l = k + 1; l < N; ++l) {
            // the four (anti)symmetry partners of (i<j, k<l) contribute equally
            const std::complex<double> coeff = 4.0 * c.at(i, j, k, l);
            if (coeff == std::complex<double>(0.0, 0.0)) continue;
            for (std::int64_t col = 0; col < d; ++col) {
              std::int64_t s = states[col];
              // f_i^+ f_j^+ f_k f_l, rightmost first
              if (!bit_of(s, l)) continue;
              double amp = jw_phase(s, l);
              s ^= mask_of(l);
              if (!bit_of(s, k)) continue;
              amp *= jw_phase(s, k);
              s ^= mask_of(k);
              if (bit_of(s, j)) continue;
              amp *= jw_phase(s, j);
              s |= mask_of(j);
              if (bit_of(s, i)) continue;
              amp *= jw_phase(s, i);
              s |= mask_of(i);
              h(basis->index_in_sector[s], col) += coeff * amp;
            }
          }
    m.blocks.push_back(std::move(h));
  }
  return m;
}

BlockMatrix evolve(const BlockMatrix& h, double t) {
  BlockMatrix u;
  u.basis = h.basis;
  u.flavor = MatrixFlavor::unitary;
  for (const auto& blk : h.blocks) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(blk);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("evolve: eigendecomposition failed");
    const auto& w = es.eigenvalues();
    const auto& v = es.eigenvectors();
    Eigen::VectorXcd phases(w.size());
    for (Eigen::Index a = 0; a < w.size(); ++a)
      phases(a) = std::exp(std::complex<double>(0.0, t * w(a)));
    u.blocks.push_back(v * phases.asDiagonal() * v.adjoint());
  }
  return u;
}

namespace {

std::vector<SectorEigensystem> realize_hamiltonian(const EnsembleSpec& spec,
                                                   ChargeBasisPtr basis,
                                                   std::uint64_t realization,
                                                   bool want_vectors) {
  BlockMatrix h;
  if (spec.kind == EnsembleKind::gue_per_sector) {
    h = sample_gue_blocks(basis, spec.seed, realization, spec.scale);
  } else if (spec.kind == EnsembleKind::csyk) {
    auto rng = substream(spec.seed, realization, kCouplingLane);
    const auto c = sample_syk_couplings(spec.size, spec.coupling, rng);
    h = build_syk_hamiltonian(c);
  } else {
    throw std::domain_error("spectral/eigen ensemble requires a Hamiltonian kind");
  }
  std::vector<SectorEigensystem> out(h.blocks.size());
  for (std::size_t q = 0; q < h.blocks.size(); ++q) {
    if (want_vectors) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.blocks[q]);
      if (es.info() != Eigen::Success)
        throw std::runtime_error("ensemble: eigendecomposition failed");
      out[q].values = es.eigenvalues();
      out[q].vectors = es.eigenvectors();
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.blocks[q],
                                                         Eigen::EigenvaluesOnly);
      if (es.info() != Eigen::Success)
        throw std::runtime_error("ensemble: eigendecomposition failed");
      out[q].values = es.eigenvalues();
    }
  }
  return out;
}

}  // namespace

std::int64_t SpectralEnsemble::total_dim() const {
  std::int64_t n = 0;
  for (auto d : dims) n += d;
  return n;
}

std::vector<Eigen::MatrixXcd> EigenEnsemble::unitary_at(int realization, double t) const {
  const auto& secs = realizations.at(realization);
  std::vector<Eigen::MatrixXcd> out;
  out.reserve(secs.size());
  for (const auto& es : secs) {
    Eigen::VectorXcd phases(es.values.size());
    for (Eigen::Index a = 0; a < es.values.size(); ++a)
      phases(a) = std::exp(std::complex<double>(0.0, t * es.values(a)));
    out.push_back(es.vectors * phases.asDiagonal() * es.vectors.adjoint());
  }
  return out;
}

SpectralEnsemble EigenEnsemble::spectra() const {
  SpectralEnsemble se;
  se.basis = basis;
  se.dims = dims;
  se.spec = spec;
  se.eigenvalues.reserve(realizations.size());
  for (const auto& r : realizations) {
    std::vector<Eigen::VectorXd> vals;
    vals.reserve(r.size());
    for (const auto& s : r) vals.push_back(s.values);
    se.eigenvalues.push_back(std::move(vals));
  }
  return se;
}

SpectralEnsemble spectral_ensemble(const EnsembleSpec& spec, int threads) {
  spec.validate();
  SpectralEnsemble se;
  se.spec = spec;
  se.basis = build_charge_basis(spec.size);
  se.dims = se.basis->sector_dims;
  se.eigenvalues.assign(spec.realizations, {});
  parallel_for(
      spec.realizations,
      [&](std::size_t r) {
        const auto secs = realize_hamiltonian(spec, se.basis, r, false);
        std::vector<Eigen::VectorXd> vals;
        vals.reserve(secs.size());
        for (const auto& s : secs) vals.push_back(s.values);
        se.eigenvalues[r] = std::move(vals);
      },
      threads);
  return se;
}

EigenEnsemble eigen_ensemble(const EnsembleSpec& spec, int threads) {
  spec.validate();
  EigenEnsemble ee;
  ee.spec = spec;
  ee.basis = build_charge_basis(spec.size);
  ee.dims = ee.basis->sector_dims;
  ee.realizations.assign(spec.realizations, {});
  parallel_for(
      spec.realizations,
      [&](std::size_t r) { ee.realizations[r] = realize_hamiltonian(spec, ee.basis, r, true); },
      threads);
  return ee;
}

UnitarySet sample_unitary_set(const EnsembleSpec& spec, int threads) {
  spec.validate();
  UnitarySet us;
  if (spec.kind == EnsembleKind::haar) {
    us.dims = {spec.size};
    us.samples.assign(spec.realizations, {});
    parallel_for(
        spec.realizations,
        [&](std::size_t r) {
          auto rng = substream(spec.seed, r, 0);
          us.samples[r] = {sample_haar_unitary(spec.size, rng)};
        },
        threads);
    return us;
  }
  if (spec.kind == EnsembleKind::u1_haar) {
    us.basis = build_charge_basis(spec.size);
    us.dims = us.basis->sector_dims;
    us.samples.assign(spec.realizations, {});
    parallel_for(
        spec.realizations,
        [&](std::size_t r) {
          auto bm = sample_u1_haar(us.basis, spec.seed, r);
          us.samples[r] = std::move(bm.blocks);
        },
        threads);
    return us;
  }
  throw std::domain_error("sample_unitary_set: haar or u1_haar kinds only");
}

void save_spectra_csv(const SpectralEnsemble& se, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_spectra_csv: cannot open " + path);
  char buf[64];
  out << "# u1chaos spectra v1\n";
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, se.spec.content_hash());
  out << "# hash=" << buf << "\n";
  out << "# " << se.spec.canonical_string() << "\n";
  out << "realization,sector,index,eigenvalue\n";
  for (int r = 0; r < se.realizations(); ++r)
    for (int q = 0; q < se.sectors(); ++q) {
      const auto& vals = se.eigenvalues[r][q];
      for (Eigen::Index a = 0; a < vals.size(); ++a) {
        std::snprintf(buf, sizeof(buf), "%.17g", vals(a));
        out << r << ',' << q << ',' << a << ',' << buf << '\n';
      }
    }
}

SpectralEnsemble load_spectra_csv(const std::string& path, const EnsembleSpec& spec) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_spectra_csv: cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  char expect[64];
  std::snprintf(expect, sizeof(expect), "%016" PRIx64, spec.content_hash());
  if (line != std::string("# hash=") + expect)
    throw std::runtime_error("load_spectra_csv: content hash mismatch");
  std::getline(in, line);  // canonical spec line
  std::getline(in, line);  // column header
  SpectralEnsemble se;
  se.spec = spec;
  se.basis = spec.kind == EnsembleKind::haar ? nullptr : build_charge_basis(spec.size);
  se.dims = se.basis ? se.basis->sector_dims : std::vector<std::int64_t>{spec.size};
  se.eigenvalues.assign(spec.realizations, {});
  for (auto& r : se.eigenvalues) {
    r.resize(se.dims.size());
    for (std::size_t q = 0; q < se.dims.size(); ++q) r[q].resize(se.dims[q]);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int r = 0, q = 0;
    long idx = 0;
    double val = 0;
    if (std::sscanf(line.c_str(), "%d,%d,%ld,%lg", &r, &q, &idx, &val) != 4)
      throw std::runtime_error("load_spectra_csv: malformed row");
    se.eigenvalues.at(r).at(q)(idx) = val;
  }
  return se;
}

}  // namespace u1chaos
