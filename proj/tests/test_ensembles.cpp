#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "u1chaos/ensembles.hpp"
#include "u1chaos/parallel.hpp"

using namespace u1chaos;

namespace {

// Independent dense Jordan-Wigner oracle: full 2^N matrices built from
// explicit matrix products, used only to validate the sector-wise builder.
std::vector<Eigen::MatrixXcd> dense_fermion_ops(int N) {
  const std::int64_t dim = std::int64_t(1) << N;
  std::vector<Eigen::MatrixXcd> fs;
  for (int site = 0; site < N; ++site) {
    Eigen::MatrixXcd f = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::int64_t b = 0; b < dim; ++b) {
      if (((b >> (N - 1 - site)) & 1) == 0) continue;
      int occ_left = 0;
      for (int s = 0; s < site; ++s) occ_left += static_cast<int>((b >> (N - 1 - s)) & 1);
      f(b ^ (std::int64_t(1) << (N - 1 - site)), b) = (occ_left % 2) ? -1.0 : 1.0;
    }
    fs.push_back(f);
  }
  return fs;
}

Eigen::MatrixXcd dense_syk(const SykCouplings& c) {
  const int N = c.n_fermions;
  const auto fs = dense_fermion_ops(N);
  const std::int64_t dim = std::int64_t(1) << N;
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(dim, dim);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k)
        for (int l = 0; l < N; ++l) {
          const auto v = c.at(i, j, k, l);
          if (v == std::complex<double>(0, 0)) continue;
          H += v * (fs[i].adjoint() * fs[j].adjoint() * fs[k] * fs[l]);
        }
  return H;
}

}  // namespace

TEST_CASE("haar sampler: unitarity and first moment") {
  auto rng = substream(101, 0);
  for (int d : {1, 3, 6}) {
    const auto U = sample_haar_unitary(d, rng);
    CHECK((U * U.adjoint() - Eigen::MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-10);
  }
  const auto u1 = sample_haar_unitary(1, rng);
  CHECK(std::abs(std::abs(u1(0, 0)) - 1.0) < 1e-14);

  // E[|U_ij|^2] = 1/d and a cross moment vanishes, d = 4
  const int d = 4, samples = 20000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  std::complex<double> off(0, 0);
  for (int s = 0; s < samples; ++s) {
    const auto U = sample_haar_unitary(d, rng);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) acc(i, j) += std::norm(U(i, j));
    off += U(0, 1) * std::conj(U(2, 3));
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      CHECK(std::abs(acc(i, j) / samples - 1.0 / d) < 5.0 / std::sqrt(double(samples)) / d);
  CHECK(std::abs(off) / samples < 5.0 / std::sqrt(double(samples)) / d);
}

TEST_CASE("haar sampler: |Tr U|^2 = 1 at d=8") {
  auto rng = substream(102, 0);
  const int samples = 20000;
  std::vector<double> vals(samples);
  for (auto& v : vals) {
    const auto U = sample_haar_unitary(8, rng);
    v = std::norm(U.trace());
  }
  const auto est = mean_stderr(vals);
  CHECK(std::abs(est.mean - 1.0) < 5 * est.std_error);
}

TEST_CASE("u1_haar sampler: sector independence and |Tr U|^2 = sector count") {
  auto basis = build_charge_basis(4);
  const int samples = 20000;
  std::vector<double> tr2(samples);
  std::complex<double> mixed(0, 0);
  for (int s = 0; s < samples; ++s) {
    const auto m = sample_u1_haar(basis, 77, s);
    std::complex<double> tr(0, 0);
    for (const auto& b : m.blocks) tr += b.trace();
    tr2[s] = std::norm(tr);
    mixed += m.blocks[1](0, 0) * std::conj(m.blocks[2](0, 0));
  }
  const auto est = mean_stderr(tr2);
  CHECK(std::abs(est.mean - 5.0) < 5 * est.std_error);  // 5 sectors at D=4
  CHECK(std::abs(mixed) / samples < 5.0 / std::sqrt(double(samples)) / 3.0);
  const auto m = sample_u1_haar(basis, 77, 0);
  const auto M = embed_blocks(m);
  CHECK((M * M.adjoint() - Eigen::MatrixXcd::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("gue blocks: hermitian, d=1 sectors real, semicircle support") {
  auto basis = build_charge_basis(10);
  const double scale = 1.0;
  std::vector<double> pool;
  for (int r = 0; r < 200; ++r) {
    const auto m = sample_gue_blocks(basis, 909, r, scale);
    if (r == 0) {
      CHECK(m.flavor_violation() == 0.0);
      CHECK(std::abs(m.blocks[0](0, 0).imag()) == 0.0);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m.blocks[5], Eigen::EigenvaluesOnly);
    for (Eigen::Index a = 0; a < es.eigenvalues().size(); ++a)
      pool.push_back(es.eigenvalues()(a));
  }
  std::sort(pool.begin(), pool.end());
  const double R = 2.0 * scale;
  auto cdf = [R](double x) {
    if (x <= -R) return 0.0;
    if (x >= R) return 1.0;
    return 0.5 + x * std::sqrt(R * R - x * x) / (M_PI * R * R) + std::asin(x / R) / M_PI;
  };
  double ks = 0.0;
  const double n = static_cast<double>(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const double f = cdf(pool[i]);
    ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
    ks = std::max(ks, std::abs(f - static_cast<double>(i + 1) / n));
  }
  CHECK(ks < 0.05);
  CHECK(pool.front() > -R * 1.1);
  CHECK(pool.back() < R * 1.1);
}

TEST_CASE("syk couplings: constraints exact, variance matches 4J^2/N^3") {
  const int N = 8;
  const double J = 1.3;
  double sumsq = 0.0, sumsq_sq = 0.0;
  long count = 0;
  for (int r = 0; r < 40; ++r) {
    auto rng = substream(11, r, 0x5C);
    const auto c = sample_syk_couplings(N, J, rng);
    if (r == 0) {
      CHECK(c.max_constraint_violation() == 0.0);
      for (int k = 0; k < N; ++k)
        for (int l = 0; l < N; ++l) CHECK(c.at(2, 2, k, l) == std::complex<double>(0, 0));
    }
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j)
        for (int k = 0; k < N; ++k)
          for (int l = k + 1; l < N; ++l) {
            if (std::make_pair(k, l) <= std::make_pair(i, j)) continue;  // off-pair only
            const double a = std::norm(c.at(i, j, k, l));
            sumsq += a;
            sumsq_sq += a * a;
            ++count;
          }
  }
  const double target = 4 * J * J / (N * N * N);
  const double mean = sumsq / count;
  const double se = std::sqrt((sumsq_sq / count - mean * mean) / count);
  CHECK(count > 10000);
  CHECK(std::abs(mean - target) < 5 * se);
  CHECK_THROWS_AS(
      [] {
        auto rng = substream(1, 1, 1);
        sample_syk_couplings(7, 1.0, rng);
      }(),
      std::domain_error);
}

TEST_CASE("syk hamiltonian matches the dense Jordan-Wigner oracle exactly") {
  auto rng = substream(40, 0, 0x5C);
  const auto c = sample_syk_couplings(6, 1.0, rng);
  const auto blocks = build_syk_hamiltonian(c);
  const auto dense = dense_syk(c);
  auto basis = build_charge_basis(6);

  for (Eigen::Index r = 0; r < dense.rows(); ++r)
    for (Eigen::Index col = 0; col < dense.cols(); ++col)
      if (basis->charge_of[r] != basis->charge_of[col])
        CHECK(dense(r, col) == std::complex<double>(0, 0));

  const auto extracted = extract_blocks(dense, basis, MatrixFlavor::hermitian, 0.0);
  for (int q = 0; q <= 6; ++q)
    CHECK((extracted.blocks[q] - blocks.blocks[q]).cwiseAbs().maxCoeff() < 1e-14);

  CHECK(blocks.flavor_violation() < 1e-12);
  std::complex<double> tr_blocks(0, 0);
  for (const auto& b : blocks.blocks) tr_blocks += b.trace();
  CHECK(std::abs(tr_blocks - dense.trace()) < 1e-10);
}

TEST_CASE("syk zero- and one-fermion sectors are exactly zero") {
  for (int N : {4, 6}) {
    auto rng = substream(41, N, 0x5C);
    const auto h = build_syk_hamiltonian(sample_syk_couplings(N, 1.0, rng));
    CHECK(h.blocks[0].cwiseAbs().maxCoeff() == 0.0);
    CHECK(h.blocks[1].cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("syk single coupling: q=2 block has eigenvalues 0 and +-4|J_1234|") {
  // brute-force oracle: dense construction of the block, then diagonalize
  const std::complex<double> j0(0.6, -0.35);
  SykCouplings c;
  c.n_fermions = 4;
  c.coupling = 1.0;
  c.tensor.assign(4 * 4 * 4 * 4, {0, 0});
  auto idx = [](int a, int b, int cc, int d) {
    return ((static_cast<std::size_t>(a) * 4 + b) * 4 + cc) * 4 + d;
  };
  auto put = [&](int a, int b, int cc, int d, std::complex<double> v) {
    c.tensor[idx(a, b, cc, d)] = v;
  };
  for (auto [a, b, sa] : {std::tuple{0, 1, 1.0}, std::tuple{1, 0, -1.0}})
    for (auto [cc, d, sc] : {std::tuple{2, 3, 1.0}, std::tuple{3, 2, -1.0}}) {
      put(a, b, cc, d, sa * sc * j0);
      put(cc, d, a, b, sa * sc * std::conj(j0));
    }
  CHECK(c.max_constraint_violation() == 0.0);

  const auto oracle = dense_syk(c);
  auto basis = build_charge_basis(4);
  const auto blk = extract_blocks(oracle, basis, MatrixFlavor::hermitian, 0.0).blocks[2];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(blk, Eigen::EigenvaluesOnly);
  Eigen::VectorXd w = es.eigenvalues();
  CHECK(w.size() == 6);
  CHECK(w(0) == doctest::Approx(-4 * std::abs(j0)).epsilon(1e-12));
  CHECK(w(5) == doctest::Approx(4 * std::abs(j0)).epsilon(1e-12));
  for (int a = 1; a < 5; ++a) CHECK(std::abs(w(a)) < 1e-12);

  const auto built = build_syk_hamiltonian(c);
  CHECK((built.blocks[2] - blk).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("evolve: group property and spectral mapping") {
  auto basis = build_charge_basis(4);
  const auto h = sample_gue_blocks(basis, 5, 3, 1.0);
  const double t = 0.8;

  const auto u0 = evolve(h, 0.0);
  for (int q = 0; q <= 4; ++q)
    CHECK((u0.blocks[q] - Eigen::MatrixXcd::Identity(u0.blocks[q].rows(), u0.blocks[q].cols()))
              .cwiseAbs()
              .maxCoeff() < 1e-12);

  const auto up = evolve(h, t);
  const auto um = evolve(h, -t);
  for (int q = 0; q <= 4; ++q) {
    const auto prod = up.blocks[q] * um.blocks[q];
    CHECK((prod - Eigen::MatrixXcd::Identity(prod.rows(), prod.cols())).cwiseAbs().maxCoeff() <
          1e-9);
  }
  up.check_flavor();

  // eigenphases of U equal {e^{i t E}} as multisets (q = 2 block)
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.blocks[2], Eigen::EigenvaluesOnly);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eu(up.blocks[2]);
  std::vector<double> expect, got;
  for (Eigen::Index a = 0; a < es.eigenvalues().size(); ++a) {
    expect.push_back(std::arg(std::exp(std::complex<double>(0, t * es.eigenvalues()(a)))));
    got.push_back(std::arg(eu.eigenvalues()(a)));
  }
  std::sort(expect.begin(), expect.end());
  std::sort(got.begin(), got.end());
  for (std::size_t a = 0; a < expect.size(); ++a)
    CHECK(std::abs(expect[a] - got[a]) < 1e-9);
}

TEST_CASE("spectral ensemble: shapes and determinism across thread counts") {
  EnsembleSpec spec;
  spec.kind = EnsembleKind::csyk;
  spec.size = 6;
  spec.seed = 2024;
  spec.realizations = 10;

  const auto a = spectral_ensemble(spec, 1);
  const auto b = spectral_ensemble(spec, 4);
  CHECK(a.realizations() == 10);
  CHECK(a.sectors() == 7);
  for (int r = 0; r < 10; ++r)
    for (int q = 0; q <= 6; ++q) {
      CHECK(a.eigenvalues[r][q].size() == sector_dim(6, q));
      CHECK((a.eigenvalues[r][q] - b.eigenvalues[r][q]).cwiseAbs().maxCoeff() == 0.0);
      CHECK(std::is_sorted(a.eigenvalues[r][q].data(),
                           a.eigenvalues[r][q].data() + a.eigenvalues[r][q].size()));
    }

  EnsembleSpec gue;
  gue.kind = EnsembleKind::gue_per_sector;
  gue.size = 6;
  gue.seed = 9;
  gue.realizations = 3;
  const auto g = spectral_ensemble(gue);
  const std::vector<std::int64_t> expect{1, 6, 15, 20, 15, 6, 1};
  CHECK(g.dims == expect);
}

TEST_CASE("spectra csv cache round-trips exactly") {
  EnsembleSpec spec;
  spec.kind = EnsembleKind::csyk;
  spec.size = 4;
  spec.seed = 31337;
  spec.realizations = 3;
  const auto se = spectral_ensemble(spec);
  const std::string path = "/tmp/u1chaos_test_spectra.csv";
  save_spectra_csv(se, path);
  const auto back = load_spectra_csv(path, spec);
  for (int r = 0; r < 3; ++r)
    for (int q = 0; q <= 4; ++q)
      CHECK((back.eigenvalues[r][q] - se.eigenvalues[r][q]).cwiseAbs().maxCoeff() == 0.0);

  EnsembleSpec other = spec;
  other.seed = 1;
  CHECK_THROWS_AS(load_spectra_csv(path, other), std::runtime_error);
}

TEST_CASE("eigen ensemble evolves to the same unitary as evolve()") {
  EnsembleSpec spec;
  spec.kind = EnsembleKind::gue_per_sector;
  spec.size = 3;
  spec.seed = 5;
  spec.realizations = 2;
  const auto ee = eigen_ensemble(spec);
  const auto h = sample_gue_blocks(build_charge_basis(3), 5, 1, 1.0);
  const auto u_direct = evolve(h, 0.7);
  const auto u_cached = ee.unitary_at(1, 0.7);
  for (int q = 0; q <= 3; ++q)
    CHECK((u_direct.blocks[q] - u_cached[q]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ensemble spec validation and hashing") {
  EnsembleSpec s;
  s.kind = EnsembleKind::csyk;
  s.size = 7;
  CHECK_THROWS_AS(s.validate(), std::domain_error);
  s.size = 8;
  s.realizations = 0;
  CHECK_THROWS_AS(s.validate(), std::domain_error);
  s.realizations = 1;
  CHECK_NOTHROW(s.validate());
  EnsembleSpec t = s;
  t.seed += 1;
  CHECK(s.content_hash() != t.content_hash());
  CHECK(kind_from_name("csyk") == EnsembleKind::csyk);
  CHECK_THROWS_AS(kind_from_name("bogus"), std::domain_error);
}
