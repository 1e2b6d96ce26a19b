#include "u1chaos/decoupling.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "u1chaos/ensembles.hpp"
#include "u1chaos/parallel.hpp"

namespace u1chaos {

using cdouble = std::complex<double>;

BigInt g_function_exact(int n_A, int n_B, int q) {
  if (n_A < 0 || n_B < 0 || q < 0 || q > n_A + n_B)
    throw std::domain_error("g_function: q out of range");
  auto big_binom = [](int n, int k) {
    BigInt acc = 1;
    if (k > n - k) k = n - k;
    for (int i = 1; i <= k; ++i) acc = acc * (n - k + i) / i;
    return acc;
  };
  BigInt sum = 0;
  for (int f = std::max(0, q - n_B); f <= std::min(n_A, q); ++f) {
    const BigInt b = big_binom(n_B, q - f);
    sum += big_binom(n_A, f) * b * b;
  }
  return sum;
}

std::int64_t g_function(int n_A, int n_B, int q) {
  const BigInt v = g_function_exact(n_A, n_B, q);
  if (v > BigInt(std::numeric_limits<std::int64_t>::max()))
    throw std::overflow_error("g_function: exceeds 64-bit range");
  return v.convert_to<std::int64_t>();
}

double page_purity_analytic(int n_A, int n_B, int q, bool two_term_assembly) {
  const std::int64_t dq = binomial(n_A + n_B, q);
  if (dq < 2) throw DegenerateSectorError("page_purity_analytic: d_q < 2");
  const long double ga = g_function_exact(n_A, n_B, q).convert_to<long double>();
  const long double gb = g_function_exact(n_B, n_A, q).convert_to<long double>();
  const long double d = static_cast<long double>(dq);
  if (two_term_assembly) {
    // identity terms 1/(d^2-1) minus swap terms 1/(d(d^2-1))
    return static_cast<double>((ga + gb) / (d * d - 1) - (ga + gb) / (d * (d * d - 1)));
  }
  return static_cast<double>((ga + gb) / (d * (d + 1)));
}

namespace {

// purity of the reduced state on the leftmost n_A qubits of a 2^(nA+nB) vector
double reduced_purity(const Eigen::VectorXcd& psi, int n_A, int n_B) {
  const std::int64_t da = std::int64_t(1) << n_A;
  const std::int64_t db = std::int64_t(1) << n_B;
  Eigen::MatrixXcd m(da, db);
  for (std::int64_t a = 0; a < da; ++a)
    for (std::int64_t b = 0; b < db; ++b) m(a, b) = psi((a << n_B) | b);
  const Eigen::MatrixXcd g = m * m.adjoint();
  return g.squaredNorm();
}

}  // namespace

PagePurityMc page_purity_mc(int n_A, int n_B, int q, int realizations,
                            std::uint64_t seed) {
  const int D = n_A + n_B;
  auto basis = build_charge_basis(D);
  if (q < 0 || q > D) throw std::domain_error("page_purity_mc: q out of range");
  // canonical fixed-charge product initial state: lowest global index of charge q
  const std::int64_t g0 = basis->sector_states[q].front();
  const auto i0 = basis->index_in_sector[g0];
  const auto& states = basis->sector_states[q];

  std::vector<double> purities(realizations);
  parallel_for(realizations, [&](std::size_t r) {
    auto rng = substream(seed, r, static_cast<std::uint64_t>(q));
    const auto Uq = sample_haar_unitary(static_cast<int>(states.size()), rng);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(basis->dim());
    for (std::size_t i = 0; i < states.size(); ++i) psi(states[i]) = Uq(i, i0);
    purities[r] = reduced_purity(psi, n_A, n_B);
  });
  PagePurityMc out;
  const auto est = mean_stderr(purities);
  out.purity = {est.mean, est.std_error, est.n};
  out.one_norm_bound = static_cast<double>(std::int64_t(1) << n_A) * est.mean - 1.0;
  return out;
}

PagePurityMc page_purity_mc_haar(int n_A, int n_B, int realizations, std::uint64_t seed) {
  const std::int64_t dim = std::int64_t(1) << (n_A + n_B);
  std::vector<double> purities(realizations);
  parallel_for(realizations, [&](std::size_t r) {
    auto rng = substream(seed, r, 0);
    const auto U = sample_haar_unitary(static_cast<int>(dim), rng);
    const Eigen::VectorXcd psi = U.col(0);
    purities[r] = reduced_purity(psi, n_A, n_B);
  });
  PagePurityMc out;
  const auto est = mean_stderr(purities);
  out.purity = {est.mean, est.std_error, est.n};
  out.one_norm_bound = static_cast<double>(std::int64_t(1) << n_A) * est.mean - 1.0;
  return out;
}

void HpConfig::validate() const {
  if (n_A < 0 || n_B < 0 || n_C < 0 || n_D < 0)
    throw std::domain_error("hp: qubit counts must be non-negative");
  if (n_A + n_B != n_C + n_D)
    throw std::domain_error("hp: n_A + n_B must equal n_C + n_D");
  if (m_A < 0 || m_A > n_A) throw std::domain_error("hp: 0 <= m_A <= n_A");
  if (m_B < 0 || m_B > n_B) throw std::domain_error("hp: 0 <= m_B <= n_B");
}

HpPurities hp_purities(const HpConfig& cfg) {
  cfg.validate();
  const int m = cfg.total_charge();
  const long double dq = static_cast<long double>(cfg.sector_dim());
  const long double dta = static_cast<long double>(cfg.code_dim());
  const long double dtb = static_cast<long double>(cfg.bath_dim());
  const long double gc = g_function_exact(cfg.n_C, cfg.n_D, m).convert_to<long double>();
  const long double gd = g_function_exact(cfg.n_D, cfg.n_C, m).convert_to<long double>();
  HpPurities out;
  out.purity_AC = static_cast<double>(gc / (dq * dq * dta) + gd / (dq * dq * dtb));
  out.purity_C_over_dA =
      static_cast<double>(gc / (dq * dq * dta) + gd / (dq * dq * dta * dta * dtb));
  return out;
}

HpPurities hp_purities_haar(int n_A, int n_B, int n_C, int n_D) {
  const double dA = std::pow(2.0, n_A), dB = std::pow(2.0, n_B);
  const double dC = std::pow(2.0, n_C), dD = std::pow(2.0, n_D);
  HpPurities out;
  out.purity_AC = 1.0 / (dA * dC) + 1.0 / (dB * dD);
  out.purity_C_over_dA = 1.0 / (dA * dC) + 1.0 / (dA * dA * dB * dD);
  return out;
}

double decoupling_margin(const HpConfig& cfg) {
  cfg.validate();
  const int m = cfg.total_charge();
  const long double gc = g_function_exact(cfg.n_C, cfg.n_D, m).convert_to<long double>();
  const long double gd = g_function_exact(cfg.n_D, cfg.n_C, m).convert_to<long double>();
  return static_cast<double>(static_cast<long double>(cfg.code_dim()) * gd /
                             (static_cast<long double>(cfg.bath_dim()) * gc));
}

double hp_cmi2(const HpConfig& cfg) {
  const double ratio = decoupling_margin(cfg);
  if (ratio >= 1.0) return std::numeric_limits<double>::infinity();  // saturated
  return -std::log2(1.0 - ratio);
}

double hp_cmi2_haar(int n_A, int n_B, int n_C, int n_D) {
  (void)n_C;  // the closed form involves only d_A, d_B, d_D
  const double dA = std::pow(2.0, n_A), dB = std::pow(2.0, n_B);
  const double dD = std::pow(2.0, n_D);
  return std::log2((dA * dA * dA * dB + dA * dB * dD * dD) /
                   (dA * dB + dA * dB * dD * dD));
}

SmallChargeProfile small_charge_profile(int n_A, int n_B, int n_C, int n_D) {
  SmallChargeProfile out;
  const double nc = n_C, nd = n_D;
  out.exact_lhs =
      (nd * nd * (nd - 1) * (nd - 1) / 4.0 + nc * nd * nd + nc * (nc - 1) / 2.0) / n_A;
  out.exact_rhs =
      (nc * nc * (nc - 1) * (nc - 1) / 4.0 + nd * nc * nc + nd * (nd - 1) / 2.0) / n_B;
  out.asymptotic_lhs = nd * nd * nd * nd / (4.0 * n_A);
  out.asymptotic_rhs = nc * nc * nc * nc / (4.0 * n_B);
  return out;
}

double eastin_knill_bound(int m_A, int D) {
  if (m_A < 0 || D < 1) throw std::domain_error("eastin_knill_bound: m_A >= 0, D >= 1");
  return static_cast<double>(m_A) / (2.0 * D);
}

EkConsistency ek_consistency_check(const HpConfig& cfg) {
  EkConsistency out;
  const double D = static_cast<double>(cfg.n_C + cfg.n_D);
  out.lhs = static_cast<double>(cfg.m_A) * cfg.m_A / (4.0 * D * D);
  out.rhs = decoupling_margin(cfg);
  out.satisfied = out.lhs <= out.rhs;
  return out;
}

// --- Knill-Laflamme -------------------------------------------------------------

namespace {

KlAnalytic kl_analytic(const Eigen::MatrixXcd& block, double d, bool same_codeword) {
  KlAnalytic out;
  const cdouble mo = block.trace() / d;
  const double moo = (block * block.adjoint()).trace().real() / d;
  out.mean = same_codeword ? mo : cdouble(0, 0);
  const double delta = same_codeword ? 1.0 : 0.0;
  out.variance_paper = -std::norm(mo) / (d + 1) * delta + moo / (d + 1);
  const double connected = moo - std::norm(mo);
  out.variance_exact =
      connected * (delta / (d + 1) + (1.0 - delta) * d / (d * d - 1.0));
  return out;
}

KlStatistics kl_sample(const std::function<Eigen::VectorXcd(std::size_t, bool)>& encode,
                       const Eigen::MatrixXcd& O, int realizations, bool same_codeword,
                       const KlAnalytic& analytic) {
  std::vector<cdouble> vals(realizations);
  std::vector<double> abs2(realizations);
  parallel_for(realizations, [&](std::size_t r) {
    const Eigen::VectorXcd ba = encode(r, true);
    const Eigen::VectorXcd bb = same_codeword ? ba : encode(r, false);
    const cdouble v = ba.dot(O * bb);  // dot conjugates the left argument
    vals[r] = v;
    abs2[r] = std::norm(v);
  });
  KlStatistics out;
  out.n = realizations;
  out.analytic = analytic;
  std::vector<double> re(realizations), im(realizations);
  for (int r = 0; r < realizations; ++r) {
    re[r] = vals[r].real();
    im[r] = vals[r].imag();
  }
  const auto mre = mean_stderr(re);
  const auto mim = mean_stderr(im);
  out.mean = {mre.mean, mim.mean};
  out.mean_std_error = std::sqrt(mre.std_error * mre.std_error +
                                 mim.std_error * mim.std_error);
  const auto mab = mean_stderr(abs2);
  out.variance = mab.mean - std::norm(out.mean);
  out.variance_std_error = mab.std_error;  // the |mean|^2 part is second order
  return out;
}

}  // namespace

KlStatistics kl_statistics_haar(int L, const Eigen::MatrixXcd& O, int a, int b,
                                int realizations, std::uint64_t seed) {
  if (a < 0 || a >= L || b < 0 || b >= L)
    throw std::domain_error("kl_statistics_haar: codeword out of range");
  if (O.rows() != L || O.cols() != L)
    throw std::domain_error("kl_statistics_haar: operator dimension mismatch");
  const bool same = a == b;
  const auto analytic = kl_analytic(O, static_cast<double>(L), same);
  auto encode = [&, L, a, b, seed](std::size_t r, bool first) {
    auto rng = substream(seed, r, 0);
    const auto U = sample_haar_unitary(L, rng);
    return Eigen::VectorXcd(U.col(first ? a : b));
  };
  return kl_sample(encode, O, realizations, same, analytic);
}

KlStatistics kl_statistics_u1(int D, int m, const Eigen::MatrixXcd& O,
                              std::int64_t codeword_a, std::int64_t codeword_b,
                              int realizations, std::uint64_t seed) {
  auto basis = build_charge_basis(D);
  if (basis->charge_of.at(codeword_a) != m || basis->charge_of.at(codeword_b) != m)
    throw std::domain_error("kl_statistics_u1: codeword charge mismatch");
  if (O.rows() != basis->dim())
    throw std::domain_error("kl_statistics_u1: operator dimension mismatch");
  const auto& states = basis->sector_states[m];
  // sector block of O
  Eigen::MatrixXcd Om(states.size(), states.size());
  for (std::size_t i = 0; i < states.size(); ++i)
    for (std::size_t j = 0; j < states.size(); ++j) Om(i, j) = O(states[i], states[j]);
  const bool same = codeword_a == codeword_b;
  const auto analytic = kl_analytic(Om, static_cast<double>(states.size()), same);
  const auto ia = basis->index_in_sector[codeword_a];
  const auto ib = basis->index_in_sector[codeword_b];
  auto encode = [out_states = &states, basis, ia, ib, seed, m](std::size_t r,
                                                                bool first) {
    auto rng = substream(seed, r, static_cast<std::uint64_t>(m));
    const auto Uq = sample_haar_unitary(static_cast<int>(out_states->size()), rng);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(basis->dim());
    for (std::size_t i = 0; i < out_states->size(); ++i)
      psi((*out_states)[i]) = Uq(i, first ? ia : ib);
    return psi;
  };
  return kl_sample(encode, O, realizations, same, analytic);
}

// --- exact Hayden-Preskill states -------------------------------------------------

namespace {

struct HpFrame {
  std::vector<std::int64_t> code_states;  // charge-m_A states of A (n_A bits)
  std::vector<std::int64_t> bath_states;  // charge-m_B states of B (n_B bits)
  std::vector<std::int64_t> sector;       // charge-m states of the full system
  std::vector<std::int64_t> pos_in_sector;
};

HpFrame hp_frame(const HpConfig& cfg) {
  HpFrame f;
  const int n = cfg.total_qubits();
  const int m = cfg.total_charge();
  for (std::int64_t s = 0; s < (std::int64_t(1) << cfg.n_A); ++s)
    if (__builtin_popcountll(s) == cfg.m_A) f.code_states.push_back(s);
  for (std::int64_t s = 0; s < (std::int64_t(1) << cfg.n_B); ++s)
    if (__builtin_popcountll(s) == cfg.m_B) f.bath_states.push_back(s);
  f.pos_in_sector.assign(std::int64_t(1) << n, -1);
  for (std::int64_t s = 0; s < (std::int64_t(1) << n); ++s)
    if (__builtin_popcountll(s) == m) {
      f.pos_in_sector[s] = static_cast<std::int64_t>(f.sector.size());
      f.sector.push_back(s);
    }
  return f;
}

struct HpPuritySamples {
  std::vector<double> ac, c;
};

// one realization: psi[abar, bbar, sector] built from the sampled sector block
void hp_one(const HpConfig& cfg, const HpFrame& f, const Eigen::MatrixXcd& U,
            double& pur_ac, double& pur_c) {
  const auto dta = static_cast<std::int64_t>(f.code_states.size());
  const auto dtb = static_cast<std::int64_t>(f.bath_states.size());
  const auto dq = static_cast<std::int64_t>(f.sector.size());
  const std::int64_t dC = std::int64_t(1) << cfg.n_C;
  const std::int64_t dD = std::int64_t(1) << cfg.n_D;
  const double norm = 1.0 / std::sqrt(static_cast<double>(dta * dtb));
  // M[(abar, c)][(bbar, dd)] for rho_{Abar C}; rho_C via contraction
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(dta * dC, dtb * dD);
  for (std::int64_t ia = 0; ia < dta; ++ia)
    for (std::int64_t ib = 0; ib < dtb; ++ib) {
      const std::int64_t input = (f.code_states[ia] << cfg.n_B) | f.bath_states[ib];
      const auto col = f.pos_in_sector[input];
      for (std::int64_t s = 0; s < dq; ++s) {
        const std::int64_t out = f.sector[s];
        const std::int64_t c = out >> cfg.n_D;
        const std::int64_t dd = out & (dD - 1);
        M(ia * dC + c, ib * dD + dd) += norm * U(s, col);
      }
    }
  const Eigen::MatrixXcd g_ac = M * M.adjoint();
  pur_ac = g_ac.squaredNorm();
  // rho_C: trace out abar as well
  Eigen::MatrixXcd rho_c = Eigen::MatrixXcd::Zero(dC, dC);
  for (std::int64_t ia = 0; ia < dta; ++ia)
    rho_c += g_ac.block(ia * dC, ia * dC, dC, dC);
  pur_c = rho_c.squaredNorm();
}

HpMc hp_assemble(const HpPuritySamples& s, double dta) {
  HpMc out;
  const auto mac = mean_stderr(s.ac);
  const auto mc = mean_stderr(s.c);
  out.purity_AC = {mac.mean, mac.std_error, mac.n};
  out.purity_C = {mc.mean, mc.std_error, mc.n};
  out.purity_Abar = 1.0 / dta;
  out.cmi2 = std::log2(mac.mean) + std::log2(dta) - std::log2(mc.mean);
  const double ln2 = std::log(2.0);
  out.cmi2_std_error = std::sqrt(std::pow(mac.std_error / mac.mean, 2) +
                                 std::pow(mc.std_error / mc.mean, 2)) /
                       ln2;
  return out;
}

}  // namespace

HpMc hp_mc(const HpConfig& cfg, int realizations, std::uint64_t seed) {
  cfg.validate();
  const auto f = hp_frame(cfg);
  HpPuritySamples s;
  s.ac.resize(realizations);
  s.c.resize(realizations);
  parallel_for(realizations, [&](std::size_t r) {
    auto rng = substream(seed, r, static_cast<std::uint64_t>(cfg.total_charge()));
    const auto U = sample_haar_unitary(static_cast<int>(f.sector.size()), rng);
    hp_one(cfg, f, U, s.ac[r], s.c[r]);
  });
  return hp_assemble(s, static_cast<double>(f.code_states.size()));
}

HpMc hp_mc_haar(int n_A, int n_B, int n_C, int n_D, int realizations,
                std::uint64_t seed) {
  if (n_A + n_B != n_C + n_D) throw std::domain_error("hp_mc_haar: size mismatch");
  const std::int64_t dA = std::int64_t(1) << n_A;
  const std::int64_t dB = std::int64_t(1) << n_B;
  const std::int64_t dC = std::int64_t(1) << n_C;
  const std::int64_t dD = std::int64_t(1) << n_D;
  HpPuritySamples s;
  s.ac.resize(realizations);
  s.c.resize(realizations);
  parallel_for(realizations, [&](std::size_t r) {
    auto rng = substream(seed, r, 0);
    const auto U = sample_haar_unitary(static_cast<int>(dA * dB), rng);
    const double norm = 1.0 / std::sqrt(static_cast<double>(dA * dB));
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(dA * dC, dB * dD);
    for (std::int64_t ia = 0; ia < dA; ++ia)
      for (std::int64_t ib = 0; ib < dB; ++ib) {
        const std::int64_t col = (ia << n_B) | ib;
        for (std::int64_t out = 0; out < dA * dB; ++out) {
          const std::int64_t c = out >> n_D;
          const std::int64_t dd = out & (dD - 1);
          M(ia * dC + c, ib * dD + dd) += norm * U(out, col);
        }
      }
    const Eigen::MatrixXcd g_ac = M * M.adjoint();
    s.ac[r] = g_ac.squaredNorm();
    Eigen::MatrixXcd rho_c = Eigen::MatrixXcd::Zero(dC, dC);
    for (std::int64_t ia = 0; ia < dA; ++ia)
      rho_c += g_ac.block(ia * dC, ia * dC, dC, dC);
    s.c[r] = rho_c.squaredNorm();
  });
  return hp_assemble(s, static_cast<double>(dA));
}

}  // namespace u1chaos
