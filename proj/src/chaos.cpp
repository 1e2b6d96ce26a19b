#include "u1chaos/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "u1chaos/parallel.hpp"
#include "u1chaos/weingarten.hpp"

namespace u1chaos {

using cdouble = std::complex<double>;

void TimeGrid::validate() const {
  if (points < 2) throw std::domain_error("time_grid.points must be >= 2");
  if (t_max <= t_min) throw std::domain_error("time_grid.t_max must exceed t_min");
  if (log_spacing && t_min <= 0)
    throw std::domain_error("time_grid.t_min must be positive for log spacing");
}

std::vector<double> TimeGrid::times() const {
  validate();
  std::vector<double> ts(points);
  for (int i = 0; i < points; ++i) {
    const double f = static_cast<double>(i) / (points - 1);
    ts[i] = log_spacing ? t_min * std::pow(t_max / t_min, f)
                        : t_min + f * (t_max - t_min);
  }
  return ts;
}

double Histogram::density(int bin) const {
  const double w = edges[bin + 1] - edges[bin];
  if (total == 0 || w <= 0) return 0.0;
  return static_cast<double>(counts[bin]) / (static_cast<double>(total) * w);
}

std::string form_factor_name(FormFactorKind k) {
  switch (k) {
    case FormFactorKind::R2: return "R2";
    case FormFactorKind::R21: return "R21";
    case FormFactorKind::R22: return "R22";
    case FormFactorKind::R3: return "R3";
    case FormFactorKind::R31: return "R31";
    case FormFactorKind::R4: return "R4";
    case FormFactorKind::P2: return "P2";
    case FormFactorKind::P21: return "P21";
    case FormFactorKind::P22: return "P22";
    case FormFactorKind::P3: return "P3";
    case FormFactorKind::P31: return "P31";
    case FormFactorKind::P4: return "P4";
  }
  return "?";
}

FormFactorKind form_factor_from_name(const std::string& name) {
  for (auto k : {FormFactorKind::R2, FormFactorKind::R21, FormFactorKind::R22,
                 FormFactorKind::R3, FormFactorKind::R31, FormFactorKind::R4,
                 FormFactorKind::P2, FormFactorKind::P21, FormFactorKind::P22,
                 FormFactorKind::P3, FormFactorKind::P31, FormFactorKind::P4})
    if (form_factor_name(k) == name) return k;
  throw std::domain_error("unknown form factor kind: " + name);
}

std::int64_t TraceSamples::total_dim() const {
  std::int64_t n = 0;
  for (auto d : dims) n += d;
  return n;
}

TraceSamples traces_at(const SpectralEnsemble& se, double t) {
  TraceSamples ts;
  ts.dims = se.dims;
  ts.t1.assign(se.realizations(), {});
  ts.t2.assign(se.realizations(), {});
  for (int r = 0; r < se.realizations(); ++r) {
    ts.t1[r].resize(se.sectors());
    ts.t2[r].resize(se.sectors());
    for (int q = 0; q < se.sectors(); ++q) {
      const auto& w = se.eigenvalues[r][q];
      cdouble s1(0, 0), s2(0, 0);
      for (Eigen::Index a = 0; a < w.size(); ++a) {
        s1 += std::exp(cdouble(0, t * w(a)));
        s2 += std::exp(cdouble(0, 2 * t * w(a)));
      }
      ts.t1[r][q] = s1;
      ts.t2[r][q] = s2;
    }
  }
  return ts;
}

TraceSamples traces_of(const UnitarySet& us) {
  TraceSamples ts;
  ts.dims = us.dims;
  ts.t1.assign(us.count(), {});
  ts.t2.assign(us.count(), {});
  for (int r = 0; r < us.count(); ++r) {
    ts.t1[r].resize(us.dims.size());
    ts.t2[r].resize(us.dims.size());
    for (std::size_t q = 0; q < us.dims.size(); ++q) {
      const auto& U = us.samples[r][q];
      ts.t1[r][q] = U.trace();
      ts.t2[r][q] = (U * U).trace();
    }
  }
  return ts;
}

namespace {

struct ScopedTraces {
  std::vector<cdouble> s1, s2;  // per realization, within scope
  double n = 0;                 // scope dimension
};

ScopedTraces scoped(const TraceSamples& ts, Scope scope) {
  if (ts.realizations() == 0) throw NoDataError("form_factor: empty ensemble");
  ScopedTraces out;
  out.s1.resize(ts.realizations());
  out.s2.resize(ts.realizations());
  if (scope.whole) {
    out.n = static_cast<double>(ts.total_dim());
    for (int r = 0; r < ts.realizations(); ++r) {
      cdouble a(0, 0), b(0, 0);
      for (int q = 0; q < ts.sectors(); ++q) {
        a += ts.t1[r][q];
        b += ts.t2[r][q];
      }
      out.s1[r] = a;
      out.s2[r] = b;
    }
  } else {
    if (scope.sector < 0 || scope.sector >= ts.sectors())
      throw std::domain_error("form_factor: sector out of range");
    out.n = static_cast<double>(ts.dims[scope.sector]);
    for (int r = 0; r < ts.realizations(); ++r) {
      out.s1[r] = ts.t1[r][scope.sector];
      out.s2[r] = ts.t2[r][scope.sector];
    }
  }
  return out;
}

cdouble kind_sample(FormFactorKind kind, cdouble s1, cdouble s2, double n) {
  const cdouble c1 = std::conj(s1);
  switch (kind) {
    case FormFactorKind::R2: return s1 * c1;
    case FormFactorKind::R21: return s1 * s1;
    case FormFactorKind::R22: return s2 * c1;
    case FormFactorKind::R3: return s1 * s1 * c1;
    case FormFactorKind::R31: return s2 * c1 * c1;
    case FormFactorKind::R4: return s1 * s1 * c1 * c1;
    case FormFactorKind::P2: return s1 * c1 - n;
    case FormFactorKind::P21: return s1 * s1 - s2;
    case FormFactorKind::P22: return s2 * c1 - s1;
    case FormFactorKind::P3: return s1 * s1 * c1 - s2 * c1 - 2.0 * (n - 1.0) * s1;
    case FormFactorKind::P31:
      return s2 * c1 * c1 - 2.0 * s1 * c1 - s2 * std::conj(s2) + 2.0 * n;
    case FormFactorKind::P4: {
      const double a1 = std::norm(s1);
      const double a2 = std::norm(s2);
      return s1 * s1 * c1 * c1 - 2.0 * (s2 * c1 * c1).real() - 4.0 * n * a1 + a2 +
             2.0 * n * n + 8.0 * a1 - 6.0 * n;
    }
  }
  return {0, 0};
}

Estimate estimate_from(const std::vector<cdouble>& samples) {
  Estimate e;
  e.n = static_cast<long>(samples.size());
  std::vector<double> re(samples.size()), im(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    re[i] = samples[i].real();
    im[i] = samples[i].imag();
  }
  const auto mre = mean_stderr(re);
  const auto mim = mean_stderr(im);
  e.value = mre.mean;
  e.std_error = mre.std_error;
  e.complex_value = {mre.mean, mim.mean};
  return e;
}

}  // namespace

Estimate form_factor(const TraceSamples& ts, FormFactorKind kind, Scope scope) {
  const auto sc = scoped(ts, scope);
  std::vector<cdouble> samples(sc.s1.size());
  for (std::size_t r = 0; r < samples.size(); ++r)
    samples[r] = kind_sample(kind, sc.s1[r], sc.s2[r], sc.n);
  return estimate_from(samples);
}

Estimate form_factor_r2k(const TraceSamples& ts, int k, Scope scope) {
  if (k < 1) throw std::domain_error("form_factor_r2k: k >= 1");
  const auto sc = scoped(ts, scope);
  std::vector<cdouble> samples(sc.s1.size());
  for (std::size_t r = 0; r < samples.size(); ++r)
    samples[r] = std::pow(std::norm(sc.s1[r]), k);
  return estimate_from(samples);
}

ObservableSeries form_factor_series(const SpectralEnsemble& se, FormFactorKind kind,
                                    const TimeGrid& grid, Scope scope) {
  ObservableSeries out;
  out.label = form_factor_name(kind) + (scope.whole ? "" : "_q" + std::to_string(scope.sector));
  out.times = grid.times();
  out.values.resize(out.times.size());
  out.std_errors.resize(out.times.size());
  out.realizations = se.realizations();
  for (std::size_t i = 0; i < out.times.size(); ++i) {
    const auto ts = traces_at(se, out.times[i]);
    const auto est = form_factor(ts, kind, scope);
    out.values[i] = est.value;
    out.std_errors[i] = est.std_error;
  }
  return out;
}

// --- decomposition identities -------------------------------------------------

namespace {

struct SectorMeans {
  // per-sector complex means of Tr U, Tr U^2 and real means of |Tr U|^2 etc.
  std::vector<cdouble> m1, m21, m22, m3, m31, ms2;
  std::vector<double> m2, m4;
};

SectorMeans sector_means(const TraceSamples& ts, const std::vector<int>& keep) {
  const int S = ts.sectors();
  SectorMeans sm;
  sm.m1.assign(S, {0, 0});
  sm.m21.assign(S, {0, 0});
  sm.m22.assign(S, {0, 0});
  sm.m3.assign(S, {0, 0});
  sm.m31.assign(S, {0, 0});
  sm.ms2.assign(S, {0, 0});
  sm.m2.assign(S, 0.0);
  sm.m4.assign(S, 0.0);
  const double n = static_cast<double>(keep.size());
  for (int r : keep)
    for (int q = 0; q < S; ++q) {
      const cdouble s1 = ts.t1[r][q];
      const cdouble s2 = ts.t2[r][q];
      const cdouble c1 = std::conj(s1);
      sm.m1[q] += s1;
      sm.m21[q] += s1 * s1;
      sm.m22[q] += s2 * c1;
      sm.m3[q] += s1 * s1 * c1;
      sm.m31[q] += s2 * c1 * c1;
      sm.ms2[q] += s2;
      sm.m2[q] += std::norm(s1);
      sm.m4[q] += std::norm(s1) * std::norm(s1);
    }
  for (int q = 0; q < S; ++q) {
    sm.m1[q] /= n;
    sm.m21[q] /= n;
    sm.m22[q] /= n;
    sm.m3[q] /= n;
    sm.m31[q] /= n;
    sm.ms2[q] /= n;
    sm.m2[q] /= n;
    sm.m4[q] /= n;
  }
  return sm;
}

std::vector<int> all_indices(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

double r2_rhs(const SectorMeans& sm) {
  const int S = static_cast<int>(sm.m1.size());
  double rhs = 0.0;
  cdouble sum1(0, 0);
  double sum_abs = 0.0;
  for (int q = 0; q < S; ++q) {
    rhs += sm.m2[q];
    sum1 += sm.m1[q];
    sum_abs += std::norm(sm.m1[q]);
  }
  return rhs + std::norm(sum1) - sum_abs;
}

double lhs_r2(const TraceSamples& ts, const std::vector<int>& keep, double* se_out) {
  std::vector<double> samples;
  samples.reserve(keep.size());
  for (int r : keep) {
    cdouble tot(0, 0);
    for (int q = 0; q < ts.sectors(); ++q) tot += ts.t1[r][q];
    samples.push_back(std::norm(tot));
  }
  const auto m = mean_stderr(samples);
  if (se_out) *se_out = m.std_error;
  return m.mean;
}

// seven-term cycle-sum representation of R4 from per-sector means
double r4_rhs_cycle(const SectorMeans& sm) {
  const int S = static_cast<int>(sm.m1.size());
  long double acc = 0;
  for (int p = 0; p < S; ++p) acc += sm.m4[p];
  for (int p = 0; p < S; ++p)
    for (int q = 0; q < S; ++q) {
      if (p == q) continue;
      acc += 4.0L * (sm.m3[p] * std::conj(sm.m1[q])).real();
      acc += 2.0L * sm.m2[p] * sm.m2[q];
      acc += 1.0L * (sm.m21[p] * std::conj(sm.m21[q])).real();
      for (int u = 0; u < S; ++u) {
        if (u == p || u == q) continue;
        acc += 4.0L * (sm.m2[p] * sm.m1[q] * std::conj(sm.m1[u])).real();
        acc += 2.0L * (sm.m21[p] * std::conj(sm.m1[q]) * std::conj(sm.m1[u])).real();
        for (int v = 0; v < S; ++v) {
          if (v == p || v == q || v == u) continue;
          acc += (sm.m1[p] * sm.m1[q] * std::conj(sm.m1[u]) * std::conj(sm.m1[v])).real();
        }
      }
    }
  return static_cast<double>(acc);
}

}  // namespace

ObservableSeries r2_decomposition_check(const SpectralEnsemble& se, const TimeGrid& grid) {
  ObservableSeries out;
  out.label = "r2secs_rel_error";
  out.times = grid.times();
  out.values.resize(out.times.size());
  out.std_errors.resize(out.times.size());
  out.realizations = se.realizations();
  const auto keep = all_indices(se.realizations());
  for (std::size_t i = 0; i < out.times.size(); ++i) {
    const auto ts = traces_at(se, out.times[i]);
    double se_lhs = 0.0;
    const double lhs = lhs_r2(ts, keep, &se_lhs);
    const auto sm = sector_means(ts, keep);
    const double rhs = r2_rhs(sm);
    // jackknife standard error of the RHS
    const int n = se.realizations();
    std::vector<double> loo(n);
    for (int m = 0; m < n; ++m) {
      std::vector<int> k2;
      k2.reserve(n - 1);
      for (int r = 0; r < n; ++r)
        if (r != m) k2.push_back(r);
      loo[m] = r2_rhs(sector_means(ts, k2));
    }
    double mean_loo = 0;
    for (double v : loo) mean_loo += v;
    mean_loo /= n;
    double var = 0;
    for (double v : loo) var += (v - mean_loo) * (v - mean_loo);
    const double se_rhs = std::sqrt(var * (n - 1.0) / n);
    const double combined = std::sqrt(se_lhs * se_lhs + se_rhs * se_rhs);
    out.std_errors[i] = combined / std::abs(lhs);
    out.values[i] = (std::abs(lhs) < 10 * se_lhs)
                        ? std::numeric_limits<double>::quiet_NaN()
                        : std::abs(lhs - rhs) / std::abs(lhs);
  }
  return out;
}

namespace {

// full diagonal-split representation; needs E|Tr U^2|^2 as well
struct SplitMeans {
  SectorMeans sm;
  std::vector<double> ms2_abs2;  // E |Tr U^2|^2 per sector
};

SplitMeans split_means(const TraceSamples& ts, const std::vector<int>& keep) {
  SplitMeans out;
  out.sm = sector_means(ts, keep);
  out.ms2_abs2.assign(ts.sectors(), 0.0);
  for (int r : keep)
    for (int q = 0; q < ts.sectors(); ++q) out.ms2_abs2[q] += std::norm(ts.t2[r][q]);
  for (auto& v : out.ms2_abs2) v /= static_cast<double>(keep.size());
  return out;
}

double r4_rhs_split_full(const SplitMeans& s, const std::vector<std::int64_t>& dims) {
  const auto& sm = s.sm;
  const int S = static_cast<int>(sm.m1.size());
  double L = 0;
  for (auto d : dims) L += static_cast<double>(d);
  std::vector<cdouble> p1(S), p21(S), p22(S), p3(S), p31(S), p1sq(S);
  std::vector<double> p2(S), p4(S), p2sq(S);
  for (int q = 0; q < S; ++q) {
    const double d = static_cast<double>(dims[q]);
    p1[q] = sm.m1[q];
    p1sq[q] = sm.ms2[q];
    p2[q] = sm.m2[q] - d;
    p21[q] = sm.m21[q] - sm.ms2[q];
    p22[q] = sm.m22[q] - sm.m1[q];
    p3[q] = sm.m3[q] - sm.m22[q] - 2.0 * (d - 1.0) * sm.m1[q];
    p31[q] = sm.m31[q] - 2.0 * sm.m2[q] - s.ms2_abs2[q] + 2.0 * d;
    p4[q] = sm.m4[q] - 2.0 * (sm.m31[q]).real() - 4.0 * d * sm.m2[q] + s.ms2_abs2[q] +
            2.0 * d * d + 8.0 * sm.m2[q] - 6.0 * d;
    p2sq[q] = s.ms2_abs2[q] - d;
  }
  long double acc = 0;
  for (int p = 0; p < S; ++p) {
    acc += p4[p];
    acc += 2.0L * p31[p].real();
    acc += 4.0L * (L - 1.0) * p2[p];
    acc += p2sq[p];
  }
  for (int p = 0; p < S; ++p)
    for (int q = 0; q < S; ++q) {
      if (p == q) continue;
      acc += 4.0L * (p3[p] * std::conj(p1[q])).real();
      acc += 2.0L * p2[p] * p2[q];
      acc += (p21[p] * std::conj(p21[q])).real();
      acc += 4.0L * (p22[p] * std::conj(p1[q])).real();
      acc += 2.0L * (p1sq[p] * std::conj(p21[q])).real();
      acc += 4.0L * (L - 1.0) * (p1[p] * std::conj(p1[q])).real();
      acc += (p1sq[p] * std::conj(p1sq[q])).real();
      for (int u = 0; u < S; ++u) {
        if (u == p || u == q) continue;
        acc += 4.0L * (p2[p] * p1[q] * std::conj(p1[u])).real();
        acc += 2.0L * (p21[p] * std::conj(p1[q]) * std::conj(p1[u])).real();
        acc += 2.0L * (p1sq[p] * std::conj(p1[q]) * std::conj(p1[u])).real();
        for (int v = 0; v < S; ++v) {
          if (v == p || v == q || v == u) continue;
          acc += (p1[p] * p1[q] * std::conj(p1[u]) * std::conj(p1[v])).real();
        }
      }
    }
  acc += 2.0L * L * L - L;
  return static_cast<double>(acc);
}

}  // namespace

R4Check r4_decomposition_check(const SpectralEnsemble& se, const TimeGrid& grid) {
  R4Check out;
  out.rel_error.label = "r4secs_rel_error";
  out.rel_error.times = grid.times();
  out.rel_error.values.resize(grid.points);
  out.rel_error.std_errors.resize(grid.points);
  out.rel_error.realizations = se.realizations();
  const int n = se.realizations();
  const auto keep = all_indices(n);
  double worst_gap = 0.0;
  for (int i = 0; i < grid.points; ++i) {
    const auto ts = traces_at(se, out.rel_error.times[i]);
    // direct LHS
    std::vector<double> samples(n);
    for (int r = 0; r < n; ++r) {
      cdouble tot(0, 0);
      for (int q = 0; q < ts.sectors(); ++q) tot += ts.t1[r][q];
      samples[r] = std::norm(tot) * std::norm(tot);
    }
    const auto lhs = mean_stderr(samples);
    const auto sms = split_means(ts, keep);
    const double rhs_cycle = r4_rhs_cycle(sms.sm);
    const double rhs_split = r4_rhs_split_full(sms, ts.dims);
    worst_gap = std::max(worst_gap,
                         std::abs(rhs_cycle - rhs_split) / std::max(1e-300, std::abs(rhs_cycle)));
    // bootstrap standard error of the RHS (fixed substream: deterministic)
    const int B = 48;
    std::vector<double> boots(B);
    for (int b = 0; b < B; ++b) {
      auto rng = substream(0xB00757 + se.spec.seed, b, static_cast<std::uint64_t>(i));
      std::vector<int> pick(n);
      for (int r = 0; r < n; ++r) pick[r] = static_cast<int>(rng.next_u64() % n);
      boots[b] = r4_rhs_cycle(sector_means(ts, pick));
    }
    const auto bm = mean_stderr(boots);
    const double se_rhs = bm.std_error * std::sqrt(static_cast<double>(B));  // sample std
    const double combined = std::sqrt(lhs.std_error * lhs.std_error + se_rhs * se_rhs);
    out.rel_error.std_errors[i] = combined / std::abs(lhs.mean);
    out.rel_error.values[i] = (std::abs(lhs.mean) < 10 * lhs.std_error)
                                  ? std::numeric_limits<double>::quiet_NaN()
                                  : std::abs(lhs.mean - rhs_cycle) / std::abs(lhs.mean);
  }
  out.max_representation_gap = worst_gap;
  return out;
}

double general_r2k_partition(const TraceSamples& ts, int k) {
  const auto keep = all_indices(ts.realizations());
  if (k == 1) return r2_rhs(sector_means(ts, keep));
  if (k == 2) return r4_rhs_cycle(sector_means(ts, keep));
  throw UnsupportedOrderError("general_r2k_partition: k <= 2");
}

ObservableSeries f1_analytic(const SpectralEnsemble& se, const TimeGrid& grid) {
  ObservableSeries out;
  out.label = "f1_analytic";
  out.times = grid.times();
  out.values.resize(grid.points);
  out.std_errors.resize(grid.points);
  out.realizations = se.realizations();
  const int n = se.realizations();
  auto assemble = [&](const SectorMeans& sm, const std::vector<std::int64_t>& dims) {
    double f = 0.0;
    const int S = static_cast<int>(dims.size());
    for (int q = 0; q < S; ++q) {
      const double d = static_cast<double>(dims[q]);
      if (dims[q] == 1)
        f += 1.0;
      else
        f += (sm.m2[q] * sm.m2[q] + d * d - 2.0 * sm.m2[q]) / (d * d - 1.0);
    }
    for (int p = 0; p < S; ++p)
      for (int q = 0; q < S; ++q) {
        if (p == q) continue;
        f += std::norm(sm.m1[p]) * std::norm(sm.m1[q]) /
             (static_cast<double>(dims[p]) * static_cast<double>(dims[q]));
      }
    return f;
  };
  for (int i = 0; i < grid.points; ++i) {
    const auto ts = traces_at(se, out.times[i]);
    const auto sm = sector_means(ts, all_indices(n));
    out.values[i] = assemble(sm, ts.dims);
    // jackknife
    std::vector<double> loo(n);
    for (int m = 0; m < n; ++m) {
      std::vector<int> k2;
      k2.reserve(n - 1);
      for (int r = 0; r < n; ++r)
        if (r != m) k2.push_back(r);
      loo[m] = assemble(sector_means(ts, k2), ts.dims);
    }
    double mean_loo = 0;
    for (double v : loo) mean_loo += v;
    mean_loo /= n;
    double var = 0;
    for (double v : loo) var += (v - mean_loo) * (v - mean_loo);
    out.std_errors[i] = std::sqrt(var * (n - 1.0) / n);
  }
  return out;
}

// --- frame potential -----------------------------------------------------------

namespace {

// pair-trace Gram: G(m, n) = sum_q Tr(U_{m,q} U_{n,q}^+)
Eigen::MatrixXcd pair_gram(const std::vector<std::vector<Eigen::MatrixXcd>>& samples) {
  const int n = static_cast<int>(samples.size());
  std::int64_t cols = 0;
  for (const auto& blk : samples.front()) cols += blk.size();
  Eigen::MatrixXcd A(n, cols);
  for (int r = 0; r < n; ++r) {
    std::int64_t off = 0;
    for (const auto& blk : samples[r]) {
      A.row(r).segment(off, blk.size()) =
          Eigen::Map<const Eigen::VectorXcd>(blk.data(), blk.size()).transpose();
      off += blk.size();
    }
  }
  return A * A.adjoint();
}

Estimate pair_estimate(const Eigen::MatrixXd& pair_values) {
  const int n = static_cast<int>(pair_values.rows());
  if (n < 2) throw NoDataError("frame_potential: needs >= 2 realizations");
  double total = 0;
  std::vector<double> row_sums(n, 0.0);
  for (int m = 0; m < n; ++m)
    for (int k = 0; k < n; ++k) {
      if (m == k) continue;
      total += pair_values(m, k);
      row_sums[m] += pair_values(m, k) + pair_values(k, m);
    }
  Estimate e;
  e.n = n;
  const double pairs = static_cast<double>(n) * (n - 1);
  e.value = total / pairs;
  e.complex_value = {e.value, 0.0};
  // delete-one jackknife
  std::vector<double> loo(n);
  const double pairs_loo = static_cast<double>(n - 1) * (n - 2);
  for (int m = 0; m < n; ++m) loo[m] = (total - row_sums[m]) / pairs_loo;
  double mean_loo = 0;
  for (double v : loo) mean_loo += v;
  mean_loo /= n;
  double var = 0;
  for (double v : loo) var += (v - mean_loo) * (v - mean_loo);
  e.std_error = std::sqrt(var * (n - 1.0) / n);
  return e;
}

Estimate frame_potential_samples(const std::vector<std::vector<Eigen::MatrixXcd>>& samples,
                                 int k) {
  const int n = static_cast<int>(samples.size());
  if (n < 2) throw NoDataError("frame_potential: needs >= 2 realizations");
  const auto G = pair_gram(samples);
  Eigen::MatrixXd vals(n, n);
  for (int m = 0; m < n; ++m)
    for (int c = 0; c < n; ++c)
      vals(m, c) = std::pow(std::norm(G(m, c)), k);
  return pair_estimate(vals);
}

}  // namespace

Estimate frame_potential(const UnitarySet& us, int k) {
  return frame_potential_samples(us.samples, k);
}

Estimate frame_potential_at(const EigenEnsemble& ee, double t, int k) {
  std::vector<std::vector<Eigen::MatrixXcd>> samples(ee.count());
  for (int r = 0; r < ee.count(); ++r) samples[r] = ee.unitary_at(r, t);
  return frame_potential_samples(samples, k);
}

ObservableSeries fp_direct_series(const EigenEnsemble& ee, const TimeGrid& grid,
                                  int k, int threads) {
  ObservableSeries out;
  out.label = k == 1 ? "f1_direct" : "f" + std::to_string(k) + "_direct";
  out.times = grid.times();
  out.values.resize(grid.points);
  out.std_errors.resize(grid.points);
  out.realizations = ee.count();
  parallel_for(
      grid.points,
      [&](std::size_t i) {
        const auto est = frame_potential_at(ee, out.times[i], k);
        out.values[i] = est.value;
        out.std_errors[i] = est.std_error;
      },
      threads);
  return out;
}

namespace {

std::vector<Eigen::MatrixXcd> conjugated_dense(
    const std::vector<std::vector<Eigen::MatrixXcd>>& samples,
    const std::vector<std::int64_t>& dims, const ChargeBasisPtr& basis, int round,
    std::uint64_t seed) {
  const int n = static_cast<int>(samples.size());
  std::int64_t L = 0;
  for (auto d : dims) L += d;
  std::vector<Eigen::MatrixXcd> out(n);
  for (int r = 0; r < n; ++r) {
    Eigen::MatrixXcd dense;
    if (basis) {
      BlockMatrix bm;
      bm.basis = basis;
      bm.blocks = samples[r];
      bm.flavor = MatrixFlavor::general;
      dense = embed_blocks(bm);
    } else {
      dense = samples[r].front();
    }
    auto rng = substream(seed, r, 0x77000 + static_cast<std::uint64_t>(round));
    const auto W = sample_haar_unitary(static_cast<int>(L), rng);
    out[r] = W * dense * W.adjoint();
  }
  return out;
}

Eigen::MatrixXd dense_pair_values(const std::vector<Eigen::MatrixXcd>& mats, int k) {
  const int n = static_cast<int>(mats.size());
  std::int64_t cols = mats.front().size();
  Eigen::MatrixXcd A(n, cols);
  for (int r = 0; r < n; ++r)
    A.row(r) = Eigen::Map<const Eigen::VectorXcd>(mats[r].data(), cols).transpose();
  const Eigen::MatrixXcd G = A * A.adjoint();
  Eigen::MatrixXd vals(n, n);
  for (int m = 0; m < n; ++m)
    for (int c = 0; c < n; ++c) vals(m, c) = std::pow(std::norm(G(m, c)), k);
  return vals;
}

Estimate k_invariance_samples(const std::vector<std::vector<Eigen::MatrixXcd>>& samples,
                              const std::vector<std::int64_t>& dims,
                              const ChargeBasisPtr& basis, int k, int rounds,
                              std::uint64_t seed) {
  const int n = static_cast<int>(samples.size());
  if (n < 2) throw NoDataError("k_invariance: needs >= 2 realizations");
  if (rounds < 1) throw std::domain_error("k_invariance: rounds >= 1");
  const auto G = pair_gram(samples);
  Eigen::MatrixXd ve(n, n);
  for (int m = 0; m < n; ++m)
    for (int c = 0; c < n; ++c) ve(m, c) = std::pow(std::norm(G(m, c)), k);
  Eigen::MatrixXd vt = Eigen::MatrixXd::Zero(n, n);
  for (int round = 0; round < rounds; ++round) {
    const auto conj = conjugated_dense(samples, dims, basis, round, seed);
    vt += dense_pair_values(conj, k);
  }
  vt /= static_cast<double>(rounds);
  const Eigen::MatrixXd diff = ve - vt;
  return pair_estimate(diff);
}

}  // namespace

Estimate k_invariance(const UnitarySet& us, int k, int rounds, std::uint64_t seed) {
  return k_invariance_samples(us.samples, us.dims, us.basis, k, rounds, seed);
}

Estimate k_invariance_at(const EigenEnsemble& ee, double t, int k, int rounds,
                         std::uint64_t seed) {
  std::vector<std::vector<Eigen::MatrixXcd>> samples(ee.count());
  for (int r = 0; r < ee.count(); ++r) samples[r] = ee.unitary_at(r, t);
  return k_invariance_samples(samples, ee.dims, ee.basis, k, rounds, seed);
}

// --- OTOCs ----------------------------------------------------------------------

namespace {

bool block_diagonal_ops(const std::vector<Eigen::MatrixXcd>& ops, const ChargeBasis& basis) {
  for (const auto& op : ops)
    for (Eigen::Index r = 0; r < op.rows(); ++r)
      for (Eigen::Index c = 0; c < op.cols(); ++c)
        if (basis.charge_of[r] != basis.charge_of[c] && std::abs(op(r, c)) > 1e-12)
          return false;
  return true;
}

cdouble otoc_trace(const Eigen::MatrixXcd& U, const std::vector<Eigen::MatrixXcd>& ops) {
  Eigen::MatrixXcd acc = ops[0] * U.adjoint() * ops[1] * U;
  if (ops.size() == 4) acc = acc * ops[2] * U.adjoint() * ops[3] * U;
  return acc.trace();
}

OtocResult otoc_impl(const std::vector<std::vector<Eigen::MatrixXcd>>& samples,
                     const std::vector<std::int64_t>& dims, const ChargeBasisPtr& basis,
                     const std::vector<Eigen::MatrixXcd>& ops, Scope scope) {
  if (ops.size() != 2 && ops.size() != 4)
    throw std::domain_error("otoc: supply A1,B1 or A1,B1,A2,B2 (k <= 2)");
  const int n = static_cast<int>(samples.size());
  if (n == 0) throw NoDataError("otoc: empty ensemble");
  std::int64_t L = 0;
  for (auto d : dims) L += d;
  for (const auto& op : ops)
    if (op.rows() != (scope.whole ? L : dims.at(scope.sector)) && scope.whole)
      throw std::domain_error("otoc: operator dimension mismatch");

  OtocResult out;
  std::vector<cdouble> vals(n);
  if (!scope.whole) {
    const int q = scope.sector;
    const double d = static_cast<double>(dims.at(q));
    // operators given on the full space are cut to the sector block; operators
    // already of the block size are used as-is
    std::vector<Eigen::MatrixXcd> blocks;
    for (const auto& op : ops) {
      if (op.rows() == dims.at(q)) {
        blocks.push_back(op);
      } else {
        if (!basis) throw std::domain_error("otoc: sector scope needs a charge basis");
        const auto& states = basis->sector_states[q];
        Eigen::MatrixXcd blk(states.size(), states.size());
        for (std::size_t a = 0; a < states.size(); ++a)
          for (std::size_t b = 0; b < states.size(); ++b) blk(a, b) = op(states[a], states[b]);
        blocks.push_back(std::move(blk));
      }
    }
    for (int r = 0; r < n; ++r) vals[r] = otoc_trace(samples[r][q], blocks) / d;
    out.est = estimate_from(vals);
    return out;
  }

  const bool blockdiag = basis && block_diagonal_ops(ops, *basis);
  double worst_residual = 0.0;
  std::vector<std::vector<Eigen::MatrixXcd>> op_blocks;
  if (blockdiag) {
    op_blocks.resize(ops.size());
    for (std::size_t o = 0; o < ops.size(); ++o)
      op_blocks[o] = extract_blocks(ops[o], basis, MatrixFlavor::general, 1e-12).blocks;
  }
  for (int r = 0; r < n; ++r) {
    Eigen::MatrixXcd dense;
    if (basis) {
      BlockMatrix bm;
      bm.basis = basis;
      bm.blocks = samples[r];
      bm.flavor = MatrixFlavor::general;
      dense = embed_blocks(bm);
    } else {
      dense = samples[r].front();
    }
    const cdouble whole = otoc_trace(dense, ops) / static_cast<double>(L);
    vals[r] = whole;
    if (blockdiag) {
      cdouble sector_sum(0, 0);
      for (std::size_t q = 0; q < dims.size(); ++q) {
        std::vector<Eigen::MatrixXcd> blk;
        for (std::size_t o = 0; o < ops.size(); ++o) blk.push_back(op_blocks[o][q]);
        sector_sum += otoc_trace(samples[r][q], blk);
      }
      sector_sum /= static_cast<double>(L);
      worst_residual = std::max(worst_residual, std::abs(whole - sector_sum));
    }
  }
  out.est = estimate_from(vals);
  if (blockdiag) out.max_sector_residual = worst_residual;
  return out;
}

}  // namespace

OtocResult otoc(const UnitarySet& us, const std::vector<Eigen::MatrixXcd>& ops,
                Scope scope) {
  return otoc_impl(us.samples, us.dims, us.basis, ops, scope);
}

OtocResult otoc_at(const EigenEnsemble& ee, double t,
                   const std::vector<Eigen::MatrixXcd>& ops, Scope scope) {
  std::vector<std::vector<Eigen::MatrixXcd>> samples(ee.count());
  for (int r = 0; r < ee.count(); ++r) samples[r] = ee.unitary_at(r, t);
  return otoc_impl(samples, ee.dims, ee.basis, ops, scope);
}

OtocApprox otoc_kinv_approx(const EigenEnsemble& ee,
                            const std::vector<Eigen::MatrixXcd>& ops, int k,
                            const TimeGrid& grid) {
  if (k < 1 || k > 2) throw std::domain_error("otoc_kinv_approx: k <= 2");
  if (static_cast<int>(ops.size()) != 2 * k)
    throw std::domain_error("otoc_kinv_approx: need 2k operators");
  if (!ee.basis || !block_diagonal_ops(ops, *ee.basis))
    throw std::domain_error("otoc_kinv_approx: operators must be block diagonal");

  const double L = static_cast<double>(std::accumulate(ee.dims.begin(), ee.dims.end(),
                                                       std::int64_t(0)));
  // Tr(A_{1,p} B_{1,p} ... ) per sector
  std::vector<std::vector<Eigen::MatrixXcd>> op_blocks(ops.size());
  for (std::size_t o = 0; o < ops.size(); ++o)
    op_blocks[o] = extract_blocks(ops[o], ee.basis, MatrixFlavor::general, 1e-12).blocks;
  std::vector<cdouble> prod_tr(ee.dims.size());
  for (std::size_t q = 0; q < ee.dims.size(); ++q) {
    Eigen::MatrixXcd prod = op_blocks[0][q];
    for (std::size_t o = 1; o < ops.size(); ++o) prod = prod * op_blocks[o][q];
    prod_tr[q] = prod.trace();
  }

  OtocApprox out;
  out.approx.label = "otoc_sector_formfactor";
  out.direct.label = "otoc_direct";
  out.approx.times = out.direct.times = grid.times();
  out.approx.realizations = out.direct.realizations = ee.count();
  out.approx.values.resize(grid.points);
  out.approx.std_errors.resize(grid.points);
  out.direct.values.resize(grid.points);
  out.direct.std_errors.resize(grid.points);
  const auto se = ee.spectra();
  for (int i = 0; i < grid.points; ++i) {
    const double t = out.approx.times[i];
    const auto ts = traces_at(se, t);
    cdouble approx(0, 0);
    double se_sq = 0.0;
    for (std::size_t q = 0; q < ee.dims.size(); ++q) {
      const auto r2k = form_factor_r2k(ts, k, Scope::Sector(static_cast<int>(q)));
      const double dpow = std::pow(static_cast<double>(ee.dims[q]), 2 * k);
      approx += r2k.value / (dpow * L) * prod_tr[q];
      se_sq += std::pow(r2k.std_error / (dpow * L), 2) * std::norm(prod_tr[q]);
    }
    out.approx.values[i] = approx.real();
    out.approx.std_errors[i] = std::sqrt(se_sq);
    const auto direct = otoc_at(ee, t, ops, Scope::Whole());
    out.direct.values[i] = direct.est.value;
    out.direct.std_errors[i] = direct.est.std_error;
  }
  return out;
}

// --- density of states ------------------------------------------------------------

namespace {

std::vector<double> pooled_shifted(const SpectralEnsemble& se, Scope scope,
                                   bool shift_to_ground) {
  std::vector<double> pool;
  for (int r = 0; r < se.realizations(); ++r) {
    double ground = 0.0;
    if (shift_to_ground) {
      ground = std::numeric_limits<double>::infinity();
      if (scope.whole) {
        for (int q = 0; q < se.sectors(); ++q)
          if (se.eigenvalues[r][q].size() > 0)
            ground = std::min(ground, se.eigenvalues[r][q](0));
      } else {
        ground = se.eigenvalues[r][scope.sector](0);
      }
    }
    auto push = [&](const Eigen::VectorXd& w) {
      for (Eigen::Index a = 0; a < w.size(); ++a) pool.push_back(w(a) - ground);
    };
    if (scope.whole) {
      for (int q = 0; q < se.sectors(); ++q) push(se.eigenvalues[r][q]);
    } else {
      push(se.eigenvalues[r][scope.sector]);
    }
  }
  return pool;
}

}  // namespace

Histogram density_of_states(const SpectralEnsemble& se, int bins, Scope scope,
                            bool shift_to_ground) {
  if (bins < 10) throw std::domain_error("density_of_states: bins >= 10");
  auto pool = pooled_shifted(se, scope, shift_to_ground);
  if (pool.empty()) throw NoDataError("density_of_states: empty ensemble");
  const auto [lo_it, hi_it] = std::minmax_element(pool.begin(), pool.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi <= lo) hi = lo + 1.0;
  Histogram h;
  h.edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b)
    h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / bins;
  h.counts.assign(bins, 0);
  for (double v : pool) {
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    b = std::clamp(b, 0, bins - 1);
    ++h.counts[b];
  }
  h.total = static_cast<std::int64_t>(pool.size());
  return h;
}

double dos_edge_exponent(const SpectralEnsemble& se, Scope scope, double decile, int bins) {
  auto pool = pooled_shifted(se, scope, true);
  std::sort(pool.begin(), pool.end());
  // drop the exact zeros left by the per-realization ground-state shift
  std::vector<double> positive;
  positive.reserve(pool.size());
  for (double v : pool)
    if (v > 1e-12) positive.push_back(v);
  if (positive.size() < 100) throw NoDataError("dos_edge_exponent: too few levels");
  const std::size_t cut = std::max<std::size_t>(
      10, static_cast<std::size_t>(positive.size() * decile));
  const double hi = positive[std::min(cut, positive.size() - 1)];
  std::vector<double> edges(bins + 1);
  for (int b = 0; b <= bins; ++b) edges[b] = hi * static_cast<double>(b) / bins;
  std::vector<std::int64_t> counts(bins, 0);
  for (double v : positive) {
    if (v > hi) break;
    int b = std::clamp(static_cast<int>(v / hi * bins), 0, bins - 1);
    ++counts[b];
  }
  // least squares of log(density) on log(midpoint) over nonempty bins
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int b = 0; b < bins; ++b) {
    if (counts[b] <= 0) continue;
    const double mid = 0.5 * (edges[b] + edges[b + 1]);
    const double x = std::log(mid);
    const double y = std::log(static_cast<double>(counts[b]) / (edges[b + 1] - edges[b]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 3) throw NoDataError("dos_edge_exponent: too few populated bins");
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace u1chaos
