#include "u1chaos/weingarten.hpp"

#include <algorithm>
#include <cassert>
#include <mutex>
#include <sstream>

#include "u1chaos/permutations.hpp"

namespace u1chaos {

// ---------------------------------------------------------------------------
// Weingarten table by exact solve of  sum_tau L^{cycles(sigma^-1 tau)} Wg(tau)
// = delta_{sigma,id}, collapsed onto conjugacy classes.

namespace {

// Solve A x = b over rational functions by Gaussian elimination with exact
// SymbolicRational arithmetic (tiny systems: at most 5x5).
std::vector<SymbolicRational> solve_system(std::vector<std::vector<SymbolicRational>> A,
                                           std::vector<SymbolicRational> b) {
  const std::size_t n = A.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && A[piv][col].is_zero()) ++piv;
    if (piv == n) throw std::logic_error("weingarten: singular Gram system");
    std::swap(A[piv], A[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || A[r][col].is_zero()) continue;
      const SymbolicRational f = A[r][col] / A[col][col];
      for (std::size_t c = col; c < n; ++c) A[r][c] = A[r][c] - f * A[col][c];
      b[r] = b[r] - f * b[col];
    }
  }
  std::vector<SymbolicRational> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / A[i][i];
  return x;
}

std::map<std::vector<int>, SymbolicRational> compute_wg_table(int p) {
  const auto perms = all_permutations(p);
  std::map<std::vector<int>, std::vector<Perm>> classes;
  for (const auto& pm : perms) classes[cycle_type(pm)].push_back(pm);
  std::vector<std::vector<int>> types;
  for (const auto& [ct, members] : classes) types.push_back(ct);
  const std::size_t n = types.size();

  const Polynomial L = Polynomial::symbol();
  std::vector<Polynomial> Lpow(p + 1, Polynomial(BigInt(1)));
  for (int k = 1; k <= p; ++k) Lpow[k] = Lpow[k - 1] * L;

  std::vector<std::vector<SymbolicRational>> A(n, std::vector<SymbolicRational>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const Perm sigma_inv = perm_inverse(classes[types[r]].front());
    for (std::size_t c = 0; c < n; ++c) {
      Polynomial acc;
      for (const auto& tau : classes[types[c]])
        acc = acc + Lpow[cycle_count(perm_compose(sigma_inv, tau))];
      A[r][c] = SymbolicRational(acc, Polynomial(BigInt(1)));
    }
  }
  std::vector<SymbolicRational> b(n);
  const std::vector<int> id_type(p, 1);
  for (std::size_t r = 0; r < n; ++r)
    b[r] = (types[r] == id_type) ? SymbolicRational::integer(1) : SymbolicRational();

  const auto x = solve_system(std::move(A), std::move(b));
  std::map<std::vector<int>, SymbolicRational> table;
  for (std::size_t i = 0; i < n; ++i) table[types[i]] = x[i];
  return table;
}

const std::map<std::vector<int>, SymbolicRational>& wg_table(int p) {
  static std::mutex mu;
  static std::map<int, std::map<std::vector<int>, SymbolicRational>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(p);
  if (it == cache.end()) it = cache.emplace(p, compute_wg_table(p)).first;
  return it->second;
}

}  // namespace

SymbolicRational wg_unitary(const std::vector<int>& cycle_type_in) {
  std::vector<int> ct = cycle_type_in;
  std::sort(ct.rbegin(), ct.rend());
  int p = 0;
  for (int c : ct) {
    if (c < 1) throw std::domain_error("wg_unitary: invalid cycle type");
    p += c;
  }
  if (p < 1 || p > 4)
    throw UnsupportedOrderError("wg_unitary: moment order p <= 4 only");
  return wg_table(p).at(ct);
}

double wg_unitary_at(const std::vector<int>& cycle_type_in, std::int64_t L) {
  int p = 0;
  for (int c : cycle_type_in) p += c;
  if (L < p)
    throw SingularDimensionError("wg_unitary: numeric dimension below moment order");
  return wg_unitary(cycle_type_in).eval(L);
}

SymbolicRational wg_coe(const std::vector<int>& cycle_type_in) {
  std::vector<int> ct = cycle_type_in;
  std::sort(ct.rbegin(), ct.rend());
  const Polynomial L = Polynomial::symbol();
  const Polynomial one(BigInt(1));
  auto shift = [&](long k) { return L + Polynomial(BigInt(k)); };
  if (ct == std::vector<int>{1}) return SymbolicRational(one, shift(1));
  if (ct == std::vector<int>{1, 1})
    return SymbolicRational(shift(2), L * shift(1) * shift(3));
  if (ct == std::vector<int>{2})
    return SymbolicRational(-one, L * shift(1) * shift(3));
  throw UnsupportedOrderError("wg_coe: only p <= 2 cycle types are tabulated");
}

std::int64_t lis_count(int k, int L) {
  if (k < 1 || k > 8) throw UnsupportedOrderError("lis_count: k must be in [1,8]");
  if (L < 1) throw std::domain_error("lis_count: L must be positive");
  std::int64_t count = 0;
  Perm a = perm_identity(k);
  do {
    if (lis_length(a) <= L) ++count;
  } while (std::next_permutation(a.begin(), a.end()));
  return count;
}

// ---------------------------------------------------------------------------
// Moment engine

int WiringSpec::count_u() const {
  int n = 0;
  for (const auto& w : words)
    for (const auto& l : w.letters)
      if (l.kind == LetterKind::U) ++n;
  return n;
}
int WiringSpec::count_udag() const {
  int n = 0;
  for (const auto& w : words)
    for (const auto& l : w.letters)
      if (l.kind == LetterKind::Udag) ++n;
  return n;
}

namespace {
// lexicographically smallest rotation (ids may repeat within a cycle)
void canonical_rotation(std::vector<int>& cyc) {
  if (cyc.size() < 2) return;
  std::vector<int> best = cyc;
  std::vector<int> cur = cyc;
  for (std::size_t k = 1; k < cyc.size(); ++k) {
    std::rotate(cur.begin(), cur.begin() + 1, cur.end());
    if (cur < best) best = cur;
  }
  cyc = best;
}
}  // namespace

bool TraceMonomial::operator<(const TraceMonomial& o) const {
  if (traces != o.traces) return traces < o.traces;
  return open < o.open;
}
bool TraceMonomial::operator==(const TraceMonomial& o) const {
  return traces == o.traces && open == o.open;
}

std::string TraceMonomial::str(const std::vector<std::string>& names) const {
  auto name = [&](int id) {
    return (id >= 0 && id < static_cast<int>(names.size())) ? names[id]
                                                            : "O" + std::to_string(id);
  };
  std::ostringstream os;
  bool first = true;
  for (const auto& tr : traces) {
    if (!first) os << " ";
    first = false;
    os << "Tr[";
    for (std::size_t i = 0; i < tr.size(); ++i) {
      if (i) os << ".";
      os << name(tr[i]);
    }
    os << "]";
  }
  if (open) {
    if (!first) os << " ";
    first = false;
    if (open->empty()) {
      os << "Id";
    } else {
      for (std::size_t i = 0; i < open->size(); ++i) {
        if (i) os << ".";
        os << name((*open)[i]);
      }
    }
  }
  if (first) os << "1";
  return os.str();
}

namespace {

constexpr int kExt = -1;  // terminal marker

struct Port {
  int letter = kExt;  // global letter index or kExt
  int side = 0;       // 0 = letter's left slot, 1 = right slot
};

struct Engine {
  // flattened letters
  std::vector<MomentLetter> letters;
  std::vector<int> bond_of_slot;  // (letter, side) -> bond id, 2 slots per letter
  std::vector<std::array<Port, 2>> bond_ports;
  std::vector<int> u_letters, udag_letters;
  bool has_open_word = false;
  int ext_left_bond = -1, ext_right_bond = -1;

  int slot_bond(int letter, int side) const { return bond_of_slot[2 * letter + side]; }

  void build(const WiringSpec& w) {
    for (const auto& word : w.words) {
      if (word.letters.empty()) {
        if (!word.traced) throw std::domain_error("moment: empty open word");
        continue;  // Tr over nothing contributes no letters (treated as absent)
      }
      const int base = static_cast<int>(letters.size());
      const int n = static_cast<int>(word.letters.size());
      for (const auto& l : word.letters) letters.push_back(l);
      bond_of_slot.resize(2 * letters.size(), -1);
      if (word.traced) {
        for (int i = 0; i < n; ++i) {
          const int a = base + i;
          const int b = base + (i + 1) % n;
          const int bond = new_bond({a, 1}, {b, 0});
          bond_of_slot[2 * a + 1] = bond;
          bond_of_slot[2 * b + 0] = bond;
        }
      } else {
        if (has_open_word) throw std::domain_error("moment: at most one open word");
        has_open_word = true;
        ext_left_bond = new_bond({kExt, 0}, {base, 0});
        bond_of_slot[2 * base + 0] = ext_left_bond;
        for (int i = 0; i + 1 < n; ++i) {
          const int a = base + i;
          const int b = base + i + 1;
          const int bond = new_bond({a, 1}, {b, 0});
          bond_of_slot[2 * a + 1] = bond;
          bond_of_slot[2 * b + 0] = bond;
        }
        ext_right_bond = new_bond({base + n - 1, 1}, {kExt, 0});
        bond_of_slot[2 * (base + n - 1) + 1] = ext_right_bond;
      }
    }
    for (int i = 0; i < static_cast<int>(letters.size()); ++i) {
      if (letters[i].kind == LetterKind::U) u_letters.push_back(i);
      if (letters[i].kind == LetterKind::Udag) udag_letters.push_back(i);
    }
  }

  int new_bond(Port a, Port b) {
    bond_ports.push_back({a, b});
    return static_cast<int>(bond_ports.size()) - 1;
  }

  // Per-(sigma, tau) glue: for U_m, left slot pairs with Udag_{sigma(m)} right
  // slot, right slot with Udag_{tau(m)} left slot. Stored per (letter, side).
  // glue[2*letter+side] = {other letter, other side} or {-1,...}.
  std::vector<Port> glue;

  void set_glue(const Perm& sigma, const Perm& tau) {
    glue.assign(2 * letters.size(), Port{-2, 0});
    for (std::size_t m = 0; m < u_letters.size(); ++m) {
      const int u = u_letters[m];
      const int ds = udag_letters[sigma[m]];
      const int dt = udag_letters[tau[m]];
      glue[2 * u + 0] = {ds, 1};
      glue[2 * ds + 1] = {u, 0};
      glue[2 * u + 1] = {dt, 0};
      glue[2 * dt + 0] = {u, 1};
    }
  }

  // Follow the index from `bond`, having arrived at the port `from` of that
  // bond; returns the terminal port (symbol slot or EXT).
  Port walk(int bond, int from_port_index, std::vector<char>& bond_seen) const {
    int b = bond;
    int fp = from_port_index;
    for (;;) {
      bond_seen[b] = 1;
      const Port p = bond_ports[b][1 - fp];
      if (p.letter == kExt) return p;
      const auto kind = letters[p.letter].kind;
      if (kind == LetterKind::Op) return p;
      // pass through the U-type letter via its glue link
      const Port g = glue[2 * p.letter + p.side];
      const int b2 = slot_bond(g.letter, g.side);
      // arrived at b2 at the port belonging to (g.letter, g.side)
      int arrived = (bond_ports[b2][0].letter == g.letter && bond_ports[b2][0].side == g.side)
                        ? 0
                        : 1;
      b = b2;
      fp = arrived;
    }
  }

  int port_index_on_bond(int bond, int letter, int side) const {
    return (bond_ports[bond][0].letter == letter && bond_ports[bond][0].side == side) ? 0 : 1;
  }
};

}  // namespace

MomentResult haar_moment(const WiringSpec& w) {
  const int p = w.count_u();
  if (p != w.count_udag()) return {};  // unbalanced moment vanishes
  if (p > 4) throw UnsupportedOrderError("haar_moment: p <= 4 only");

  Engine eng;
  eng.build(w);

  MomentResult out;
  if (p == 0) {
    // no integration: the monomial is read off directly
    Perm empty;
    eng.set_glue(empty, empty);
    std::vector<char> seen(eng.bond_ports.size(), 0);
    TraceMonomial mono;
    std::vector<char> op_used(eng.letters.size(), 0);
    // open chain first
    if (eng.has_open_word) {
      std::vector<int> chain;
      Port t = eng.walk(eng.ext_left_bond, 0, seen);
      while (t.letter != kExt) {
        chain.push_back(eng.letters[t.letter].op_id);
        op_used[t.letter] = 1;
        t = eng.walk(eng.slot_bond(t.letter, 1),
                     eng.port_index_on_bond(eng.slot_bond(t.letter, 1), t.letter, 1), seen);
      }
      mono.open = chain;
    }
    for (int l = 0; l < static_cast<int>(eng.letters.size()); ++l) {
      if (op_used[l]) continue;
      std::vector<int> cyc;
      int cur = l;
      while (!op_used[cur]) {
        op_used[cur] = 1;
        cyc.push_back(eng.letters[cur].op_id);
        const int b = eng.slot_bond(cur, 1);
        const Port t = eng.walk(b, eng.port_index_on_bond(b, cur, 1), seen);
        cur = t.letter;
      }
      canonical_rotation(cyc);
      mono.traces.push_back(cyc);
    }
    std::sort(mono.traces.begin(), mono.traces.end());
    out[mono] = SymbolicRational::integer(1);
    return out;
  }

  const auto sigmas = all_permutations(p);
  for (const auto& sigma : sigmas) {
    for (const auto& tau : sigmas) {
      eng.set_glue(sigma, tau);
      std::vector<char> bond_seen(eng.bond_ports.size(), 0);
      TraceMonomial mono;
      std::vector<char> op_used(eng.letters.size(), 0);

      if (eng.has_open_word) {
        std::vector<int> chain;
        Port t = eng.walk(eng.ext_left_bond, 0, bond_seen);
        while (t.letter != kExt) {
          if (t.side != 0)
            throw std::logic_error("haar_moment: walk parity violated");
          chain.push_back(eng.letters[t.letter].op_id);
          op_used[t.letter] = 1;
          const int b = eng.slot_bond(t.letter, 1);
          t = eng.walk(b, eng.port_index_on_bond(b, t.letter, 1), bond_seen);
        }
        mono.open = chain;
      }
      for (int l = 0; l < static_cast<int>(eng.letters.size()); ++l) {
        if (op_used[l] || eng.letters[l].kind != LetterKind::Op) continue;
        std::vector<int> cyc;
        int cur = l;
        while (true) {
          op_used[cur] = 1;
          cyc.push_back(eng.letters[cur].op_id);
          const int b = eng.slot_bond(cur, 1);
          const Port t = eng.walk(b, eng.port_index_on_bond(b, cur, 1), bond_seen);
          if (t.letter == kExt)
            throw std::logic_error("haar_moment: cycle walk reached an open end");
          if (t.letter == l) break;
          cur = t.letter;
        }
        canonical_rotation(cyc);
        mono.traces.push_back(cyc);
      }
      std::sort(mono.traces.begin(), mono.traces.end());

      // leftover closed index loops contribute L each
      int loops = 0;
      for (int b = 0; b < static_cast<int>(eng.bond_ports.size()); ++b) {
        if (bond_seen[b]) continue;
        // walk until we come back; every port on the way is U-type
        loops += 1;
        int cur = b;
        int fp = 0;
        bond_seen[b] = 1;
        for (;;) {
          const Port pt = eng.bond_ports[cur][1 - fp];
          const Port g = eng.glue[2 * pt.letter + pt.side];
          const int b2 = eng.slot_bond(g.letter, g.side);
          const int arrived = eng.port_index_on_bond(b2, g.letter, g.side);
          cur = b2;
          fp = arrived;
          if (bond_seen[cur]) break;
          bond_seen[cur] = 1;
        }
      }

      const Perm st = perm_compose(sigma, perm_inverse(tau));
      SymbolicRational coeff = wg_unitary(cycle_type(st));
      coeff = coeff * SymbolicRational(Polynomial::monomial(BigInt(1), loops),
                                       Polynomial(BigInt(1)));
      auto it = out.find(mono);
      if (it == out.end())
        out.emplace(mono, coeff);
      else
        it->second = it->second + coeff;
    }
  }
  // drop exact zeros
  for (auto it = out.begin(); it != out.end();) {
    if (it->second.is_zero())
      it = out.erase(it);
    else
      ++it;
  }
  return out;
}

double SectorRational::eval(const std::vector<std::int64_t>& sector_dims) const {
  double v = 1.0;
  for (const auto& [sector, rat] : factors)
    v *= rat.eval(sector_dims.at(static_cast<std::size_t>(sector)));
  return v;
}

std::string SectorRational::str() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& [sector, rat] : factors) {
    if (!first) os << " * ";
    first = false;
    os << rat.str("d" + std::to_string(sector));
  }
  if (first) os << "1";
  return os.str();
}

U1MomentResult u1_haar_moment(const WiringSpec& w) {
  // split words by sector; each word must be single-sector
  std::map<int, WiringSpec> by_sector;
  for (const auto& word : w.words) {
    if (word.letters.empty()) continue;
    const int s = word.letters.front().sector;
    for (const auto& l : word.letters)
      if (l.sector != s)
        throw std::domain_error("u1_haar_moment: words must not mix sectors");
    by_sector[s].words.push_back(word);
  }
  // unbalanced anywhere -> zero
  for (auto& [s, spec] : by_sector) {
    if (spec.count_u() != spec.count_udag()) return {};
    if (spec.count_u() > 2)
      throw UnsupportedOrderError("u1_haar_moment: p <= 2 per sector");
  }
  U1MomentResult out;
  bool first = true;
  for (auto& [s, spec] : by_sector) {
    const MomentResult part = haar_moment(spec);
    if (part.empty()) return {};
    if (first) {
      for (const auto& [mono, rat] : part) {
        SectorRational sr;
        sr.factors[s] = rat;
        out[mono] = sr;
      }
      first = false;
      continue;
    }
    U1MomentResult next;
    for (const auto& [mono0, sr0] : out) {
      for (const auto& [mono1, rat1] : part) {
        TraceMonomial combined = mono0;
        for (const auto& tr : mono1.traces) combined.traces.push_back(tr);
        std::sort(combined.traces.begin(), combined.traces.end());
        if (mono1.open) {
          if (combined.open)
            throw std::domain_error("u1_haar_moment: two open words");
          combined.open = mono1.open;
        }
        SectorRational sr = sr0;
        auto it = sr.factors.find(s);
        if (it == sr.factors.end())
          sr.factors[s] = rat1;
        else
          it->second = it->second * rat1;
        next[combined] = sr;
      }
    }
    out = std::move(next);
  }
  return out;
}

namespace {
std::complex<double> eval_monomial_traces(const TraceMonomial& mono,
                                          const std::vector<Eigen::MatrixXcd>& ops) {
  std::complex<double> v = 1.0;
  for (const auto& tr : mono.traces) {
    Eigen::MatrixXcd prod = ops.at(tr.front());
    for (std::size_t i = 1; i < tr.size(); ++i) prod = prod * ops.at(tr[i]);
    v *= prod.trace();
  }
  return v;
}
}  // namespace

std::complex<double> evaluate_traced(const MomentResult& r,
                                     const std::vector<Eigen::MatrixXcd>& ops,
                                     std::int64_t dim) {
  std::complex<double> acc = 0.0;
  for (const auto& [mono, rat] : r) {
    if (mono.open && !mono.open->empty())
      throw std::domain_error("evaluate_traced: result has an open chain");
    acc += rat.eval(dim) * eval_monomial_traces(mono, ops);
  }
  return acc;
}

Eigen::MatrixXcd evaluate_open(const MomentResult& r,
                               const std::vector<Eigen::MatrixXcd>& ops,
                               std::int64_t dim) {
  Eigen::Index n = 0;
  for (const auto& op : ops) n = std::max(n, op.rows());
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, n);
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  for (const auto& [mono, rat] : r) {
    Eigen::MatrixXcd open = id;
    if (mono.open)
      for (int idx : *mono.open) open = open * ops.at(idx);
    acc += rat.eval(dim) * eval_monomial_traces(mono, ops) * open;
  }
  return acc;
}

std::complex<double> evaluate_traced_u1(const U1MomentResult& r,
                                        const std::vector<Eigen::MatrixXcd>& ops,
                                        const std::vector<std::int64_t>& sector_dims) {
  std::complex<double> acc = 0.0;
  for (const auto& [mono, sr] : r) {
    if (mono.open && !mono.open->empty())
      throw std::domain_error("evaluate_traced_u1: result has an open chain");
    acc += sr.eval(sector_dims) * eval_monomial_traces(mono, ops);
  }
  return acc;
}

std::string moment_to_string(const MomentResult& r, const std::vector<std::string>& names) {
  if (r.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [mono, rat] : r) {
    if (!first) os << " + ";
    first = false;
    os << "(" << rat.str() << ") " << mono.str(names);
  }
  return os.str();
}

std::string moment_to_string(const U1MomentResult& r, const std::vector<std::string>& names) {
  if (r.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [mono, sr] : r) {
    if (!first) os << " + ";
    first = false;
    os << "(" << sr.str() << ") " << mono.str(names);
  }
  return os.str();
}

}  // namespace u1chaos
