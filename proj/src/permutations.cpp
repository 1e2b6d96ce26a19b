#include "u1chaos/permutations.hpp"

#include <algorithm>
#include <numeric>

namespace u1chaos {

Perm perm_identity(int p) {
  Perm a(p);
  std::iota(a.begin(), a.end(), 0);
  return a;
}

Perm perm_compose(const Perm& a, const Perm& b) {
  Perm r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[b[i]];
  return r;
}

Perm perm_inverse(const Perm& a) {
  Perm r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[a[i]] = static_cast<int>(i);
  return r;
}

std::vector<int> cycle_type(const Perm& a) {
  std::vector<bool> seen(a.size(), false);
  std::vector<int> ct;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (seen[i]) continue;
    int len = 0;
    std::size_t j = i;
    while (!seen[j]) {
      seen[j] = true;
      j = a[j];
      ++len;
    }
    ct.push_back(len);
  }
  std::sort(ct.rbegin(), ct.rend());
  return ct;
}

int cycle_count(const Perm& a) { return static_cast<int>(cycle_type(a).size()); }

std::vector<Perm> all_permutations(int p) {
  std::vector<Perm> out;
  Perm a = perm_identity(p);
  do {
    out.push_back(a);
  } while (std::next_permutation(a.begin(), a.end()));
  return out;
}

std::int64_t factorial(int n) {
  std::int64_t r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

int lis_length(const Perm& a) {
  std::vector<int> piles;
  for (int v : a) {
    auto it = std::lower_bound(piles.begin(), piles.end(), v);
    if (it == piles.end())
      piles.push_back(v);
    else
      *it = v;
  }
  return static_cast<int>(piles.size());
}

}  // namespace u1chaos
