#pragma once

#include <cstdint>
#include <vector>

namespace u1chaos {

using Perm = std::vector<int>;  // perm[i] = image of i

Perm perm_identity(int p);
Perm perm_compose(const Perm& a, const Perm& b);  // (a∘b)(i) = a[b[i]]
Perm perm_inverse(const Perm& a);
std::vector<int> cycle_type(const Perm& a);  // sorted descending
int cycle_count(const Perm& a);
std::vector<Perm> all_permutations(int p);
std::int64_t factorial(int n);

// length of the longest increasing subsequence (patience sorting)
int lis_length(const Perm& a);

}  // namespace u1chaos
