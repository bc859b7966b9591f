#include "support/oracles.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace testsupport::oracle {

namespace {

// Exact 128-bit integers keep every binomial through C(120, 60) ~ 1e35,
// well inside the 1.7e38 range; Vandermonde then bounds every tail sum by
// the same figure.
using uint128 = unsigned __int128;
constexpr int kMaxN = 120;

const std::vector<std::vector<uint128>>& pascal() {
  static const std::vector<std::vector<uint128>> table = [] {
    std::vector<std::vector<uint128>> t(kMaxN + 1);
    for (int n = 0; n <= kMaxN; ++n) {
      t[n].resize(n + 1);
      t[n][0] = t[n][n] = 1;
      for (int k = 1; k < n; ++k) t[n][k] = t[n - 1][k - 1] + t[n - 1][k];
    }
    return t;
  }();
  return table;
}

uint128 choose128(int n, int k) {
  if (n < 0 || k < 0 || k > n || n > kMaxN)
    throw std::out_of_range("oracle::choose out of range");
  return pascal()[n][k];
}

double to_double(uint128 v) { return static_cast<double>(static_cast<long double>(v)); }

struct Enumeration {
  std::vector<uint128> numerators;  // indexed k - lo
  long lo, hi, obs;
  uint128 denom;
};

Enumeration enumerate(long a_succ, long a_n, long b_succ, long b_n) {
  Enumeration e;
  const long total = a_n + b_n;
  const long succ_total = a_succ + b_succ;
  e.lo = std::max(0L, succ_total - b_n);
  e.hi = std::min(a_n, succ_total);
  e.obs = a_succ;
  e.denom = choose128(static_cast<int>(total), static_cast<int>(succ_total));
  uint128 check = 0;
  for (long k = e.lo; k <= e.hi; ++k) {
    const uint128 m =
        choose128(static_cast<int>(a_n), static_cast<int>(k)) *
        choose128(static_cast<int>(b_n), static_cast<int>(succ_total - k));
    e.numerators.push_back(m);
    check += m;
  }
  if (check != e.denom)
    throw std::logic_error("oracle: Vandermonde identity failed");
  return e;
}

}  // namespace

uint64_t choose(int n, int k) {
  const uint128 v = choose128(n, k);
  if (v > static_cast<uint128>(~0ULL))
    throw std::out_of_range("oracle::choose exceeds uint64");
  return static_cast<uint64_t>(v);
}

double fisher_two_sided(long a_succ, long a_n, long b_succ, long b_n) {
  const Enumeration e = enumerate(a_succ, a_n, b_succ, b_n);
  const uint128 observed = e.numerators[static_cast<size_t>(e.obs - e.lo)];
  uint128 sum = 0;
  for (const uint128 m : e.numerators)
    if (m <= observed) sum += m;
  return to_double(sum) / to_double(e.denom);
}

double fisher_one_sided(long a_succ, long a_n, long b_succ, long b_n) {
  const long long d = static_cast<long long>(a_succ) * b_n -
                      static_cast<long long>(b_succ) * a_n;
  if (d == 0) return 1.0;
  const Enumeration e = enumerate(a_succ, a_n, b_succ, b_n);
  uint128 sum = 0;
  if (d > 0) {
    for (long k = e.obs; k <= e.hi; ++k)
      sum += e.numerators[static_cast<size_t>(k - e.lo)];
  } else {
    for (long k = e.lo; k <= e.obs; ++k)
      sum += e.numerators[static_cast<size_t>(k - e.lo)];
  }
  return to_double(sum) / to_double(e.denom);
}

}  // namespace testsupport::oracle
