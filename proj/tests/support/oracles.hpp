#pragma once

#include <cstdint>

namespace testsupport::oracle {

/// Independent Fisher reference: enumerates every 2x2 table with the
/// observed margins using exact uint64 integer arithmetic. Hypergeometric
/// numerators share the denominator C(N, K), so both the "no more
/// probable" comparison and the tail sums are exact integer operations.
/// Valid while every binomial coefficient fits in uint64 (group sizes up
/// to 30 are far inside that range).
double fisher_one_sided(long a_succ, long a_n, long b_succ, long b_n);
double fisher_two_sided(long a_succ, long a_n, long b_succ, long b_n);

/// Exact binomial coefficient via Pascal's triangle (n <= 62).
uint64_t choose(int n, int k);

}  // namespace testsupport::oracle
