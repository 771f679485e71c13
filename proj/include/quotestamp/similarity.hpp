#pragma once

#include <cstddef>
#include <string_view>

namespace quotestamp {

// Best-scoring window of a haystack against a needle. Offsets are half-open
// character positions into the haystack; score is the indel ratio of the
// needle against haystack[char_start, char_end).
struct AlignResult {
    double score = 0.0;
    std::size_t char_start = 0;
    std::size_t char_end = 0;
};

// Minimal number of insertions plus deletions transforming a into b
// (no substitutions). Symmetric.
std::size_t indel_distance(std::string_view a, std::string_view b);

// Length of the longest common subsequence; indel = |a| + |b| - 2 * lcs.
std::size_t lcs_length(std::string_view a, std::string_view b);

// 100 * (1 - indel(a, b) / (|a| + |b|)); 100 when both strings are empty.
double ratio(std::string_view a, std::string_view b);

// Window of the haystack maximizing ratio(needle, window), searched over all
// windows including the empty ones. Ties break toward the smallest
// char_start, then the smallest window. The needle must be non-empty.
//
// The search is exact: the result equals a brute-force maximization over
// every (start, end) pair. Internally the fractional objective is solved by
// iterating a linearized alignment, which keeps the cost near
// O(|needle| * |haystack|) per call instead of quadratic in the haystack.
AlignResult partial_align(std::string_view needle, std::string_view haystack);

}  // namespace quotestamp
