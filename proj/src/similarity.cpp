#include "quotestamp/similarity.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "quotestamp/errors.hpp"

namespace quotestamp {

namespace {

// Bit-parallel LCS length (one column step per text character, 64 pattern
// positions per machine word). The zero bits of V after processing the whole
// text count the LCS.
std::size_t bit_lcs_single(std::string_view pattern, std::string_view text) {
    std::array<std::uint64_t, 256> masks{};
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        masks[static_cast<unsigned char>(pattern[i])] |= std::uint64_t{1} << i;
    }
    std::uint64_t v = ~std::uint64_t{0};
    for (char c : text) {
        const std::uint64_t m = masks[static_cast<unsigned char>(c)];
        const std::uint64_t u = v & m;
        v = (v + u) | (v & ~m);
    }
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        if (!(v >> i & 1)) ++zeros;
    }
    return zeros;
}

std::size_t bit_lcs_multi(std::string_view pattern, std::string_view text) {
    const std::size_t words = (pattern.size() + 63) / 64;
    std::vector<std::uint64_t> masks(256 * words, 0);
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        masks[static_cast<unsigned char>(pattern[i]) * words + i / 64] |=
            std::uint64_t{1} << (i % 64);
    }
    std::vector<std::uint64_t> v(words, ~std::uint64_t{0});
    for (char c : text) {
        const std::uint64_t* mask =
            masks.data() + static_cast<unsigned char>(c) * words;
        std::uint64_t carry = 0;
        for (std::size_t w = 0; w < words; ++w) {
            const std::uint64_t u = v[w] & mask[w];
            const std::uint64_t sum = v[w] + u + carry;
            carry = (sum < v[w] || (carry && sum == v[w])) ? 1 : 0;
            v[w] = sum | (v[w] & ~mask[w]);
        }
    }
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        if (!(v[i / 64] >> (i % 64) & 1)) ++zeros;
    }
    return zeros;
}

// Reusable pattern masks for scoring many windows against one needle.
struct LcsMatcher {
    explicit LcsMatcher(std::string_view pattern) : m(pattern.size()) {
        words = (m + 63) / 64;
        masks.assign(256 * words, 0);
        for (std::size_t i = 0; i < m; ++i) {
            masks[static_cast<unsigned char>(pattern[i]) * words + i / 64] |=
                std::uint64_t{1} << (i % 64);
        }
    }

    std::size_t run(std::string_view text) const {
        if (m == 0 || text.empty()) return 0;
        std::vector<std::uint64_t> v(words, ~std::uint64_t{0});
        for (char c : text) {
            const std::uint64_t* mask =
                masks.data() + static_cast<unsigned char>(c) * words;
            std::uint64_t carry = 0;
            for (std::size_t w = 0; w < words; ++w) {
                const std::uint64_t u = v[w] & mask[w];
                const std::uint64_t sum = v[w] + u + carry;
                carry = (sum < v[w] || (carry && sum == v[w])) ? 1 : 0;
                v[w] = sum | (v[w] & ~mask[w]);
            }
        }
        std::size_t zeros = 0;
        for (std::size_t i = 0; i < m; ++i) {
            if (!(v[i / 64] >> (i % 64) & 1)) ++zeros;
        }
        return zeros;
    }

    std::size_t m;
    std::size_t words;
    std::vector<std::uint64_t> masks;
};

constexpr std::int64_t kNegInf = std::numeric_limits<std::int64_t>::min() / 4;

// One linearized pass of the fractional window search. With the candidate
// ratio lambda = p/q, every window scores G = 2*q*lcs - (q-p)*width; the
// candidate itself scores exactly (q-p)*|needle|, and any window scoring
// higher has a strictly better ratio. Cells track the smallest window start
// among score-maximizing alignments so final ties resolve deterministically.
struct LinearPassResult {
    std::int64_t best_value = kNegInf;
    std::size_t start = 0;
    std::size_t end = 0;
    bool found = false;
};

// Cells pack (value, start) into one int64: the value in the upper bits and
// the bit-flipped start below, so a plain max picks the larger value and, on
// ties, the smaller start. Every transition adds a multiple of 2^kStartBits,
// leaving the start code untouched.
constexpr int kStartBits = 22;
constexpr std::int64_t kStartMask = (std::int64_t{1} << kStartBits) - 1;

LinearPassResult linear_pass(std::string_view needle, std::string_view hay,
                             std::int64_t p, std::int64_t q) {
    const std::size_t m = needle.size();
    const std::size_t n = hay.size();
    const std::int64_t gap = q - p;          // per-character window cost
    const std::int64_t match = 2 * q - gap;  // matched chars pay gap too
    const std::int64_t gap_k = gap << kStartBits;
    const std::int64_t match_k = match << kStartBits;

    const auto pack_start = [&](std::size_t j) {
        return kStartMask - static_cast<std::int64_t>(j);
    };

    std::vector<std::int64_t> prev(n + 1), cur(n + 1);
    // Row 0: the empty needle prefix against a window ending at j. A fresh
    // empty window at j costs nothing; extending is never better unless the
    // window cost is zero, in which case the earlier start wins the tie.
    for (std::size_t j = 0; j <= n; ++j) {
        prev[j] = pack_start(gap == 0 ? 0 : j);
    }

    for (std::size_t k = 1; k <= m; ++k) {
        cur[0] = prev[0];
        const char nk = needle[k - 1];
        std::int64_t left = cur[0];  // cur[j - 1]
        for (std::size_t j = 1; j <= n; ++j) {
            std::int64_t best = prev[j];               // skip needle char
            const std::int64_t ext = left - gap_k;     // unmatched hay char
            if (ext > best) best = ext;
            if (nk == hay[j - 1]) {
                const std::int64_t diag = prev[j - 1] + match_k;
                if (diag > best) best = diag;
            }
            cur[j] = best;
            left = best;
        }
        std::swap(prev, cur);
    }

    LinearPassResult out;
    for (std::size_t j = 0; j <= n; ++j) {
        const std::int64_t value = prev[j] >> kStartBits;
        const std::size_t start =
            static_cast<std::size_t>(kStartMask - (prev[j] & kStartMask));
        const std::size_t width = j - start;
        if (!out.found || value > out.best_value ||
            (value == out.best_value &&
             (start < out.start ||
              (start == out.start && width < out.end - out.start)))) {
            out.best_value = value;
            out.start = start;
            out.end = j;
            out.found = true;
        }
    }
    return out;
}

}  // namespace

std::size_t lcs_length(std::string_view a, std::string_view b) {
    if (a.empty() || b.empty()) return 0;
    if (a.size() > b.size()) std::swap(a, b);
    return a.size() <= 64 ? bit_lcs_single(a, b) : bit_lcs_multi(a, b);
}

std::size_t indel_distance(std::string_view a, std::string_view b) {
    return a.size() + b.size() - 2 * lcs_length(a, b);
}

double ratio(std::string_view a, std::string_view b) {
    const std::size_t total = a.size() + b.size();
    if (total == 0) return 100.0;
    const std::size_t dist = indel_distance(a, b);
    return 100.0 * (1.0 - static_cast<double>(dist) /
                              static_cast<double>(total));
}

AlignResult partial_align(std::string_view needle, std::string_view haystack) {
    if (needle.empty()) {
        throw ArgumentError("partial_align: needle must be non-empty");
    }
    const std::size_t m = needle.size();
    const std::size_t n = haystack.size();
    if (n >= static_cast<std::size_t>(kStartMask)) {
        throw ArgumentError(
            "partial_align: haystack exceeds the supported 4M characters");
    }

    // A verbatim occurrence is the unique kind of 100-score window, and the
    // leftmost one wins every tie.
    if (std::size_t at = haystack.find(needle); at != std::string_view::npos) {
        return AlignResult{100.0, at, at + m};
    }

    // Seed the fractional search with the best of a set of cheap candidate
    // windows; any concrete window bounds the optimum from below, and a
    // tight seed saves iterations.
    LcsMatcher matcher(needle);
    std::int64_t p = 0, q = 0;  // candidate distance and |needle| + width
    std::size_t cand_start = 0, cand_end = 0;
    const auto consider = [&](std::size_t i, std::size_t j) {
        const std::string_view window = haystack.substr(i, j - i);
        const std::size_t lcs = matcher.run(window);
        const std::int64_t d =
            static_cast<std::int64_t>(m + window.size() - 2 * lcs);
        const std::int64_t total = static_cast<std::int64_t>(m + window.size());
        if (q == 0 || d * q < p * total) {
            p = d;
            q = total;
            cand_start = i;
            cand_end = j;
        }
    };
    consider(0, n);
    // Scan a few window widths around |needle| at a fine stride; a seed close
    // to the optimum usually leaves a single certification pass to run.
    const std::size_t stride = std::max<std::size_t>(1, m / 4);
    for (std::size_t width :
         {m, m + m / 4, m > 4 ? m - m / 4 : m, m / 2 + 1}) {
        if (width == 0 || width > n) continue;
        for (std::size_t i = 0; i + width <= n; i += stride) {
            consider(i, i + width);
        }
        consider(n - width, n);
    }

    // Dinkelbach iteration: each pass either certifies the candidate ratio
    // as optimal or produces a strictly better window to re-linearize on.
    while (true) {
        const LinearPassResult pass = linear_pass(needle, haystack, p, q);
        const std::int64_t certify = (q - p) * static_cast<std::int64_t>(m);
        if (pass.best_value <= certify) {
            // The pass scanned every window; its tie-broken argmax at the
            // certified value is the final answer.
            if (pass.best_value == certify) {
                cand_start = pass.start;
                cand_end = pass.end;
            }
            break;
        }
        const std::size_t width = pass.end - pass.start;
        // Recover the window's distance from its linearized score.
        const std::int64_t lcs2q =
            pass.best_value + (q - p) * static_cast<std::int64_t>(width);
        const std::int64_t lcs = lcs2q / (2 * q);
        p = static_cast<std::int64_t>(m + width) - 2 * lcs;
        q = static_cast<std::int64_t>(m + width);
        cand_start = pass.start;
        cand_end = pass.end;
    }

    AlignResult out;
    out.char_start = cand_start;
    out.char_end = cand_end;
    out.score =
        100.0 * (1.0 - static_cast<double>(p) / static_cast<double>(q));
    return out;
}

}  // namespace quotestamp
