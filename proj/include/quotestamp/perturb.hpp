#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace quotestamp {

// A single meaning-preserving surface edit: replace `length` chars at `pos`
// with `replacement`.
struct PerturbEdit {
    std::size_t pos = 0;
    std::size_t length = 0;
    std::string replacement;
    std::string rule;
};

// A named rule proposes every edit site it can find in a text.
struct PerturbRule {
    std::string name;
    std::vector<PerturbEdit> (*find)(const std::string& text);
};

// Contractions, abbreviation swaps, punctuation edits, capitalization
// shifts, filler insertions/removals and light word substitutions.
const std::vector<PerturbRule>& default_rules();

struct PerturbResult {
    std::string text;
    double similarity = 100.0;  // normalized Levenshtein similarity, percent
    std::vector<std::string> applied_rules;
};

// Apply a seeded selection of rule edits. Deterministic under the seed; an
// empty rule set returns the text unchanged at similarity 100.
PerturbResult perturb_passage(const std::string& text,
                              const std::vector<PerturbRule>& rules,
                              std::uint64_t seed);

// Substitution-aware edit distance, used only for the perturbation
// similarity report (matching the narrowing metric would understate drift).
std::size_t levenshtein_distance(std::string_view a, std::string_view b);

// 100 * (1 - levenshtein / max(|a|, |b|)); 100 when both empty.
double levenshtein_similarity(std::string_view a, std::string_view b);

}  // namespace quotestamp
