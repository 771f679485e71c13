#include "quotestamp/perturb.hpp"

#include <algorithm>
#include <cctype>
#include <random>

namespace quotestamp {

namespace {

bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '\'';
}

bool at_word_boundary(const std::string& text, std::size_t pos,
                      std::size_t len) {
    const bool left_ok = pos == 0 || !word_char(text[pos - 1]);
    const bool right_ok = pos + len >= text.size() || !word_char(text[pos + len]);
    return left_ok && right_ok;
}

std::vector<PerturbEdit> find_phrase_swaps(
    const std::string& text,
    const std::vector<std::pair<std::string_view, std::string_view>>& table,
    const char* rule) {
    std::vector<PerturbEdit> edits;
    for (const auto& [from, to] : table) {
        std::size_t at = text.find(from);
        while (at != std::string::npos) {
            if (at_word_boundary(text, at, from.size())) {
                edits.push_back({at, from.size(), std::string(to), rule});
            }
            at = text.find(from, at + 1);
        }
    }
    return edits;
}

std::vector<PerturbEdit> contractions(const std::string& text) {
    static const std::vector<std::pair<std::string_view, std::string_view>>
        table = {
            {"they are", "they're"}, {"they're", "they are"},
            {"we are", "we're"},     {"we're", "we are"},
            {"it is", "it's"},       {"that is", "that's"},
            {"do not", "don't"},     {"don't", "do not"},
            {"does not", "doesn't"}, {"cannot", "can't"},
            {"can't", "cannot"},     {"will not", "won't"},
            {"won't", "will not"},   {"is not", "isn't"},
            {"have not", "haven't"}, {"we have", "we've"},
            {"I am", "I'm"},         {"I'm", "I am"},
            {"would not", "wouldn't"},
        };
    return find_phrase_swaps(text, table, "contraction");
}

std::vector<PerturbEdit> abbreviations(const std::string& text) {
    static const std::vector<std::pair<std::string_view, std::string_view>>
        table = {
            {"United States", "U.S."},
            {"U.S.", "United States"},
            {"for example", "e.g."},
            {"percent", "pct"},
        };
    return find_phrase_swaps(text, table, "abbreviation");
}

std::vector<PerturbEdit> word_substitutions(const std::string& text) {
    static const std::vector<std::pair<std::string_view, std::string_view>>
        table = {
            {"costing", "destroying"}, {"large", "big"},
            {"help", "assist"},        {"show", "demonstrate"},
            {"need", "require"},       {"important", "critical"},
            {"begin", "start"},        {"ensure", "make sure"},
            {"support", "back"},       {"request", "ask for"},
        };
    return find_phrase_swaps(text, table, "substitution");
}

std::vector<PerturbEdit> punctuation_edits(const std::string& text) {
    std::vector<PerturbEdit> edits;
    for (std::size_t i = 0; i + 1 < text.size(); ++i) {
        if (text[i] == ',' && text[i + 1] == ' ') {
            edits.push_back({i, 2, " ", "punctuation"});      // drop comma
            edits.push_back({i, 1, ";", "punctuation"});      // comma -> semi
        }
    }
    return edits;
}

std::vector<PerturbEdit> capitalization_shifts(const std::string& text) {
    std::vector<PerturbEdit> edits;
    bool word_start = true;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (word_start && i > 0 && std::isupper(static_cast<unsigned char>(c))) {
            // Lowering sentence-initial words would look like a different
            // sentence; only shift mid-sentence capitals.
            const bool sentence_start =
                i >= 2 && (text[i - 2] == '.' || text[i - 2] == '!' ||
                           text[i - 2] == '?');
            if (!sentence_start) {
                edits.push_back(
                    {i, 1,
                     std::string(1, static_cast<char>(std::tolower(
                                        static_cast<unsigned char>(c)))),
                     "capitalization"});
            }
        }
        word_start = !word_char(c);
    }
    return edits;
}

std::vector<PerturbEdit> fillers(const std::string& text) {
    std::vector<PerturbEdit> edits;
    // Insert a filler at a sentence start.
    edits.push_back({0, 0, "Now, ", "filler"});
    for (std::size_t i = 0; i + 2 < text.size(); ++i) {
        if ((text[i] == '.' || text[i] == '!' || text[i] == '?') &&
            text[i + 1] == ' ') {
            edits.push_back({i + 2, 0, "Well, ", "filler"});
        }
    }
    // Remove hedges.
    for (std::string_view hedge : {"very ", "just ", "really ", "simply "}) {
        std::size_t at = text.find(hedge);
        while (at != std::string::npos) {
            if (at_word_boundary(text, at, hedge.size())) {
                edits.push_back({at, hedge.size(), "", "filler"});
            }
            at = text.find(hedge, at + 1);
        }
    }
    return edits;
}

}  // namespace

const std::vector<PerturbRule>& default_rules() {
    static const std::vector<PerturbRule> rules = {
        {"contraction", contractions},
        {"abbreviation", abbreviations},
        {"substitution", word_substitutions},
        {"punctuation", punctuation_edits},
        {"capitalization", capitalization_shifts},
        {"filler", fillers},
    };
    return rules;
}

PerturbResult perturb_passage(const std::string& text,
                              const std::vector<PerturbRule>& rules,
                              std::uint64_t seed) {
    PerturbResult result;
    result.text = text;
    if (text.empty() || rules.empty()) {
        return result;
    }

    std::vector<PerturbEdit> pool;
    for (const auto& rule : rules) {
        auto found = rule.find(text);
        pool.insert(pool.end(), found.begin(), found.end());
    }
    if (pool.empty()) {
        return result;
    }

    // Scale the edit count with the passage so drift stays mild but real.
    const std::size_t target =
        std::max<std::size_t>(1, text.size() / 55);

    std::mt19937_64 rng(seed);
    std::shuffle(pool.begin(), pool.end(), rng);

    std::vector<PerturbEdit> chosen;
    for (const auto& edit : pool) {
        if (chosen.size() >= target) break;
        const bool clashes = std::any_of(
            chosen.begin(), chosen.end(), [&](const PerturbEdit& e) {
                return edit.pos < e.pos + std::max<std::size_t>(e.length, 1) &&
                       e.pos < edit.pos + std::max<std::size_t>(edit.length, 1);
            });
        if (!clashes) chosen.push_back(edit);
    }
    std::sort(chosen.begin(), chosen.end(),
              [](const PerturbEdit& a, const PerturbEdit& b) {
                  return a.pos > b.pos;
              });
    for (const auto& edit : chosen) {
        result.text.replace(edit.pos, edit.length, edit.replacement);
        result.applied_rules.push_back(edit.rule);
    }
    std::sort(result.applied_rules.begin(), result.applied_rules.end());
    result.similarity = levenshtein_similarity(text, result.text);
    return result;
}

std::size_t levenshtein_distance(std::string_view a, std::string_view b) {
    if (a.size() > b.size()) std::swap(a, b);
    std::vector<std::size_t> row(a.size() + 1);
    for (std::size_t i = 0; i <= a.size(); ++i) row[i] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
        std::size_t diag = row[0];
        row[0] = j;
        for (std::size_t i = 1; i <= a.size(); ++i) {
            const std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
            diag = row[i];
            row[i] = std::min({row[i] + 1, row[i - 1] + 1, sub});
        }
    }
    return row[a.size()];
}

double levenshtein_similarity(std::string_view a, std::string_view b) {
    const std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return 100.0;
    return 100.0 * (1.0 - static_cast<double>(levenshtein_distance(a, b)) /
                              static_cast<double>(longest));
}

}  // namespace quotestamp
