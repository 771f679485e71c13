#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "quotestamp/transcript.hpp"

namespace quotestamp {

enum class Third { First, Middle, Last };

std::string third_name(Third t);
Third third_of_index(int start_index, int sentence_count);

struct SamplerConfig {
    std::vector<int> lengths = {1, 2, 3, 5, 10};
    int per_length = 12;
    int per_third = 4;          // per_length == 3 * per_third
    int anchor_window = 200;    // sentence indices around each prototype anchor
    int min_sentence_chars = 20;
    int tries = 3;              // bench tries per passage, not sampler retries
    std::uint64_t seed = 0;

    void validate() const;
};

// A sampled target passage: consecutive sentences with the ground truth
// boundaries taken from the bounding spans.
struct PassageSpec {
    int start_index = 0;
    int end_index = 0;  // inclusive
    int length = 0;
    Third third = Third::First;
    TimeRange truth;
};

// Sample per_length passages per length: per_third starting in each third,
// with at least one per third placed within anchor_window of its prototype
// anchor (index 0, the center, N - length). Every covered sentence must have
// at least min_sentence_chars characters; passages of the same length never
// overlap, though one may extend past its third's end when constraints force
// it. Deterministic under the seed. Infeasible constraints raise
// SamplingError naming the failed constraint.
std::vector<PassageSpec> sample_passages(const Transcript& t,
                                         const SamplerConfig& cfg);

// The passage as quote text: covered sentences joined with single spaces.
std::string passage_text(const Transcript& t, const PassageSpec& p);

}  // namespace quotestamp
