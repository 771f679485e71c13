#pragma once

#include <string>

#include "quotestamp/sampler.hpp"
#include "quotestamp/transcript.hpp"

namespace quotestamp {

enum class OutcomeKind {
    Exact,
    OffByOne,
    MajorShift,
    FalsePositive,
    CorrectRejection,
    InvalidBoundary,
};

// Classification of one prediction. Deltas are sentence-index offsets and
// are meaningful only for OffByOne (each in {-1, 0, +1}, not both 0).
struct Outcome {
    OutcomeKind kind = OutcomeKind::MajorShift;
    int start_delta = 0;
    int end_delta = 0;

    friend bool operator==(const Outcome&, const Outcome&) = default;
};

std::string outcome_name(OutcomeKind kind);
OutcomeKind outcome_from_name(const std::string& name);

// Classify a prediction against a ground-truth passage.
//
// Absent targets: (0, 0) is a CorrectRejection, anything else a
// FalsePositive. Present targets: (0, 0) is a miss and counts as MajorShift;
// boundaries off every sentence boundary are InvalidBoundary; both deltas
// zero is Exact; a max absolute delta of one is OffByOne with directions;
// anything else is MajorShift.
Outcome classify_outcome(const TimeRange& prediction, const PassageSpec& truth,
                         const Transcript& t, bool target_present);

}  // namespace quotestamp
