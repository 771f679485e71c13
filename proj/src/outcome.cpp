#include "quotestamp/outcome.hpp"

#include <cstdlib>

#include "quotestamp/errors.hpp"

namespace quotestamp {

std::string outcome_name(OutcomeKind kind) {
    switch (kind) {
        case OutcomeKind::Exact: return "exact";
        case OutcomeKind::OffByOne: return "off_by_one";
        case OutcomeKind::MajorShift: return "major_shift";
        case OutcomeKind::FalsePositive: return "false_positive";
        case OutcomeKind::CorrectRejection: return "correct_rejection";
        case OutcomeKind::InvalidBoundary: return "invalid_boundary";
    }
    return "major_shift";
}

OutcomeKind outcome_from_name(const std::string& name) {
    for (OutcomeKind kind :
         {OutcomeKind::Exact, OutcomeKind::OffByOne, OutcomeKind::MajorShift,
          OutcomeKind::FalsePositive, OutcomeKind::CorrectRejection,
          OutcomeKind::InvalidBoundary}) {
        if (outcome_name(kind) == name) return kind;
    }
    throw ConfigError("unknown outcome: " + name);
}

Outcome classify_outcome(const TimeRange& prediction, const PassageSpec& truth,
                         const Transcript& t, bool target_present) {
    if (!target_present) {
        return {prediction.is_null() ? OutcomeKind::CorrectRejection
                                     : OutcomeKind::FalsePositive};
    }
    if (prediction.is_null()) {
        return {OutcomeKind::MajorShift};  // missed detection
    }
    const BoundaryReport report = range_to_indices(t, prediction);
    if (!report.start_exact || !report.end_exact) {
        return {OutcomeKind::InvalidBoundary};
    }
    const int start_delta = *report.start_index - truth.start_index;
    const int end_delta = *report.end_index - truth.end_index;
    if (start_delta == 0 && end_delta == 0) {
        return {OutcomeKind::Exact};
    }
    if (std::abs(start_delta) <= 1 && std::abs(end_delta) <= 1) {
        return {OutcomeKind::OffByOne, start_delta, end_delta};
    }
    return {OutcomeKind::MajorShift, start_delta, end_delta};
}

}  // namespace quotestamp
