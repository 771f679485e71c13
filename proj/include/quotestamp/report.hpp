#pragma once

#include <string>
#include <vector>

#include "quotestamp/bench.hpp"
#include "quotestamp/stats.hpp"

namespace quotestamp {

enum class ReportSlice { ByLength, ByThird, ByFormat, ByModel, ByTask, Cpc };

struct ReportTables {
    std::string delimited;  // tab-separated
    std::string aligned;    // padded plain text
};

// Accuracy (or cost-per-correct) tables over a record set. Deterministic row
// order, percentages to one decimal, undefined cost-per-correct rendered
// blank. Requires a non-empty record set.
ReportTables emit_report(const std::vector<TrialRecord>& records,
                         ReportSlice slice);

}  // namespace quotestamp
