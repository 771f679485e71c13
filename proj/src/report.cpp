#include "quotestamp/report.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>

#include "quotestamp/errors.hpp"

namespace quotestamp {

namespace {

std::string pct(double fraction) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1) << fraction * 100.0;
    return out.str();
}

double rate_of(std::size_t count, std::size_t n) {
    return n == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(n);
}

std::string money(double usd) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4) << usd;
    return out.str();
}

std::string align(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths;
    for (const auto& row : rows) {
        if (widths.size() < row.size()) widths.resize(row.size(), 0);
        for (std::size_t i = 0; i < row.size(); ++i) {
            widths[i] = std::max(widths[i], row[i].size());
        }
    }
    std::ostringstream out;
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << std::left << std::setw(static_cast<int>(widths[i]) + 2)
                << row[i];
        }
        out << '\n';
    }
    return out.str();
}

std::string delimit(const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out << '\t';
            out << row[i];
        }
        out << '\n';
    }
    return out.str();
}

std::vector<std::vector<std::string>> accuracy_rows(
    const std::vector<TrialRecord>& records, GroupBy group,
    const std::string& key_header) {
    std::vector<TrialSlice> slices;
    slices.reserve(records.size());
    for (const auto& r : records) slices.push_back(r.slice());
    const auto grouped = aggregate_by(slices, group);

    std::vector<std::vector<std::string>> rows;
    rows.push_back({key_header, "n", "exact", "off_by_one", "major",
                    "adjusted", "false_positive", "correct_rejection"});
    for (const auto& [key, summary] : grouped) {
        std::string label = key;
        if (group == GroupBy::Length) {
            label.erase(0, label.find_first_not_of('0'));
            if (label.empty()) label = "0";
        }
        rows.push_back({label, std::to_string(summary.n),
                        pct(summary.exact_rate()),
                        pct(summary.off_by_one_rate()),
                        pct(summary.major_rate()),
                        pct(summary.adjusted_rate()),
                        pct(summary.false_positive_rate()),
                        pct(rate_of(summary.correct_rejection, summary.n))});
    }
    return rows;
}

std::vector<std::vector<std::string>> cpc_rows(
    const std::vector<TrialRecord>& records) {
    struct Spend {
        double cost = 0.0;
        std::size_t correct = 0;
        std::size_t n = 0;
    };
    std::map<std::string, Spend> per_model;
    for (const auto& r : records) {
        Spend& s = per_model[r.model_id];
        s.cost += r.cost_usd;
        s.n += 1;
        if (r.outcome.kind == OutcomeKind::Exact) ++s.correct;
    }
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"model", "n", "correct", "cost_usd", "cost_per_correct"});
    for (const auto& [model, s] : per_model) {
        const auto cpc = cost_per_correct(s.cost, s.correct);
        rows.push_back({model, std::to_string(s.n), std::to_string(s.correct),
                        money(s.cost), cpc ? money(*cpc) : ""});
    }
    return rows;
}

}  // namespace

ReportTables emit_report(const std::vector<TrialRecord>& records,
                         ReportSlice slice) {
    if (records.empty()) {
        throw ArgumentError("emit_report: no records");
    }
    std::vector<std::vector<std::string>> rows;
    switch (slice) {
        case ReportSlice::ByLength:
            rows = accuracy_rows(records, GroupBy::Length, "length");
            break;
        case ReportSlice::ByThird:
            rows = accuracy_rows(records, GroupBy::Third, "third");
            break;
        case ReportSlice::ByFormat:
            rows = accuracy_rows(records, GroupBy::Format, "format");
            break;
        case ReportSlice::ByModel:
            rows = accuracy_rows(records, GroupBy::Model, "model");
            break;
        case ReportSlice::ByTask:
            rows = accuracy_rows(records, GroupBy::Task, "task");
            break;
        case ReportSlice::Cpc:
            rows = cpc_rows(records);
            break;
    }
    return ReportTables{delimit(rows), align(rows)};
}

}  // namespace quotestamp
