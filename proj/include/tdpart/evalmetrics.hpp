#pragma once

#include <cstddef>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "tdpart/core.hpp"

namespace tdpart {

using PerQuery = std::map<std::string, double>;

struct MetricReport {
    std::string metric;  // e.g. "nDCG@10"
    std::size_t cutoff = 0;
    PerQuery values;
    double mean = 0.0;
};

/// Linear-gain nDCG: sum of grade / log2(rank + 1) over the top-k, divided by
/// the same sum for the ideal ordering of every judged document of the query.
/// 0 when the query has no positive grade.
double ndcg_at_k(const RankedList& ranking, const JudgmentSet& judgments, std::size_t k);

/// Top-k documents with grade >= threshold, divided by k.
double precision_at_k(const RankedList& ranking, const JudgmentSet& judgments, std::size_t k, int threshold);

enum class MetricKind { ndcg, precision };

struct MetricSpec {
    MetricKind kind;
    std::size_t cutoff;

    [[nodiscard]] std::string name() const;
    /// Parses "ndcg@10", "nDCG@5", "P@10". Throws ConfigError.
    static MetricSpec parse(std::string_view name);
};

/// nDCG@1, nDCG@5, nDCG@10, P@10.
std::vector<MetricSpec> default_metrics();

MetricReport evaluate(const std::map<std::string, RankedList>& run, const JudgmentSet& judgments,
                      const MetricSpec& metric, int threshold);

struct TostResult {
    double bound_fraction = 0.05;
    double alpha = 0.05;
    double delta = 0.0;
    double mean_difference = 0.0;
    double p_lower = 1.0;
    double p_upper = 1.0;
    bool equivalent = false;
    /// Differences had zero variance; decided by |mean difference| against delta.
    bool degenerate = false;
};

/// Paired two one-sided t-tests on d = a - b against +-delta, where
/// delta = bound_fraction * |mean(b)|. Equivalent iff max(p_lower, p_upper) < alpha.
/// Throws InputError when the key sets differ or fewer than two queries remain.
TostResult paired_tost(const PerQuery& a, const PerQuery& b, double bound_fraction = 0.05, double alpha = 0.05);

struct SystemSummary {
    std::string system;
    std::map<std::string, double> means;  // metric name -> mean
};

struct SummaryTable {
    std::vector<std::string> metrics;
    std::vector<SystemSummary> rows;
    std::vector<std::string> warnings;
};

struct SystemReports {
    std::string system;
    std::vector<MetricReport> reports;
};

/// Aligns every report on the union of query ids; a query missing from a
/// report is scored 0 and produces a warning.
SummaryTable aggregate(const std::vector<SystemReports>& systems);

void write_summary_csv(const SummaryTable& table, std::ostream& out);
void write_summary_text(const SummaryTable& table, std::ostream& out);
/// One {"system", "query_id", "<metric>": value, ...} object per line.
void write_per_query_jsonl(const std::vector<SystemReports>& systems, std::ostream& out);

}  // namespace tdpart
