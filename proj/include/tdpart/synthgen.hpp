#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "tdpart/core.hpp"

namespace tdpart {

enum class Ordering { asc, desc, random };

std::string_view to_string(Ordering ordering) noexcept;
/// Accepts ASC, DESC, RANDOM in any case. Throws ConfigError otherwise.
Ordering parse_ordering(std::string_view name);

struct GradedDoc {
    DocId doc_id;
    int grade = 0;

    friend bool operator==(const GradedDoc&, const GradedDoc&) = default;
};

/// Judged documents of one query split at the relevance threshold.
struct JudgedPools {
    std::string query_id;
    std::vector<GradedDoc> relevant;      // grade >= threshold
    std::vector<GradedDoc> non_relevant;  // judged, grade < threshold
    int threshold = 2;
};

JudgedPools make_pools(const JudgmentSet& judgments, const std::string& query_id, int threshold);

/// Queries with at least window - 1 judged documents on each side of the threshold.
std::set<std::string> filter_eligible_queries(const JudgmentSet& judgments, std::size_t window, int threshold);

/// round(k * r), half up.
std::size_t relevant_count(std::size_t window, double ratio);

/// Uniformly samples relevant_count(k, r0) relevant and the rest non-relevant
/// documents. Result lists the relevant sample first, then the non-relevant one.
std::vector<GradedDoc> generate_initial_ranking(const JudgedPools& pools, std::size_t window, double ratio,
                                                std::uint64_t seed);

/// Swaps seeded non-relevant members for unused relevant documents until the
/// relevant count reaches relevant_count(k, r_next). Relevant members persist.
std::vector<GradedDoc> evolve_ranking(const std::vector<GradedDoc>& current, const JudgedPools& pools,
                                      double ratio_prev, double ratio_next, std::uint64_t seed);

/// DESC sorts by grade (highest first) after a seeded shuffle, so ties are in
/// seeded order; ASC is its reverse; RANDOM is the seeded shuffle itself.
std::vector<GradedDoc> order_ranking(std::vector<GradedDoc> docs, Ordering ordering, std::uint64_t seed);

struct SyntheticSpec {
    std::vector<std::size_t> windows{5, 20};
    std::vector<double> ratios{0.2, 0.4, 0.6, 0.8};
    std::vector<Ordering> orderings{Ordering::asc, Ordering::desc, Ordering::random};
    std::size_t seeds = 5;
    std::uint64_t base_seed = 0;
    int threshold = 2;

    /// Throws ConfigError.
    void validate() const;
};

struct SyntheticWindow {
    std::string query_id;
    std::size_t window = 0;
    double ratio = 0.0;
    Ordering ordering = Ordering::random;
    std::size_t seed = 0;
    std::vector<GradedDoc> docs;
};

struct SyntheticGrid {
    /// Eligible for the largest window; used for every window size.
    std::set<std::string> eligible_queries;
    std::vector<SyntheticWindow> windows;
};

/// The full (window x query x seed x ratio x ordering) grid. Throws
/// EligibilityError when no query qualifies.
SyntheticGrid generate_grid(const JudgmentSet& judgments, const SyntheticSpec& spec);

/// One JSON object per line:
/// {"query_id", "window_size", "ratio", "ordering", "seed", "doc_ids", "grades"}.
void write_synthetic_jsonl(const std::vector<SyntheticWindow>& windows, std::ostream& out);
std::vector<SyntheticWindow> read_synthetic_jsonl(std::istream& in);

/// Query id used when a synthetic window is written as a run: "<q>__k<k>__r<r>__<ORD>__s<seed>".
std::string synthetic_query_id(const SyntheticWindow& w);

}  // namespace tdpart
