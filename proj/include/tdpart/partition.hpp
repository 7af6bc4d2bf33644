#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tdpart/core.hpp"
#include "tdpart/executor.hpp"
#include "tdpart/permute.hpp"

namespace tdpart {

using Corpus = std::unordered_map<DocId, DocEntry>;

/// Where re-ranking gets document texts and how it runs parallel stages.
/// Missing texts are sent empty; a null executor runs stages sequentially.
struct RerankEnv {
    const Corpus* corpus = nullptr;
    StageExecutor* executor = nullptr;
};

struct RerankOutcome {
    RankedList ranking;
    InferenceLedger ledger;
};

/// Permutes the top-min(w, n) entries once.
RerankOutcome single_window_rerank(const RankedList& list, std::size_t window, const Permuter& permuter,
                                   const RerankEnv& env = {});

/// Bottom-up pass over the top-min(depth, n) entries: the first window covers
/// the last `window` positions, each next one moves up by `stride` and is
/// clamped at the top of the list.
RerankOutcome sliding_window_rerank(const RankedList& list, std::size_t window, std::size_t stride, std::size_t depth,
                                    const Permuter& permuter, const RerankEnv& env = {});

/// Windows the bottom-up pass makes over `n` documents: 1 + ceil((n - w) / s).
/// Throws ConfigError unless 1 <= s < w <= n.
std::size_t sliding_inference_count(std::size_t n, std::size_t window, std::size_t stride);

/// Top-down partitioning over the top-min(depth, n) entries.
///
/// The first window is permuted and split at the pivot (rank `cutoff`). The
/// remaining documents are compared against the pivot in partitions of
/// `window - 1`, dispatched in waves of `max_parallel` partitions (a whole
/// sweep when 0) as parallel stages; the budget is checked before each wave
/// and every result of a wave is kept. If any partition placed a document
/// above the pivot the candidates are ordered recursively with the same plan,
/// otherwise the first window's order stands. Partitions never dispatched are
/// appended to the backfill in their incoming order.
RerankOutcome tdpart_rerank(const RankedList& list, const PartitionPlan& plan, const Permuter& permuter,
                            const RerankEnv& env = {});

/// Dispatches on `plan.mode`.
RerankOutcome rerank(const RankedList& list, const PartitionPlan& plan, const Permuter& permuter,
                     const RerankEnv& env = {});

struct PivotSplit {
    std::vector<DocId> above;
    DocId pivot;
    std::vector<DocId> below;
};

/// Splits at 1-based position `cutoff`. Throws ConfigError when cutoff is 0 or
/// exceeds the window.
PivotSplit select_pivot(std::span<const DocId> ordered_window, std::size_t cutoff);

struct PartitionSplit {
    std::vector<DocId> above;
    std::vector<DocId> below;
};

/// Permutes [pivot] + partition and splits the answer around the pivot.
PartitionSplit compare_partition(const DocEntry& pivot, std::span<const DocEntry> partition, const Query& query,
                                 const Permuter& permuter);

/// Worst-case inference count of top-down partitioning over `n` documents.
///
/// An iteration over m > w documents costs one pivot window plus
/// ceil((m - w) / (w - 1)) comparisons and leaves at most
/// min(b, m - (w - k + 1)) candidates; an iteration over m <= w costs one
/// call. For b = w this is 2 + ceil((n - w) / (w - 1)) when n > w, else 1.
/// Throws ConfigError for a plan that is not a valid tdpart plan.
std::size_t worst_case_inferences(std::size_t n, const PartitionPlan& plan);

/// Same recurrence, but with candidate sets allowed to overshoot the budget by
/// everything a wave can add. Bounds every run, whatever the permuter does.
std::size_t overshoot_worst_case_inferences(std::size_t n, const PartitionPlan& plan);

}  // namespace tdpart
