#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tdpart {

using DocId = std::string;

/// True when `token` is non-empty and free of ASCII whitespace.
[[nodiscard]] bool is_valid_token(std::string_view token) noexcept;

struct Query {
    std::string id;
    std::string text;

    Query() = default;
    /// Throws ValidationError when `id` is not a valid token.
    explicit Query(std::string id, std::string text = {});
};

struct DocEntry {
    DocId doc_id;
    std::string text;

    DocEntry() = default;
    explicit DocEntry(DocId doc_id, std::string text = {});
};

struct RankedEntry {
    DocId doc_id;
    std::uint32_t rank = 0;
    double score = 0.0;

    friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

/// An immutable ranking of unique documents for one query, ranks 1..n.
///
/// Construction rejects structural damage (rank gaps, duplicate ids, increasing
/// scores). Tied scores are accepted because real run files contain them;
/// `validate` still reports them.
class RankedList {
public:
    RankedList() = default;

    /// Takes entries in any order and sorts them by rank.
    static RankedList from_entries(Query query, std::vector<RankedEntry> entries);

    [[nodiscard]] const Query& query() const noexcept { return query_; }
    [[nodiscard]] std::span<const RankedEntry> entries() const noexcept { return entries_; }
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
    [[nodiscard]] const RankedEntry& operator[](std::size_t i) const { return entries_[i]; }

    /// Doc ids in rank order.
    [[nodiscard]] std::vector<DocId> doc_ids() const;

    friend bool operator==(const RankedList& a, const RankedList& b)
    {
        return a.query_.id == b.query_.id && a.entries_ == b.entries_;
    }

private:
    RankedList(Query query, std::vector<RankedEntry> entries)
        : query_(std::move(query)), entries_(std::move(entries))
    {
    }

    friend RankedList make_ranked_list(const Query&, std::span<const DocId>);
    friend RankedList truncate_to_depth(const RankedList&, std::size_t);

    Query query_;
    std::vector<RankedEntry> entries_;
};

/// Ranks follow input order; scores are synthesized as n - rank + 1.
/// Throws ValidationError on an empty sequence, a duplicate or a malformed id.
RankedList make_ranked_list(const Query& query, std::span<const DocId> ordered_doc_ids);

RankedList truncate_to_depth(const RankedList& list, std::size_t depth);

struct Violation {
    std::size_t position;  // 0-based index into the entries
    std::string message;
};

/// Every invariant violation in `entries`, in position order. Empty means ok.
std::vector<Violation> validate_entries(std::span<const RankedEntry> entries);
std::vector<Violation> validate(const RankedList& list);

/// Graded relevance labels. Unjudged pairs read as grade 0.
class JudgmentSet {
public:
    using DocGrades = std::map<DocId, int>;

    /// Throws ValidationError on a negative grade or an already-present pair.
    void add(const std::string& query_id, const DocId& doc_id, int grade);

    [[nodiscard]] int grade(const std::string& query_id, const DocId& doc_id) const;
    [[nodiscard]] bool is_judged(const std::string& query_id, const DocId& doc_id) const;

    /// All judged docs for the query (empty map if none).
    [[nodiscard]] const DocGrades& judged(const std::string& query_id) const;
    [[nodiscard]] std::vector<std::string> query_ids() const;
    [[nodiscard]] std::size_t size() const noexcept { return size_; }

private:
    std::map<std::string, DocGrades> grades_;
    std::size_t size_ = 0;
};

enum class Mode { single, sliding, tdpart };

std::string_view to_string(Mode mode) noexcept;
/// Throws ConfigError for unknown names.
Mode parse_mode(std::string_view name);

/// Configuration of one re-ranking strategy.
///
/// `max_parallel` bounds how many partition comparisons form one scheduling
/// wave in top-down partitioning; 0 means a whole sweep is one wave. The budget
/// is re-checked between waves.
struct PartitionPlan {
    Mode mode = Mode::tdpart;
    std::size_t window = 20;
    std::size_t stride = 10;
    std::size_t cutoff = 10;
    std::size_t budget = 20;
    std::size_t depth = 100;
    std::size_t max_parallel = 0;

    static PartitionPlan single(std::size_t window, std::size_t depth = 100);
    static PartitionPlan sliding(std::size_t window, std::size_t stride, std::size_t depth = 100);
    /// `cutoff` defaults to floor(window / 2).
    static PartitionPlan tdpart(std::size_t window, std::size_t budget, std::size_t depth = 100,
                                std::optional<std::size_t> cutoff = std::nullopt);

    /// Throws ConfigError naming the first violated constraint.
    void validate() const;
};

struct CallRecord {
    std::size_t window_size = 0;
    bool contains_pivot = false;
};

struct StageRecord {
    std::vector<CallRecord> calls;
    bool parallel = false;
};

/// Per-query record of every permuter call, grouped into scheduling stages.
class InferenceLedger {
public:
    void add_stage(StageRecord stage);
    /// Size of a top-down candidate set at the end of one sweep.
    void note_candidates(std::size_t size) { candidate_sizes_.push_back(size); }

    [[nodiscard]] std::size_t total_inferences() const noexcept;
    /// Number of stages; a parallel stage costs one step of latency.
    [[nodiscard]] std::size_t sequential_depth() const noexcept { return stages_.size(); }
    [[nodiscard]] std::size_t max_stage_width() const noexcept;
    [[nodiscard]] std::vector<std::size_t> stage_sizes() const;
    [[nodiscard]] std::span<const StageRecord> stages() const noexcept { return stages_; }
    [[nodiscard]] std::span<const std::size_t> candidate_sizes() const noexcept
    {
        return candidate_sizes_;
    }

private:
    std::vector<StageRecord> stages_;
    std::vector<std::size_t> candidate_sizes_;
};

}  // namespace tdpart
