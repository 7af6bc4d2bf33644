#include "tdpart/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "tdpart/error.hpp"

namespace tdpart {

namespace {

bool is_ascii_space(char c) noexcept
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

}  // namespace

bool is_valid_token(std::string_view token) noexcept
{
    return !token.empty() && std::none_of(token.begin(), token.end(), is_ascii_space);
}

Query::Query(std::string id_, std::string text_) : id(std::move(id_)), text(std::move(text_))
{
    if (!is_valid_token(id)) {
        throw ValidationError("invalid query id '" + id + "'");
    }
}

DocEntry::DocEntry(DocId doc_id_, std::string text_) : doc_id(std::move(doc_id_)), text(std::move(text_))
{
    if (!is_valid_token(doc_id)) {
        throw ValidationError("invalid doc_id '" + doc_id + "'");
    }
}

RankedList RankedList::from_entries(Query query, std::vector<RankedEntry> entries)
{
    std::sort(entries.begin(), entries.end(),
              [](const RankedEntry& a, const RankedEntry& b) { return a.rank < b.rank; });
    for (const auto& v : validate_entries(entries)) {
        // Tied scores are tolerated; everything else is structural.
        if (v.message.rfind("non-strict score order", 0) != 0) {
            throw ValidationError("query " + query.id + ": " + v.message);
        }
    }
    return RankedList(std::move(query), std::move(entries));
}

std::vector<DocId> RankedList::doc_ids() const
{
    std::vector<DocId> ids;
    ids.reserve(entries_.size());
    for (const auto& e : entries_) {
        ids.push_back(e.doc_id);
    }
    return ids;
}

RankedList make_ranked_list(const Query& query, std::span<const DocId> ordered_doc_ids)
{
    if (ordered_doc_ids.empty()) {
        throw ValidationError("query " + query.id + ": empty ranked list");
    }
    std::unordered_set<std::string_view> seen;
    std::vector<RankedEntry> entries;
    entries.reserve(ordered_doc_ids.size());
    const auto n = ordered_doc_ids.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& id = ordered_doc_ids[i];
        if (!is_valid_token(id)) {
            throw ValidationError("invalid doc_id '" + id + "'");
        }
        if (!seen.insert(id).second) {
            throw ValidationError("duplicate doc_id " + id);
        }
        entries.push_back({id, static_cast<std::uint32_t>(i + 1), static_cast<double>(n - i)});
    }
    return RankedList(query, std::move(entries));
}

RankedList truncate_to_depth(const RankedList& list, std::size_t depth)
{
    if (depth >= list.size()) {
        return list;
    }
    return RankedList(list.query_, {list.entries_.begin(), list.entries_.begin() + static_cast<std::ptrdiff_t>(depth)});
}

std::vector<Violation> validate_entries(std::span<const RankedEntry> entries)
{
    std::vector<Violation> out;
    std::unordered_set<std::string_view> seen;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if (!is_valid_token(e.doc_id)) {
            out.push_back({i, "invalid doc_id '" + e.doc_id + "'"});
        }
        if (!seen.insert(e.doc_id).second) {
            out.push_back({i, "duplicate doc_id " + e.doc_id});
        }
        if (!std::isfinite(e.score)) {
            out.push_back({i, "non-finite score at rank " + std::to_string(e.rank)});
        }
        if (i == 0) {
            if (e.rank != 1) {
                out.push_back({i, "ranking starts at rank " + std::to_string(e.rank)});
            }
            continue;
        }
        const auto& prev = entries[i - 1];
        if (e.rank == prev.rank) {
            out.push_back({i, "duplicate rank " + std::to_string(e.rank)});
        } else if (e.rank != prev.rank + 1) {
            out.push_back({i, "gap after rank " + std::to_string(prev.rank)});
        }
        if (e.score == prev.score) {
            out.push_back({i, "non-strict score order at rank " + std::to_string(e.rank)});
        } else if (e.score > prev.score) {
            out.push_back({i, "increasing score at rank " + std::to_string(e.rank)});
        }
    }
    return out;
}

std::vector<Violation> validate(const RankedList& list) { return validate_entries(list.entries()); }

void JudgmentSet::add(const std::string& query_id, const DocId& doc_id, int grade)
{
    if (grade < 0) {
        throw ValidationError("negative grade for (" + query_id + ", " + doc_id + ")");
    }
    auto [it, inserted] = grades_[query_id].emplace(doc_id, grade);
    if (!inserted) {
        throw ValidationError("duplicate judgment (" + query_id + ", " + doc_id + ")");
    }
    ++size_;
}

int JudgmentSet::grade(const std::string& query_id, const DocId& doc_id) const
{
    auto q = grades_.find(query_id);
    if (q == grades_.end()) {
        return 0;
    }
    auto d = q->second.find(doc_id);
    return d == q->second.end() ? 0 : d->second;
}

bool JudgmentSet::is_judged(const std::string& query_id, const DocId& doc_id) const
{
    auto q = grades_.find(query_id);
    return q != grades_.end() && q->second.contains(doc_id);
}

const JudgmentSet::DocGrades& JudgmentSet::judged(const std::string& query_id) const
{
    static const DocGrades empty;
    auto q = grades_.find(query_id);
    return q == grades_.end() ? empty : q->second;
}

std::vector<std::string> JudgmentSet::query_ids() const
{
    std::vector<std::string> ids;
    ids.reserve(grades_.size());
    for (const auto& [q, _] : grades_) {
        ids.push_back(q);
    }
    return ids;
}

std::string_view to_string(Mode mode) noexcept
{
    switch (mode) {
    case Mode::single:
        return "single";
    case Mode::sliding:
        return "sliding";
    case Mode::tdpart:
        return "tdpart";
    }
    return "unknown";
}

Mode parse_mode(std::string_view name)
{
    if (name == "single") {
        return Mode::single;
    }
    if (name == "sliding") {
        return Mode::sliding;
    }
    if (name == "tdpart") {
        return Mode::tdpart;
    }
    throw ConfigError("unknown mode '" + std::string(name) + "' (expected single, sliding or tdpart)");
}

PartitionPlan PartitionPlan::single(std::size_t window, std::size_t depth)
{
    PartitionPlan plan;
    plan.mode = Mode::single;
    plan.window = window;
    plan.depth = depth;
    return plan;
}

PartitionPlan PartitionPlan::sliding(std::size_t window, std::size_t stride, std::size_t depth)
{
    PartitionPlan plan;
    plan.mode = Mode::sliding;
    plan.window = window;
    plan.stride = stride;
    plan.depth = depth;
    return plan;
}

PartitionPlan PartitionPlan::tdpart(std::size_t window, std::size_t budget, std::size_t depth,
                                    std::optional<std::size_t> cutoff)
{
    PartitionPlan plan;
    plan.mode = Mode::tdpart;
    plan.window = window;
    plan.budget = budget;
    plan.depth = depth;
    plan.cutoff = cutoff.value_or(window / 2);
    return plan;
}

void PartitionPlan::validate() const
{
    if (window == 0) {
        throw ConfigError("window must be positive");
    }
    if (depth < window) {
        throw ConfigError("depth " + std::to_string(depth) + " is smaller than window " + std::to_string(window));
    }
    switch (mode) {
    case Mode::single:
        break;
    case Mode::sliding:
        if (stride == 0 || stride >= window) {
            throw ConfigError("sliding requires 1 <= stride < window (stride " + std::to_string(stride) +
                              ", window " + std::to_string(window) + ")");
        }
        break;
    case Mode::tdpart:
        if (window < 2) {
            throw ConfigError("tdpart requires window >= 2");
        }
        if (cutoff == 0 || cutoff >= window) {
            throw ConfigError("tdpart requires 1 <= cutoff < window (cutoff " + std::to_string(cutoff) +
                              ", window " + std::to_string(window) + ")");
        }
        if (budget < cutoff) {
            throw ConfigError("tdpart requires budget >= cutoff (budget " + std::to_string(budget) + ", cutoff " +
                              std::to_string(cutoff) + ")");
        }
        break;
    }
}

void InferenceLedger::add_stage(StageRecord stage)
{
    if (!stage.calls.empty()) {
        stages_.push_back(std::move(stage));
    }
}

std::size_t InferenceLedger::total_inferences() const noexcept
{
    return std::accumulate(stages_.begin(), stages_.end(), std::size_t{0},
                           [](std::size_t acc, const StageRecord& s) { return acc + s.calls.size(); });
}

std::size_t InferenceLedger::max_stage_width() const noexcept
{
    std::size_t width = 0;
    for (const auto& s : stages_) {
        width = std::max(width, s.calls.size());
    }
    return width;
}

std::vector<std::size_t> InferenceLedger::stage_sizes() const
{
    std::vector<std::size_t> sizes;
    sizes.reserve(stages_.size());
    for (const auto& s : stages_) {
        sizes.push_back(s.calls.size());
    }
    return sizes;
}

}  // namespace tdpart
