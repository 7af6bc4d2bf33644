#include "tdpart/permute.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "tdpart/error.hpp"

namespace tdpart {

std::vector<DocId> PermuteRequest::window_ids() const
{
    std::vector<DocId> ids;
    ids.reserve(window.size());
    for (const auto& d : window) {
        ids.push_back(d.doc_id);
    }
    return ids;
}

std::string_view to_string(RepairEvent::Kind kind) noexcept
{
    switch (kind) {
    case RepairEvent::Kind::duplicate_removed:
        return "duplicate_removed";
    case RepairEvent::Kind::missing_appended:
        return "missing_appended";
    case RepairEvent::Kind::unknown_dropped:
        return "unknown_dropped";
    }
    return "unknown";
}

PermutationResult repair_permutation(std::span<const DocId> raw, std::span<const DocId> window_ids)
{
    const std::unordered_set<std::string_view> window(window_ids.begin(), window_ids.end());
    std::unordered_set<std::string_view> placed;
    PermutationResult result;
    result.order.reserve(window_ids.size());

    for (const auto& id : raw) {
        if (!window.contains(id)) {
            result.repairs.push_back({RepairEvent::Kind::unknown_dropped, id});
        } else if (!placed.insert(id).second) {
            result.repairs.push_back({RepairEvent::Kind::duplicate_removed, id});
        } else {
            result.order.push_back(id);
        }
    }
    for (const auto& id : window_ids) {
        if (!placed.contains(id)) {
            result.order.push_back(id);
            result.repairs.push_back({RepairEvent::Kind::missing_appended, id});
        }
    }
    return result;
}

PermutationResult oracle_permute(const PermuteRequest& request, const JudgmentSet& judgments)
{
    const auto& qid = request.query.id;
    std::vector<std::pair<int, const DocEntry*>> graded;
    graded.reserve(request.window.size());
    for (const auto& d : request.window) {
        graded.emplace_back(judgments.grade(qid, d.doc_id), &d);
    }
    std::stable_sort(graded.begin(), graded.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    PermutationResult result;
    result.order.reserve(graded.size());
    for (const auto& [_, d] : graded) {
        result.order.push_back(d->doc_id);
    }
    return result;
}

std::string window_fingerprint(const std::string& query_id, std::span<const DocId> window_ids)
{
    std::vector<DocId> sorted(window_ids.begin(), window_ids.end());
    std::sort(sorted.begin(), sorted.end());
    std::string key = query_id;
    key += '|';
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i > 0) {
            key += ',';
        }
        key += sorted[i];
    }
    return key;
}

PermutationResult scripted_permute(const PermuteRequest& request, const PermutationScript& script,
                                   bool identity_fallback)
{
    const auto ids = request.window_ids();
    const auto key = window_fingerprint(request.query.id, ids);
    if (auto it = script.find(key); it != script.end()) {
        return repair_permutation(it->second, ids);
    }
    if (!identity_fallback) {
        throw ScriptError("no scripted ordering for window " + key);
    }
    return {ids, {}};
}

PermutationScript parse_permutation_script(std::istream& in)
{
    PermutationScript script;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            auto qid = j.at("query_id").get<std::string>();
            auto window = j.at("window").get<std::vector<DocId>>();
            auto order = j.at("order").get<std::vector<DocId>>();
            auto key = window_fingerprint(qid, window);
            if (!script.emplace(std::move(key), std::move(order)).second) {
                throw ParseError(line_no, "duplicate scripted window for query " + qid);
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, std::string("bad script entry: ") + e.what());
        }
    }
    return script;
}

PermutationResult FunctionPermuter::permute(const PermuteRequest& request) const
{
    const auto raw = fn_(request);
    return repair_permutation(raw, request.window_ids());
}

}  // namespace tdpart
