#pragma once

#include <functional>
#include <istream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tdpart/core.hpp"

namespace tdpart {

struct PermuteRequest {
    Query query;
    std::vector<DocEntry> window;

    [[nodiscard]] std::vector<DocId> window_ids() const;
};

struct RepairEvent {
    enum class Kind { duplicate_removed, missing_appended, unknown_dropped };

    Kind kind;
    DocId doc_id;

    friend bool operator==(const RepairEvent&, const RepairEvent&) = default;
};

std::string_view to_string(RepairEvent::Kind kind) noexcept;

struct PermutationResult {
    std::vector<DocId> order;
    std::vector<RepairEvent> repairs;
};

/// PERMUTE(window, query): a list-wise ranker seen from the orchestration side.
///
/// Implementations must be callable concurrently and must not carry state from
/// one call to the next.
class Permuter {
public:
    virtual ~Permuter() = default;

    /// Returns a permutation of the request window or throws BackendError.
    [[nodiscard]] virtual PermutationResult permute(const PermuteRequest& request) const = 0;
    [[nodiscard]] virtual bool deterministic() const noexcept = 0;
};

/// Makes any raw backend answer a permutation of `window_ids`:
/// unknown ids are dropped, the first of each duplicate is kept, and missing
/// ids are appended in window order.
PermutationResult repair_permutation(std::span<const DocId> raw, std::span<const DocId> window_ids);

/// Window sorted by grade, highest first; equal grades keep window order.
PermutationResult oracle_permute(const PermuteRequest& request, const JudgmentSet& judgments);

class OraclePermuter final : public Permuter {
public:
    explicit OraclePermuter(const JudgmentSet& judgments) : judgments_(judgments) {}

    PermutationResult permute(const PermuteRequest& request) const override
    {
        return oracle_permute(request, judgments_);
    }
    bool deterministic() const noexcept override { return true; }

private:
    const JudgmentSet& judgments_;
};

/// Keys a window independently of its order: "<query_id>|<sorted ids joined by ','>".
std::string window_fingerprint(const std::string& query_id, std::span<const DocId> window_ids);

using PermutationScript = std::unordered_map<std::string, std::vector<DocId>>;

/// Looks the window up by fingerprint. Scripted orders go through
/// repair_permutation. Without an entry, identity is returned when
/// `identity_fallback` is set, otherwise ScriptError is thrown.
PermutationResult scripted_permute(const PermuteRequest& request, const PermutationScript& script,
                                   bool identity_fallback = true);

class ScriptedPermuter final : public Permuter {
public:
    explicit ScriptedPermuter(PermutationScript script, bool identity_fallback = true)
        : script_(std::move(script)), identity_fallback_(identity_fallback)
    {
    }

    PermutationResult permute(const PermuteRequest& request) const override
    {
        return scripted_permute(request, script_, identity_fallback_);
    }
    bool deterministic() const noexcept override { return true; }

    [[nodiscard]] const PermutationScript& script() const noexcept { return script_; }

private:
    PermutationScript script_;
    bool identity_fallback_;
};

/// Reads a script from JSON lines: {"query_id": "...", "window": [...], "order": [...]}.
/// Throws ParseError with the offending line.
PermutationScript parse_permutation_script(std::istream& in);

/// Always returns the window unchanged.
class IdentityPermuter final : public Permuter {
public:
    PermutationResult permute(const PermuteRequest& request) const override
    {
        return {request.window_ids(), {}};
    }
    bool deterministic() const noexcept override { return true; }
};

/// Wraps a callable; the callable's raw answer is repaired. Mostly for tests.
class FunctionPermuter final : public Permuter {
public:
    using Fn = std::function<std::vector<DocId>(const PermuteRequest&)>;

    explicit FunctionPermuter(Fn fn, bool deterministic = true) : fn_(std::move(fn)), deterministic_(deterministic) {}

    PermutationResult permute(const PermuteRequest& request) const override;
    bool deterministic() const noexcept override { return deterministic_; }

private:
    Fn fn_;
    bool deterministic_;
};

}  // namespace tdpart
