#include "tdpart/partition.hpp"

#include <algorithm>
#include <limits>

#include "tdpart/error.hpp"

namespace tdpart {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

class Context {
public:
    Context(const Query& query, const Permuter& permuter, const RerankEnv& env)
        : query_(query), permuter_(permuter), env_(env)
    {
    }

private:
    template <typename F>
    auto call(F&& f) const
    {
        try {
            return f();
        } catch (const BackendUnavailableError& e) {
            throw BackendUnavailableError(tagged(e.what()));
        } catch (const ProtocolError& e) {
            throw ProtocolError(tagged(e.what()));
        } catch (const ScriptError& e) {
            throw ScriptError(tagged(e.what()));
        } catch (const BackendError& e) {
            throw BackendError(tagged(e.what()));
        }
    }

    [[nodiscard]] std::string tagged(const std::string& what) const
    {
        const auto prefix = "query " + query_.id + ": ";
        return what.rfind(prefix, 0) == 0 ? what : prefix + what;
    }

public:
    [[nodiscard]] DocEntry entry(const DocId& id) const
    {
        if (env_.corpus != nullptr) {
            if (auto it = env_.corpus->find(id); it != env_.corpus->end()) {
                return it->second;
            }
        }
        return DocEntry(id);
    }

    [[nodiscard]] std::vector<DocEntry> entries(std::span<const DocId> ids) const
    {
        std::vector<DocEntry> out;
        out.reserve(ids.size());
        for (const auto& id : ids) {
            out.push_back(entry(id));
        }
        return out;
    }

    /// One sequential stage holding a single call.
    std::vector<DocId> permute_alone(std::span<const DocId> ids, InferenceLedger& ledger) const
    {
        auto result = call([&] { return permuter_.permute({query_, entries(ids)}); });
        ledger.add_stage({{{ids.size(), false}}, false});
        return std::move(result.order);
    }

    void run_stage(std::span<const StageExecutor::Task> tasks) const
    {
        call([&] {
            if (env_.executor != nullptr) {
                env_.executor->run(tasks);
            } else {
                SequentialExecutor{}.run(tasks);
            }
            return 0;
        });
    }

    [[nodiscard]] const Query& query() const noexcept { return query_; }
    [[nodiscard]] const Permuter& permuter() const noexcept { return permuter_; }

private:
    const Query& query_;
    const Permuter& permuter_;
    const RerankEnv& env_;
};

/// Re-assembles a full list: `head` replaces the first head.size() entries.
RerankOutcome finish(const RankedList& list, std::vector<DocId> head, InferenceLedger ledger)
{
    const auto ids = list.doc_ids();
    head.insert(head.end(), ids.begin() + static_cast<std::ptrdiff_t>(head.size()), ids.end());
    return {make_ranked_list(list.query(), head), std::move(ledger)};
}

std::vector<DocId> top_down(const Context& ctx, const PartitionPlan& plan, std::vector<DocId> docs,
                            InferenceLedger& ledger)
{
    const auto w = plan.window;
    const auto k = plan.cutoff;
    if (docs.size() <= w) {
        return ctx.permute_alone(docs, ledger);
    }

    const std::span<const DocId> all(docs);
    const auto first = ctx.permute_alone(all.first(w), ledger);
    auto split = select_pivot(first, k);
    auto& candidates = split.above;
    auto& backfill = split.below;
    const auto pivot = ctx.entry(split.pivot);

    const auto rest = all.subspan(w);
    const auto partition_size = w - 1;
    const auto partitions = ceil_div(rest.size(), partition_size);
    const auto wave_width = plan.max_parallel == 0 ? partitions : plan.max_parallel;

    std::size_t next = 0;
    while (next < partitions && candidates.size() < plan.budget) {
        const auto wave = std::min(wave_width, partitions - next);
        std::vector<std::vector<DocEntry>> inputs(wave);
        std::vector<PartitionSplit> outputs(wave);
        std::vector<StageExecutor::Task> tasks;
        StageRecord stage{{}, true};
        for (std::size_t i = 0; i < wave; ++i) {
            const auto begin = (next + i) * partition_size;
            inputs[i] = ctx.entries(rest.subspan(begin, std::min(partition_size, rest.size() - begin)));
            stage.calls.push_back({inputs[i].size() + 1, true});
            tasks.emplace_back([&, i] { outputs[i] = compare_partition(pivot, inputs[i], ctx.query(), ctx.permuter()); });
        }
        ctx.run_stage(tasks);
        ledger.add_stage(std::move(stage));
        for (auto& out : outputs) {
            candidates.insert(candidates.end(), out.above.begin(), out.above.end());
            backfill.insert(backfill.end(), out.below.begin(), out.below.end());
        }
        next += wave;
    }
    const auto undispatched = rest.subspan(std::min(rest.size(), next * partition_size));
    backfill.insert(backfill.end(), undispatched.begin(), undispatched.end());
    ledger.note_candidates(candidates.size());

    std::vector<DocId> ordered;
    ordered.reserve(docs.size());
    if (candidates.size() + 1 == k) {
        ordered = std::move(candidates);
    } else {
        ordered = top_down(ctx, plan, std::move(candidates), ledger);
    }
    ordered.push_back(split.pivot);
    ordered.insert(ordered.end(), backfill.begin(), backfill.end());
    return ordered;
}

std::size_t worst_case(std::size_t m, const PartitionPlan& plan, std::size_t candidate_cap)
{
    const auto w = plan.window;
    std::size_t total = 0;
    while (m > w) {
        total += 1 + ceil_div(m - w, w - 1);
        m = std::min(candidate_cap, m - (w - plan.cutoff + 1));
    }
    return total + 1;
}

void require_tdpart(const PartitionPlan& plan)
{
    if (plan.mode != Mode::tdpart) {
        throw ConfigError("plan mode is " + std::string(to_string(plan.mode)) + ", expected tdpart");
    }
    plan.validate();
}

}  // namespace

RerankOutcome single_window_rerank(const RankedList& list, std::size_t window, const Permuter& permuter,
                                   const RerankEnv& env)
{
    if (list.empty()) {
        throw ValidationError("query " + list.query().id + ": empty ranked list");
    }
    if (window == 0) {
        throw ConfigError("window must be positive");
    }
    const Context ctx(list.query(), permuter, env);
    const auto ids = list.doc_ids();
    InferenceLedger ledger;
    auto head = ctx.permute_alone(std::span<const DocId>(ids).first(std::min(window, ids.size())), ledger);
    return finish(list, std::move(head), std::move(ledger));
}

RerankOutcome sliding_window_rerank(const RankedList& list, std::size_t window, std::size_t stride, std::size_t depth,
                                    const Permuter& permuter, const RerankEnv& env)
{
    PartitionPlan::sliding(window, stride, depth).validate();
    if (list.empty()) {
        throw ValidationError("query " + list.query().id + ": empty ranked list");
    }
    const Context ctx(list.query(), permuter, env);
    auto ids = list.doc_ids();
    const auto n = std::min(depth, ids.size());
    InferenceLedger ledger;

    std::size_t start = n > window ? n - window : 0;
    while (true) {
        const auto len = std::min(window, n - start);
        const auto ordered = ctx.permute_alone(std::span<const DocId>(ids).subspan(start, len), ledger);
        std::copy(ordered.begin(), ordered.end(), ids.begin() + static_cast<std::ptrdiff_t>(start));
        if (start == 0) {
            break;
        }
        start = start > stride ? start - stride : 0;
    }
    return {make_ranked_list(list.query(), ids), std::move(ledger)};
}

std::size_t sliding_inference_count(std::size_t n, std::size_t window, std::size_t stride)
{
    if (stride == 0 || stride >= window || window > n) {
        throw ConfigError("sliding count requires 1 <= stride < window <= n (n " + std::to_string(n) + ", window " +
                          std::to_string(window) + ", stride " + std::to_string(stride) + ")");
    }
    return 1 + ceil_div(n - window, stride);
}

RerankOutcome tdpart_rerank(const RankedList& list, const PartitionPlan& plan, const Permuter& permuter,
                            const RerankEnv& env)
{
    require_tdpart(plan);
    if (list.empty()) {
        throw ValidationError("query " + list.query().id + ": empty ranked list");
    }
    const Context ctx(list.query(), permuter, env);
    const auto ids = list.doc_ids();
    std::vector<DocId> head(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(std::min(plan.depth, ids.size())));
    InferenceLedger ledger;
    head = top_down(ctx, plan, std::move(head), ledger);
    return finish(list, std::move(head), std::move(ledger));
}

RerankOutcome rerank(const RankedList& list, const PartitionPlan& plan, const Permuter& permuter,
                     const RerankEnv& env)
{
    plan.validate();
    switch (plan.mode) {
    case Mode::single:
        return single_window_rerank(list, plan.window, permuter, env);
    case Mode::sliding:
        return sliding_window_rerank(list, plan.window, plan.stride, plan.depth, permuter, env);
    case Mode::tdpart:
        return tdpart_rerank(list, plan, permuter, env);
    }
    throw ConfigError("unknown mode");
}

PivotSplit select_pivot(std::span<const DocId> ordered_window, std::size_t cutoff)
{
    if (cutoff == 0 || cutoff > ordered_window.size()) {
        throw ConfigError("pivot cutoff " + std::to_string(cutoff) + " outside window of " +
                          std::to_string(ordered_window.size()));
    }
    const auto k = static_cast<std::ptrdiff_t>(cutoff);
    return {{ordered_window.begin(), ordered_window.begin() + k - 1},
            ordered_window[cutoff - 1],
            {ordered_window.begin() + k, ordered_window.end()}};
}

PartitionSplit compare_partition(const DocEntry& pivot, std::span<const DocEntry> partition, const Query& query,
                                 const Permuter& permuter)
{
    PermuteRequest request{query, {}};
    request.window.reserve(partition.size() + 1);
    request.window.push_back(pivot);
    request.window.insert(request.window.end(), partition.begin(), partition.end());

    const auto result = permuter.permute(request);
    const auto at = std::find(result.order.begin(), result.order.end(), pivot.doc_id);
    if (at == result.order.end() || result.order.size() != request.window.size()) {
        throw BackendError("permuter returned an ordering that is not a permutation of its window");
    }
    return {{result.order.begin(), at}, {at + 1, result.order.end()}};
}

std::size_t worst_case_inferences(std::size_t n, const PartitionPlan& plan)
{
    require_tdpart(plan);
    return worst_case(n, plan, plan.budget);
}

std::size_t overshoot_worst_case_inferences(std::size_t n, const PartitionPlan& plan)
{
    require_tdpart(plan);
    if (plan.max_parallel == 0) {
        return worst_case(n, plan, std::numeric_limits<std::size_t>::max());
    }
    return worst_case(n, plan, plan.budget - 1 + plan.max_parallel * (plan.window - 1));
}

}  // namespace tdpart
