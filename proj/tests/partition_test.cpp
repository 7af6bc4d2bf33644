#include <random>
#include <set>

#include <gtest/gtest.h>

#include "tdpart/error.hpp"
#include "tdpart/executor.hpp"
#include "tdpart/partition.hpp"
#include "test_util.hpp"

namespace tdpart {
namespace {

std::multiset<DocId> multiset_of(const RankedList& list)
{
    const auto ids = list.doc_ids();
    return {ids.begin(), ids.end()};
}

FunctionPermuter hashed_permuter(std::uint64_t salt)
{
    return FunctionPermuter([salt](const PermuteRequest& r) { return test::hashed_shuffle(r, salt); });
}

TEST(SelectPivot, PositionalSplit)
{
    const std::vector<DocId> abcd{"a", "b", "c", "d"};
    auto s = select_pivot(abcd, 2);
    EXPECT_EQ(s.above, (std::vector<DocId>{"a"}));
    EXPECT_EQ(s.pivot, "b");
    EXPECT_EQ(s.below, (std::vector<DocId>{"c", "d"}));

    s = select_pivot(std::vector<DocId>{"a"}, 1);
    EXPECT_TRUE(s.above.empty());
    EXPECT_EQ(s.pivot, "a");
    EXPECT_TRUE(s.below.empty());

    s = select_pivot(std::vector<DocId>{"a", "b", "c"}, 3);
    EXPECT_EQ(s.above, (std::vector<DocId>{"a", "b"}));
    EXPECT_EQ(s.pivot, "c");
    EXPECT_TRUE(s.below.empty());

    EXPECT_THROW(select_pivot(abcd, 5), ConfigError);
    EXPECT_THROW(select_pivot(abcd, 0), ConfigError);
}

TEST(ComparePartition, SplitsAroundPivot)
{
    const Query q("q");
    const DocEntry pivot("p");
    const std::vector<DocEntry> partition{DocEntry("x"), DocEntry("y"), DocEntry("z")};

    auto split = compare_partition(pivot, partition, q, IdentityPermuter{});
    EXPECT_TRUE(split.above.empty());
    EXPECT_EQ(split.below, (std::vector<DocId>{"x", "y", "z"}));

    const auto j = test::judgments_of("q", {{"p", 2}, {"x", 3}, {"y", 0}, {"z", 1}});
    split = compare_partition(pivot, partition, q, OraclePermuter(j));
    EXPECT_EQ(split.above, (std::vector<DocId>{"x"}));
    EXPECT_EQ(split.below, (std::vector<DocId>{"z", "y"}));

    PermutationScript script;
    script[window_fingerprint("q", std::vector<DocId>{"p", "x", "y", "z"})] = {"x", "y", "z", "p"};
    split = compare_partition(pivot, partition, q, ScriptedPermuter(script, false));
    EXPECT_EQ(split.above, (std::vector<DocId>{"x", "y", "z"}));
    EXPECT_TRUE(split.below.empty());
}

TEST(SingleWindow, Examples)
{
    const auto list = test::list_of("q", 100);
    const auto same = single_window_rerank(list, 20, IdentityPermuter{});
    EXPECT_EQ(same.ranking, list);
    EXPECT_EQ(same.ledger.total_inferences(), 1u);
    EXPECT_EQ(same.ledger.sequential_depth(), 1u);

    const auto j = test::judgments_of("q", {{"d5", 3}});
    const auto sorted = single_window_rerank(list, 20, OraclePermuter(j));
    EXPECT_EQ(sorted.ranking[0].doc_id, "d5");
    for (std::size_t i = 20; i < 100; ++i) {
        EXPECT_EQ(sorted.ranking[i], list[i]);
    }

    const auto short_list = test::list_of("q", 3);
    EXPECT_EQ(single_window_rerank(short_list, 20, IdentityPermuter{}).ranking, short_list);
}

TEST(SlidingWindow, NineWindowsAtDepthHundred)
{
    const auto list = test::list_of("q", 100);
    const auto out = sliding_window_rerank(list, 20, 10, 100, IdentityPermuter{});
    EXPECT_EQ(out.ranking, list);
    EXPECT_EQ(out.ledger.total_inferences(), 9u);
    EXPECT_EQ(out.ledger.sequential_depth(), 9u);
    EXPECT_EQ(out.ledger.max_stage_width(), 1u);
    for (const auto& stage : out.ledger.stages()) {
        EXPECT_FALSE(stage.parallel);
        EXPECT_EQ(stage.calls.front().window_size, 20u);
    }
}

TEST(SlidingWindow, BubblesBottomDocumentToTop)
{
    const auto list = test::list_of("q", 30);
    const auto j = test::judgments_of("q", {{"d30", 1}});
    const auto out = sliding_window_rerank(list, 4, 2, 30, OraclePermuter(j));
    EXPECT_EQ(out.ranking[0].doc_id, "d30");
    EXPECT_EQ(out.ledger.total_inferences(), 14u);
    // Everything else keeps its relative order.
    auto rest = out.ranking.doc_ids();
    rest.erase(rest.begin());
    EXPECT_EQ(rest, test::doc_ids(29));
}

TEST(SlidingWindow, RecordsWindowStartsBottomUp)
{
    std::vector<DocId> firsts;
    const FunctionPermuter spy([&](const PermuteRequest& r) {
        firsts.push_back(r.window.front().doc_id);
        return r.window_ids();
    });
    (void)sliding_window_rerank(test::list_of("q", 30), 4, 2, 30, spy);
    std::vector<DocId> expected;
    for (int start = 26; start >= 0; start -= 2) {
        expected.push_back("d" + std::to_string(start + 1));
    }
    EXPECT_EQ(firsts, expected);
}

TEST(SlidingWindow, DepthLimitsTheRange)
{
    const auto list = test::list_of("q", 50);
    const auto j = test::judgments_of("q", {{"d40", 3}});
    const auto out = sliding_window_rerank(list, 4, 2, 30, OraclePermuter(j));
    EXPECT_EQ(out.ranking, list);
    EXPECT_EQ(out.ledger.total_inferences(), 14u);
}

TEST(SlidingInferenceCount, Examples)
{
    EXPECT_EQ(sliding_inference_count(100, 20, 10), 9u);
    EXPECT_EQ(sliding_inference_count(20, 20, 10), 1u);
    EXPECT_EQ(sliding_inference_count(30, 4, 2), 14u);
    EXPECT_THROW((void)sliding_inference_count(30, 4, 4), ConfigError);
    EXPECT_THROW((void)sliding_inference_count(30, 4, 0), ConfigError);
    EXPECT_THROW((void)sliding_inference_count(3, 4, 2), ConfigError);
}

TEST(SlidingInferenceCount, MatchesEnumeratedWindows)
{
    for (std::size_t n = 2; n <= 60; ++n) {
        for (std::size_t w = 2; w <= n; ++w) {
            for (std::size_t s = 1; s < w; ++s) {
                std::size_t windows = 0;
                for (std::size_t start = n - w;; start = start > s ? start - s : 0) {
                    ++windows;
                    if (start == 0) {
                        break;
                    }
                }
                ASSERT_EQ(sliding_inference_count(n, w, s), windows) << n << ' ' << w << ' ' << s;
                if (n % s == 0 && w == 2 * s) {
                    EXPECT_EQ(windows, n / s - 1);
                }
                const auto out = sliding_window_rerank(test::list_of("q", n), w, s, n, IdentityPermuter{});
                ASSERT_EQ(out.ledger.total_inferences(), windows);
            }
        }
    }
}

TEST(TopDown, WorstCaseAtDepthHundred)
{
    const auto list = test::list_of("q", 100);
    const auto plan = PartitionPlan::tdpart(20, 20);
    const ScriptedPermuter permuter(test::worst_case_script("q", list.doc_ids(), 20, 10));
    const auto out = tdpart_rerank(list, plan, permuter);
    EXPECT_EQ(out.ledger.total_inferences(), 7u);
    EXPECT_EQ(out.ledger.sequential_depth(), 3u);
    EXPECT_EQ(out.ledger.max_stage_width(), 5u);
    EXPECT_EQ(out.ledger.stage_sizes(), (std::vector<std::size_t>{1, 5, 1}));
    EXPECT_TRUE(out.ledger.stages()[1].parallel);
    for (const auto& call : out.ledger.stages()[1].calls) {
        EXPECT_TRUE(call.contains_pivot);
    }
    EXPECT_EQ(worst_case_inferences(100, plan), 7u);

    // d21 was placed above the pivot d10.
    const auto ids = out.ranking.doc_ids();
    EXPECT_EQ(ids[9], "d21");
    EXPECT_EQ(ids[10], "d10");
}

TEST(TopDown, ShortListIsOnePermute)
{
    const auto list = test::list_of("q", 15);
    const auto j = test::judgments_of("q", {{"d15", 2}, {"d7", 1}});
    const auto out = tdpart_rerank(list, PartitionPlan::tdpart(20, 20), OraclePermuter(j));
    EXPECT_EQ(out.ledger.total_inferences(), 1u);
    EXPECT_EQ(out.ranking.doc_ids(), test::stable_sort_by_grade(list.doc_ids(), j, "q"));
}

TEST(TopDown, NoNewCandidatesSkipsFinalPermute)
{
    const auto list = test::list_of("q", 100);
    const auto out = tdpart_rerank(list, PartitionPlan::tdpart(20, 20), IdentityPermuter{});
    EXPECT_EQ(out.ranking, list);
    EXPECT_EQ(out.ledger.total_inferences(), 6u);
    EXPECT_EQ(out.ledger.sequential_depth(), 2u);
}

TEST(TopDown, OracleThirtyDocs)
{
    std::mt19937 rng(30);
    for (int trial = 0; trial < 50; ++trial) {
        auto ids = test::doc_ids(30);
        std::shuffle(ids.begin(), ids.end(), rng);
        JudgmentSet j;
        for (const auto& id : ids) {
            j.add("q", id, static_cast<int>(rng() % 4));
        }
        const auto out = tdpart_rerank(test::list_of("q", ids), PartitionPlan::tdpart(10, 10, 100, 5), OraclePermuter(j));
        const auto expected = test::stable_sort_by_grade(ids, j, "q");
        if (j.grade("q", expected[4]) == j.grade("q", expected[5])) {
            continue;
        }
        EXPECT_EQ(test::prefix(out.ranking.doc_ids(), 5), test::prefix(expected, 5));
    }
}

TEST(TopDown, DocsBelowDepthAreAppendedUnchanged)
{
    const auto list = test::list_of("q", 60);
    const auto j = test::judgments_of("q", {{"d55", 3}, {"d30", 2}});
    const auto out = tdpart_rerank(list, PartitionPlan::tdpart(10, 10, 40), OraclePermuter(j));
    EXPECT_EQ(out.ranking[0].doc_id, "d30");
    for (std::size_t i = 40; i < 60; ++i) {
        EXPECT_EQ(out.ranking[i].doc_id, list[i].doc_id);
    }
}

TEST(TopDown, WavesRespectMaxParallel)
{
    const auto list = test::list_of("q", 100);
    auto plan = PartitionPlan::tdpart(20, 40);
    plan.max_parallel = 2;
    const auto permuter = hashed_permuter(5);
    const auto out = tdpart_rerank(list, plan, permuter);
    for (const auto& stage : out.ledger.stages()) {
        EXPECT_LE(stage.calls.size(), 2u);
    }
    EXPECT_LE(out.ledger.total_inferences(), overshoot_worst_case_inferences(100, plan));
    EXPECT_EQ(multiset_of(out.ranking), multiset_of(list));
}

TEST(TopDown, BudgetStopsDispatchAndKeepsUndispatchedOrder)
{
    // Every comparison puts the whole partition above the pivot, so the
    // first wave already exhausts the budget.
    const FunctionPermuter pivot_last([](const PermuteRequest& r) {
        auto ids = r.window_ids();
        std::rotate(ids.begin(), ids.begin() + 1, ids.end());
        return ids;
    });
    auto plan = PartitionPlan::tdpart(10, 10, 100, 5);
    plan.max_parallel = 1;
    const auto list = test::list_of("q", 60);
    const auto out = tdpart_rerank(list, plan, pivot_last);
    EXPECT_EQ(out.ledger.stage_sizes().at(1), 1u);
    ASSERT_FALSE(out.ledger.candidate_sizes().empty());
    EXPECT_EQ(out.ledger.candidate_sizes()[0], 4u + 9u);
    const auto ids = out.ranking.doc_ids();
    const auto original = test::doc_ids(60);
    EXPECT_EQ(std::vector<DocId>(ids.end() - 41, ids.end()), std::vector<DocId>(original.end() - 41, original.end()));
    EXPECT_EQ(multiset_of(out.ranking), multiset_of(list));
}

TEST(WorstCaseInferences, Examples)
{
    EXPECT_EQ(worst_case_inferences(100, PartitionPlan::tdpart(20, 20)), 7u);
    EXPECT_EQ(worst_case_inferences(20, PartitionPlan::tdpart(20, 20)), 1u);
    EXPECT_EQ(worst_case_inferences(100, PartitionPlan::tdpart(20, 40)), 12u);
    EXPECT_THROW((void)worst_case_inferences(100, PartitionPlan::sliding(20, 10)), ConfigError);
    for (std::size_t n = 2; n <= 200; ++n) {
        for (std::size_t w = 2; w <= std::min<std::size_t>(n, 30); ++w) {
            const auto expected = n > w ? 2 + (n - w + w - 2) / (w - 1) : 1;
            ASSERT_EQ(worst_case_inferences(n, PartitionPlan::tdpart(w, w, n)), expected) << n << ' ' << w;
        }
    }
}

TEST(Properties, ConservationLedgerBoundsAndDeterminism)
{
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t w = 2 + rng() % 12;
        const std::size_t n = 1 + rng() % 80;
        const std::size_t k = 1 + rng() % (w - 1);
        const std::size_t b = k + rng() % (2 * w);
        auto plan = PartitionPlan::tdpart(w, b, std::max(w, n), k);
        plan.max_parallel = rng() % 3;
        auto ids = test::doc_ids(n);
        std::shuffle(ids.begin(), ids.end(), rng);
        const auto list = test::list_of("q", ids);
        const auto permuter = hashed_permuter(rng());

        const auto out = tdpart_rerank(list, plan, permuter);
        ASSERT_EQ(multiset_of(out.ranking), multiset_of(list));
        EXPECT_LE(out.ledger.total_inferences(), overshoot_worst_case_inferences(std::min(plan.depth, n), plan));
        const auto sizes = out.ledger.candidate_sizes();
        if (std::all_of(sizes.begin(), sizes.end(), [&](std::size_t s) { return s <= b; })) {
            EXPECT_LE(out.ledger.total_inferences(), worst_case_inferences(std::min(plan.depth, n), plan));
        }
        if (plan.max_parallel == 1) {
            for (const auto s : sizes) {
                EXPECT_LE(s, b + w - 2);
            }
        }

        ShuffledExecutor shuffled(rng());
        ThreadPoolExecutor pool(4);
        EXPECT_EQ(tdpart_rerank(list, plan, permuter, {nullptr, &shuffled}).ranking, out.ranking);
        EXPECT_EQ(tdpart_rerank(list, plan, permuter, {nullptr, &pool}).ranking, out.ranking);

        if (n >= w) {
            const auto s = 1 + rng() % (w - 1);
            const auto slid = sliding_window_rerank(list, w, s, n, permuter);
            ASSERT_EQ(multiset_of(slid.ranking), multiset_of(list));
            EXPECT_EQ(slid.ledger.total_inferences(), sliding_inference_count(n, w, s));
        }
        EXPECT_EQ(multiset_of(single_window_rerank(list, w, permuter).ranking), multiset_of(list));
    }
}

TEST(Properties, IdentityFixedPoint)
{
    std::mt19937 rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t w = 2 + rng() % 20;
        const std::size_t n = w + rng() % 80;
        const auto list = test::list_of("q", n);
        const IdentityPermuter identity;
        EXPECT_EQ(single_window_rerank(list, w, identity).ranking, list);
        EXPECT_EQ(sliding_window_rerank(list, w, 1 + rng() % (w - 1), n, identity).ranking, list);
        EXPECT_EQ(tdpart_rerank(list, PartitionPlan::tdpart(w, w + rng() % 10, n), identity).ranking, list);
    }
}

TEST(Properties, OracleAgreement)
{
    std::mt19937 rng(77);
    int checked = 0;
    while (checked < 300) {
        const std::size_t w = 3 + rng() % 10;
        const std::size_t n = 1 + rng() % 60;
        const std::size_t k = 1 + rng() % (w - 1);
        const std::size_t b = k + rng() % (2 * w);
        auto ids = test::doc_ids(n);
        std::shuffle(ids.begin(), ids.end(), rng);
        JudgmentSet j;
        for (const auto& id : ids) {
            j.add("q", id, static_cast<int>(rng() % 5));
        }
        const auto expected = test::stable_sort_by_grade(ids, j, "q");
        if (k < n && j.grade("q", expected[k - 1]) == j.grade("q", expected[k])) {
            continue;
        }
        ++checked;
        const auto plan = PartitionPlan::tdpart(w, b, std::max(n, w), k);
        const auto out = tdpart_rerank(test::list_of("q", ids), plan, OraclePermuter(j));
        ASSERT_EQ(test::prefix(out.ranking.doc_ids(), k), test::prefix(expected, k))
            << "n=" << n << " w=" << w << " k=" << k << " b=" << b;
    }
}

TEST(Properties, BackendErrorsCarryQueryId)
{
    const FunctionPermuter failing([](const PermuteRequest& r) -> std::vector<DocId> {
        if (r.window.size() < 20) {
            throw BackendUnavailableError("service down");
        }
        return r.window_ids();
    });
    const auto list = test::list_of("q7", 100);
    ThreadPoolExecutor pool(3);
    for (StageExecutor* exec : {static_cast<StageExecutor*>(nullptr), static_cast<StageExecutor*>(&pool)}) {
        try {
            (void)tdpart_rerank(list, PartitionPlan::tdpart(20, 20), failing, {nullptr, exec});
            FAIL() << "expected BackendUnavailableError";
        } catch (const BackendUnavailableError& e) {
            EXPECT_NE(std::string(e.what()).find("query q7"), std::string::npos);
            EXPECT_NE(std::string(e.what()).find("service down"), std::string::npos);
        }
    }
    EXPECT_THROW((void)sliding_window_rerank(test::list_of("q7", 25), 19, 5, 25, failing), BackendUnavailableError);
}

TEST(Rerank, DispatchesOnMode)
{
    const auto list = test::list_of("q", 100);
    const IdentityPermuter identity;
    EXPECT_EQ(rerank(list, PartitionPlan::single(20), identity).ledger.total_inferences(), 1u);
    EXPECT_EQ(rerank(list, PartitionPlan::sliding(20, 10), identity).ledger.total_inferences(), 9u);
    EXPECT_EQ(rerank(list, PartitionPlan::tdpart(20, 20), identity).ledger.total_inferences(), 6u);
    EXPECT_THROW((void)rerank(list, PartitionPlan::sliding(20, 20), identity), ConfigError);
}

}  // namespace
}  // namespace tdpart
