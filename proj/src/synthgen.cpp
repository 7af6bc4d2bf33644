#include "tdpart/synthgen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "tdpart/error.hpp"

namespace tdpart {

namespace {

// std::mt19937_64 output is fixed by the standard; distributions and
// std::shuffle are not, so bounded draws and shuffles are done here to keep
// files identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, bound).
    std::size_t below(std::size_t bound)
    {
        const std::uint64_t b = bound;
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % b;
        std::uint64_t x = engine_();
        while (x >= limit) {
            x = engine_();
        }
        return static_cast<std::size_t>(x % b);
    }

    template <typename T>
    void shuffle(std::vector<T>& v)
    {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    /// `count` distinct elements, uniformly, in draw order.
    template <typename T>
    std::vector<T> sample(std::vector<T> pool, std::size_t count)
    {
        for (std::size_t i = 0; i < count; ++i) {
            std::swap(pool[i], pool[i + below(pool.size() - i)]);
        }
        pool.resize(count);
        return pool;
    }

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return splitmix(a ^ splitmix(b)); }

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h = (h ^ c) * 0x100000001b3ULL;
    }
    return h;
}

std::string format_ratio(double r)
{
    std::ostringstream os;
    os << r;
    return os.str();
}

}  // namespace

std::string_view to_string(Ordering ordering) noexcept
{
    switch (ordering) {
    case Ordering::asc:
        return "ASC";
    case Ordering::desc:
        return "DESC";
    case Ordering::random:
        return "RANDOM";
    }
    return "UNKNOWN";
}

Ordering parse_ordering(std::string_view name)
{
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    if (upper == "ASC") {
        return Ordering::asc;
    }
    if (upper == "DESC") {
        return Ordering::desc;
    }
    if (upper == "RANDOM") {
        return Ordering::random;
    }
    throw ConfigError("unknown ordering '" + std::string(name) + "' (expected ASC, DESC or RANDOM)");
}

JudgedPools make_pools(const JudgmentSet& judgments, const std::string& query_id, int threshold)
{
    JudgedPools pools{query_id, {}, {}, threshold};
    for (const auto& [doc, grade] : judgments.judged(query_id)) {
        (grade >= threshold ? pools.relevant : pools.non_relevant).push_back({doc, grade});
    }
    return pools;
}

std::set<std::string> filter_eligible_queries(const JudgmentSet& judgments, std::size_t window, int threshold)
{
    std::set<std::string> out;
    const auto need = window == 0 ? 0 : window - 1;
    for (const auto& q : judgments.query_ids()) {
        const auto pools = make_pools(judgments, q, threshold);
        if (pools.relevant.size() >= need && pools.non_relevant.size() >= need) {
            out.insert(q);
        }
    }
    return out;
}

std::size_t relevant_count(std::size_t window, double ratio)
{
    // The epsilon absorbs products such as 20 * 0.6 = 12.000000000000002.
    return static_cast<std::size_t>(std::floor(static_cast<double>(window) * ratio + 0.5 + 1e-9));
}

std::vector<GradedDoc> generate_initial_ranking(const JudgedPools& pools, std::size_t window, double ratio,
                                                std::uint64_t seed)
{
    const auto n_rel = relevant_count(window, ratio);
    if (n_rel > window) {
        throw ConfigError("ratio " + format_ratio(ratio) + " exceeds 1");
    }
    const auto n_non = window - n_rel;
    if (pools.relevant.size() < n_rel || pools.non_relevant.size() < n_non) {
        throw EligibilityError("query " + pools.query_id + ": pools too small for window " + std::to_string(window) +
                               " at ratio " + format_ratio(ratio));
    }
    Rng rng(seed);
    auto out = rng.sample(pools.relevant, n_rel);
    auto non = rng.sample(pools.non_relevant, n_non);
    out.insert(out.end(), non.begin(), non.end());
    return out;
}

std::vector<GradedDoc> evolve_ranking(const std::vector<GradedDoc>& current, const JudgedPools& pools,
                                      double ratio_prev, double ratio_next, std::uint64_t seed)
{
    const auto window = current.size();
    const auto before = relevant_count(window, ratio_prev);
    const auto after = relevant_count(window, ratio_next);
    if (after < before) {
        throw ConfigError("ratios must not decrease along the chain");
    }
    const auto swaps = after - before;
    if (swaps == 0) {
        return current;
    }

    std::unordered_set<std::string_view> used;
    std::vector<std::size_t> non_positions;
    for (std::size_t i = 0; i < current.size(); ++i) {
        used.insert(current[i].doc_id);
        if (current[i].grade < pools.threshold) {
            non_positions.push_back(i);
        }
    }
    std::vector<GradedDoc> unused;
    for (const auto& d : pools.relevant) {
        if (!used.contains(d.doc_id)) {
            unused.push_back(d);
        }
    }
    if (unused.size() < swaps || non_positions.size() < swaps) {
        throw EligibilityError("query " + pools.query_id + ": not enough unused relevant documents to reach ratio " +
                               format_ratio(ratio_next));
    }

    Rng rng(seed);
    auto drop = rng.sample(non_positions, swaps);
    std::sort(drop.begin(), drop.end());
    const auto add = rng.sample(std::move(unused), swaps);

    std::vector<GradedDoc> out;
    out.reserve(window);
    std::size_t d = 0;
    for (std::size_t i = 0; i < current.size(); ++i) {
        if (d < drop.size() && drop[d] == i) {
            ++d;
            continue;
        }
        out.push_back(current[i]);
    }
    out.insert(out.end(), add.begin(), add.end());
    return out;
}

std::vector<GradedDoc> order_ranking(std::vector<GradedDoc> docs, Ordering ordering, std::uint64_t seed)
{
    Rng rng(seed);
    rng.shuffle(docs);
    if (ordering == Ordering::random) {
        return docs;
    }
    std::stable_sort(docs.begin(), docs.end(), [](const GradedDoc& a, const GradedDoc& b) { return a.grade > b.grade; });
    if (ordering == Ordering::asc) {
        std::reverse(docs.begin(), docs.end());
    }
    return docs;
}

void SyntheticSpec::validate() const
{
    if (windows.empty() || std::find(windows.begin(), windows.end(), std::size_t{0}) != windows.end()) {
        throw ConfigError("window sizes must be positive and non-empty");
    }
    if (ratios.empty()) {
        throw ConfigError("at least one ratio is required");
    }
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        if (!(ratios[i] > 0.0 && ratios[i] < 1.0)) {
            throw ConfigError("ratio " + format_ratio(ratios[i]) + " outside (0, 1)");
        }
        if (i > 0 && !(ratios[i] > ratios[i - 1])) {
            throw ConfigError("ratios must be strictly increasing");
        }
    }
    if (orderings.empty()) {
        throw ConfigError("at least one ordering is required");
    }
    if (seeds == 0) {
        throw ConfigError("seed count must be positive");
    }
    if (threshold < 0) {
        throw ConfigError("relevance threshold must be non-negative");
    }
}

SyntheticGrid generate_grid(const JudgmentSet& judgments, const SyntheticSpec& spec)
{
    spec.validate();
    const auto largest = *std::max_element(spec.windows.begin(), spec.windows.end());
    SyntheticGrid grid;
    grid.eligible_queries = filter_eligible_queries(judgments, largest, spec.threshold);
    if (grid.eligible_queries.empty()) {
        throw EligibilityError("no query has at least " + std::to_string(largest - 1) +
                               " judged documents on each side of threshold " + std::to_string(spec.threshold));
    }

    for (const auto window : spec.windows) {
        for (const auto& qid : grid.eligible_queries) {
            const auto pools = make_pools(judgments, qid, spec.threshold);
            for (std::size_t s = 0; s < spec.seeds; ++s) {
                const auto chain_seed = mix(mix(spec.base_seed, fnv1a(qid)), mix(window, s));
                auto docs = generate_initial_ranking(pools, window, spec.ratios.front(), chain_seed);
                for (std::size_t r = 0; r < spec.ratios.size(); ++r) {
                    if (r > 0) {
                        docs = evolve_ranking(docs, pools, spec.ratios[r - 1], spec.ratios[r], mix(chain_seed, r));
                    }
                    const auto order_seed = mix(chain_seed, 0x100 + r);
                    for (const auto ordering : spec.orderings) {
                        grid.windows.push_back(
                            {qid, window, spec.ratios[r], ordering, s, order_ranking(docs, ordering, order_seed)});
                    }
                }
            }
        }
    }
    return grid;
}

void write_synthetic_jsonl(const std::vector<SyntheticWindow>& windows, std::ostream& out)
{
    for (const auto& w : windows) {
        nlohmann::ordered_json j;
        j["query_id"] = w.query_id;
        j["window_size"] = w.window;
        j["ratio"] = w.ratio;
        j["ordering"] = std::string(to_string(w.ordering));
        j["seed"] = w.seed;
        auto& ids = j["doc_ids"] = nlohmann::ordered_json::array();
        auto& grades = j["grades"] = nlohmann::ordered_json::array();
        for (const auto& d : w.docs) {
            ids.push_back(d.doc_id);
            grades.push_back(d.grade);
        }
        out << j.dump() << '\n';
    }
}

std::vector<SyntheticWindow> read_synthetic_jsonl(std::istream& in)
{
    std::vector<SyntheticWindow> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            SyntheticWindow w;
            w.query_id = j.at("query_id").get<std::string>();
            w.window = j.at("window_size").get<std::size_t>();
            w.ratio = j.at("ratio").get<double>();
            w.ordering = parse_ordering(j.at("ordering").get<std::string>());
            w.seed = j.at("seed").get<std::size_t>();
            const auto ids = j.at("doc_ids").get<std::vector<std::string>>();
            const auto grades = j.at("grades").get<std::vector<int>>();
            if (ids.size() != grades.size()) {
                throw ParseError(line_no, "doc_ids and grades differ in length");
            }
            for (std::size_t i = 0; i < ids.size(); ++i) {
                w.docs.push_back({ids[i], grades[i]});
            }
            out.push_back(std::move(w));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, std::string("bad synthetic window: ") + e.what());
        } catch (const ConfigError& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return out;
}

std::string synthetic_query_id(const SyntheticWindow& w)
{
    return w.query_id + "__k" + std::to_string(w.window) + "__r" + format_ratio(w.ratio) + "__" +
           std::string(to_string(w.ordering)) + "__s" + std::to_string(w.seed);
}

}  // namespace tdpart
