#include "tdpart/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tdpart/error.hpp"
#include "tdpart/evalmetrics.hpp"
#include "tdpart/executor.hpp"
#include "tdpart/partition.hpp"
#include "tdpart/remote_permuter.hpp"

namespace tdpart::cli {

namespace {

std::ifstream open_in(const std::string& path, const char* what)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError(std::string("cannot open ") + what + " file '" + path + "'");
    }
    return in;
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write '" + path + "'");
    }
    return out;
}

/// Runs `parse` on the file, prefixing errors with the path.
template <typename F>
auto load(const std::string& path, const char* what, F&& parse)
{
    auto in = open_in(path, what);
    try {
        return parse(in);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path + ": " + std::string(e.what()));
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + std::string(e.what()));
    }
}

std::map<std::string, Query> load_queries(const std::string& path)
{
    if (path.empty()) {
        return {};
    }
    return load(path, "queries", [](std::istream& in) { return parse_queries(in); });
}

std::optional<Corpus> load_corpus(const std::string& path)
{
    if (path.empty()) {
        return std::nullopt;
    }
    return load(path, "corpus", [](std::istream& in) { return parse_corpus(in); });
}

std::optional<JudgmentSet> load_qrels(const std::string& path)
{
    if (path.empty()) {
        return std::nullopt;
    }
    return load(path, "qrels", [](std::istream& in) { return parse_qrels(in); });
}

std::unique_ptr<StageExecutor> make_executor(const BackendConfig& config, const Permuter& permuter)
{
    if (permuter.deterministic() && config.backend.rfind("remote", 0) != 0) {
        return std::make_unique<SequentialExecutor>();
    }
    return std::make_unique<ThreadPoolExecutor>(config.max_parallel == 0 ? 64 : config.max_parallel);
}

}  // namespace

std::unique_ptr<Permuter> make_permuter(const BackendConfig& config, const JudgmentSet* judgments, const Corpus* corpus)
{
    const auto& b = config.backend;
    if (b == "oracle") {
        if (judgments == nullptr) {
            throw ConfigError("the oracle backend requires --qrels");
        }
        return std::make_unique<OraclePermuter>(*judgments);
    }
    if (b == "identity") {
        return std::make_unique<IdentityPermuter>();
    }
    if (b.rfind("scripted:", 0) == 0) {
        const auto path = b.substr(9);
        auto script = load(path, "script", [](std::istream& in) { return parse_permutation_script(in); });
        return std::make_unique<ScriptedPermuter>(std::move(script), true);
    }
    if (b == "remote" || b.rfind("remote:", 0) == 0) {
        const auto url = b == "remote" ? config.endpoint : b.substr(7);
        if (url.empty()) {
            throw ConfigError("the remote backend requires an endpoint URL");
        }
        if (corpus == nullptr) {
            throw ConfigError("the remote backend requires --corpus for document texts");
        }
        RemoteConfig rc;
        rc.endpoint = url;
        rc.timeout = std::chrono::milliseconds(static_cast<long long>(config.timeout_seconds * 1000.0));
        rc.retries = config.retries;
        rc.max_parallel = config.max_parallel == 0 ? 64 : config.max_parallel;
        return std::make_unique<RemotePermuter>(rc);
    }
    throw ConfigError("unknown backend '" + b + "' (expected oracle, identity, scripted:PATH or remote:URL)");
}

void write_ledger_jsonl(const std::vector<QueryLedger>& ledgers, Mode mode, std::ostream& out)
{
    for (const auto& q : ledgers) {
        nlohmann::ordered_json j;
        j["query_id"] = q.query_id;
        j["mode"] = std::string(to_string(mode));
        j["total_inferences"] = q.ledger.total_inferences();
        j["sequential_depth"] = q.ledger.sequential_depth();
        j["max_stage_width"] = q.ledger.max_stage_width();
        j["stage_sizes"] = q.ledger.stage_sizes();
        out << j.dump() << '\n';
    }
}

RerankResult cmd_rerank(const RerankConfig& config, std::ostream& log)
{
    auto plan = config.plan;
    plan.max_parallel = config.backend.max_parallel;
    plan.validate();
    if (config.run_path.empty()) {
        throw ConfigError("rerank requires --run");
    }

    auto parsed = load(config.run_path, "run", [](std::istream& in) { return parse_run(in); });
    for (const auto& w : parsed.warnings) {
        log << "warning: " << config.run_path << ": " << w << '\n';
    }
    const auto qrels = load_qrels(config.qrels_path);
    const auto corpus = load_corpus(config.corpus_path);
    const auto queries = load_queries(config.queries_path);

    const auto permuter = make_permuter(config.backend, qrels ? &*qrels : nullptr, corpus ? &*corpus : nullptr);
    const auto executor = make_executor(config.backend, *permuter);
    const RerankEnv env{corpus ? &*corpus : nullptr, executor.get()};

    RerankResult result;
    for (const auto& [qid, list] : parsed.rankings) {
        const RankedList* input = &list;
        RankedList with_text;
        if (auto it = queries.find(qid); it != queries.end()) {
            with_text = make_ranked_list(it->second, list.doc_ids());
            input = &with_text;
        }
        auto outcome = rerank(*input, plan, *permuter, env);
        result.rankings.emplace(qid, make_ranked_list(list.query(), outcome.ranking.doc_ids()));
        result.ledgers.push_back({qid, std::move(outcome.ledger)});
    }

    if (!config.out_path.empty()) {
        auto out = open_out(config.out_path);
        write_run(result.rankings, config.tag.empty() ? std::string(to_string(plan.mode)) : config.tag, out);
    }
    if (!config.ledger_out_path.empty()) {
        auto out = open_out(config.ledger_out_path);
        write_ledger_jsonl(result.ledgers, plan.mode, out);
    }
    log << "re-ranked " << result.rankings.size() << " queries with " << to_string(plan.mode) << '\n';
    return result;
}

void write_study_csv(const std::vector<SyntheticWindow>& windows, const Permuter& permuter,
                     const std::map<std::string, Query>& queries, const Corpus* corpus, std::ostream& out)
{
    out << "query,window,ratio,ordering,seed,ndcg@10\n";
    for (const auto& w : windows) {
        JudgmentSet grades;
        std::vector<DocId> ids;
        for (const auto& d : w.docs) {
            grades.add(w.query_id, d.doc_id, d.grade);
            ids.push_back(d.doc_id);
        }
        const auto q = queries.contains(w.query_id) ? queries.at(w.query_id) : Query(w.query_id);
        const RerankEnv env{corpus, nullptr};
        const auto outcome = single_window_rerank(make_ranked_list(q, ids), w.window, permuter, env);
        out << w.query_id << ',' << w.window << ',' << w.ratio << ',' << to_string(w.ordering) << ',' << w.seed << ','
            << ndcg_at_k(outcome.ranking, grades, 10) << '\n';
    }
}

SyntheticGrid cmd_synth(const SynthConfig& config, std::ostream& log)
{
    const auto qrels = load_qrels(config.qrels_path);
    if (!qrels) {
        throw ConfigError("synth requires --qrels");
    }
    auto grid = generate_grid(*qrels, config.spec);
    log << "eligible queries: " << grid.eligible_queries.size() << " (window "
        << *std::max_element(config.spec.windows.begin(), config.spec.windows.end()) << ", threshold "
        << config.spec.threshold << ")\n";

    if (!config.out_path.empty()) {
        auto out = open_out(config.out_path);
        write_synthetic_jsonl(grid.windows, out);
    }
    if (!config.study_out_path.empty()) {
        const auto corpus = load_corpus(config.corpus_path);
        const auto queries = load_queries(config.queries_path);
        const auto permuter = make_permuter(config.backend, &*qrels, corpus ? &*corpus : nullptr);
        auto out = open_out(config.study_out_path);
        write_study_csv(grid.windows, *permuter, queries, corpus ? &*corpus : nullptr, out);
    }
    return grid;
}

EvalResult cmd_eval(const EvalConfig& config, std::ostream& out, std::ostream& log)
{
    if (config.run_paths.empty()) {
        throw ConfigError("eval requires at least one --run");
    }
    const auto qrels = load_qrels(config.qrels_path);
    if (!qrels) {
        throw ConfigError("eval requires --qrels");
    }
    std::vector<MetricSpec> metrics;
    for (const auto& m : config.metrics) {
        metrics.push_back(MetricSpec::parse(m));
    }
    if (metrics.empty()) {
        metrics = default_metrics();
    }

    EvalResult result;
    for (const auto& path : config.run_paths) {
        auto parsed = load(path, "run", [](std::istream& in) { return parse_run(in); });
        for (const auto& w : parsed.warnings) {
            log << "warning: " << path << ": " << w << '\n';
        }
        SystemReports system{std::filesystem::path(path).stem().string(), {}};
        for (const auto& m : metrics) {
            system.reports.push_back(evaluate(parsed.rankings, *qrels, m, config.threshold));
        }
        result.systems.push_back(std::move(system));
    }
    result.summary = aggregate(result.systems);
    for (const auto& w : result.summary.warnings) {
        log << "warning: " << w << '\n';
    }
    write_summary_text(result.summary, out);

    if (config.tost) {
        if (result.systems.size() != 2) {
            throw ConfigError("--tost needs exactly two runs (baseline first)");
        }
        std::set<std::string> queries;
        for (const auto& s : result.systems) {
            for (const auto& r : s.reports) {
                for (const auto& [q, _] : r.values) {
                    queries.insert(q);
                }
            }
        }
        const auto wanted = config.tost_metric.empty() ? std::string() : MetricSpec::parse(config.tost_metric).name();
        for (std::size_t i = 0; i < metrics.size(); ++i) {
            const auto name = metrics[i].name();
            if (!wanted.empty() && name != wanted) {
                continue;
            }
            PerQuery baseline;
            PerQuery candidate;
            for (const auto& q : queries) {
                const auto& bv = result.systems[0].reports[i].values;
                const auto& cv = result.systems[1].reports[i].values;
                baseline[q] = bv.contains(q) ? bv.at(q) : 0.0;
                candidate[q] = cv.contains(q) ? cv.at(q) : 0.0;
            }
            auto tost = paired_tost(candidate, baseline, config.tost_bound, config.tost_alpha);
            out << "TOST " << name << ": delta=" << tost.delta << " mean_diff=" << tost.mean_difference
                << " p_lower=" << tost.p_lower << " p_upper=" << tost.p_upper
                << " equivalent=" << (tost.equivalent ? "yes" : "no") << (tost.degenerate ? " (zero variance)" : "")
                << '\n';
            result.tost.push_back({name, tost});
        }
        if (!wanted.empty() && result.tost.empty()) {
            throw ConfigError("TOST metric " + wanted + " is not among the evaluated metrics");
        }
    }

    if (!config.out_path.empty()) {
        auto csv = open_out(config.out_path);
        write_summary_csv(result.summary, csv);
    }
    if (!config.per_query_out_path.empty()) {
        auto jl = open_out(config.per_query_out_path);
        write_per_query_jsonl(result.systems, jl);
    }
    return result;
}

std::size_t cmd_bound(const BoundConfig& config)
{
    config.plan.validate();
    switch (config.plan.mode) {
    case Mode::single:
        return 1;
    case Mode::sliding:
        return sliding_inference_count(config.n, config.plan.window, config.plan.stride);
    case Mode::tdpart:
        return worst_case_inferences(config.n, config.plan);
    }
    return 0;
}

}  // namespace tdpart::cli
