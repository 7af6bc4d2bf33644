// tdpart: list-wise re-ranking orchestration from the command line.
//
//   tdpart rerank --mode tdpart --run first_stage.run --qrels qrels.txt --backend oracle --out reranked.run
//   tdpart synth  --qrels qrels.txt --out windows.jsonl
//   tdpart eval   --run a.run --run b.run --qrels qrels.txt --tost
//   tdpart bound  --mode tdpart --depth 100 --window 20 --budget 20

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tdpart/cli.hpp"
#include "tdpart/error.hpp"

namespace {

struct PlanFlags {
    std::string mode = "tdpart";
    std::size_t window = 20;
    std::size_t stride = 10;
    std::optional<std::size_t> cutoff;
    std::size_t budget = 20;
    std::size_t depth = 100;

    void add_to(CLI::App& app)
    {
        app.add_option("--mode", mode, "single, sliding or tdpart")->capture_default_str();
        app.add_option("--window", window, "documents per permuter call")->capture_default_str();
        app.add_option("--stride", stride, "sliding: upward shift between windows")->capture_default_str();
        app.add_option("--cutoff", cutoff, "tdpart: pivot rank (default window/2)");
        app.add_option("--budget", budget, "tdpart: candidate budget")->capture_default_str();
        app.add_option("--depth", depth, "re-ranking depth")->capture_default_str();
    }

    [[nodiscard]] tdpart::PartitionPlan plan() const
    {
        tdpart::PartitionPlan p;
        p.mode = tdpart::parse_mode(mode);
        p.window = window;
        p.stride = stride;
        p.cutoff = cutoff.value_or(window / 2);
        p.budget = budget;
        p.depth = depth;
        return p;
    }
};

void add_backend(CLI::App& app, tdpart::cli::BackendConfig& b)
{
    app.add_option("--backend", b.backend, "oracle, identity, scripted:PATH or remote:URL")->capture_default_str();
    app.add_option("--endpoint", b.endpoint, "remote service base URL")->envname("TDPART_ENDPOINT");
    app.add_option("--timeout", b.timeout_seconds, "remote timeout in seconds")->capture_default_str();
    app.add_option("--retries", b.retries, "remote retries after a failed attempt")->capture_default_str();
    app.add_option("--max-parallel", b.max_parallel, "partitions per parallel wave and concurrent calls (0 = unbounded)")
        ->envname("TDPART_MAX_PARALLEL")
        ->capture_default_str();
}

template <typename T>
std::vector<T> split_list(const std::string& csv, T (*convert)(const std::string&))
{
    std::vector<T> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(convert(item));
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"List-wise re-ranking with top-down partitioning"};
    app.require_subcommand(1);

    // rerank
    tdpart::cli::RerankConfig rr;
    PlanFlags rr_plan;
    auto* rerank = app.add_subcommand("rerank", "re-rank a first-stage run");
    rr_plan.add_to(*rerank);
    add_backend(*rerank, rr.backend);
    rerank->add_option("--run", rr.run_path, "first-stage TREC run")->required();
    rerank->add_option("--qrels", rr.qrels_path, "qrels (oracle backend)");
    rerank->add_option("--corpus", rr.corpus_path, "JSONL corpus with id and text");
    rerank->add_option("--queries", rr.queries_path, "TSV queries: id<TAB>text");
    rerank->add_option("--out", rr.out_path, "re-ranked run output");
    rerank->add_option("--ledger-out", rr.ledger_out_path, "per-query inference ledger (JSON lines)");
    rerank->add_option("--tag", rr.tag, "run tag (default: mode name)");

    // synth
    tdpart::cli::SynthConfig sy;
    std::string sy_windows = "5,20";
    std::string sy_ratios = "0.2,0.4,0.6,0.8";
    std::string sy_orderings = "ASC,DESC,RANDOM";
    auto* synth = app.add_subcommand("synth", "generate synthetic ratio-controlled windows");
    synth->add_option("--qrels", sy.qrels_path, "qrels to sample judged pools from")->required();
    synth->add_option("--windows", sy_windows, "comma-separated window sizes")->capture_default_str();
    synth->add_option("--ratios", sy_ratios, "comma-separated, increasing relevant ratios")->capture_default_str();
    synth->add_option("--orderings", sy_orderings, "subset of ASC,DESC,RANDOM")->capture_default_str();
    synth->add_option("--seeds", sy.spec.seeds, "initial rankings per query")->capture_default_str();
    synth->add_option("--seed", sy.spec.base_seed, "base random seed")->capture_default_str();
    synth->add_option("--threshold", sy.spec.threshold, "minimum relevant grade")->capture_default_str();
    synth->add_option("--out", sy.out_path, "JSONL output");
    synth->add_option("--study-out", sy.study_out_path, "tidy CSV of nDCG@10 after one permute per window");
    synth->add_option("--corpus", sy.corpus_path, "JSONL corpus (remote backend)");
    synth->add_option("--queries", sy.queries_path, "TSV queries");
    add_backend(*synth, sy.backend);

    // eval
    tdpart::cli::EvalConfig ev;
    auto* eval = app.add_subcommand("eval", "nDCG@k / P@k summary and paired TOST");
    eval->add_option("--run", ev.run_paths, "run file (repeat; first is the TOST baseline)")->required();
    eval->add_option("--qrels", ev.qrels_path, "qrels")->required();
    eval->add_option("--threshold", ev.threshold, "minimum relevant grade for P@k")->capture_default_str();
    eval->add_option("--metric", ev.metrics, "metric to report (repeat), e.g. nDCG@10, P@10");
    eval->add_flag("--tost", ev.tost, "paired TOST between two runs");
    eval->add_option("--tost-metric", ev.tost_metric, "restrict TOST to one metric");
    eval->add_option("--tost-bound", ev.tost_bound, "equivalence bound as a fraction of the baseline mean")
        ->capture_default_str();
    eval->add_option("--alpha", ev.tost_alpha, "TOST significance level")->capture_default_str();
    eval->add_option("--out", ev.out_path, "CSV summary");
    eval->add_option("--per-query-out", ev.per_query_out_path, "per-query values (JSON lines)");

    // bound
    PlanFlags bd_plan;
    auto* bound = app.add_subcommand("bound", "predicted worst-case inference count");
    bd_plan.add_to(*bound);

    CLI11_PARSE(app, argc, argv);

    try {
        if (rerank->parsed()) {
            rr.plan = rr_plan.plan();
            tdpart::cli::cmd_rerank(rr, std::cerr);
        } else if (synth->parsed()) {
            sy.spec.windows = split_list<std::size_t>(sy_windows, [](const std::string& s) {
                return static_cast<std::size_t>(std::stoul(s));
            });
            sy.spec.ratios = split_list<double>(sy_ratios, [](const std::string& s) { return std::stod(s); });
            sy.spec.orderings = split_list<tdpart::Ordering>(
                sy_orderings, [](const std::string& s) { return tdpart::parse_ordering(s); });
            tdpart::cli::cmd_synth(sy, std::cerr);
        } else if (eval->parsed()) {
            tdpart::cli::cmd_eval(ev, std::cout, std::cerr);
        } else if (bound->parsed()) {
            tdpart::cli::BoundConfig cfg{bd_plan.plan(), bd_plan.depth};
            std::cout << tdpart::cli::cmd_bound(cfg) << '\n';
        }
    } catch (const tdpart::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: bad list value: " << e.what() << '\n';
        return 1;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: list value out of range: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
