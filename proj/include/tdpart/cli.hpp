#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tdpart/core.hpp"
#include "tdpart/evalmetrics.hpp"
#include "tdpart/permute.hpp"
#include "tdpart/synthgen.hpp"
#include "tdpart/trecio.hpp"

namespace tdpart::cli {

/// Backend selection: "oracle", "identity", "scripted:PATH", "remote:URL" or
/// "remote" (URL from `endpoint`).
struct BackendConfig {
    std::string backend = "oracle";
    std::string endpoint;
    double timeout_seconds = 30.0;
    std::size_t retries = 2;
    /// Wave width for top-down sweeps and cap on concurrent calls; 0 = unbounded.
    std::size_t max_parallel = 0;
};

/// Builds the permuter. `judgments` must outlive it for the oracle backend.
/// Throws ConfigError when a required input is missing.
std::unique_ptr<Permuter> make_permuter(const BackendConfig& config, const JudgmentSet* judgments,
                                        const Corpus* corpus);

struct RerankConfig {
    std::string run_path;
    std::string qrels_path;
    std::string corpus_path;
    std::string queries_path;
    PartitionPlan plan;
    BackendConfig backend;
    std::string out_path;
    std::string ledger_out_path;
    std::string tag;  // defaults to the mode name
};

struct QueryLedger {
    std::string query_id;
    InferenceLedger ledger;
};

struct RerankResult {
    Run rankings;
    std::vector<QueryLedger> ledgers;
};

/// Re-ranks every query of the run. Writes the run and ledger report when the
/// paths are set.
RerankResult cmd_rerank(const RerankConfig& config, std::ostream& log);

/// {"query_id", "mode", "total_inferences", "sequential_depth", "max_stage_width", "stage_sizes"} per line.
void write_ledger_jsonl(const std::vector<QueryLedger>& ledgers, Mode mode, std::ostream& out);

struct SynthConfig {
    std::string qrels_path;
    SyntheticSpec spec;
    std::string out_path;
    /// Optional ratio-study output: each window permuted once by `backend`.
    std::string study_out_path;
    std::string corpus_path;
    std::string queries_path;
    BackendConfig backend;
};

SyntheticGrid cmd_synth(const SynthConfig& config, std::ostream& log);

/// Tidy rows "query,window,ratio,ordering,seed,ndcg@10" for permuted windows.
/// nDCG is computed against the window's own grades.
void write_study_csv(const std::vector<SyntheticWindow>& windows, const Permuter& permuter,
                     const std::map<std::string, Query>& queries, const Corpus* corpus, std::ostream& out);

struct EvalConfig {
    std::vector<std::string> run_paths;
    std::string qrels_path;
    int threshold = 2;
    std::vector<std::string> metrics;  // empty: nDCG@1,5,10 and P@10
    bool tost = false;
    std::string tost_metric;  // empty: every metric
    double tost_bound = 0.05;
    double tost_alpha = 0.05;
    std::string out_path;            // CSV summary
    std::string per_query_out_path;  // JSON lines
};

struct TostRow {
    std::string metric;
    TostResult result;
};

struct EvalResult {
    SummaryTable summary;
    std::vector<SystemReports> systems;
    std::vector<TostRow> tost;
};

/// With two runs and `tost`, the first run is the baseline.
EvalResult cmd_eval(const EvalConfig& config, std::ostream& out, std::ostream& log);

struct BoundConfig {
    PartitionPlan plan;
    std::size_t n = 100;
};

/// Worst-case inference count for a tdpart or sliding plan (1 for single).
std::size_t cmd_bound(const BoundConfig& config);

}  // namespace tdpart::cli
