#include "tdpart/evalmetrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "tdpart/error.hpp"

namespace tdpart {

namespace {

double discount(std::size_t rank) { return 1.0 / std::log2(static_cast<double>(rank) + 1.0); }

std::string format_value(double v)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

}  // namespace

double ndcg_at_k(const RankedList& ranking, const JudgmentSet& judgments, std::size_t k)
{
    const auto& qid = ranking.query().id;
    std::vector<int> ideal;
    for (const auto& [_, grade] : judgments.judged(qid)) {
        if (grade > 0) {
            ideal.push_back(grade);
        }
    }
    if (ideal.empty() || k == 0) {
        return 0.0;
    }
    std::sort(ideal.begin(), ideal.end(), std::greater<>());

    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
        idcg += ideal[i] * discount(i + 1);
    }
    double dcg = 0.0;
    const auto entries = ranking.entries();
    for (std::size_t i = 0; i < std::min(k, entries.size()); ++i) {
        dcg += judgments.grade(qid, entries[i].doc_id) * discount(i + 1);
    }
    return dcg / idcg;
}

double precision_at_k(const RankedList& ranking, const JudgmentSet& judgments, std::size_t k, int threshold)
{
    if (k == 0) {
        return 0.0;
    }
    const auto& qid = ranking.query().id;
    const auto entries = ranking.entries();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, entries.size()); ++i) {
        if (judgments.grade(qid, entries[i].doc_id) >= threshold) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

std::string MetricSpec::name() const
{
    return (kind == MetricKind::ndcg ? "nDCG@" : "P@") + std::to_string(cutoff);
}

MetricSpec MetricSpec::parse(std::string_view name)
{
    const auto at = name.find('@');
    if (at == std::string_view::npos || at + 1 == name.size()) {
        throw ConfigError("metric '" + std::string(name) + "' must look like nDCG@10 or P@10");
    }
    std::string head(name.substr(0, at));
    std::transform(head.begin(), head.end(), head.begin(), [](unsigned char c) { return std::tolower(c); });
    const auto tail = std::string(name.substr(at + 1));
    if (!std::all_of(tail.begin(), tail.end(), [](unsigned char c) { return std::isdigit(c); }) || tail.size() > 9) {
        throw ConfigError("metric cutoff in '" + std::string(name) + "' must be a positive integer");
    }
    const auto cutoff = static_cast<std::size_t>(std::stoul(tail));
    if (cutoff == 0) {
        throw ConfigError("metric cutoff must be positive");
    }
    if (head == "ndcg") {
        return {MetricKind::ndcg, cutoff};
    }
    if (head == "p") {
        return {MetricKind::precision, cutoff};
    }
    throw ConfigError("unknown metric '" + std::string(name) + "'");
}

std::vector<MetricSpec> default_metrics()
{
    return {{MetricKind::ndcg, 1}, {MetricKind::ndcg, 5}, {MetricKind::ndcg, 10}, {MetricKind::precision, 10}};
}

MetricReport evaluate(const std::map<std::string, RankedList>& run, const JudgmentSet& judgments,
                      const MetricSpec& metric, int threshold)
{
    MetricReport report{metric.name(), metric.cutoff, {}, 0.0};
    for (const auto& [qid, ranking] : run) {
        report.values[qid] = metric.kind == MetricKind::ndcg ? ndcg_at_k(ranking, judgments, metric.cutoff)
                                                             : precision_at_k(ranking, judgments, metric.cutoff, threshold);
    }
    if (!report.values.empty()) {
        double sum = 0.0;
        for (const auto& [_, v] : report.values) {
            sum += v;
        }
        report.mean = sum / static_cast<double>(report.values.size());
    }
    return report;
}

TostResult paired_tost(const PerQuery& a, const PerQuery& b, double bound_fraction, double alpha)
{
    if (a.size() != b.size() ||
        !std::equal(a.begin(), a.end(), b.begin(), [](const auto& x, const auto& y) { return x.first == y.first; })) {
        throw InputError("paired TOST needs identical query sets");
    }
    if (a.size() < 2) {
        throw InputError("paired TOST needs at least two queries");
    }
    const auto n = static_cast<double>(a.size());
    std::vector<double> diffs;
    double mean_b = 0.0;
    for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
        diffs.push_back(ia->second - ib->second);
        mean_b += ib->second;
    }
    mean_b /= n;
    const double mean_d = std::accumulate(diffs.begin(), diffs.end(), 0.0) / n;
    double ss = 0.0;
    for (auto d : diffs) {
        ss += (d - mean_d) * (d - mean_d);
    }
    const double sd = std::sqrt(ss / (n - 1.0));

    TostResult r;
    r.bound_fraction = bound_fraction;
    r.alpha = alpha;
    r.delta = bound_fraction * std::abs(mean_b);
    r.mean_difference = mean_d;

    if (sd == 0.0) {
        r.degenerate = true;
        const bool inside = mean_d == 0.0 || std::abs(mean_d) < r.delta;
        r.p_lower = mean_d > -r.delta || mean_d == 0.0 ? 0.0 : 1.0;
        r.p_upper = mean_d < r.delta || mean_d == 0.0 ? 0.0 : 1.0;
        r.equivalent = inside;
        return r;
    }

    const double se = sd / std::sqrt(n);
    const boost::math::students_t dist(n - 1.0);
    // H0: mean <= -delta, rejected for large t.
    r.p_lower = boost::math::cdf(boost::math::complement(dist, (mean_d + r.delta) / se));
    // H0: mean >= +delta, rejected for small t.
    r.p_upper = boost::math::cdf(dist, (mean_d - r.delta) / se);
    r.equivalent = std::max(r.p_lower, r.p_upper) < alpha;
    return r;
}

SummaryTable aggregate(const std::vector<SystemReports>& systems)
{
    SummaryTable table;
    std::set<std::string> queries;
    for (const auto& s : systems) {
        for (const auto& r : s.reports) {
            if (std::find(table.metrics.begin(), table.metrics.end(), r.metric) == table.metrics.end()) {
                table.metrics.push_back(r.metric);
            }
            for (const auto& [q, _] : r.values) {
                queries.insert(q);
            }
        }
    }
    for (const auto& s : systems) {
        SystemSummary row{s.system, {}};
        for (const auto& r : s.reports) {
            double sum = 0.0;
            for (const auto& q : queries) {
                if (auto it = r.values.find(q); it != r.values.end()) {
                    sum += it->second;
                } else {
                    table.warnings.push_back("system " + s.system + " has no " + r.metric + " value for query " + q +
                                             "; scoring 0");
                }
            }
            row.means[r.metric] = queries.empty() ? 0.0 : sum / static_cast<double>(queries.size());
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_summary_csv(const SummaryTable& table, std::ostream& out)
{
    out << "system";
    for (const auto& m : table.metrics) {
        out << ',' << m;
    }
    out << '\n';
    for (const auto& row : table.rows) {
        out << row.system;
        for (const auto& m : table.metrics) {
            auto it = row.means.find(m);
            out << ',' << (it == row.means.end() ? std::string() : format_value(it->second));
        }
        out << '\n';
    }
}

void write_summary_text(const SummaryTable& table, std::ostream& out)
{
    std::size_t name_width = 6;
    for (const auto& row : table.rows) {
        name_width = std::max(name_width, row.system.size());
    }
    out << std::left << std::setw(static_cast<int>(name_width)) << "system";
    for (const auto& m : table.metrics) {
        out << "  " << std::right << std::setw(static_cast<int>(std::max<std::size_t>(m.size(), 6))) << m;
    }
    out << '\n';
    for (const auto& row : table.rows) {
        out << std::left << std::setw(static_cast<int>(name_width)) << row.system;
        for (const auto& m : table.metrics) {
            auto it = row.means.find(m);
            out << "  " << std::right << std::setw(static_cast<int>(std::max<std::size_t>(m.size(), 6)))
                << (it == row.means.end() ? std::string("-") : format_value(it->second));
        }
        out << '\n';
    }
    out << std::left;
}

void write_per_query_jsonl(const std::vector<SystemReports>& systems, std::ostream& out)
{
    for (const auto& s : systems) {
        std::map<std::string, nlohmann::ordered_json> by_query;
        for (const auto& r : s.reports) {
            for (const auto& [q, v] : r.values) {
                auto& j = by_query[q];
                if (j.is_null()) {
                    j["system"] = s.system;
                    j["query_id"] = q;
                }
                j[r.metric] = v;
            }
        }
        for (const auto& [_, j] : by_query) {
            out << j.dump() << '\n';
        }
    }
}

}  // namespace tdpart
