#include "tdpart/trecio.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string_view>

#include <nlohmann/json.hpp>

#include "tdpart/error.hpp"

namespace tdpart {

namespace {

std::vector<std::string_view> split_ws(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r' || line[i] == '\v' || line[i] == '\f')) {
            ++i;
        }
        const auto start = i;
        while (i < line.size() && !(line[i] == ' ' || line[i] == '\t' || line[i] == '\r' || line[i] == '\v' || line[i] == '\f')) {
            ++i;
        }
        if (i > start) {
            fields.push_back(line.substr(start, i - start));
        }
    }
    return fields;
}

bool blank(std::string_view line) { return split_ws(line).empty(); }

template <typename Int>
bool parse_int(std::string_view s, Int& out)
{
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out)
{
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

std::string format_score(double score)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", score);
    return buf;
}

void strip_cr(std::string& line)
{
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
}

}  // namespace

ParsedRun parse_run(std::istream& in)
{
    std::map<std::string, std::vector<RankedEntry>> pending;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        const auto f = split_ws(line);
        if (f.empty()) {
            continue;
        }
        if (f.size() != 6) {
            throw ParseError(line_no, "expected 6 columns, found " + std::to_string(f.size()));
        }
        std::uint32_t rank = 0;
        if (!parse_int(f[3], rank) || rank == 0) {
            throw ParseError(line_no, "rank '" + std::string(f[3]) + "' is not a positive integer");
        }
        double score = 0.0;
        if (!parse_double(f[4], score)) {
            throw ParseError(line_no, "score '" + std::string(f[4]) + "' is not a finite number");
        }
        pending[std::string(f[0])].push_back({std::string(f[2]), rank, score});
    }

    ParsedRun out;
    for (auto& [qid, entries] : pending) {
        auto list = RankedList::from_entries(Query(qid), std::move(entries));
        for (const auto& v : validate(list)) {
            out.warnings.push_back("query " + qid + ": " + v.message);
        }
        out.rankings.emplace(qid, std::move(list));
    }
    return out;
}

void write_run(const Run& rankings, const std::string& tag, std::ostream& out)
{
    if (!is_valid_token(tag)) {
        throw ValidationError("run tag '" + tag + "' must be a non-empty token");
    }
    for (const auto& [qid, list] : rankings) {
        for (const auto& e : list.entries()) {
            out << qid << " Q0 " << e.doc_id << ' ' << e.rank << ' ' << format_score(e.score) << ' ' << tag << '\n';
        }
    }
    if (!out) {
        throw Error("failed writing run file");
    }
}

JudgmentSet parse_qrels(std::istream& in)
{
    JudgmentSet judgments;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        const auto f = split_ws(line);
        if (f.empty()) {
            continue;
        }
        if (f.size() != 4) {
            throw ParseError(line_no, "expected 4 columns, found " + std::to_string(f.size()));
        }
        int grade = 0;
        if (!parse_int(f[3], grade)) {
            throw ParseError(line_no, "grade '" + std::string(f[3]) + "' is not an integer");
        }
        if (grade < 0) {
            throw ParseError(line_no, "grade " + std::to_string(grade) + " is negative");
        }
        const std::string qid(f[0]);
        const std::string doc(f[2]);
        if (judgments.is_judged(qid, doc)) {
            throw ParseError(line_no, "duplicate judgment (" + qid + ", " + doc + ")");
        }
        judgments.add(qid, doc, grade);
    }
    return judgments;
}

void write_qrels(const JudgmentSet& judgments, std::ostream& out)
{
    for (const auto& qid : judgments.query_ids()) {
        for (const auto& [doc, grade] : judgments.judged(qid)) {
            out << qid << " 0 " << doc << ' ' << grade << '\n';
        }
    }
}

Corpus parse_corpus(std::istream& in)
{
    Corpus corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (blank(line)) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
        }
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("text") ||
            !j["text"].is_string()) {
            throw ParseError(line_no, "corpus entries need string fields \"id\" and \"text\"");
        }
        auto id = j["id"].get<std::string>();
        if (!is_valid_token(id)) {
            throw ParseError(line_no, "invalid doc id '" + id + "'");
        }
        if (corpus.contains(id)) {
            throw ParseError(line_no, "duplicate doc id " + id);
        }
        corpus.emplace(id, DocEntry(id, j["text"].get<std::string>()));
    }
    return corpus;
}

std::map<std::string, Query> parse_queries(std::istream& in)
{
    std::map<std::string, Query> queries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (blank(line)) {
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError(line_no, "expected query_id<TAB>text");
        }
        auto id = line.substr(0, tab);
        if (!is_valid_token(id)) {
            throw ParseError(line_no, "invalid query id '" + id + "'");
        }
        if (queries.contains(id)) {
            throw ParseError(line_no, "duplicate query id " + id);
        }
        queries.emplace(id, Query(id, line.substr(tab + 1)));
    }
    return queries;
}

}  // namespace tdpart
