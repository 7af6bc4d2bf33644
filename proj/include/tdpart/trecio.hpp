#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "tdpart/core.hpp"
#include "tdpart/partition.hpp"

namespace tdpart {

using Run = std::map<std::string, RankedList>;

struct ParsedRun {
    Run rankings;
    /// Non-fatal findings, e.g. tied scores.
    std::vector<std::string> warnings;
};

/// Reads "qid Q0 docid rank score tag" lines (any whitespace, LF or CRLF).
/// Entries are sorted by rank per query. Throws ParseError (with line) for a
/// malformed line and ValidationError naming the query for rank gaps,
/// duplicate docs or increasing scores.
ParsedRun parse_run(std::istream& in);

/// Canonical form: queries in byte order, single spaces, scores with 6
/// significant digits, LF line ends.
void write_run(const Run& rankings, const std::string& tag, std::ostream& out);

/// Reads "qid 0 docid grade" lines. Throws ParseError for malformed lines,
/// non-integer or negative grades and duplicate pairs.
JudgmentSet parse_qrels(std::istream& in);

/// Canonical qrels: queries then docs in byte order.
void write_qrels(const JudgmentSet& judgments, std::ostream& out);

/// JSON lines with string fields "id" and "text". Throws ParseError.
Corpus parse_corpus(std::istream& in);

/// "qid<TAB>text" lines. Throws ParseError.
std::map<std::string, Query> parse_queries(std::istream& in);

}  // namespace tdpart
