#pragma once

#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pedcot/core.hpp"
#include "pedcot/errors.hpp"

namespace pedcot {

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// Lowercase, map every non-alphanumeric byte to a space, split on runs of
// spaces. "Principle 1: Correct-and-Aligned." -> {principle, 1, correct,
// and, aligned}.
inline std::vector<std::string> normalize_tokens(std::string_view s) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : s) {
        const unsigned char uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc)) {
            cur.push_back(static_cast<char>(std::tolower(uc)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

inline bool starts_with(const std::string& token, std::string_view prefix) {
    return token.size() >= prefix.size() && token.compare(0, prefix.size(), prefix) == 0;
}

// Case-insensitive substring search.
inline std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from = 0) {
    if (needle.empty() || haystack.size() < needle.size()) return std::string_view::npos;
    for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
        bool hit = true;
        for (std::size_t j = 0; j < needle.size(); ++j) {
            if (std::tolower(static_cast<unsigned char>(haystack[i + j])) !=
                std::tolower(static_cast<unsigned char>(needle[j]))) {
                hit = false;
                break;
            }
        }
        if (hit) return i;
    }
    return std::string_view::npos;
}

inline std::size_t line_start(std::string_view text, std::size_t pos) {
    while (pos > 0 && text[pos - 1] != '\n') --pos;
    return pos;
}

} // namespace detail

// ── Stage-1 splitting ───────────────────────────────────────────────

// Split a Stage-1 response into per-principle segments. Splitting walks the
// active principles from highest to lowest: the rightmost "\n\n<k>."
// occurrence cuts off segment k, and whatever remains belongs to the lowest
// active principle. Rightmost-first keeps numbered sub-lists inside earlier
// segments from being mistaken for delimiters. Segments are trimmed; the
// numeric marker stays with its segment.
inline RegeneratedContent split_stage1(const std::string& raw,
                                       const std::set<PrincipleId>& active) {
    if (raw.empty()) throw InvalidInput("split_stage1: empty response");
    if (active.empty()) throw InvalidInput("split_stage1: no active principles");

    std::vector<PrincipleId> order(active.begin(), active.end()); // ascending
    RegeneratedContent out;
    out.raw = raw;

    std::string head = raw;
    for (std::size_t i = order.size(); i-- > 1;) {
        const int k = principle_number(order[i]);
        const std::string delim = "\n\n" + std::to_string(k) + ".";
        const std::size_t pos = head.rfind(delim);
        if (pos == std::string::npos) throw MissingDelimiter(k);
        std::string segment = detail::trim(std::string_view(head).substr(pos + 2));
        if (segment.empty()) throw EmptySegment(k);
        out.segments[order[i]] = std::move(segment);
        head.erase(pos);
    }
    std::string first = detail::trim(head);
    if (first.empty()) throw EmptySegment(principle_number(order.front()));
    out.segments[order.front()] = std::move(first);
    return out;
}

// ── Stage-2 parsing ─────────────────────────────────────────────────

struct ParsedVerdict {
    PrincipleLabels labels; // covers exactly the active principles
    ExtractedContent extracted;
};

namespace detail {

inline const std::vector<std::string>& label_token_sequence(PrincipleLabel label) {
    static const std::vector<std::string> correct = {"correct", "and", "aligned"};
    static const std::vector<std::string> incomplete = {"reasonable", "but", "incomplete"};
    static const std::vector<std::string> contradiction = {"contradiction", "found"};
    static const std::vector<std::string> nothing = {"nothing", "extracted"};
    switch (label) {
        case PrincipleLabel::CorrectAndAligned: return correct;
        case PrincipleLabel::ReasonableButIncomplete: return incomplete;
        case PrincipleLabel::ContradictionFound: return contradiction;
        case PrincipleLabel::NothingExtracted: return nothing;
    }
    return correct;
}

inline bool is_negator(const std::string& t) {
    static const std::set<std::string> negators = {
        "no",    "not",    "never",  "without", "none",   "neither", "nor",
        "cannot", "cant",  "dont",   "doesnt",  "didnt",  "isnt",    "arent",
        "wasnt", "werent", "couldnt", "wouldnt", "shouldnt", "lacks",  "lacking"};
    return negators.count(t) > 0;
}

// Index of the first (optionally non-negated) occurrence of seq in tokens,
// or npos.
inline std::size_t find_sequence(const std::vector<std::string>& tokens,
                                 const std::vector<std::string>& seq,
                                 bool reject_negated = false) {
    if (seq.size() > tokens.size()) return std::string::npos;
    for (std::size_t i = 0; i + seq.size() <= tokens.size(); ++i) {
        bool hit = true;
        for (std::size_t j = 0; j < seq.size(); ++j) {
            if (tokens[i + j] != seq[j]) {
                hit = false;
                break;
            }
        }
        if (!hit) continue;
        if (reject_negated) {
            bool negated = false;
            const std::size_t lo = i >= 2 ? i - 2 : 0;
            for (std::size_t j = lo; j < i; ++j) {
                if (is_negator(tokens[j])) {
                    negated = true;
                    break;
                }
            }
            if (negated) continue;
        }
        return i;
    }
    return std::string::npos;
}

inline bool contains_sequence(const std::vector<std::string>& tokens,
                              const std::vector<std::string>& seq,
                              bool reject_negated = false) {
    return find_sequence(tokens, seq, reject_negated) != std::string::npos;
}

// Matches a verdict line: "principle" leads the line (one decoration token
// allowed before it) and the label starts within two tokens of the
// principle number, so prose that merely mentions a principle is not
// mistaken for a verdict.
inline bool match_verdict_line(const std::vector<std::string>& tokens, int& k_out,
                               PrincipleLabel& label_out) {
    for (std::size_t i = 0; i + 1 < tokens.size() && i <= 1; ++i) {
        if (tokens[i] != "principle") continue;
        const std::string& num = tokens[i + 1];
        if (num.size() != 1 || num[0] < '1' || num[0] > '3') continue;
        std::vector<std::string> rest(tokens.begin() + static_cast<std::ptrdiff_t>(i) + 2,
                                      tokens.end());
        for (PrincipleLabel label :
             {PrincipleLabel::ContradictionFound, PrincipleLabel::NothingExtracted,
              PrincipleLabel::ReasonableButIncomplete, PrincipleLabel::CorrectAndAligned}) {
            const std::size_t at =
                find_sequence(rest, label_token_sequence(label), /*reject_negated=*/true);
            if (at != std::string::npos && at <= 2) {
                k_out = num[0] - '0';
                label_out = label;
                return true;
            }
        }
    }
    return false;
}

inline bool has_token_prefix(const std::vector<std::string>& tokens, std::string_view prefix,
                             bool reject_negated) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!starts_with(tokens[i], prefix)) continue;
        if (!reject_negated) return true;
        bool negated = false;
        const std::size_t lo = i >= 4 ? i - 4 : 0;
        for (std::size_t j = lo; j < i; ++j) {
            if (is_negator(tokens[j])) {
                negated = true;
                break;
            }
        }
        if (!negated) return true;
    }
    return false;
}

// Free-prose fallback: decide a label from the section text. Precedence when
// several phrases co-occur: contradiction > nothing-extracted > incomplete >
// correct. A stated contradiction is never masked by surrounding politeness.
inline std::optional<PrincipleLabel> scan_label_phrases(const std::string& section) {
    const std::vector<std::string> tokens = normalize_tokens(section);
    if (has_token_prefix(tokens, "contradict", /*reject_negated=*/true)) {
        return PrincipleLabel::ContradictionFound;
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] != "nothing" && tokens[i] != "no") continue;
        const std::size_t hi = std::min(tokens.size(), i + 5);
        for (std::size_t j = i + 1; j < hi; ++j) {
            if (starts_with(tokens[j], "extract") || (tokens[j] == "related" && j + 1 < hi &&
                                                      tokens[j + 1] == "content")) {
                return PrincipleLabel::NothingExtracted;
            }
        }
    }
    if (contains_sequence(tokens, {"reasonable", "but", "incomplete"}) ||
        contains_sequence(tokens, {"partially", "correct"}) ||
        has_token_prefix(tokens, "incomplete", /*reject_negated=*/true)) {
        return PrincipleLabel::ReasonableButIncomplete;
    }
    if (contains_sequence(tokens, {"correct", "and", "aligned"}) ||
        (has_token_prefix(tokens, "correct", /*reject_negated=*/true) &&
         has_token_prefix(tokens, "align", /*reject_negated=*/true))) {
        return PrincipleLabel::CorrectAndAligned;
    }
    return std::nullopt;
}

struct Section {
    std::size_t anchor_line_start = 0; // label scan starts here
    std::size_t body_start = 0;        // E^(k) starts after the anchor line
    std::size_t end = 0;
};

// Locate per-principle sections. The anchor is the earliest occurrence of
// "principle <k>", "part <k>", a line-leading "<k>." marker, or the
// principle's keyword phrase; the section runs from the anchor's line start
// to the next section's line start.
inline std::map<PrincipleId, Section> find_sections(const std::string& body,
                                                    const std::set<PrincipleId>& active) {
    std::map<PrincipleId, std::size_t> anchors;
    for (PrincipleId p : active) {
        const int k = principle_number(p);
        std::size_t best = std::string::npos;
        const std::string marker = std::to_string(k) + ".";
        for (std::size_t pos = 0; pos + marker.size() <= body.size();) {
            pos = body.find(marker, pos);
            if (pos == std::string::npos) break;
            if (pos == line_start(body, pos)) {
                best = pos;
                break;
            }
            ++pos;
        }
        // The singular keyword stem also matches the plural form in text.
        const char* stem = p == PrincipleId::Concepts      ? "mathematical concept"
                           : p == PrincipleId::Approaches  ? "problem-solving approach"
                                                           : "calculation";
        for (const std::string& phrase :
             {"principle " + std::to_string(k), "part " + std::to_string(k), std::string(stem)}) {
            const std::size_t pos = ifind(body, phrase);
            if (pos != std::string::npos && pos < best) best = pos;
        }
        if (best != std::string::npos) anchors[p] = best;
    }

    std::map<PrincipleId, Section> sections;
    for (const auto& [p, pos] : anchors) {
        Section s;
        s.anchor_line_start = line_start(body, pos);
        const std::size_t eol = body.find('\n', pos);
        s.body_start = eol == std::string::npos ? body.size() : eol + 1;
        s.end = body.size();
        for (const auto& [other, other_pos] : anchors) {
            if (other == p) continue;
            const std::size_t other_start = line_start(body, other_pos);
            if (other_start > s.anchor_line_start && other_start < s.end) {
                s.end = other_start;
            }
        }
        if (s.body_start > s.end) s.body_start = s.end;
        sections[p] = s;
    }
    return sections;
}

} // namespace detail

// Parse a Stage-2 (or one-stage) response. The primary channel is the
// verdict-line grammar "Principle <k>: <label>" (case-insensitive,
// hyphen/space tolerant; the last line per principle wins). Principles
// without a verdict line fall back to a keyword scan of their section.
// E^(k) is the text between a principle's section header and the next one.
inline ParsedVerdict parse_stage2(const std::string& raw, const std::set<PrincipleId>& active) {
    if (raw.empty()) throw InvalidInput("parse_stage2: empty response");
    if (active.empty()) throw InvalidInput("parse_stage2: no active principles");

    ParsedVerdict out;
    out.extracted.raw = raw;

    // Verdict lines, keeping the body (everything else) for E extraction.
    std::string body;
    body.reserve(raw.size());
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        const std::size_t eol = raw.find('\n', pos);
        const std::size_t len = (eol == std::string::npos ? raw.size() : eol) - pos;
        const std::string_view line(raw.data() + pos, len);
        int k = 0;
        PrincipleLabel label{};
        if (detail::match_verdict_line(detail::normalize_tokens(line), k, label) &&
            active.count(principle_from_number(k)) > 0) {
            out.labels[principle_from_number(k)] = label; // later lines overwrite
        } else {
            body.append(line);
            body.push_back('\n');
        }
        if (eol == std::string::npos) break;
        pos = eol + 1;
    }

    const auto sections = detail::find_sections(body, active);
    for (const auto& [p, s] : sections) {
        out.extracted.segments[p] =
            detail::trim(std::string_view(body).substr(s.body_start, s.end - s.body_start));
    }

    std::vector<int> missing;
    for (PrincipleId p : active) {
        if (out.labels.count(p) > 0) continue;
        auto it = sections.find(p);
        if (it != sections.end()) {
            const detail::Section& s = it->second;
            const std::string section_text = body.substr(s.anchor_line_start, s.end - s.anchor_line_start);
            if (auto lbl = detail::scan_label_phrases(section_text)) {
                out.labels[p] = *lbl;
                continue;
            }
        }
        missing.push_back(principle_number(p));
    }
    if (!missing.empty()) {
        std::string msg = "no recognizable verdict for principle(s)";
        for (int k : missing) msg += " " + std::to_string(k);
        throw ParseFailure(msg, missing);
    }
    return out;
}

// First yes/no token (case-insensitive, punctuation-stripped) wins: 1/0.
inline int parse_direct_step(const std::string& raw) {
    if (raw.empty()) throw InvalidInput("parse_direct_step: empty response");
    for (const std::string& token : detail::normalize_tokens(raw)) {
        if (token == "yes") return 1;
        if (token == "no") return 0;
    }
    throw ParseFailure("no yes/no token in response");
}

} // namespace pedcot
