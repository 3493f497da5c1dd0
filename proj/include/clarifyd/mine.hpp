// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The clarifyd Authors

#pragma once

// Turns an issue and its comment stream into a corpus entry: follow-up
// question detection, candidate answer selection, quality filters and
// annotator vote aggregation.

#include <algorithm>
#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "clarifyd/corpus.hpp"
#include "clarifyd/error.hpp"
#include "clarifyd/retrieval.hpp"
#include "clarifyd/textprep.hpp"

namespace clarifyd::mine {

enum class QuestionReason { InterrogativeStart, QuestionMark, RequestPhrase };

inline std::string_view to_string(QuestionReason r) {
    switch (r) {
    case QuestionReason::InterrogativeStart: return "interrogative-start";
    case QuestionReason::QuestionMark: return "question-mark";
    case QuestionReason::RequestPhrase: break;
    }
    return "request-phrase";
}

struct QuestionPick {
    std::string comment_id;
    std::string asker;
    std::string text;
    QuestionReason reason = QuestionReason::InterrogativeStart;
    std::size_t index = 0; ///< position in the comment stream

    bool operator==(const QuestionPick&) const = default;
};

struct QuestionRules {
    std::set<std::string> interrogatives{"what", "why", "how",  "when", "where", "which", "who", "can",
                                         "could", "would", "do", "does", "did",  "is",    "are"};
    std::vector<std::string> request_phrases{"please", "can you", "could you", "would you"};
    /// Also accept any comment ending in '?' regardless of its first word.
    bool accept_bare_question_mark = false;
};

namespace detail {

// Drops quoted lines and leading @mentions, which precede the actual
// question in replies.
inline std::string question_body(std::string_view text) {
    std::string out;
    for (auto line : textprep::detail::split_lines(text)) {
        const auto t = textprep::detail::trim(line);
        if (t.empty() || t.front() == '>') continue;
        if (!out.empty()) out.push_back(' ');
        out.append(t);
    }
    auto pos = out.find_first_not_of(' ');
    while (pos != std::string::npos && out[pos] == '@') {
        const auto end = out.find(' ', pos);
        pos = end == std::string::npos ? end : out.find_first_not_of(' ', end);
    }
    return pos == std::string::npos ? std::string{} : out.substr(pos);
}

inline bool contains_phrase(std::string_view lower_text, std::string_view phrase) {
    for (std::size_t at = lower_text.find(phrase); at != std::string_view::npos; at = lower_text.find(phrase, at + 1)) {
        const bool left = at == 0 || !textprep::detail::is_token_char(static_cast<unsigned char>(lower_text[at - 1]));
        const std::size_t end = at + phrase.size();
        const bool right =
            end == lower_text.size() || !textprep::detail::is_token_char(static_cast<unsigned char>(lower_text[end]));
        if (left && right) return true;
    }
    return false;
}

} // namespace detail

/// Why `text` reads as a follow-up question, if it does.
inline std::optional<QuestionReason> classify_question(std::string_view text, const QuestionRules& rules = {}) {
    const std::string body = detail::question_body(text);
    if (body.empty()) return std::nullopt;
    const bool ends_with_qm = body.back() == '?';
    const auto tokens = textprep::tokenize(body).tokens;
    if (ends_with_qm && !tokens.empty() && rules.interrogatives.count(tokens.front()))
        return QuestionReason::InterrogativeStart;
    std::string lower = body;
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (const auto& phrase : rules.request_phrases) {
        if (detail::contains_phrase(lower, phrase)) return QuestionReason::RequestPhrase;
    }
    if (ends_with_qm && rules.accept_bare_question_mark) return QuestionReason::QuestionMark;
    return std::nullopt;
}

/// Earliest comment not written by the reporter that qualifies as a
/// question. `comments` must be time-sorted.
inline std::optional<QuestionPick> detect_followup_question(const std::vector<Comment>& comments,
                                                            const std::string& reporter,
                                                            const QuestionRules& rules = {}) {
    for (std::size_t i = 0; i < comments.size(); ++i) {
        const auto& c = comments[i];
        if (c.author == reporter) continue;
        if (auto reason = classify_question(c.body, rules))
            return QuestionPick{c.comment_id, c.author, c.body, *reason, i};
    }
    return std::nullopt;
}

struct CandidateAnswer {
    std::string comment_id;
    std::string text;

    bool operator==(const CandidateAnswer&) const = default;
};

struct CandidateTriple {
    std::array<std::optional<CandidateAnswer>, 3> answers;

    const std::optional<CandidateAnswer>& operator[](AnswerSlot slot) const {
        return answers[static_cast<std::size_t>(slot)];
    }
    bool operator==(const CandidateTriple&) const = default;
};

/// Index of the comment most similar to the question under BM25, treating
/// every other comment as a document. Ties go to the earlier comment; no
/// positive score means no match.
inline std::optional<std::size_t> most_similar_comment(const std::vector<Comment>& comments, std::size_t question_index) {
    std::vector<std::vector<std::string>> docs(comments.size());
    std::size_t doc_count = 0;
    double total_length = 0;
    std::unordered_map<std::string, std::size_t> df;
    for (std::size_t i = 0; i < comments.size(); ++i) {
        if (i == question_index) continue;
        docs[i] = textprep::preprocess(comments[i].body);
        ++doc_count;
        total_length += static_cast<double>(docs[i].size());
        for (const auto& t : std::set<std::string>(docs[i].begin(), docs[i].end())) ++df[t];
    }
    if (doc_count == 0 || total_length == 0) return std::nullopt;
    const double avg = total_length / static_cast<double>(doc_count);
    const auto query = textprep::preprocess(comments[question_index].body);
    const retrieval::Bm25Similarity bm25;

    std::optional<std::size_t> best;
    double best_score = 0.0;
    for (std::size_t i = 0; i < comments.size(); ++i) {
        if (i == question_index || docs[i].empty()) continue;
        std::unordered_map<std::string, std::size_t> tf;
        for (const auto& t : docs[i]) ++tf[t];
        double score = 0.0;
        for (const auto& q : query) {
            auto it = tf.find(q);
            if (it == tf.end()) continue;
            score += bm25.term_score(static_cast<double>(it->second), static_cast<double>(docs[i].size()), avg,
                                     df.at(q), doc_count);
        }
        if (score > best_score) {
            best_score = score;
            best = i;
        }
    }
    return best;
}

/// ca1: first later comment not by the asker; ca2: first later comment by
/// the reporter; ca3: BM25-closest comment anywhere in the stream.
inline CandidateTriple select_candidate_answers(const std::vector<Comment>& comments, const QuestionPick& question,
                                                const std::string& reporter) {
    if (question.index >= comments.size() || comments[question.index].comment_id != question.comment_id)
        throw ContractError("select_candidate_answers: question is not part of the comment stream");
    const auto question_time = comments[question.index].time;
    CandidateTriple out;
    auto& [ca1, ca2, ca3] = out.answers;
    for (std::size_t i = question.index + 1; i < comments.size(); ++i) {
        const auto& c = comments[i];
        if (c.time <= question_time) continue;
        if (!ca1 && c.author != question.asker) ca1 = CandidateAnswer{c.comment_id, c.body};
        if (!ca2 && c.author == reporter) ca2 = CandidateAnswer{c.comment_id, c.body};
        if (ca1 && ca2) break;
    }
    if (auto best = most_similar_comment(comments, question.index))
        ca3 = CandidateAnswer{comments[*best].comment_id, comments[*best].body};
    return out;
}

// ---------------------------------------------------------------------------
// Quality filters

inline constexpr std::size_t kMaxCodeLines = 10;

enum class RejectReason { StackTrace, CodeTooLong, Image };

inline std::string_view to_string(RejectReason r) {
    switch (r) {
    case RejectReason::StackTrace: return "stack-trace";
    case RejectReason::CodeTooLong: return "code-too-long";
    case RejectReason::Image: break;
    }
    return "image";
}

/// Line count of the longest fenced (``` or ~~~) block. An unterminated
/// fence runs to the end of the text.
inline std::size_t longest_fenced_block(std::string_view text) {
    std::size_t longest = 0, current = 0;
    std::optional<std::string> fence;
    for (auto line : textprep::detail::split_lines(text)) {
        const auto t = textprep::detail::trim(line);
        const bool is_fence = t.rfind("```", 0) == 0 || t.rfind("~~~", 0) == 0;
        if (!fence) {
            if (is_fence) {
                fence = std::string(t.substr(0, 3));
                current = 0;
            }
        } else if (is_fence && t.substr(0, 3) == *fence && t.find_first_not_of(fence->front()) == std::string_view::npos) {
            longest = std::max(longest, current);
            fence.reset();
        } else {
            ++current;
        }
    }
    if (fence) longest = std::max(longest, current);
    return longest;
}

struct FilterVerdict {
    bool keep = true;
    /// (field name, reason) for every violation found.
    std::vector<std::pair<std::string, RejectReason>> reasons;

    bool has(RejectReason r) const {
        return std::any_of(reasons.begin(), reasons.end(), [r](const auto& p) { return p.second == r; });
    }
};

/// Checks the question and every present answer. Runs on the raw text since
/// cleaning strips the markup being looked for.
inline FilterVerdict apply_quality_filters(const BugReport& entry) {
    FilterVerdict v;
    auto check = [&](const std::string& field, const std::optional<std::string>& text) {
        if (!text) return;
        if (textprep::contains_stack_trace(*text)) v.reasons.emplace_back(field, RejectReason::StackTrace);
        if (longest_fenced_block(*text) > kMaxCodeLines) v.reasons.emplace_back(field, RejectReason::CodeTooLong);
        if (textprep::contains_media_markup(*text)) v.reasons.emplace_back(field, RejectReason::Image);
    };
    check("question", entry.question);
    for (const auto slot : kAnswerSlots) check(std::string(to_string(slot)), entry.answer(slot));
    v.keep = v.reasons.empty();
    return v;
}

// ---------------------------------------------------------------------------
// Votes

struct Accepted {
    AnswerSlot choice;
    bool operator==(const Accepted&) const = default;
};

struct NeedsDiscussion {
    bool operator==(const NeedsDiscussion&) const = default;
};

using VoteOutcome = std::variant<Accepted, NeedsDiscussion>;

inline VoteOutcome aggregate_votes(const std::vector<AnswerSlot>& votes) {
    if (votes.size() != 3)
        throw ContractError("aggregate_votes: expected 3 votes, got " + std::to_string(votes.size()));
    std::array<int, 3> tally{};
    for (const auto v : votes) ++tally[static_cast<std::size_t>(v)];
    for (const auto slot : kAnswerSlots) {
        if (tally[static_cast<std::size_t>(slot)] >= 2) return Accepted{slot};
    }
    return NeedsDiscussion{};
}

struct Vote {
    std::string issue_id;
    std::string annotator;
    AnswerSlot choice = AnswerSlot::Ca1;
};

/// CSV with header `issue_id,annotator,choice`. Fields may be double-quoted.
inline std::vector<Vote> read_votes_csv(std::istream& in) {
    auto split = [](const std::string& line, std::size_t line_no) {
        std::vector<std::string> fields(1);
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char c = line[i];
            if (quoted) {
                if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    fields.back().push_back('"');
                    ++i;
                } else if (c == '"') {
                    quoted = false;
                } else {
                    fields.back().push_back(c);
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                fields.emplace_back();
            } else if (c != '\r') {
                fields.back().push_back(c);
            }
        }
        if (quoted) throw ParseError("unterminated quote", line_no);
        for (auto& f : fields) f = std::string(textprep::detail::trim(f));
        return fields;
    };

    std::vector<Vote> votes;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (textprep::detail::trim(line).empty()) continue;
        auto fields = split(line, line_no);
        if (!header_seen) {
            header_seen = true;
            if (fields != std::vector<std::string>{"issue_id", "annotator", "choice"})
                throw ParseError("expected header issue_id,annotator,choice", line_no);
            continue;
        }
        if (fields.size() != 3) throw ParseError("expected 3 fields", line_no);
        auto choice = answer_slot_from_string(fields[2]);
        if (!choice) throw ParseError("choice '" + fields[2] + "' is not ca1, ca2 or ca3", line_no);
        votes.push_back({fields[0], fields[1], *choice});
    }
    return votes;
}

inline std::vector<Vote> read_votes_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open votes '" + path.string() + "'");
    return read_votes_csv(in);
}

/// Per-issue outcomes in issue id order. An annotator voting twice on one
/// issue is a contract error.
inline std::map<std::string, VoteOutcome> aggregate_vote_table(const std::vector<Vote>& votes) {
    std::map<std::string, std::vector<const Vote*>> by_issue;
    for (const auto& v : votes) {
        auto& list = by_issue[v.issue_id];
        for (const auto* other : list) {
            if (other->annotator == v.annotator)
                throw ContractError("annotator '" + v.annotator + "' voted twice on " + v.issue_id);
        }
        list.push_back(&v);
    }
    std::map<std::string, VoteOutcome> out;
    for (const auto& [issue, list] : by_issue) {
        std::vector<AnswerSlot> choices;
        for (const auto* v : list) choices.push_back(v->choice);
        try {
            out.emplace(issue, aggregate_votes(choices));
        } catch (const ContractError& e) {
            throw ContractError(issue + ": " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Whole-issue mining

struct MineResult {
    BugReport entry; ///< the issue with question and answers filled in
    std::optional<QuestionPick> question;
    CandidateTriple candidates;
    FilterVerdict verdict;

    /// Eligible for the corpus: question found, all answers present,
    /// filters passed.
    bool accepted() const { return question && Corpus::admits(entry) && verdict.keep; }
};

inline MineResult mine_issue(const BugReport& issue, std::vector<Comment> comments, const QuestionRules& rules = {}) {
    std::stable_sort(comments.begin(), comments.end(), [](const Comment& a, const Comment& b) { return a.time < b.time; });
    MineResult r;
    r.entry = issue;
    r.question = detect_followup_question(comments, issue.author, rules);
    if (!r.question) return r;
    r.entry.question = r.question->text;
    r.candidates = select_candidate_answers(comments, *r.question, issue.author);
    for (const auto slot : kAnswerSlots) {
        const auto& c = r.candidates[slot];
        r.entry.answer(slot) = c ? std::optional<std::string>(c->text) : std::nullopt;
    }
    r.verdict = apply_quality_filters(r.entry);
    return r;
}

/// Sets `gold` on every report whose votes reached a majority.
inline std::size_t apply_votes(std::vector<BugReport>& reports, const std::map<std::string, VoteOutcome>& outcomes) {
    std::size_t applied = 0;
    for (auto& r : reports) {
        auto it = outcomes.find(r.id);
        if (it == outcomes.end()) continue;
        if (const auto* accepted = std::get_if<Accepted>(&it->second)) {
            if (const auto& text = r.answer(accepted->choice)) {
                r.gold = *text;
                ++applied;
            }
        }
    }
    return applied;
}

} // namespace clarifyd::mine
