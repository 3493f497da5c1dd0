// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The clarifyd Authors

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "clarifyd/error.hpp"
#include "clarifyd/textprep.hpp"
#include "clarifyd/timestamp.hpp"

namespace clarifyd {

/// Subject-system grouping used by evaluation reports.
enum class Language { Python, Java, JavaScript, Cpp, Other };

inline std::string_view to_string(Language lang) {
    switch (lang) {
    case Language::Python: return "Python";
    case Language::Java: return "Java";
    case Language::JavaScript: return "JavaScript";
    case Language::Cpp: return "C++";
    case Language::Other: break;
    }
    return "other";
}

inline Language language_from_string(std::string_view s) {
    if (s == "Python") return Language::Python;
    if (s == "Java") return Language::Java;
    if (s == "JavaScript") return Language::JavaScript;
    if (s == "C++") return Language::Cpp;
    return Language::Other;
}

enum class AnswerSlot : std::uint8_t { Ca1 = 0, Ca2 = 1, Ca3 = 2 };

inline constexpr std::array<AnswerSlot, 3> kAnswerSlots{AnswerSlot::Ca1, AnswerSlot::Ca2, AnswerSlot::Ca3};

inline std::string_view to_string(AnswerSlot slot) {
    switch (slot) {
    case AnswerSlot::Ca1: return "ca1";
    case AnswerSlot::Ca2: return "ca2";
    case AnswerSlot::Ca3: break;
    }
    return "ca3";
}

inline std::optional<AnswerSlot> answer_slot_from_string(std::string_view s) {
    if (s == "ca1") return AnswerSlot::Ca1;
    if (s == "ca2") return AnswerSlot::Ca2;
    if (s == "ca3") return AnswerSlot::Ca3;
    return std::nullopt;
}

struct BugReport {
    std::string id; ///< repo-qualified, e.g. `owner/name#123`
    std::string repo;
    std::string title;
    std::string description;
    std::optional<std::string> question;
    std::array<std::optional<std::string>, 3> answers;
    std::set<std::string> labels;
    std::string author;
    Timestamp created_at{};
    std::optional<Timestamp> closed_at;
    Language language = Language::Other;
    /// Accepted answer text; only held-out evaluation records carry one.
    std::optional<std::string> gold;

    const std::optional<std::string>& answer(AnswerSlot slot) const { return answers[static_cast<std::size_t>(slot)]; }
    std::optional<std::string>& answer(AnswerSlot slot) { return answers[static_cast<std::size_t>(slot)]; }

    bool operator==(const BugReport&) const = default;
};

struct Comment {
    std::string comment_id;
    std::string issue_id;
    std::string author;
    std::string body;
    Timestamp time{};

    bool operator==(const Comment&) const = default;
};

struct Violation {
    std::string field;
    std::string message;

    bool operator==(const Violation&) const = default;
};

struct ValidationResult {
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }

    bool has(std::string_view message) const {
        for (const auto& v : violations) {
            if (v.message == message) return true;
        }
        return false;
    }
};

inline ValidationResult validate_report(const BugReport& report) {
    ValidationResult result;
    if (report.id.empty()) result.violations.push_back({"id", "empty id"});
    if (textprep::clean(report.title).empty()) result.violations.push_back({"title", "empty title"});
    if (report.closed_at && *report.closed_at < report.created_at)
        result.violations.push_back({"closed_at", "time order"});
    return result;
}

/// Reports eligible for retrieval: a follow-up question and all three
/// candidate answers present and non-empty.
class Corpus {
public:
    Corpus() = default;

    /// Throws Error on a duplicate id, an invalid report, or an entry that
    /// fails `admits`.
    explicit Corpus(std::vector<BugReport> entries) : entries_(std::move(entries)) {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const auto& e = entries_[i];
            if (!by_id_.emplace(e.id, i).second) throw Error("duplicate corpus id '" + e.id + "'");
            if (auto v = validate_report(e); !v.ok())
                throw Error("corpus entry '" + e.id + "': " + v.violations.front().message);
            if (!admits(e)) throw Error("corpus entry '" + e.id + "' lacks a question or a candidate answer");
        }
    }

    static bool admits(const BugReport& report) {
        if (!report.question) return false;
        for (const auto& a : report.answers) {
            if (!a || a->empty()) return false;
        }
        return true;
    }

    const std::vector<BugReport>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const BugReport& operator[](std::size_t i) const { return entries_[i]; }

    const BugReport* find(const std::string& id) const {
        auto it = by_id_.find(id);
        return it == by_id_.end() ? nullptr : &entries_[it->second];
    }
    auto begin() const noexcept { return entries_.begin(); }
    auto end() const noexcept { return entries_.end(); }

    bool operator==(const Corpus&) const = default;

private:
    std::vector<BugReport> entries_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

// ---------------------------------------------------------------------------
// JSON-lines records

inline nlohmann::json to_json_record(const BugReport& r) {
    using nlohmann::json;
    auto opt = [](const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); };
    json j = json::object();
    j["id"] = r.id;
    j["repo"] = r.repo;
    j["title"] = r.title;
    j["description"] = r.description;
    j["question"] = opt(r.question);
    j["ca1"] = opt(r.answers[0]);
    j["ca2"] = opt(r.answers[1]);
    j["ca3"] = opt(r.answers[2]);
    j["labels"] = json::array();
    for (const auto& l : r.labels) j["labels"].push_back(l);
    j["author"] = r.author;
    j["created_at"] = format_timestamp(r.created_at);
    j["closed_at"] = r.closed_at ? json(format_timestamp(*r.closed_at)) : json(nullptr);
    j["lang"] = std::string(to_string(r.language));
    if (r.gold) j["gold"] = *r.gold;
    return j;
}

inline BugReport report_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error("record is not a JSON object");
    auto text = [&](const char* key, bool required) -> std::string {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) {
            if (required) throw Error(std::string("missing field '") + key + "'");
            return {};
        }
        if (!it->is_string()) throw Error(std::string("field '") + key + "' is not a string");
        return it->get<std::string>();
    };
    auto opt_text = [&](const char* key) -> std::optional<std::string> {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) return std::nullopt;
        if (!it->is_string()) throw Error(std::string("field '") + key + "' is not a string");
        return it->get<std::string>();
    };
    auto time = [&](const char* key, bool required) -> std::optional<Timestamp> {
        auto raw = opt_text(key);
        if (!raw) {
            if (required) throw Error(std::string("missing field '") + key + "'");
            return std::nullopt;
        }
        auto t = parse_timestamp(*raw);
        if (!t) throw Error(std::string("field '") + key + "' is not an ISO-8601 timestamp");
        return t;
    };

    BugReport r;
    r.id = text("id", true);
    r.repo = text("repo", false);
    r.title = text("title", true);
    r.description = text("description", false);
    r.question = opt_text("question");
    r.answers = {opt_text("ca1"), opt_text("ca2"), opt_text("ca3")};
    if (auto it = j.find("labels"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw Error("field 'labels' is not an array");
        for (const auto& l : *it) {
            if (!l.is_string()) throw Error("label is not a string");
            r.labels.insert(l.get<std::string>());
        }
    }
    r.author = text("author", false);
    r.created_at = *time("created_at", true);
    r.closed_at = time("closed_at", false);
    r.language = language_from_string(opt_text("lang").value_or("other"));
    r.gold = opt_text("gold");
    return r;
}

inline nlohmann::json to_json_record(const Comment& c) {
    return {{"comment_id", c.comment_id}, {"issue_id", c.issue_id}, {"author", c.author},
            {"body", c.body},             {"time", format_timestamp(c.time)}};
}

inline Comment comment_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error("record is not a JSON object");
    Comment c;
    c.comment_id = j.at("comment_id").is_string() ? j.at("comment_id").get<std::string>() : j.at("comment_id").dump();
    c.issue_id = j.at("issue_id").get<std::string>();
    c.author = j.value("author", std::string{});
    c.body = j.value("body", std::string{});
    auto t = parse_timestamp(j.at("time").get<std::string>());
    if (!t) throw Error("field 'time' is not an ISO-8601 timestamp");
    c.time = *t;
    return c;
}

namespace detail {

// Calls `fn(json, line_number)` for each non-blank line; parse and
// conversion failures become ParseError carrying the line.
template <typename Fn>
void for_each_jsonl(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (textprep::detail::trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
        }
        try {
            fn(j, line_no);
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(e.what(), line_no);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(e.what(), line_no);
        }
    }
}

inline std::ifstream open_for_read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "' for reading");
    return in;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    return out;
}

} // namespace detail

/// Reads report records without corpus-membership filtering. Every record
/// must validate and ids must be unique.
inline std::vector<BugReport> read_reports(std::istream& in) {
    std::vector<BugReport> out;
    std::unordered_set<std::string> seen;
    detail::for_each_jsonl(in, [&](const nlohmann::json& j, std::size_t line_no) {
        BugReport r = report_from_json(j);
        if (auto v = validate_report(r); !v.ok()) throw ParseError(v.violations.front().message, line_no);
        if (!seen.insert(r.id).second) throw ParseError("duplicate id '" + r.id + "'", line_no);
        out.push_back(std::move(r));
    });
    return out;
}

inline std::vector<BugReport> read_reports(const std::filesystem::path& path) {
    auto in = detail::open_for_read(path);
    return read_reports(in);
}

inline void write_reports(std::ostream& out, const std::vector<BugReport>& reports) {
    for (const auto& r : reports) out << to_json_record(r).dump() << '\n';
}

inline void write_reports(const std::filesystem::path& path, const std::vector<BugReport>& reports) {
    auto out = detail::open_for_write(path);
    write_reports(out, reports);
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

/// Loads a corpus, dropping records that lack a question or any candidate
/// answer; their ids are appended to `dropped` when given.
inline Corpus load_corpus(std::istream& in, std::vector<std::string>* dropped = nullptr) {
    std::vector<BugReport> kept;
    for (auto& r : read_reports(in)) {
        if (Corpus::admits(r)) {
            kept.push_back(std::move(r));
        } else if (dropped) {
            dropped->push_back(r.id);
        }
    }
    return Corpus(std::move(kept));
}

inline Corpus load_corpus(const std::filesystem::path& path, std::vector<std::string>* dropped = nullptr) {
    auto in = detail::open_for_read(path);
    return load_corpus(in, dropped);
}

inline void save_corpus(std::ostream& out, const Corpus& corpus) { write_reports(out, corpus.entries()); }

inline void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
    write_reports(path, corpus.entries());
}

inline std::vector<Comment> read_comments(std::istream& in) {
    std::vector<Comment> out;
    detail::for_each_jsonl(in, [&](const nlohmann::json& j, std::size_t) { out.push_back(comment_from_json(j)); });
    return out;
}

inline std::vector<Comment> read_comments(const std::filesystem::path& path) {
    auto in = detail::open_for_read(path);
    return read_comments(in);
}

inline void write_comments(std::ostream& out, const std::vector<Comment>& comments) {
    for (const auto& c : comments) out << to_json_record(c).dump() << '\n';
}

} // namespace clarifyd
