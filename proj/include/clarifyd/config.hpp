// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The clarifyd Authors

#pragma once

// Operator configuration. The file format is the TOML subset the config
// needs: [tables], bare or quoted keys, strings, integers, floats, booleans
// and (possibly multi-line) arrays of those. Dotted keys, inline tables and
// dates are rejected.

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "clarifyd/corpus.hpp"
#include "clarifyd/error.hpp"
#include "clarifyd/genctx.hpp"
#include "clarifyd/ingest.hpp"
#include "clarifyd/metrics.hpp"
#include "clarifyd/retrieval.hpp"

namespace clarifyd::config {

namespace toml {

struct Value;
using Array = std::vector<Value>;

struct Value {
    std::variant<std::string, std::int64_t, double, bool, Array> data;
    std::size_t line = 0;

    bool is_string() const { return std::holds_alternative<std::string>(data); }
    bool is_integer() const { return std::holds_alternative<std::int64_t>(data); }
    bool is_float() const { return std::holds_alternative<double>(data); }
    bool is_bool() const { return std::holds_alternative<bool>(data); }
    bool is_array() const { return std::holds_alternative<Array>(data); }
};

using Table = std::map<std::string, Value>;
/// Top-level keys live under the empty table name.
using Document = std::map<std::string, Table>;

namespace detail {

class Parser {
public:
    explicit Parser(std::string text) : text_(std::move(text)) {}

    Document parse() {
        Document doc;
        std::string table;
        doc[table];
        std::set<std::string> declared;
        while (true) {
            skip_blank();
            if (eof()) break;
            if (peek() == '[') {
                ++pos_;
                skip_inline_space();
                table = parse_key();
                skip_inline_space();
                expect(']');
                if (!declared.insert(table).second) fail("table [" + table + "] declared twice");
                doc[table];
            } else {
                const std::size_t key_line = line_;
                std::string key = parse_key();
                skip_inline_space();
                expect('=');
                skip_inline_space();
                Value v = parse_value();
                v.line = key_line;
                if (!doc[table].emplace(key, std::move(v)).second) fail("duplicate key '" + key + "'");
            }
            end_of_line();
        }
        return doc;
    }

private:
    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_); }

    bool eof() const { return pos_ >= text_.size(); }
    char peek() const { return eof() ? '\0' : text_[pos_]; }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    void skip_inline_space() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
    }

    void skip_comment() {
        if (peek() == '#') {
            while (!eof() && peek() != '\n') ++pos_;
        }
    }

    // Whitespace, newlines and comments.
    void skip_blank() {
        while (!eof()) {
            skip_inline_space();
            skip_comment();
            if (peek() == '\r') ++pos_;
            if (peek() != '\n') break;
            ++pos_;
            ++line_;
        }
    }

    void end_of_line() {
        skip_inline_space();
        skip_comment();
        if (peek() == '\r') ++pos_;
        if (eof()) return;
        if (peek() != '\n') fail("unexpected trailing characters");
        ++pos_;
        ++line_;
    }

    std::string parse_key() {
        if (peek() == '"' || peek() == '\'') return parse_string();
        std::string key;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-'))
            key.push_back(text_[pos_++]);
        if (key.empty()) fail("expected a key");
        if (peek() == '.') fail("dotted keys are not supported");
        return key;
    }

    std::string parse_string() {
        const char quote = text_[pos_++];
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            const char c = text_[pos_++];
            if (c == quote) return out;
            if (c != '\\' || quote == '\'') {
                out.push_back(c);
                continue;
            }
            if (eof()) fail("unterminated string");
            const char e = text_[pos_++];
            switch (e) {
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            case 'r': out.push_back('\r'); break;
            case '"': out.push_back('"'); break;
            case '\\': out.push_back('\\'); break;
            default: fail(std::string("unsupported escape '\\") + e + "'");
            }
        }
    }

    Value parse_value() {
        Value v;
        v.line = line_;
        const char c = peek();
        if (c == '"' || c == '\'') {
            v.data = parse_string();
        } else if (c == '[') {
            ++pos_;
            Array items;
            while (true) {
                skip_blank();
                if (peek() == ']') {
                    ++pos_;
                    break;
                }
                items.push_back(parse_value());
                skip_blank();
                if (peek() == ',') {
                    ++pos_;
                } else if (peek() != ']') {
                    fail("expected ',' or ']' in array");
                }
            }
            v.data = std::move(items);
        } else if (c == '{') {
            fail("inline tables are not supported");
        } else {
            std::string word;
            while (!eof() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != ',' && peek() != ']' &&
                   peek() != '#')
                word.push_back(text_[pos_++]);
            if (word == "true") {
                v.data = true;
            } else if (word == "false") {
                v.data = false;
            } else {
                v.data = parse_number(word);
            }
        }
        return v;
    }

    std::variant<std::string, std::int64_t, double, bool, Array> parse_number(std::string word) {
        if (word.empty()) fail("expected a value");
        std::string digits;
        for (char ch : word) {
            if (ch != '_') digits.push_back(ch);
        }
        const bool is_float = digits.find_first_of(".eE") != std::string::npos || digits == "inf" || digits == "nan";
        try {
            std::size_t used = 0;
            if (is_float) {
                const double d = std::stod(digits, &used);
                if (used == digits.size()) return d;
            } else {
                const long long i = std::stoll(digits, &used, 10);
                if (used == digits.size()) return static_cast<std::int64_t>(i);
            }
        } catch (const std::exception&) {
        }
        fail("invalid value '" + word + "'");
    }

    std::string text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

} // namespace detail

inline Document parse(std::string_view text) { return detail::Parser(std::string(text)).parse(); }

inline Document parse(std::istream& in) {
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

} // namespace toml

// ---------------------------------------------------------------------------

inline constexpr std::array<std::size_t, 5> kPaperListSizes{10, 20, 25, 30, 50};

enum class BackendKind { Fallback, Service };
enum class SemsimProvider { WordVectors, Service };

struct Config {
    // [ingest]
    std::vector<std::string> repos;
    std::set<std::string> labels = ingest::default_labels();
    ingest::IssueState state = ingest::IssueState::Closed;
    std::optional<Timestamp> since;
    std::size_t max_issues = 2000;
    std::size_t per_page = 30;
    std::string api_url = "https://api.github.com";

    // [paths]
    std::filesystem::path corpus = "corpus.jsonl";
    std::filesystem::path index = "index.json";
    std::filesystem::path embeddings;
    std::filesystem::path issues = "issues.jsonl";
    std::filesystem::path comments = "comments.jsonl";
    std::filesystem::path votes;
    std::filesystem::path heldout;
    std::filesystem::path out = "report";
    std::filesystem::path fixtures;

    // [retrieval]
    std::string scorer = "bm25";
    retrieval::Aggregation aggregation = retrieval::Aggregation::Algorithm1;
    std::size_t n = 10;
    double sim_tolerance = 1e-6;
    bool rerank = true;

    // [generation]
    BackendKind backend = BackendKind::Fallback;
    std::string service_url = "http://127.0.0.1:8008";
    genctx::ContextMode context_mode = genctx::ContextMode::RetrievedOnly;
    std::size_t k = 5;
    std::size_t max_chars = genctx::kDefaultMaxChars;
    std::size_t parallelism = 4;
    std::int64_t timeout_ms = 60000;
    int max_new_tokens = 128;
    bool fallback = true;

    // [evaluation]
    std::vector<std::size_t> eval_k{1, 3, 5};
    SemsimProvider semsim = SemsimProvider::WordVectors;
    bool relaxed_wmd = false;
    metrics::BleuSmoothing smoothing = metrics::BleuSmoothing::AddOneAll;

    // [repo_lang]
    std::map<std::string, Language> repo_lang;

    Language language_of(const std::string& repo) const {
        auto it = repo_lang.find(repo);
        return it == repo_lang.end() ? Language::Other : it->second;
    }
};

namespace detail {

class Reader {
public:
    Reader(const toml::Table& table, std::string name) : table_(table), name_(std::move(name)) {}

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        auto it = table_.find(key);
        throw ParseError("[" + name_ + "] " + key + ": " + what, it == table_.end() ? 0 : it->second.line);
    }

    const toml::Value* find(const std::string& key) {
        seen_.insert(key);
        auto it = table_.find(key);
        return it == table_.end() ? nullptr : &it->second;
    }

    void string(const std::string& key, std::string& out) {
        if (auto v = find(key)) {
            if (!v->is_string()) fail(key, "expected a string");
            out = std::get<std::string>(v->data);
        }
    }

    void path(const std::string& key, std::filesystem::path& out) {
        std::string s;
        string(key, s);
        if (find(key)) out = s;
    }

    void boolean(const std::string& key, bool& out) {
        if (auto v = find(key)) {
            if (!v->is_bool()) fail(key, "expected true or false");
            out = std::get<bool>(v->data);
        }
    }

    template <typename Int>
    void integer(const std::string& key, Int& out, std::int64_t min) {
        if (auto v = find(key)) {
            if (!v->is_integer()) fail(key, "expected an integer");
            const auto i = std::get<std::int64_t>(v->data);
            if (i < min) fail(key, "must be at least " + std::to_string(min));
            out = static_cast<Int>(i);
        }
    }

    void real(const std::string& key, double& out) {
        if (auto v = find(key)) {
            if (v->is_integer()) out = static_cast<double>(std::get<std::int64_t>(v->data));
            else if (v->is_float()) out = std::get<double>(v->data);
            else fail(key, "expected a number");
        }
    }

    void strings(const std::string& key, std::vector<std::string>& out) {
        if (auto v = find(key)) {
            if (!v->is_array()) fail(key, "expected an array of strings");
            out.clear();
            for (const auto& item : std::get<toml::Array>(v->data)) {
                if (!item.is_string()) fail(key, "expected an array of strings");
                out.push_back(std::get<std::string>(item.data));
            }
        }
    }

    template <typename F>
    void choice(const std::string& key, F&& apply) {
        std::string s;
        string(key, s);
        if (!find(key)) return;
        try {
            apply(s);
        } catch (const ContractError& e) {
            fail(key, e.what());
        }
    }

    void reject_unknown() const {
        for (const auto& [key, value] : table_) {
            if (!seen_.count(key)) throw ParseError("[" + name_ + "] unknown key '" + key + "'", value.line);
        }
    }

private:
    const toml::Table& table_;
    std::string name_;
    std::set<std::string> seen_;
};

} // namespace detail

/// N must be one of the evaluated list sizes unless `allow_any_n`.
inline void validate(const Config& c, bool allow_any_n = false) {
    if (c.n < 1) throw ContractError("N must be at least 1");
    if (!allow_any_n && std::find(kPaperListSizes.begin(), kPaperListSizes.end(), c.n) == kPaperListSizes.end())
        throw ContractError("N = " + std::to_string(c.n) + " is not one of 10, 20, 25, 30, 50");
    if (c.k < 1) throw ContractError("K must be at least 1");
    if (c.k > c.n) throw ContractError("K = " + std::to_string(c.k) + " exceeds N = " + std::to_string(c.n));
    if (c.sim_tolerance < 0) throw ContractError("sim_tolerance must be non-negative");
    if (c.eval_k.empty()) throw ContractError("evaluation K list is empty");
    for (auto k : c.eval_k) {
        if (k < 1 || k > c.n) throw ContractError("evaluation K = " + std::to_string(k) + " outside 1..N");
    }
}

inline Config from_document(const toml::Document& doc) {
    static const std::set<std::string> kTables{"", "ingest", "paths", "retrieval", "generation", "evaluation",
                                               "repo_lang"};
    for (const auto& [name, table] : doc) {
        if (!kTables.count(name)) throw ParseError("unknown table [" + name + "]", 0);
    }
    if (!doc.at("").empty()) throw ParseError("keys must live inside a table", doc.at("").begin()->second.line);

    Config c;
    auto table = [&](const std::string& name) -> const toml::Table& {
        static const toml::Table kEmpty;
        auto it = doc.find(name);
        return it == doc.end() ? kEmpty : it->second;
    };

    {
        detail::Reader r(table("ingest"), "ingest");
        r.strings("repos", c.repos);
        for (const auto& repo : c.repos) {
            if (!ingest::is_repo_name(repo)) r.fail("repos", "'" + repo + "' is not of the form owner/name");
        }
        std::vector<std::string> labels(c.labels.begin(), c.labels.end());
        r.strings("labels", labels);
        c.labels = {labels.begin(), labels.end()};
        r.choice("state", [&](const std::string& s) { c.state = ingest::issue_state_from_string(s); });
        r.choice("since", [&](const std::string& s) {
            c.since = parse_timestamp(s);
            if (!c.since) throw ContractError("not an ISO-8601 timestamp");
        });
        r.integer("max_issues", c.max_issues, 1);
        r.integer("per_page", c.per_page, 1);
        r.string("api_url", c.api_url);
        r.reject_unknown();
    }
    {
        detail::Reader r(table("paths"), "paths");
        r.path("corpus", c.corpus);
        r.path("index", c.index);
        r.path("embeddings", c.embeddings);
        r.path("issues", c.issues);
        r.path("comments", c.comments);
        r.path("votes", c.votes);
        r.path("heldout", c.heldout);
        r.path("out", c.out);
        r.path("fixtures", c.fixtures);
        r.reject_unknown();
    }
    {
        detail::Reader r(table("retrieval"), "retrieval");
        r.choice("scorer", [&](const std::string& s) {
            retrieval::make_similarity(s);
            c.scorer = s;
        });
        r.choice("aggregation",
                 [&](const std::string& s) { c.aggregation = retrieval::aggregation_from_string(s); });
        r.integer("n", c.n, 1);
        r.real("sim_tolerance", c.sim_tolerance);
        r.boolean("rerank", c.rerank);
        r.reject_unknown();
    }
    {
        detail::Reader r(table("generation"), "generation");
        r.choice("backend", [&](const std::string& s) {
            if (s == "fallback") c.backend = BackendKind::Fallback;
            else if (s == "service") c.backend = BackendKind::Service;
            else throw ContractError("expected fallback or service");
        });
        r.string("service_url", c.service_url);
        if (auto v = r.find("context_mode")) {
            if (!v->is_integer()) r.fail("context_mode", "expected 1 or 2");
            try {
                c.context_mode = genctx::context_mode_from_int(static_cast<int>(std::get<std::int64_t>(v->data)));
            } catch (const ContractError& e) {
                r.fail("context_mode", e.what());
            }
        }
        r.integer("k", c.k, 1);
        r.integer("max_chars", c.max_chars, 1);
        r.integer("parallelism", c.parallelism, 1);
        r.integer("timeout_ms", c.timeout_ms, 1);
        r.integer("max_new_tokens", c.max_new_tokens, 1);
        r.boolean("fallback", c.fallback);
        r.reject_unknown();
    }
    {
        detail::Reader r(table("evaluation"), "evaluation");
        if (auto v = r.find("k")) {
            if (!v->is_array()) r.fail("k", "expected an array of integers");
            c.eval_k.clear();
            for (const auto& item : std::get<toml::Array>(v->data)) {
                if (!item.is_integer() || std::get<std::int64_t>(item.data) < 1)
                    r.fail("k", "expected an array of positive integers");
                c.eval_k.push_back(static_cast<std::size_t>(std::get<std::int64_t>(item.data)));
            }
        }
        r.choice("semsim", [&](const std::string& s) {
            if (s == "word-vectors") c.semsim = SemsimProvider::WordVectors;
            else if (s == "service") c.semsim = SemsimProvider::Service;
            else throw ContractError("expected word-vectors or service");
        });
        r.choice("wmd", [&](const std::string& s) {
            if (s == "exact") c.relaxed_wmd = false;
            else if (s == "relaxed") c.relaxed_wmd = true;
            else throw ContractError("expected exact or relaxed");
        });
        r.choice("smoothing", [&](const std::string& s) {
            if (s == "add-one") c.smoothing = metrics::BleuSmoothing::AddOneAll;
            else if (s == "add-one-higher") c.smoothing = metrics::BleuSmoothing::AddOneHigherOrders;
            else if (s == "none") c.smoothing = metrics::BleuSmoothing::None;
            else throw ContractError("expected add-one, add-one-higher or none");
        });
        r.reject_unknown();
    }
    for (const auto& [repo, value] : table("repo_lang")) {
        if (!value.is_string()) throw ParseError("[repo_lang] " + repo + ": expected a language name", value.line);
        try {
            c.repo_lang[repo] = language_from_string(std::get<std::string>(value.data));
        } catch (const std::exception& e) {
            throw ParseError("[repo_lang] " + repo + ": " + e.what(), value.line);
        }
    }
    return c;
}

inline Config parse_config(std::string_view text) { return from_document(toml::parse(text)); }

/// Relative paths in the file resolve against the file's directory.
inline Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config '" + path.string() + "'");
    Config c = from_document(toml::parse(in));
    const auto base = path.parent_path();
    for (auto* p : {&c.corpus, &c.index, &c.embeddings, &c.issues, &c.comments, &c.votes, &c.heldout, &c.out,
                    &c.fixtures}) {
        if (!p->empty() && p->is_relative()) *p = base / *p;
    }
    return c;
}

} // namespace clarifyd::config
