// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The clarifyd Authors

#pragma once

// Deterministic fixture builders shared by the unit and acceptance suites.

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "clarifyd/corpus.hpp"
#include "clarifyd/rerank.hpp"
#include "clarifyd/timestamp.hpp"

namespace fixtures {

using clarifyd::BugReport;
using Tokens = std::vector<std::string>;

inline clarifyd::Timestamp at(long long seconds) { return clarifyd::Timestamp{std::chrono::seconds{1600000000 + seconds}}; }

inline std::string join(const Tokens& t) {
    std::string s;
    for (const auto& w : t) {
        if (!s.empty()) s += ' ';
        s += w;
    }
    return s;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = std::filesystem::temp_directory_path() / ("clarifyd-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline BugReport make_entry(std::string id, std::string title, std::string description, std::string question,
                            std::string ca1, std::string ca2, std::string ca3) {
    BugReport r;
    r.id = std::move(id);
    r.repo = "acme/widget";
    r.title = std::move(title);
    r.description = std::move(description);
    r.question = std::move(question);
    r.answers = {std::move(ca1), std::move(ca2), std::move(ca3)};
    r.labels = {"bug"};
    r.author = "reporter";
    r.created_at = at(0);
    r.closed_at = at(3600);
    r.language = clarifyd::Language::Python;
    return r;
}

// ---------------------------------------------------------------------------
// Random corpora whose text survives preprocessing unchanged

/// Short lowercase words: the tokenizer keeps them and the lemmatizer leaves
/// words under four letters alone.
inline std::vector<std::string> short_vocabulary(std::size_t size) {
    static const std::string consonants = "bcdfghjklmnpqrtvwxz";
    static const std::string vowels = "aeiou";
    std::vector<std::string> out;
    for (char c1 : consonants) {
        for (char v : vowels) {
            for (char c2 : consonants) {
                if (out.size() == size) return out;
                out.push_back(std::string{c1, v, c2});
            }
        }
    }
    return out;
}

struct RandomEntry {
    BugReport report;
    Tokens title, description, question;
    std::array<Tokens, 3> answers;
};

inline Tokens random_tokens(std::mt19937& rng, const std::vector<std::string>& vocab, std::size_t min_len,
                            std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> len(min_len, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
    Tokens out(len(rng));
    for (auto& t : out) t = vocab[pick(rng)];
    return out;
}

inline std::vector<RandomEntry> random_corpus(std::mt19937& rng, std::size_t entries, std::size_t vocab_size) {
    const auto vocab = short_vocabulary(vocab_size);
    std::vector<RandomEntry> out;
    for (std::size_t e = 0; e < entries; ++e) {
        RandomEntry r;
        r.title = random_tokens(rng, vocab, 1, 6);
        r.description = random_tokens(rng, vocab, 0, 12);
        r.question = random_tokens(rng, vocab, 1, 6);
        for (auto& a : r.answers) a = random_tokens(rng, vocab, 1, 8);
        r.report = make_entry("r/e#" + std::to_string(e), join(r.title), join(r.description), join(r.question),
                              join(r.answers[0]), join(r.answers[1]), join(r.answers[2]));
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Planted retrieval suite

/// Pseudo-words built from open syllables: never lemmatized, never stop words.
inline std::vector<std::string> pseudo_words(std::mt19937& rng, std::size_t count) {
    static const std::array<std::string, 12> syllables{"ka", "zo", "mi", "ru", "pa", "lo", "vu", "ti",
                                                        "ne", "sa", "ho", "gu"};
    std::uniform_int_distribution<std::size_t> pick(0, syllables.size() - 1);
    std::vector<std::string> out;
    while (out.size() < count) {
        std::string w = syllables[pick(rng)] + syllables[pick(rng)] + syllables[pick(rng)];
        if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
    }
    return out;
}

struct PlantedQuery {
    BugReport report; ///< deficient report, gold answer attached
    std::string duplicate_id;
};

struct PlantedSuite {
    std::vector<BugReport> corpus;
    std::vector<PlantedQuery> queries;
    clarifyd::rerank::EmbeddingStore store;
};

/// 50 corpus entries: 40 background reports and 10 duplicates of the 10
/// query reports. A duplicate shares its query's rare symptom words (title,
/// description) and environment words (question). Its ca1, the gold answer,
/// talks about the environment; ca3 parrots the symptom words, which wins
/// on lexical relevance; ca2 is generic. Word vectors put every word group
/// on its own axis, so the question sits closest to the gold answer.
inline PlantedSuite make_planted_suite(std::uint32_t seed = 20261016) {
    std::mt19937 rng(seed);
    constexpr std::size_t kTopics = 10;
    constexpr std::size_t kBackground = 40;
    const auto words = pseudo_words(rng, kTopics * 8 + kBackground * 6);
    auto topic_symptoms = [&](std::size_t t) { return Tokens(words.begin() + t * 8, words.begin() + t * 8 + 4); };
    auto topic_env = [&](std::size_t t) { return Tokens(words.begin() + t * 8 + 4, words.begin() + t * 8 + 8); };
    auto background_words = [&](std::size_t b) {
        const auto base = words.begin() + kTopics * 8 + b * 6;
        return Tokens(base, base + 6);
    };

    const Tokens generic{"the",   "app",    "crash", "when",  "open",  "file",   "after", "update",
                         "error", "window", "show",  "blank", "start", "button", "click", "again"};
    const Tokens asking{"which", "are", "you", "using", "what", "version", "of"};
    const Tokens replies{"thanks", "report", "look", "into", "this", "soon", "we", "will"};

    std::uniform_int_distribution<std::size_t> gpick(0, generic.size() - 1);
    auto some_generic = [&](std::size_t n) {
        Tokens out;
        for (std::size_t i = 0; i < n; ++i) out.push_back(generic[gpick(rng)]);
        return out;
    };
    auto cat = [](Tokens a, const Tokens& b) {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };

    PlantedSuite suite;
    const std::string generic_reply = "thanks for the report we will look into this soon";
    for (std::size_t b = 0; b < kBackground; ++b) {
        const auto w = background_words(b);
        suite.corpus.push_back(make_entry(
            "acme/widget#" + std::to_string(1000 + b), join(cat({w[0], w[1]}, some_generic(3))),
            join(cat(cat({w[0], w[2]}, some_generic(6)), {w[3]})), "which " + w[4] + " " + w[5] + " are you using?",
            join(cat({w[4], w[5]}, some_generic(3))), generic_reply, join(cat({w[0], w[1], w[2]}, some_generic(2)))));
    }
    for (std::size_t t = 0; t < kTopics; ++t) {
        const auto s = topic_symptoms(t);
        const auto e = topic_env(t);
        const std::string question = "which " + e[0] + " " + e[1] + " are you using?";
        const std::string gold = "i am using " + e[0] + " " + e[1] + " with " + e[2] + " " + e[3];
        BugReport dup = make_entry("acme/widget#" + std::to_string(2000 + t), join(cat({s[0], s[1]}, some_generic(2))),
                                   join(cat(cat({s[0], s[2], s[3]}, some_generic(5)), {s[1]})), question, gold,
                                   generic_reply, join(cat({s[0], s[1], s[2], s[3]}, some_generic(2))));
        suite.corpus.push_back(dup);

        BugReport q;
        q.id = "acme/widget#" + std::to_string(3000 + t);
        q.repo = "acme/widget";
        q.title = join(cat({s[0], s[1]}, some_generic(2)));
        q.description = join(cat({s[2], s[3]}, some_generic(4)));
        q.question = question;
        q.labels = {"needs more info"};
        q.author = "someone";
        q.created_at = at(100000 + static_cast<long long>(t));
        q.language = clarifyd::Language::Python;
        q.gold = gold;
        suite.queries.push_back({q, dup.id});
    }
    // Interleave so duplicates are not clustered at the end.
    std::shuffle(suite.corpus.begin(), suite.corpus.end(), rng);

    // Axis per word group, with a little noise so vectors are distinct.
    const std::size_t groups = 3 + kTopics * 2 + kBackground;
    const std::size_t dim = groups;
    clarifyd::rerank::EmbeddingStore store(dim);
    std::normal_distribution<double> noise(0.0, 0.05);
    auto add_group = [&](const Tokens& group, std::size_t axis) {
        for (const auto& w : group) {
            if (store.contains(w)) continue;
            std::vector<double> v(dim);
            for (auto& x : v) x = noise(rng);
            v[axis] += 1.0;
            store.add(w, v);
        }
    };
    add_group(generic, 0);
    add_group(asking, 1);
    add_group(cat(replies, {"for", "i", "am", "with"}), 2);
    for (std::size_t t = 0; t < kTopics; ++t) {
        add_group(topic_symptoms(t), 3 + 2 * t);
        add_group(topic_env(t), 4 + 2 * t);
    }
    for (std::size_t b = 0; b < kBackground; ++b) add_group(background_words(b), 3 + 2 * kTopics + b);
    suite.store = std::move(store);
    return suite;
}

} // namespace fixtures
