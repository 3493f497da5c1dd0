// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The clarifyd Authors

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "clarifyd/corpus.hpp"
#include "clarifyd/error.hpp"
#include "clarifyd/textprep.hpp"

namespace clarifyd::retrieval {

/// The scored fields of a corpus entry: five report components followed by
/// the three candidate answers.
enum class Field : std::uint8_t {
    Title = 0,
    Description,
    Question,
    TitleDescription,
    TitleDescriptionQuestion,
    Answer1,
    Answer2,
    Answer3,
};

inline constexpr std::size_t kFieldCount = 8;
inline constexpr std::size_t kComponentCount = 5;

inline constexpr std::array<Field, kComponentCount> kReportFields{
    Field::Title, Field::Description, Field::Question, Field::TitleDescription, Field::TitleDescriptionQuestion};

inline constexpr Field answer_field(AnswerSlot slot) {
    return static_cast<Field>(static_cast<std::uint8_t>(Field::Answer1) + static_cast<std::uint8_t>(slot));
}

inline constexpr std::size_t index_of(Field f) { return static_cast<std::size_t>(f); }

inline std::string_view field_name(Field f) {
    static constexpr std::array<std::string_view, kFieldCount> kNames{"t", "d", "q", "t+d", "t+d+q", "ca1", "ca2", "ca3"};
    return kNames[index_of(f)];
}

inline std::optional<Field> field_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kFieldCount; ++i) {
        const auto f = static_cast<Field>(i);
        if (field_name(f) == name) return f;
    }
    return std::nullopt;
}

using Tokens = std::vector<std::string>;

namespace detail {

inline Tokens concat(const Tokens& a, const Tokens& b) {
    Tokens out(a);
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

inline std::array<Tokens, kComponentCount> components(Tokens title, Tokens description, Tokens question) {
    Tokens td = concat(title, description);
    Tokens tdq = concat(td, question);
    return {std::move(title), std::move(description), std::move(question), std::move(td), std::move(tdq)};
}

} // namespace detail

/// Query side: [t, d, q, t+d, t+d+q] of the report being answered.
struct QueryBundle {
    std::array<Tokens, kComponentCount> parts;

    static QueryBundle from_tokens(Tokens title, Tokens description, Tokens question) {
        return {detail::components(std::move(title), std::move(description), std::move(question))};
    }

    /// Preprocesses the report; an absent question contributes no tokens.
    static QueryBundle from_report(const BugReport& report) {
        return from_tokens(textprep::preprocess(report.title), textprep::preprocess(report.description),
                           textprep::preprocess(report.question.value_or("")));
    }

    const Tokens& operator[](std::size_t i) const { return parts[i]; }
};

/// Preprocessed token streams of all eight fields of a corpus entry.
inline std::array<Tokens, kFieldCount> entry_fields(const BugReport& report) {
    auto comps = detail::components(textprep::preprocess(report.title), textprep::preprocess(report.description),
                                    textprep::preprocess(report.question.value_or("")));
    std::array<Tokens, kFieldCount> out;
    for (std::size_t i = 0; i < kComponentCount; ++i) out[i] = std::move(comps[i]);
    for (const auto slot : kAnswerSlots)
        out[index_of(answer_field(slot))] = textprep::preprocess(report.answer(slot).value_or(""));
    return out;
}

// ---------------------------------------------------------------------------
// Similarity strategies

class Similarity {
public:
    virtual ~Similarity() = default;

    /// Contribution of one query term occurrence matching a field with
    /// `tf` occurrences of length `length`.
    virtual double term_score(double tf, double length, double avg_length, std::size_t doc_freq,
                              std::size_t doc_count) const = 0;
    virtual std::string name() const = 0;
};

/// Okapi BM25 with Lucene's defaults and IDF form.
class Bm25Similarity final : public Similarity {
public:
    explicit Bm25Similarity(double k1 = 1.2, double b = 0.75) : k1_(k1), b_(b) {}

    static double idf(std::size_t doc_freq, std::size_t doc_count) {
        const double n = static_cast<double>(doc_count);
        const double df = static_cast<double>(doc_freq);
        return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    }

    double term_score(double tf, double length, double avg_length, std::size_t doc_freq,
                      std::size_t doc_count) const override {
        const double norm = k1_ * (1.0 - b_ + b_ * length / avg_length);
        return idf(doc_freq, doc_count) * tf * (k1_ + 1.0) / (tf + norm);
    }

    std::string name() const override { return "bm25"; }

    double k1() const noexcept { return k1_; }
    double b() const noexcept { return b_; }

private:
    double k1_;
    double b_;
};

/// Lucene's classic TF-IDF (`ClassicSimilarity`) without query norms.
class ClassicSimilarity final : public Similarity {
public:
    double term_score(double tf, double length, double, std::size_t doc_freq, std::size_t doc_count) const override {
        const double idf = 1.0 + std::log(static_cast<double>(doc_count + 1) / static_cast<double>(doc_freq + 1));
        return std::sqrt(tf) * idf * idf / std::sqrt(length);
    }

    std::string name() const override { return "tfidf"; }
};

inline std::shared_ptr<const Similarity> make_similarity(std::string_view name) {
    if (name == "bm25") return std::make_shared<Bm25Similarity>();
    if (name == "tfidf") return std::make_shared<ClassicSimilarity>();
    throw ContractError("unknown scorer '" + std::string(name) + "' (expected bm25 or tfidf)");
}

// ---------------------------------------------------------------------------
// Index

struct Posting {
    std::uint32_t entry;
    Field field;
    std::uint32_t tf;

    bool operator==(const Posting&) const = default;
};

struct FieldStats {
    std::size_t doc_count = 0;
    std::uint64_t total_length = 0;
    std::unordered_map<std::string, std::size_t> doc_freq;

    double avg_length() const {
        return doc_count == 0 ? 0.0 : static_cast<double>(total_length) / static_cast<double>(doc_count);
    }

    std::size_t df(const std::string& term) const {
        auto it = doc_freq.find(term);
        return it == doc_freq.end() ? 0 : it->second;
    }
};

class FieldedIndex {
public:
    FieldedIndex() = default;

    static FieldedIndex build(const Corpus& corpus) { return build(corpus.entries()); }

    static FieldedIndex build(std::span<const BugReport> reports) {
        FieldedIndex index;
        std::unordered_set<std::string> seen;
        for (const auto& r : reports) {
            if (!seen.insert(r.id).second) throw Error("duplicate entry id '" + r.id + "' in index input");
            index.add(r.id, entry_fields(r));
        }
        return index;
    }

    std::size_t size() const noexcept { return ids_.size(); }
    const std::string& entry_id(std::size_t entry) const { return ids_.at(entry); }
    const FieldStats& stats(Field f) const { return stats_[index_of(f)]; }

    std::uint32_t field_length(std::size_t entry, Field f) const { return docs_.at(entry)[index_of(f)].length; }

    std::uint32_t term_frequency(std::size_t entry, Field f, const std::string& term) const {
        const auto& tf = docs_.at(entry)[index_of(f)].tf;
        auto it = tf.find(term);
        return it == tf.end() ? 0 : it->second;
    }

    /// Postings of `term` ordered by (entry, field); empty when unseen.
    std::span<const Posting> postings(const std::string& term) const {
        auto it = postings_.find(term);
        if (it == postings_.end()) return {};
        return it->second;
    }

    std::size_t posting_count() const {
        std::size_t n = 0;
        for (const auto& [term, list] : postings_) n += list.size();
        return n;
    }

    /// Relevance of `query` against one field of one entry; 0 when no query
    /// term occurs there. Repeated query terms contribute once per occurrence.
    double lucene_score(std::span<const std::string> query, std::size_t entry, Field field,
                        const Similarity& similarity) const {
        if (index_of(field) >= kFieldCount) throw ContractError("unknown field");
        if (entry >= ids_.size()) throw ContractError("entry out of range");
        const auto& doc = docs_[entry][index_of(field)];
        const auto& st = stats_[index_of(field)];
        const double avg = st.avg_length();
        double score = 0.0;
        for (const auto& term : query) {
            auto it = doc.tf.find(term);
            if (it == doc.tf.end()) continue;
            score += similarity.term_score(static_cast<double>(it->second), static_cast<double>(doc.length), avg,
                                           st.df(term), st.doc_count);
        }
        return score;
    }

    /// Serializable dump: entries, per-field statistics and postings. Fully
    /// determined by the corpus, so rebuilding yields byte-identical output.
    nlohmann::json snapshot() const {
        using nlohmann::json;
        json j;
        j["format"] = "clarifyd-index";
        j["version"] = 1;
        j["entries"] = ids_;
        json lengths = json::array();
        for (const auto& doc : docs_) {
            json row = json::array();
            for (const auto& f : doc) row.push_back(f.length);
            lengths.push_back(std::move(row));
        }
        j["lengths"] = std::move(lengths);
        json fields = json::array();
        for (std::size_t i = 0; i < kFieldCount; ++i) {
            fields.push_back({{"name", field_name(static_cast<Field>(i))},
                              {"doc_count", stats_[i].doc_count},
                              {"total_length", stats_[i].total_length}});
        }
        j["fields"] = std::move(fields);
        json postings = json::object();
        for (const auto& [term, list] : postings_) {
            json arr = json::array();
            for (const auto& p : list) arr.push_back({p.entry, index_of(p.field), p.tf});
            postings[term] = std::move(arr);
        }
        j["postings"] = std::move(postings);
        return j;
    }

    static FieldedIndex from_snapshot(const nlohmann::json& j) {
        if (j.value("format", std::string{}) != "clarifyd-index" || j.value("version", 0) != 1)
            throw Error("not a clarifyd index snapshot (version 1)");
        FieldedIndex index;
        index.ids_ = j.at("entries").get<std::vector<std::string>>();
        const auto& lengths = j.at("lengths");
        if (lengths.size() != index.ids_.size()) throw Error("index snapshot: entry/length count mismatch");
        index.docs_.resize(index.ids_.size());
        for (std::size_t e = 0; e < index.ids_.size(); ++e) {
            if (lengths[e].size() != kFieldCount) throw Error("index snapshot: bad length row");
            for (std::size_t f = 0; f < kFieldCount; ++f) index.docs_[e][f].length = lengths[e][f].get<std::uint32_t>();
        }
        const auto& fields = j.at("fields");
        if (fields.size() != kFieldCount) throw Error("index snapshot: bad field table");
        for (std::size_t f = 0; f < kFieldCount; ++f) {
            index.stats_[f].doc_count = fields[f].at("doc_count").get<std::size_t>();
            index.stats_[f].total_length = fields[f].at("total_length").get<std::uint64_t>();
        }
        for (const auto& [term, arr] : j.at("postings").items()) {
            auto& list = index.postings_[term];
            for (const auto& p : arr) {
                const auto entry = p.at(0).get<std::uint32_t>();
                const auto field = p.at(1).get<std::size_t>();
                const auto tf = p.at(2).get<std::uint32_t>();
                if (entry >= index.ids_.size() || field >= kFieldCount || tf == 0)
                    throw Error("index snapshot: bad posting for '" + term + "'");
                list.push_back({entry, static_cast<Field>(field), tf});
                index.docs_[entry][field].tf[term] = tf;
                ++index.stats_[field].doc_freq[term];
            }
        }
        return index;
    }

    bool same_entries(const Corpus& corpus) const {
        if (corpus.size() != ids_.size()) return false;
        for (std::size_t i = 0; i < ids_.size(); ++i) {
            if (corpus[i].id != ids_[i]) return false;
        }
        return true;
    }

private:
    struct FieldDoc {
        std::unordered_map<std::string, std::uint32_t> tf;
        std::uint32_t length = 0;
    };

    void add(const std::string& id, const std::array<Tokens, kFieldCount>& fields) {
        const auto entry = static_cast<std::uint32_t>(ids_.size());
        ids_.push_back(id);
        auto& doc = docs_.emplace_back();
        for (std::size_t f = 0; f < kFieldCount; ++f) {
            auto& fd = doc[f];
            fd.length = static_cast<std::uint32_t>(fields[f].size());
            for (const auto& t : fields[f]) ++fd.tf[t];
            auto& st = stats_[f];
            ++st.doc_count;
            st.total_length += fd.length;
            // Sorted so postings order does not depend on hash iteration.
            std::map<std::string, std::uint32_t> ordered(fd.tf.begin(), fd.tf.end());
            for (const auto& [term, tf] : ordered) {
                ++st.doc_freq[term];
                postings_[term].push_back({entry, static_cast<Field>(f), tf});
            }
        }
    }

    std::vector<std::string> ids_;
    std::vector<std::array<FieldDoc, kFieldCount>> docs_;
    std::array<FieldStats, kFieldCount> stats_;
    std::map<std::string, std::vector<Posting>> postings_;
};

// ---------------------------------------------------------------------------
// Relevance aggregation

enum class Aggregation {
    /// Verbatim double loop: every (query component, corpus component) pair
    /// adds the shared score plus the answer-field score.
    Algorithm1,
    /// Shared part once, answer field once per query component.
    Normalized,
    /// Pairs drawn from (t, d, t+d, t+d+q). Experimental.
    PairwiseCombinations,
};

inline Aggregation aggregation_from_string(std::string_view s) {
    if (s == "algorithm1") return Aggregation::Algorithm1;
    if (s == "normalized") return Aggregation::Normalized;
    if (s == "pairwise") return Aggregation::PairwiseCombinations;
    throw ContractError("unknown aggregation '" + std::string(s) + "'");
}

struct RelevanceResult {
    std::array<double, 3> scores{};

    double operator[](AnswerSlot slot) const { return scores[static_cast<std::size_t>(slot)]; }
    bool operator==(const RelevanceResult&) const = default;
};

inline RelevanceResult relevance_scores(const QueryBundle& bundle, const FieldedIndex& index, std::size_t entry,
                                        const Similarity& similarity,
                                        Aggregation aggregation = Aggregation::Algorithm1) {
    RelevanceResult out;
    auto score = [&](std::size_t i, Field f) { return index.lucene_score(bundle[i], entry, f, similarity); };

    switch (aggregation) {
    case Aggregation::Algorithm1:
        for (std::size_t i = 0; i < kComponentCount; ++i) {
            std::array<double, 3> answer{};
            for (const auto slot : kAnswerSlots) answer[static_cast<std::size_t>(slot)] = score(i, answer_field(slot));
            for (std::size_t j = 0; j < kComponentCount; ++j) {
                const double common = score(i, kReportFields[j]);
                for (std::size_t k = 0; k < 3; ++k) out.scores[k] += common + answer[k];
            }
        }
        break;
    case Aggregation::Normalized: {
        double common = 0.0;
        std::array<double, 3> answer{};
        for (std::size_t i = 0; i < kComponentCount; ++i) {
            for (std::size_t j = 0; j < kComponentCount; ++j) common += score(i, kReportFields[j]);
            for (const auto slot : kAnswerSlots) answer[static_cast<std::size_t>(slot)] += score(i, answer_field(slot));
        }
        for (std::size_t k = 0; k < 3; ++k) out.scores[k] = common + answer[k];
        break;
    }
    case Aggregation::PairwiseCombinations: {
        static constexpr std::array<std::size_t, 4> kSubset{0, 1, 3, 4};
        double common = 0.0;
        std::array<double, 3> answer{};
        for (std::size_t a = 0; a < kSubset.size(); ++a) {
            for (std::size_t b = a + 1; b < kSubset.size(); ++b) {
                common += score(kSubset[a], kReportFields[kSubset[b]]) + score(kSubset[b], kReportFields[kSubset[a]]);
            }
            for (const auto slot : kAnswerSlots)
                answer[static_cast<std::size_t>(slot)] += score(kSubset[a], answer_field(slot));
        }
        for (std::size_t k = 0; k < 3; ++k) out.scores[k] = common + answer[k];
        break;
    }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ranking

/// A candidate answer travelling through ranking, re-ranking and generation.
struct RankedAnswer {
    std::string entry_id;
    AnswerSlot slot = AnswerSlot::Ca1;
    std::string text;
    double relevance_score = 0.0;
    std::size_t relevance_rank = 0; ///< 1-based position after relevance sort
    double embed_sim = 0.0;
    double doi = 0.0;

    bool operator==(const RankedAnswer&) const = default;
};

struct RankingOptions {
    std::shared_ptr<const Similarity> similarity = std::make_shared<Bm25Similarity>();
    Aggregation aggregation = Aggregation::Algorithm1;
    /// Entry left out of the candidate pool (leave-one-out evaluation).
    std::optional<std::string> exclude_id;
};

/// Sorts every candidate answer by relevance (ties by entry id, then slot)
/// and keeps the first `n`, numbering them 1..n.
inline std::vector<RankedAnswer> rank_candidates(const QueryBundle& bundle, const Corpus& corpus,
                                                 const FieldedIndex& index, std::size_t n,
                                                 const RankingOptions& options = {}) {
    if (n < 1) throw ContractError("N must be at least 1");
    if (!index.same_entries(corpus)) throw ContractError("index was not built from this corpus");
    static const Bm25Similarity kDefault;
    const Similarity& similarity = options.similarity ? *options.similarity : static_cast<const Similarity&>(kDefault);

    std::vector<RankedAnswer> all;
    all.reserve(corpus.size() * 3);
    for (std::size_t e = 0; e < corpus.size(); ++e) {
        const BugReport& entry = corpus[e];
        if (options.exclude_id && entry.id == *options.exclude_id) continue;
        const RelevanceResult rel = relevance_scores(bundle, index, e, similarity, options.aggregation);
        for (const auto slot : kAnswerSlots) {
            RankedAnswer a;
            a.entry_id = entry.id;
            a.slot = slot;
            a.text = *entry.answer(slot);
            a.relevance_score = rel[slot];
            all.push_back(std::move(a));
        }
    }
    std::sort(all.begin(), all.end(), [](const RankedAnswer& x, const RankedAnswer& y) {
        if (x.relevance_score != y.relevance_score) return x.relevance_score > y.relevance_score;
        if (x.entry_id != y.entry_id) return x.entry_id < y.entry_id;
        return x.slot < y.slot;
    });
    if (all.size() > n) all.resize(n);
    for (std::size_t i = 0; i < all.size(); ++i) all[i].relevance_rank = i + 1;
    return all;
}

} // namespace clarifyd::retrieval
