// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The clarifyd Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "clarifyd/corpus.hpp"
#include "clarifyd/error.hpp"
#include "clarifyd/rerank.hpp"
#include "clarifyd/textprep.hpp"
#include "clarifyd/transport.hpp"

namespace clarifyd::metrics {

using Tokens = std::vector<std::string>;

// ---------------------------------------------------------------------------
// BLEU

enum class BleuSmoothing {
    AddOneAll,          ///< (matches + 1) / (total + 1) at every order
    AddOneHigherOrders, ///< as above for n > 1 only
    None,
};

struct BleuOptions {
    int max_n = 4;
    BleuSmoothing smoothing = BleuSmoothing::AddOneAll;
};

namespace detail {

inline std::map<std::vector<std::string_view>, std::size_t> ngram_counts(std::span<const std::string> tokens,
                                                                         std::size_t n) {
    std::map<std::vector<std::string_view>, std::size_t> counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::vector<std::string_view> gram;
        gram.reserve(n);
        for (std::size_t k = 0; k < n; ++k) gram.emplace_back(tokens[i + k]);
        ++counts[gram];
    }
    return counts;
}

} // namespace detail

/// Sentence BLEU in [0, 100] with uniform weights and the configured smoothing.
/// An empty candidate scores 0.
inline double bleu(std::span<const std::string> candidate, std::span<const std::string> reference,
                   const BleuOptions& options = {}) {
    if (options.max_n < 1) throw ContractError("bleu: max_n must be at least 1");
    if (candidate.empty()) return 0.0;
    const double weight = 1.0 / options.max_n;
    double log_sum = 0.0;
    for (int order = 1; order <= options.max_n; ++order) {
        const auto n = static_cast<std::size_t>(order);
        const auto cand = detail::ngram_counts(candidate, n);
        const auto ref = detail::ngram_counts(reference, n);
        std::size_t matches = 0;
        for (const auto& [gram, count] : cand) {
            auto it = ref.find(gram);
            if (it != ref.end()) matches += std::min(count, it->second);
        }
        const std::size_t total = candidate.size() >= n ? candidate.size() - n + 1 : 0;
        const bool add_one = options.smoothing == BleuSmoothing::AddOneAll ||
                             (options.smoothing == BleuSmoothing::AddOneHigherOrders && order > 1);
        double p = 0.0;
        if (add_one) {
            p = static_cast<double>(matches + 1) / static_cast<double>(total + 1);
        } else {
            if (matches == 0 || total == 0) return 0.0;
            p = static_cast<double>(matches) / static_cast<double>(total);
        }
        log_sum += weight * std::log(p);
    }
    const double c = static_cast<double>(candidate.size());
    const double r = static_cast<double>(reference.size());
    const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
    return 100.0 * bp * std::exp(log_sum);
}

// ---------------------------------------------------------------------------
// METEOR

struct MeteorOptions {
    double alpha = 0.9;
    double beta = 3.0;
    double gamma = 0.5;
    /// Second alignment stage matching on lemmas. Synonym matching is not
    /// available.
    bool stem_stage = true;
};

/// METEOR in [0, 1] from exact then stem alignment. 0 when either side is
/// empty or nothing aligns.
inline double meteor(std::span<const std::string> candidate, std::span<const std::string> reference,
                     const MeteorOptions& options = {}) {
    if (candidate.empty() || reference.empty()) return 0.0;
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> aligned(candidate.size(), kNone);
    std::vector<bool> used(reference.size(), false);

    auto align_stage = [&](auto&& same) {
        for (std::size_t i = 0; i < candidate.size(); ++i) {
            if (aligned[i] != kNone) continue;
            for (std::size_t j = 0; j < reference.size(); ++j) {
                if (!used[j] && same(i, j)) {
                    aligned[i] = j;
                    used[j] = true;
                    break;
                }
            }
        }
    };
    align_stage([&](std::size_t i, std::size_t j) { return candidate[i] == reference[j]; });
    if (options.stem_stage) {
        std::vector<std::string> cand_stem, ref_stem;
        for (const auto& t : candidate) cand_stem.push_back(textprep::lemmatize_token(t));
        for (const auto& t : reference) ref_stem.push_back(textprep::lemmatize_token(t));
        align_stage([&](std::size_t i, std::size_t j) { return cand_stem[i] == ref_stem[j]; });
    }

    std::size_t matches = 0;
    std::size_t chunks = 0;
    std::size_t prev_i = kNone, prev_j = kNone;
    for (std::size_t i = 0; i < candidate.size(); ++i) {
        if (aligned[i] == kNone) continue;
        ++matches;
        const bool continues = prev_i != kNone && i == prev_i + 1 && aligned[i] == prev_j + 1;
        if (!continues) ++chunks;
        prev_i = i;
        prev_j = aligned[i];
    }
    if (matches == 0) return 0.0;

    const double m = static_cast<double>(matches);
    const double precision = m / static_cast<double>(candidate.size());
    const double recall = m / static_cast<double>(reference.size());
    // The weighted harmonic mean of equal values is that value; taking it
    // directly keeps meteor(x, x) free of rounding in alpha.
    const double fmean = precision == recall
                             ? precision
                             : precision * recall / (options.alpha * precision + (1.0 - options.alpha) * recall);
    const double penalty = options.gamma * std::pow(static_cast<double>(chunks) / m, options.beta);
    return fmean * (1.0 - penalty);
}

// ---------------------------------------------------------------------------
// Word Mover's Distance

/// Raised when a document has no in-vocabulary token.
class UndefinedDistance : public Error {
public:
    using Error::Error;
};

namespace detail {

struct Bag {
    std::vector<std::string> words;
    std::vector<std::int64_t> counts;
    std::int64_t total = 0;
};

inline Bag in_vocab_bag(std::span<const std::string> tokens, const rerank::EmbeddingStore& store, const char* side) {
    Bag bag;
    std::unordered_map<std::string, std::size_t> at;
    for (const auto& t : tokens) {
        if (!store.contains(t)) continue;
        auto [it, fresh] = at.emplace(t, bag.words.size());
        if (fresh) {
            bag.words.push_back(t);
            bag.counts.push_back(0);
        }
        ++bag.counts[it->second];
        ++bag.total;
    }
    if (bag.total == 0) throw UndefinedDistance(std::string("wmd: ") + side + " has no in-vocabulary token");
    return bag;
}

inline std::vector<double> distance_matrix(const Bag& a, const Bag& b, const rerank::EmbeddingStore& store) {
    std::vector<double> cost(a.words.size() * b.words.size());
    for (std::size_t i = 0; i < a.words.size(); ++i) {
        const auto u = *store.lookup(a.words[i]);
        for (std::size_t j = 0; j < b.words.size(); ++j) {
            const auto v = *store.lookup(b.words[j]);
            double sq = 0.0;
            for (std::size_t k = 0; k < u.size(); ++k) sq += (u[k] - v[k]) * (u[k] - v[k]);
            cost[i * b.words.size() + j] = std::sqrt(sq);
        }
    }
    return cost;
}

} // namespace detail

/// Exact minimum transport cost between the normalized bags of words, with
/// Euclidean distance between word vectors as ground cost. OOV tokens are
/// ignored; throws UndefinedDistance when a side has none in vocabulary.
inline double wmd(std::span<const std::string> candidate, std::span<const std::string> reference,
                  const rerank::EmbeddingStore& store) {
    const auto a = detail::in_vocab_bag(candidate, store, "candidate");
    const auto b = detail::in_vocab_bag(reference, store, "reference");
    // Integer masses count_i * |b| and count_j * |a| keep the flow exact.
    std::vector<std::int64_t> supply, demand;
    for (auto c : a.counts) supply.push_back(c * b.total);
    for (auto c : b.counts) demand.push_back(c * a.total);
    const auto plan = transport::solve(supply, demand, detail::distance_matrix(a, b, store));
    return plan.cost / (static_cast<double>(a.total) * static_cast<double>(b.total));
}

/// Relaxed lower bound of `wmd`: each side moves all its mass to the nearest
/// word of the other; the larger of the two relaxations.
inline double wmd_relaxed(std::span<const std::string> candidate, std::span<const std::string> reference,
                          const rerank::EmbeddingStore& store) {
    const auto a = detail::in_vocab_bag(candidate, store, "candidate");
    const auto b = detail::in_vocab_bag(reference, store, "reference");
    const auto cost = detail::distance_matrix(a, b, store);
    const std::size_t m = b.words.size();
    double rows = 0.0, cols = 0.0;
    for (std::size_t i = 0; i < a.words.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m; ++j) best = std::min(best, cost[i * m + j]);
        rows += best * static_cast<double>(a.counts[i]) / static_cast<double>(a.total);
    }
    for (std::size_t j = 0; j < m; ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < a.words.size(); ++i) best = std::min(best, cost[i * m + j]);
        cols += best * static_cast<double>(b.counts[j]) / static_cast<double>(b.total);
    }
    return std::max(rows, cols);
}

// ---------------------------------------------------------------------------
// Semantic similarity

/// Produces one fixed-length vector per text.
class SentenceEmbedder {
public:
    virtual ~SentenceEmbedder() = default;
    virtual std::vector<rerank::Vector> embed(const std::vector<std::string>& texts) = 0;
    virtual std::string identity() const = 0;
};

/// Mean-pooled word vectors over the cleaned surface tokens.
class WordVectorEmbedder final : public SentenceEmbedder {
public:
    explicit WordVectorEmbedder(const rerank::EmbeddingStore& store) : store_(&store) {}

    std::vector<rerank::Vector> embed(const std::vector<std::string>& texts) override {
        std::vector<rerank::Vector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(rerank::embed_text(textprep::surface_tokens(t), *store_));
        return out;
    }

    std::string identity() const override { return "word-vectors(mean,d=" + std::to_string(store_->dim()) + ")"; }

private:
    const rerank::EmbeddingStore* store_;
};

/// 100 * cosine of the two sentence embeddings.
inline double semsim(const std::string& candidate, const std::string& reference, SentenceEmbedder& embedder) {
    const auto vectors = embedder.embed({candidate, reference});
    if (vectors.size() != 2) throw Error("semsim: embedder returned " + std::to_string(vectors.size()) + " vectors");
    return 100.0 * rerank::cosine(vectors[0], vectors[1]);
}

// ---------------------------------------------------------------------------
// Top-K evaluation

struct MetricRow {
    std::string query_id;
    std::size_t k = 1;
    double bleu = 0.0;
    double meteor = 0.0;
    std::optional<double> semsim;
    /// Lower is better; absent when undefined for every candidate.
    std::optional<double> wmd;
};

/// Metric configuration for an evaluation run; optional pieces disable the
/// corresponding column.
struct Evaluator {
    BleuOptions bleu_options;
    MeteorOptions meteor_options;
    const rerank::EmbeddingStore* wmd_store = nullptr;
    SentenceEmbedder* embedder = nullptr;
    bool relaxed_wmd = false;
};

/// Best value among the first K generated answers for each metric (max for
/// BLEU, METEOR and SemSim; min for WMD).
inline MetricRow evaluate_topk(const std::string& query_id, const std::vector<std::string>& generated,
                               const std::string& gold, std::size_t k, const Evaluator& evaluator) {
    if (k < 1) throw ContractError("evaluate_topk: K must be at least 1");
    if (generated.size() < k)
        throw ContractError("evaluate_topk: " + std::to_string(generated.size()) + " answers for K=" +
                            std::to_string(k));
    MetricRow row;
    row.query_id = query_id;
    row.k = k;
    const auto gold_tokens = textprep::surface_tokens(gold);
    for (std::size_t i = 0; i < k; ++i) {
        const auto tokens = textprep::surface_tokens(generated[i]);
        row.bleu = std::max(row.bleu, bleu(tokens, gold_tokens, evaluator.bleu_options));
        row.meteor = std::max(row.meteor, meteor(tokens, gold_tokens, evaluator.meteor_options));
        if (evaluator.embedder) {
            const double s = semsim(generated[i], gold, *evaluator.embedder);
            row.semsim = row.semsim ? std::max(*row.semsim, s) : s;
        }
        if (evaluator.wmd_store) {
            try {
                const double d = evaluator.relaxed_wmd ? wmd_relaxed(tokens, gold_tokens, *evaluator.wmd_store)
                                                       : wmd(tokens, gold_tokens, *evaluator.wmd_store);
                row.wmd = row.wmd ? std::min(*row.wmd, d) : d;
            } catch (const UndefinedDistance&) {
            }
        }
    }
    return row;
}

// ---------------------------------------------------------------------------
// Reports

struct AggregateRow {
    Language language = Language::Other;
    std::size_t k = 1;
    std::size_t count = 0;
    double bleu = 0.0;
    double meteor = 0.0;
    std::optional<double> semsim;
    std::optional<double> wmd;
};

struct EvaluationReport {
    struct Row {
        MetricRow metrics;
        Language language = Language::Other;
    };

    std::vector<Row> rows;
    std::string semsim_provider;
    std::string backend;
    std::size_t skipped_without_gold = 0;

    /// Means per (language, K), languages in enum order. Optional columns
    /// average only the rows where they are defined.
    std::vector<AggregateRow> aggregates() const {
        struct Acc {
            std::size_t n = 0, n_sem = 0, n_wmd = 0;
            double bleu = 0, meteor = 0, sem = 0, wmd = 0;
        };
        std::map<std::pair<int, std::size_t>, Acc> acc;
        for (const auto& r : rows) {
            auto& a = acc[{static_cast<int>(r.language), r.metrics.k}];
            ++a.n;
            a.bleu += r.metrics.bleu;
            a.meteor += r.metrics.meteor;
            if (r.metrics.semsim) {
                ++a.n_sem;
                a.sem += *r.metrics.semsim;
            }
            if (r.metrics.wmd) {
                ++a.n_wmd;
                a.wmd += *r.metrics.wmd;
            }
        }
        std::vector<AggregateRow> out;
        for (const auto& [key, a] : acc) {
            AggregateRow row;
            row.language = static_cast<Language>(key.first);
            row.k = key.second;
            row.count = a.n;
            row.bleu = a.bleu / static_cast<double>(a.n);
            row.meteor = a.meteor / static_cast<double>(a.n);
            if (a.n_sem) row.semsim = a.sem / static_cast<double>(a.n_sem);
            if (a.n_wmd) row.wmd = a.wmd / static_cast<double>(a.n_wmd);
            out.push_back(row);
        }
        return out;
    }

    void write_csv(std::ostream& out) const {
        auto opt = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string(); };
        out << "query_id,lang,k,bleu,meteor,semsim,wmd\n";
        for (const auto& r : rows) {
            out << r.metrics.query_id << ',' << to_string(r.language) << ',' << r.metrics.k << ','
                << std::to_string(r.metrics.bleu) << ',' << std::to_string(r.metrics.meteor) << ','
                << opt(r.metrics.semsim) << ',' << opt(r.metrics.wmd) << '\n';
        }
    }

    nlohmann::json to_json() const {
        using nlohmann::json;
        auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
        json j;
        j["semsim_provider"] = semsim_provider;
        j["backend"] = backend;
        j["meteor_stages"] = {"exact", "stem"};
        j["wmd_lower_is_better"] = true;
        j["skipped_without_gold"] = skipped_without_gold;
        j["rows"] = json::array();
        for (const auto& r : rows) {
            j["rows"].push_back({{"query_id", r.metrics.query_id},
                                 {"lang", to_string(r.language)},
                                 {"k", r.metrics.k},
                                 {"bleu", r.metrics.bleu},
                                 {"meteor", r.metrics.meteor},
                                 {"semsim", opt(r.metrics.semsim)},
                                 {"wmd", opt(r.metrics.wmd)}});
        }
        j["aggregates"] = json::array();
        for (const auto& a : aggregates()) {
            j["aggregates"].push_back({{"lang", to_string(a.language)},
                                       {"k", a.k},
                                       {"count", a.count},
                                       {"bleu", a.bleu},
                                       {"meteor", a.meteor},
                                       {"semsim", opt(a.semsim)},
                                       {"wmd", opt(a.wmd)}});
        }
        return j;
    }
};

} // namespace clarifyd::metrics
