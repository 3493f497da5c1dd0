// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The clarifyd Authors

#pragma once

// Retrieval, re-ranking and context assembly for one deficient report.

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "clarifyd/corpus.hpp"
#include "clarifyd/error.hpp"
#include "clarifyd/genctx.hpp"
#include "clarifyd/rerank.hpp"
#include "clarifyd/retrieval.hpp"
#include "clarifyd/textprep.hpp"

namespace clarifyd::pipeline {

struct RecommenderOptions {
    std::size_t n = 10;
    double sim_tolerance = 1e-6;
    /// Off: keep the relevance order (the lexical-only baseline).
    bool use_rerank = true;
    retrieval::RankingOptions ranking;
};

class Recommender {
public:
    /// `store` may be null only when re-ranking is disabled.
    Recommender(const Corpus& corpus, const retrieval::FieldedIndex& index, const rerank::EmbeddingStore* store,
                RecommenderOptions options = {})
        : corpus_(&corpus), index_(&index), store_(store), options_(std::move(options)) {
        if (options_.use_rerank && !store_) throw ContractError("re-ranking needs word embeddings");
        if (!index_->same_entries(*corpus_)) throw ContractError("index was not built from this corpus");
    }

    const RecommenderOptions& options() const noexcept { return options_; }

    /// Top-N answers for `report`, re-ranked by similarity to its follow-up
    /// question (the title stands in when no question is present).
    std::vector<retrieval::RankedAnswer> recommend(const BugReport& report,
                                                   const std::optional<std::string>& exclude_id = std::nullopt) const {
        auto ranking = options_.ranking;
        if (exclude_id) ranking.exclude_id = exclude_id;
        auto list = retrieval::rank_candidates(retrieval::QueryBundle::from_report(report), *corpus_, *index_,
                                               options_.n, ranking);
        if (!options_.use_rerank) {
            for (auto& a : list) a.doi = rerank::doi(a.relevance_rank, list.size());
            return list;
        }
        const auto question = textprep::surface_tokens(report.question.value_or(report.title));
        return rerank::rerank(std::move(list), question, *store_, options_.sim_tolerance);
    }

    const BugReport& source_of(const retrieval::RankedAnswer& answer) const {
        if (auto* entry = corpus_->find(answer.entry_id)) return *entry;
        throw ContractError("answer from unknown entry '" + answer.entry_id + "'");
    }

    /// One context per answer, in list order.
    std::vector<genctx::Context> contexts(const BugReport& report, const std::vector<retrieval::RankedAnswer>& answers,
                                          genctx::ContextMode mode,
                                          std::size_t max_chars = genctx::kDefaultMaxChars) const {
        std::vector<genctx::Context> out;
        out.reserve(answers.size());
        for (const auto& a : answers) out.push_back(genctx::build_context(mode, report, a, source_of(a), max_chars));
        return out;
    }

private:
    const Corpus* corpus_;
    const retrieval::FieldedIndex* index_;
    const rerank::EmbeddingStore* store_;
    RecommenderOptions options_;
};

} // namespace clarifyd::pipeline
