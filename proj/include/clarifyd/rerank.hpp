// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The clarifyd Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "clarifyd/error.hpp"
#include "clarifyd/retrieval.hpp"
#include "clarifyd/textprep.hpp"

namespace clarifyd::rerank {

using Vector = std::vector<double>;

/// Word vectors of a fixed dimension, keyed by token.
class EmbeddingStore {
public:
    EmbeddingStore() = default;
    explicit EmbeddingStore(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return tokens_.size(); }
    bool contains(const std::string& token) const { return index_.count(token) != 0; }

    /// Throws Error when `values` has the wrong arity or the token exists.
    void add(std::string token, std::span<const double> values) {
        if (values.size() != dim_)
            throw Error("vector for '" + token + "' has " + std::to_string(values.size()) + " values, expected " +
                        std::to_string(dim_));
        if (!index_.emplace(token, tokens_.size()).second) throw Error("duplicate token '" + token + "'");
        tokens_.push_back(std::move(token));
        data_.insert(data_.end(), values.begin(), values.end());
    }

    std::optional<std::span<const double>> lookup(const std::string& token) const {
        auto it = index_.find(token);
        if (it == index_.end()) return std::nullopt;
        return std::span<const double>(data_).subspan(it->second * dim_, dim_);
    }

    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

private:
    std::size_t dim_ = 0;
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<double> data_;
};

/// Reads the word2vec text format: a `V d` header, then V rows of a token
/// followed by d numbers. Row numbers in errors are 1-based file lines.
inline EmbeddingStore load_embeddings(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::size_t vocab = 0;
    std::size_t dim = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!textprep::detail::trim(line).empty()) break;
    }
    {
        std::istringstream header(line);
        std::string extra;
        if (!(header >> vocab >> dim) || (header >> extra) || dim == 0)
            throw ParseError("expected header 'V d' with d > 0", line_no);
    }
    EmbeddingStore store(dim);
    std::vector<double> values;
    values.reserve(dim);
    while (std::getline(in, line)) {
        ++line_no;
        if (textprep::detail::trim(line).empty()) continue;
        std::istringstream row(line);
        std::string token;
        row >> token;
        values.clear();
        std::string field;
        while (row >> field) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(field, &used));
                if (used != field.size()) throw std::invalid_argument(field);
            } catch (const std::exception&) {
                throw ParseError("non-numeric value '" + field + "'", line_no);
            }
        }
        if (values.size() != dim)
            throw ParseError("row for '" + token + "' has " + std::to_string(values.size()) + " values, expected " +
                                 std::to_string(dim),
                             line_no);
        if (store.contains(token)) throw ParseError("duplicate token '" + token + "'", line_no);
        store.add(token, values);
    }
    if (store.size() != vocab)
        throw ParseError("header declares " + std::to_string(vocab) + " vectors, found " + std::to_string(store.size()),
                         0);
    return store;
}

inline EmbeddingStore load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open embeddings '" + path.string() + "'");
    return load_embeddings(in);
}

/// Mean of the in-vocabulary token vectors; zero vector when none match.
inline Vector embed_text(std::span<const std::string> tokens, const EmbeddingStore& store) {
    Vector out(store.dim(), 0.0);
    std::size_t hits = 0;
    for (const auto& t : tokens) {
        auto v = store.lookup(t);
        if (!v) continue;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += (*v)[i];
        ++hits;
    }
    if (hits > 0) {
        for (auto& x : out) x /= static_cast<double>(hits);
    }
    return out;
}

/// Cosine similarity in [-1, 1]; 0 when either vector has zero norm.
inline double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw ContractError("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                            std::to_string(v.size()) + ")");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return std::clamp(dot / std::sqrt(nu * nv), -1.0, 1.0);
}

/// Degree of interest I/N of the answer at relevance position I out of N.
inline double doi(std::size_t rank, std::size_t n) {
    if (n < 1 || rank < 1 || rank > n)
        throw ContractError("doi: rank " + std::to_string(rank) + " outside 1.." + std::to_string(n));
    return static_cast<double>(rank) / static_cast<double>(n);
}

/// Orders answers by `embed_sim` descending. Answers within `sim_tolerance`
/// of their group's highest similarity form a tie group ordered by DOI
/// ascending, so the better relevance rank wins.
inline void order_by_similarity(std::vector<retrieval::RankedAnswer>& list, double sim_tolerance) {
    std::stable_sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.embed_sim > b.embed_sim; });
    auto group_begin = list.begin();
    while (group_begin != list.end()) {
        const double top = group_begin->embed_sim;
        auto group_end = std::find_if(group_begin, list.end(),
                                      [&](const auto& a) { return top - a.embed_sim > sim_tolerance; });
        std::stable_sort(group_begin, group_end, [](const auto& a, const auto& b) { return a.doi < b.doi; });
        group_begin = group_end;
    }
}

/// Scores every answer against the question by embedding cosine, fills in
/// DOI from the relevance ranks (N = list size) and re-orders.
inline std::vector<retrieval::RankedAnswer> rerank(std::vector<retrieval::RankedAnswer> list,
                                                   std::span<const std::string> question_tokens,
                                                   const EmbeddingStore& store, double sim_tolerance = 1e-6) {
    if (list.empty()) return list;
    const Vector q = embed_text(question_tokens, store);
    const std::size_t n = list.size();
    for (auto& a : list) {
        const auto tokens = textprep::surface_tokens(a.text);
        a.embed_sim = cosine(q, embed_text(tokens, store));
        a.doi = doi(a.relevance_rank, n);
    }
    order_by_similarity(list, sim_tolerance);
    return list;
}

} // namespace clarifyd::rerank
