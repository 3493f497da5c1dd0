// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The clarifyd Authors

#pragma once

// Reference implementations written independently of the library, used to
// check it. They favour obviousness over speed.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace oracle {

using Tokens = std::vector<std::string>;

// ---------------------------------------------------------------------------
// BM25 over raw token lists

struct Field {
    std::vector<Tokens> docs; // one per corpus entry
};

inline std::size_t doc_freq(const Field& field, const std::string& term) {
    std::size_t df = 0;
    for (const auto& d : field.docs) {
        if (std::find(d.begin(), d.end(), term) != d.end()) ++df;
    }
    return df;
}

inline double average_length(const Field& field) {
    double total = 0;
    for (const auto& d : field.docs) total += static_cast<double>(d.size());
    return total / static_cast<double>(field.docs.size());
}

/// Okapi BM25, k1 = 1.2, b = 0.75, idf = ln(1 + (N - df + 0.5) / (df + 0.5)),
/// summed over query term occurrences.
inline double bm25(const Tokens& query, const Field& field, std::size_t doc) {
    const double k1 = 1.2, b = 0.75;
    const Tokens& d = field.docs[doc];
    const double n = static_cast<double>(field.docs.size());
    const double avg = average_length(field);
    double score = 0.0;
    for (const auto& q : query) {
        const auto tf_count = std::count(d.begin(), d.end(), q);
        if (tf_count == 0) continue;
        const double tf = static_cast<double>(tf_count);
        const double df = static_cast<double>(doc_freq(field, q));
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        const double norm = k1 * (1.0 - b + b * static_cast<double>(d.size()) / avg);
        score += idf * tf * (k1 + 1.0) / (tf + norm);
    }
    return score;
}

/// Corpus components in the order t, d, q, t+d, t+d+q, then ca1..ca3.
struct RawCorpus {
    std::array<Field, 8> fields;
};

inline Tokens join(const Tokens& a, const Tokens& b) {
    Tokens out = a;
    for (const auto& t : b) out.push_back(t);
    return out;
}

/// The double loop of the relevance algorithm, spelled out: for every query
/// component i and corpus component j the answer's score grows by
/// L(B_i, C_j) + L(B_i, ca_k).
inline std::array<double, 3> relevance(const std::array<Tokens, 5>& query, const RawCorpus& corpus, std::size_t doc) {
    std::array<double, 3> s{0.0, 0.0, 0.0};
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            for (int k = 0; k < 3; ++k) {
                s[k] += bm25(query[i], corpus.fields[j], doc) + bm25(query[i], corpus.fields[5 + k], doc);
            }
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// BLEU by direct counting

inline std::string gram_at(const Tokens& t, std::size_t i, std::size_t n) {
    std::string g;
    for (std::size_t k = 0; k < n; ++k) g += t[i + k] + '\x1f';
    return g;
}

inline std::size_t occurrences(const Tokens& t, const std::string& gram, std::size_t n) {
    std::size_t c = 0;
    for (std::size_t i = 0; i + n <= t.size(); ++i) c += gram_at(t, i, n) == gram;
    return c;
}

/// Add-one smoothed sentence BLEU (all orders), uniform weights, x100.
inline double bleu(const Tokens& cand, const Tokens& ref, int max_n = 4) {
    if (cand.empty()) return 0.0;
    double log_p = 0.0;
    for (int n = 1; n <= max_n; ++n) {
        const auto un = static_cast<std::size_t>(n);
        std::size_t total = 0, clipped = 0;
        std::vector<std::string> done;
        for (std::size_t i = 0; i + un <= cand.size(); ++i) {
            ++total;
            const auto g = gram_at(cand, i, un);
            if (std::find(done.begin(), done.end(), g) != done.end()) continue;
            done.push_back(g);
            clipped += std::min(occurrences(cand, g, un), occurrences(ref, g, un));
        }
        log_p += std::log((clipped + 1.0) / (total + 1.0)) / max_n;
    }
    const double c = static_cast<double>(cand.size()), r = static_cast<double>(ref.size());
    const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
    return 100.0 * bp * std::exp(log_p);
}

// ---------------------------------------------------------------------------
// Word Mover's Distance by exhaustive assignment

/// Each side is expanded into L = lcm(|a|, |b|) equal units; the best
/// one-to-one assignment of units (dynamic programming over subsets) is the
/// optimal transport. Only for tiny bags.
inline double wmd(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
    const std::size_t L = std::lcm(a.size(), b.size());
    std::vector<std::size_t> ua, ub;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t r = 0; r < L / a.size(); ++r) ua.push_back(i);
    for (std::size_t j = 0; j < b.size(); ++j)
        for (std::size_t r = 0; r < L / b.size(); ++r) ub.push_back(j);
    auto dist = [&](std::size_t i, std::size_t j) {
        double s = 0.0;
        for (std::size_t k = 0; k < a[i].size(); ++k) s += (a[i][k] - b[j][k]) * (a[i][k] - b[j][k]);
        return std::sqrt(s);
    };
    const std::size_t states = std::size_t{1} << L;
    std::vector<double> best(states, std::numeric_limits<double>::infinity());
    best[0] = 0.0;
    for (std::size_t mask = 0; mask < states; ++mask) {
        if (best[mask] == std::numeric_limits<double>::infinity()) continue;
        const auto row = static_cast<std::size_t>(__builtin_popcountll(mask));
        if (row == L) continue;
        for (std::size_t col = 0; col < L; ++col) {
            if (mask & (std::size_t{1} << col)) continue;
            const auto next = mask | (std::size_t{1} << col);
            best[next] = std::min(best[next], best[mask] + dist(ua[row], ub[col]));
        }
    }
    return best[states - 1] / static_cast<double>(L);
}

// ---------------------------------------------------------------------------
// Degree of interest and tie-group ordering

/// Expected order: by similarity descending; inside a tie group (within
/// `tol` of the group's top similarity) by rank ascending.
struct Item {
    double sim;
    std::size_t rank;
};

inline bool respects_tie_order(const std::vector<Item>& out, double tol) {
    for (std::size_t i = 0; i + 1 < out.size(); ++i) {
        if (out[i].sim + 1e-15 < out[i + 1].sim - tol) return false;
    }
    std::size_t begin = 0;
    while (begin < out.size()) {
        std::size_t end = begin + 1;
        while (end < out.size() && out[begin].sim - out[end].sim <= tol) ++end;
        for (std::size_t i = begin; i + 1 < end; ++i) {
            if (out[i].rank > out[i + 1].rank) return false;
        }
        begin = end;
    }
    return true;
}

} // namespace oracle
