// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The clarifyd Authors

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "clarifyd/rerank.hpp"
#include "oracles.hpp"

using namespace clarifyd;
using namespace clarifyd::rerank;
using retrieval::RankedAnswer;
using Catch::Matchers::WithinAbs;

namespace {

EmbeddingStore parse(const std::string& text) {
    std::istringstream in(text);
    return load_embeddings(in);
}

RankedAnswer answer(std::string text, std::size_t rank, double sim = 0.0) {
    RankedAnswer a;
    a.entry_id = "o/r#" + std::to_string(rank);
    a.text = std::move(text);
    a.relevance_rank = rank;
    a.embed_sim = sim;
    return a;
}

} // namespace

TEST_CASE("word2vec text format loads", "[rerank]") {
    const auto store = parse("3 4\nfoo 1 0 0 0\nbar 0 1 0 0\nbaz 0.5 -0.5 1e-3 2\n");
    CHECK(store.size() == 3);
    CHECK(store.dim() == 4);
    REQUIRE(store.lookup("baz"));
    CHECK((*store.lookup("baz"))[3] == 2.0);
    CHECK_FALSE(store.lookup("qux"));
}

TEST_CASE("malformed embedding files are rejected with row numbers", "[rerank]") {
    try {
        parse("2 3\nfoo 1 2 3\nbar 1 2\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("bar") != std::string::npos);
    }
    CHECK_THROWS_AS(parse("2 2\nfoo 1 2\nfoo 3 4\n"), ParseError);
    CHECK_THROWS_AS(parse("1 2\nfoo 1 x\n"), ParseError);
    CHECK_THROWS_AS(parse("1 2\nfoo 1 2e\n"), ParseError);
    CHECK_THROWS_AS(parse("3 2\nfoo 1 2\n"), ParseError);
    CHECK_THROWS_AS(parse("foo 1 2\n"), ParseError);
    CHECK_THROWS_AS(parse("1 0\n"), ParseError);
    CHECK_THROWS_AS(parse(""), ParseError);
    CHECK_THROWS_AS(load_embeddings(std::filesystem::path("/nonexistent/vectors.txt")), Error);

    EmbeddingStore store(2);
    const std::vector<double> wrong{1.0};
    CHECK_THROWS_AS(store.add("x", wrong), Error);
}

TEST_CASE("sentence vectors are token means", "[rerank]") {
    const auto store = parse("2 2\nfoo 1 3\nbar 3 5\n");
    const std::vector<std::string> one{"foo"}, two{"foo", "bar"}, oov{"qux", "zap"}, mixed{"qux", "bar"};
    CHECK(embed_text(one, store) == Vector{1, 3});
    CHECK(embed_text(two, store) == Vector{2, 4});
    CHECK(embed_text(oov, store) == Vector{0, 0});
    CHECK(embed_text(mixed, store) == Vector{3, 5});
}

TEST_CASE("cosine conventions", "[rerank]") {
    const Vector x{0.3, -2.0, 5.0}, zero{0, 0, 0};
    CHECK_THAT(cosine(x, x), WithinAbs(1.0, 1e-15));
    CHECK(cosine(Vector{1, 0}, Vector{0, 1}) == 0.0);
    CHECK(cosine(x, zero) == 0.0);
    CHECK_THAT(cosine(Vector{1, 0}, Vector{-1, 0}), WithinAbs(-1.0, 1e-15));
    CHECK_THROWS_AS(cosine(Vector{1}, Vector{1, 2}), ContractError);

    std::mt19937 rng(3);
    std::normal_distribution<double> g;
    for (int i = 0; i < 1000; ++i) {
        Vector u(5), v(5);
        for (auto& a : u) a = g(rng);
        for (auto& a : v) a = g(rng);
        const double c = cosine(u, v);
        CHECK(c >= -1.0);
        CHECK(c <= 1.0);
        CHECK(c == cosine(v, u));
    }
}

TEST_CASE("doi is I over N", "[rerank]") {
    CHECK(doi(1, 10) == 0.1);
    CHECK(doi(10, 10) == 1.0);
    for (const std::size_t n : {10u, 20u, 25u, 30u, 50u}) {
        for (std::size_t i = 1; i <= n; ++i) CHECK(doi(i, n) == static_cast<double>(i) / static_cast<double>(n));
    }
    CHECK_THROWS_AS(doi(0, 10), ContractError);
    CHECK_THROWS_AS(doi(11, 10), ContractError);
    CHECK_THROWS_AS(doi(1, 0), ContractError);
}

TEST_CASE("distinct similarities give pure cosine order", "[rerank]") {
    const auto store = parse("4 3\nq 1 0 0\nnear 0.9 0.1 0\nmid 0.5 0.5 0\nfar 0 0 1\n");
    std::vector<RankedAnswer> list{answer("far", 1), answer("mid", 2), answer("near", 3)};
    const std::vector<std::string> question{"q"};
    const auto out = rerank::rerank(list, question, store);
    REQUIRE(out.size() == 3);
    CHECK(out[0].text == "near");
    CHECK(out[1].text == "mid");
    CHECK(out[2].text == "far");
    CHECK(out[0].doi == 1.0);
    CHECK(out[2].doi == doi(1, 3));
    CHECK(rerank::rerank({}, question, store).empty());
}

TEST_CASE("equal similarity falls back to the prior rank", "[rerank]") {
    std::vector<RankedAnswer> list;
    for (std::size_t i = 1; i <= 10; ++i) list.push_back(answer("a" + std::to_string(i), i, 0.1));
    list[6].embed_sim = 0.8; // I = 7
    list[1].embed_sim = 0.8; // I = 2
    for (auto& a : list) a.doi = doi(a.relevance_rank, 10);
    std::reverse(list.begin(), list.end());
    order_by_similarity(list, 1e-6);
    CHECK(list[0].relevance_rank == 2);
    CHECK(list[0].doi == 0.2);
    CHECK(list[1].relevance_rank == 7);
    CHECK(list[1].doi == 0.7);
}

TEST_CASE("10-answer pipeline matches a two-key sort", "[rerank]") {
    // Each answer is one word whose vector sits at a chosen angle to the
    // question, so similarities are either equal or far apart.
    std::ostringstream vectors;
    vectors << "11 2\nq 1 0\n";
    const std::vector<int> level{3, 1, 3, 0, 2, 1, 3, 0, 2, 1};
    for (std::size_t i = 0; i < level.size(); ++i) {
        const double angle = 0.3 * level[i];
        vectors << "w" << i << ' ' << std::cos(angle) << ' ' << std::sin(angle) << '\n';
    }
    const auto store = parse(vectors.str());
    std::vector<RankedAnswer> list;
    for (std::size_t i = 0; i < level.size(); ++i) list.push_back(answer("w" + std::to_string(i), i + 1));
    const std::vector<std::string> question{"q"};
    const auto out = rerank::rerank(list, question, store, 1e-9);

    std::vector<std::pair<int, std::size_t>> expected;
    for (std::size_t i = 0; i < level.size(); ++i) expected.emplace_back(level[i], i + 1);
    std::sort(expected.begin(), expected.end());
    REQUIRE(out.size() == expected.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i].relevance_rank == expected[i].second);
        CHECK(out[i].doi == doi(expected[i].second, 10));
    }
}

TEST_CASE("reordering is a permutation that respects tie groups", "[rerank]") {
    std::mt19937 rng(17);
    std::uniform_int_distribution<std::size_t> sizes(1, 50), buckets(0, 6);
    std::uniform_real_distribution<double> jitter(0.0, 1e-7);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = sizes(rng);
        std::vector<RankedAnswer> list;
        for (std::size_t i = 1; i <= n; ++i) {
            auto a = answer("x", i, 0.1 * static_cast<double>(buckets(rng)) + jitter(rng));
            a.doi = doi(i, n);
            list.push_back(a);
        }
        std::shuffle(list.begin(), list.end(), rng);
        auto out = list;
        order_by_similarity(out, 1e-6);

        std::vector<std::size_t> in_ranks, out_ranks;
        std::vector<oracle::Item> items;
        for (const auto& a : list) in_ranks.push_back(a.relevance_rank);
        for (const auto& a : out) {
            out_ranks.push_back(a.relevance_rank);
            items.push_back({a.embed_sim, a.relevance_rank});
        }
        std::sort(in_ranks.begin(), in_ranks.end());
        std::sort(out_ranks.begin(), out_ranks.end());
        CHECK(in_ranks == out_ranks);
        CHECK(oracle::respects_tie_order(items, 1e-6));
    }
}
