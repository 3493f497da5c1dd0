// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The clarifyd Authors

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "clarifyd/mine.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace clarifyd;
using namespace clarifyd::mine;

namespace {

Comment c(std::string id, std::string author, std::string body, long long t) {
    return Comment{std::move(id), "o/r#1", std::move(author), std::move(body), fixtures::at(t)};
}

std::string fence(std::size_t lines) {
    std::string s = "here:\n```python\n";
    for (std::size_t i = 0; i < lines; ++i) s += "x = " + std::to_string(i) + "\n";
    return s + "```\n";
}

} // namespace

TEST_CASE("follow-up question examples", "[mine]") {
    const auto pick = detect_followup_question({c("1", "dev", "Thanks!", 1), c("2", "dev", "What OS are you using?", 2)},
                                               "reporter");
    REQUIRE(pick);
    CHECK(pick->comment_id == "2");
    CHECK(pick->index == 1);
    CHECK(pick->asker == "dev");
    CHECK(pick->reason == QuestionReason::InterrogativeStart);

    const auto request = detect_followup_question({c("1", "dev", "Can you share the version, please", 1)}, "reporter");
    REQUIRE(request);
    CHECK(request->reason == QuestionReason::RequestPhrase);

    CHECK_FALSE(detect_followup_question({c("1", "reporter", "Why does this happen?", 1)}, "reporter"));
    CHECK_FALSE(detect_followup_question({}, "reporter"));
}

TEST_CASE("question classification details", "[mine]") {
    CHECK(classify_question("how do I reproduce this?") == QuestionReason::InterrogativeStart);
    CHECK_FALSE(classify_question("What a mess."));
    CHECK_FALSE(classify_question("Reproduced on my side, strange?"));
    QuestionRules loose;
    loose.accept_bare_question_mark = true;
    CHECK(classify_question("Reproduced on my side, strange?", loose) == QuestionReason::QuestionMark);
    // Request phrases match whole words only.
    CHECK_FALSE(classify_question("pleased to hear it"));
    CHECK(classify_question("Could you attach the log") == QuestionReason::RequestPhrase);
    // Quotes and leading mentions are not part of the question.
    CHECK(classify_question("> why is it slow?\nThanks, fixed.") == std::nullopt);
    CHECK(classify_question("@alice @bob which version are you on?") == QuestionReason::InterrogativeStart);
    CHECK_FALSE(classify_question(""));
}

TEST_CASE("candidate answer rules", "[mine]") {
    const std::vector<Comment> stream{c("q", "dev", "Which version are you using?", 1), c("a", "reporter", "Version 2.1", 2),
                                      c("b", "dev", "Thanks, fixed in 2.2", 3)};
    const auto q = detect_followup_question(stream, "reporter");
    REQUIRE(q);
    const auto triple = select_candidate_answers(stream, *q, "reporter");
    REQUIRE(triple[AnswerSlot::Ca1]);
    REQUIRE(triple[AnswerSlot::Ca2]);
    CHECK(triple[AnswerSlot::Ca1]->comment_id == "a");
    CHECK(triple[AnswerSlot::Ca2]->comment_id == "a");

    const std::vector<Comment> only_asker{c("q", "dev", "Which version are you using?", 1), c("a", "dev", "Hello?", 2)};
    const auto q2 = detect_followup_question(only_asker, "reporter");
    REQUIRE(q2);
    const auto t2 = select_candidate_answers(only_asker, *q2, "reporter");
    CHECK_FALSE(t2[AnswerSlot::Ca1]);
    CHECK_FALSE(t2[AnswerSlot::Ca2]);
}

TEST_CASE("ca1 and ca2 need a strictly later timestamp", "[mine]") {
    const std::vector<Comment> stream{c("q", "dev", "Which version are you using?", 5),
                                      c("same", "reporter", "Version 2.1", 5), c("later", "reporter", "Or 2.2", 6)};
    const auto q = detect_followup_question(stream, "reporter");
    REQUIRE(q);
    const auto triple = select_candidate_answers(stream, *q, "reporter");
    CHECK(triple[AnswerSlot::Ca1]->comment_id == "later");
    CHECK(triple[AnswerSlot::Ca2]->comment_id == "later");

    QuestionPick stranger{"x", "dev", "?", QuestionReason::QuestionMark, 0};
    CHECK_THROWS_AS(select_candidate_answers(stream, stranger, "reporter"), ContractError);
}

TEST_CASE("ca3 matches an exhaustive BM25 scan", "[mine]") {
    const std::vector<Comment> stream{
        c("1", "reporter", "the window flickers on the dock monitor", 1),
        c("2", "dev", "which graphics driver and compositor are you running?", 2),
        c("3", "reporter", "thanks for looking", 3),
        c("4", "other", "same flicker with the nvidia graphics driver and picom compositor", 4),
        c("5", "reporter", "driver is nouveau", 5)};
    const auto q = detect_followup_question(stream, "reporter");
    REQUIRE(q);
    REQUIRE(q->comment_id == "2");

    oracle::Field field;
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < stream.size(); ++i) {
        if (i == q->index) continue;
        field.docs.push_back(textprep::preprocess(stream[i].body));
        positions.push_back(i);
    }
    const auto query = textprep::preprocess(stream[q->index].body);
    std::size_t best = 0;
    for (std::size_t d = 1; d < field.docs.size(); ++d) {
        if (oracle::bm25(query, field, d) > oracle::bm25(query, field, best)) best = d;
    }
    const auto triple = select_candidate_answers(stream, *q, "reporter");
    REQUIRE(triple[AnswerSlot::Ca3]);
    CHECK(triple[AnswerSlot::Ca3]->comment_id == stream[positions[best]].comment_id);
    CHECK(triple[AnswerSlot::Ca3]->comment_id == "4");
}

TEST_CASE("ca3 is absent without lexical overlap", "[mine]") {
    const std::vector<Comment> stream{c("1", "dev", "Which version are you using?", 1), c("2", "reporter", "hmm", 2)};
    const auto q = detect_followup_question(stream, "reporter");
    REQUIRE(q);
    CHECK_FALSE(select_candidate_answers(stream, *q, "reporter")[AnswerSlot::Ca3]);
}

TEST_CASE("quality filter examples", "[mine]") {
    auto entry = fixtures::make_entry("o/r#1", "t", "d", "Which version?", "plain", "plain", "plain");
    entry.answers[1] = fence(12);
    auto v = apply_quality_filters(entry);
    CHECK_FALSE(v.keep);
    CHECK(v.has(RejectReason::CodeTooLong));
    REQUIRE(v.reasons.size() == 1);
    CHECK(v.reasons[0].first == "ca2");

    entry.answers[1] = "here ![screenshot](https://a.b/s.png)";
    v = apply_quality_filters(entry);
    CHECK(v.has(RejectReason::Image));

    entry.answers[1] = "It crashed. I restarted it. Now it works fine.";
    CHECK(apply_quality_filters(entry).keep);

    entry.question = "Why?\nTraceback (most recent call last):\n  File \"x.py\", line 3";
    v = apply_quality_filters(entry);
    CHECK(v.has(RejectReason::StackTrace));
    CHECK(v.reasons[0].first == "question");
}

TEST_CASE("fenced blocks are measured by their body lines", "[mine]") {
    CHECK(longest_fenced_block(fence(10)) == 10);
    CHECK(longest_fenced_block(fence(11)) == 11);
    CHECK(longest_fenced_block("no code") == 0);
    CHECK(longest_fenced_block("```\na\nb") == 2);
    CHECK(longest_fenced_block("~~~\n```\na\n~~~") == 2);
    auto entry = fixtures::make_entry("o/r#1", "t", "d", "Which?", fence(10), "x", "x");
    CHECK(apply_quality_filters(entry).keep);
    entry.answers[0] = fence(11);
    CHECK_FALSE(apply_quality_filters(entry).keep);
}

TEST_CASE("vote aggregation examples", "[mine]") {
    using S = AnswerSlot;
    CHECK(aggregate_votes({S::Ca1, S::Ca1, S::Ca1}) == VoteOutcome{Accepted{S::Ca1}});
    CHECK(aggregate_votes({S::Ca2, S::Ca2, S::Ca3}) == VoteOutcome{Accepted{S::Ca2}});
    CHECK(aggregate_votes({S::Ca1, S::Ca2, S::Ca3}) == VoteOutcome{NeedsDiscussion{}});
    CHECK_THROWS_AS(aggregate_votes({S::Ca1, S::Ca1}), ContractError);
    CHECK_THROWS_AS(aggregate_votes({S::Ca1, S::Ca1, S::Ca1, S::Ca2}), ContractError);
}

TEST_CASE("vote aggregation is symmetric under permutation", "[mine]") {
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            for (int d = 0; d < 3; ++d) {
                std::vector<AnswerSlot> votes{static_cast<AnswerSlot>(a), static_cast<AnswerSlot>(b),
                                              static_cast<AnswerSlot>(d)};
                std::sort(votes.begin(), votes.end());
                const auto expected = aggregate_votes(votes);
                do {
                    CHECK(aggregate_votes(votes) == expected);
                } while (std::next_permutation(votes.begin(), votes.end()));
            }
        }
    }
}

TEST_CASE("votes CSV parsing", "[mine]") {
    std::istringstream ok("issue_id,annotator,choice\n\"o/r#1\",a1,ca1\r\no/r#1, a2 ,ca2\n\no/r#1,a3,ca2\n");
    const auto votes = read_votes_csv(ok);
    REQUIRE(votes.size() == 3);
    CHECK(votes[0].issue_id == "o/r#1");
    CHECK(votes[1].annotator == "a2");
    CHECK(aggregate_vote_table(votes).at("o/r#1") == VoteOutcome{Accepted{AnswerSlot::Ca2}});

    std::istringstream no_header("o/r#1,a1,ca1\n");
    CHECK_THROWS_AS(read_votes_csv(no_header), ParseError);
    std::istringstream bad_choice("issue_id,annotator,choice\no/r#1,a1,ca4\n");
    try {
        read_votes_csv(bad_choice);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    std::istringstream twice("issue_id,annotator,choice\nx,a1,ca1\nx,a1,ca2\nx,a2,ca1\n");
    CHECK_THROWS_AS(aggregate_vote_table(read_votes_csv(twice)), ContractError);
    std::istringstream short_set("issue_id,annotator,choice\nx,a1,ca1\nx,a2,ca1\n");
    CHECK_THROWS_AS(aggregate_vote_table(read_votes_csv(short_set)), ContractError);
}

namespace {

struct PoolText {
    std::string body;
    bool qualifies;
};

const std::vector<PoolText>& pool() {
    static const std::vector<PoolText> p{
        {"Thanks for the report", false},
        {"What version are you on?", true},
        {"Could you attach the logs", true},
        {"I see the same thing", false},
        {"please send a screenshot", true},
        {"Interesting?", false},
        {"Why", false},
        {"does it happen on main?", true},
        {"Fixed in the next release.", false},
        {"> what OS?\nworks for me", false},
    };
    return p;
}

} // namespace

TEST_CASE("detected question is the earliest qualifying comment", "[mine]") {
    std::mt19937 rng(7);
    const std::vector<std::string> authors{"reporter", "dev", "bot", "other"};
    std::uniform_int_distribution<std::size_t> len(0, 8), who(0, authors.size() - 1), body(0, pool().size() - 1);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<Comment> stream;
        std::vector<bool> qualifies;
        for (std::size_t i = 0, n = len(rng); i < n; ++i) {
            const auto& p = pool()[body(rng)];
            stream.push_back(c(std::to_string(i), authors[who(rng)], p.body, static_cast<long long>(i)));
            qualifies.push_back(p.qualifies && stream.back().author != "reporter");
        }
        std::optional<std::size_t> expected;
        for (std::size_t i = 0; i < stream.size() && !expected; ++i) {
            if (qualifies[i]) expected = i;
        }
        const auto got = detect_followup_question(stream, "reporter");
        REQUIRE(got.has_value() == expected.has_value());
        if (got) {
            CHECK(got->index == *expected);
            // The chosen question is never part of its own candidate set.
            const auto triple = select_candidate_answers(stream, *got, "reporter");
            for (const auto slot : kAnswerSlots) {
                if (triple[slot]) CHECK(triple[slot]->comment_id != got->comment_id);
            }
        }
    }
}

TEST_CASE("mined fixture matches the hand-derived outcomes", "[mine]") {
    const std::string dir = CLARIFYD_FIXTURE_DIR "/mining/";
    const auto issues = read_reports(dir + "issues.jsonl");
    const auto comments = read_comments(dir + "comments.jsonl");
    std::ifstream expected_file(dir + "expected_outcomes.json");
    const auto expected = nlohmann::json::parse(expected_file);
    std::map<std::string, std::vector<Comment>> by_issue;
    for (const auto& cm : comments) by_issue[cm.issue_id].push_back(cm);

    REQUIRE(issues.size() == expected.size());
    std::vector<BugReport> accepted;
    for (const auto& issue : issues) {
        const auto r = mine_issue(issue, by_issue[issue.id]);
        std::string outcome = "accepted";
        if (!r.question) outcome = "no-question";
        else if (!Corpus::admits(r.entry)) outcome = "missing-answer";
        else if (!r.verdict.keep) outcome = std::string(to_string(r.verdict.reasons.front().second));
        INFO(issue.id);
        CHECK(outcome == expected.at(issue.id).get<std::string>());
        if (r.accepted()) accepted.push_back(r.entry);
    }
    CHECK(accepted == read_reports(dir + "expected_corpus.jsonl"));

    const auto outcomes = aggregate_vote_table(read_votes_csv(std::filesystem::path(dir + "votes.csv")));
    CHECK(outcomes.at("acme/widget#1") == VoteOutcome{Accepted{AnswerSlot::Ca1}});
    CHECK(outcomes.at("acme/widget#2") == VoteOutcome{Accepted{AnswerSlot::Ca2}});
    CHECK(outcomes.at("acme/widget#5") == VoteOutcome{NeedsDiscussion{}});
    CHECK(apply_votes(accepted, outcomes) == 2);
    CHECK(accepted[0].gold == accepted[0].answers[0]);
    CHECK(accepted[1].gold == accepted[1].answers[1]);
    CHECK_FALSE(accepted[2].gold);
}

TEST_CASE("mine_issue sorts the stream before detection", "[mine]") {
    const auto issue = fixtures::make_entry("o/r#1", "t", "d", "", "", "", "");
    std::vector<Comment> stream{c("late", "dev", "What OS are you using?", 9), c("early", "dev", "Why is it slow?", 1),
                                c("reply", "reporter", "Ubuntu and it is slow", 10)};
    const auto r = mine_issue(issue, stream);
    REQUIRE(r.question);
    CHECK(r.question->comment_id == "early");
    CHECK(r.entry.question == "Why is it slow?");
    CHECK(r.candidates[AnswerSlot::Ca2]->comment_id == "reply");
}
