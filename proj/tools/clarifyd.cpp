// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The clarifyd Authors

// clarifyd: ingest | mine | index | ask | evaluate

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "clarifyd/config.hpp"
#include "clarifyd/corpus.hpp"
#include "clarifyd/genctx.hpp"
#include "clarifyd/ingest.hpp"
#include "clarifyd/metrics.hpp"
#include "clarifyd/mine.hpp"
#include "clarifyd/net.hpp"
#include "clarifyd/pipeline.hpp"
#include "clarifyd/rerank.hpp"
#include "clarifyd/retrieval.hpp"

namespace fs = std::filesystem;
using namespace clarifyd;

namespace {

// Exit codes.
constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRemote = 3;

class Stage {
public:
    explicit Stage(std::string name) : name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
    ~Stage() {
        const auto ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
        spdlog::info("stage={} elapsed_ms={:.1f}", name_, ms);
    }

private:
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

// Exclusive advisory lock on `<target>.lock`, held for the command's lifetime.
class FileLock {
public:
    explicit FileLock(const fs::path& target) : path_(target.string() + ".lock") {
        if (target.has_parent_path()) fs::create_directories(target.parent_path());
        fd_ = ::open(path_.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0) throw Error("cannot open lock file '" + path_ + "'");
        if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(fd_);
            throw Error("'" + target.string() + "' is locked by another clarifyd process");
        }
    }
    ~FileLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    std::string path_;
    int fd_ = -1;
};

// Writes through a temporary file so readers never see a partial artifact.
template <typename Fn>
void write_atomically(const fs::path& path, Fn&& write) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
        write(out);
        out.flush();
        if (!out) throw Error("failed writing '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

void require_file(const fs::path& path, const std::string& what, const std::string& hint) {
    if (path.empty()) throw ContractError(what + " path not configured; " + hint);
    if (!fs::exists(path)) throw ContractError(what + " '" + path.string() + "' not found; " + hint);
}

struct Options {
    std::string config_path;
    bool json = false;
    bool verbose = false;

    std::string corpus, embeddings, index, out, fixtures, issues, comments, votes, heldout, service_url, backend;
    std::optional<std::size_t> n, k;
    std::optional<int> context_mode;
    std::vector<std::string> repos;
    bool no_rerank = false;
    bool no_fallback = false;
    bool allow_any_n = false;
    std::string report;
};

config::Config resolve(const Options& o) {
    config::Config c = o.config_path.empty() ? config::Config{} : config::load_config(o.config_path);
    auto set_path = [](const std::string& flag, fs::path& field) {
        if (!flag.empty()) field = flag;
    };
    set_path(o.corpus, c.corpus);
    set_path(o.embeddings, c.embeddings);
    set_path(o.index, c.index);
    set_path(o.out, c.out);
    set_path(o.fixtures, c.fixtures);
    set_path(o.issues, c.issues);
    set_path(o.comments, c.comments);
    set_path(o.votes, c.votes);
    set_path(o.heldout, c.heldout);
    if (!o.service_url.empty()) c.service_url = o.service_url;
    if (!o.backend.empty()) c.backend = o.backend == "service" ? config::BackendKind::Service : config::BackendKind::Fallback;
    if (!o.repos.empty()) c.repos = o.repos;
    if (o.n) c.n = *o.n;
    if (o.k) c.k = *o.k;
    if (o.context_mode) c.context_mode = genctx::context_mode_from_int(*o.context_mode);
    if (o.no_rerank) c.rerank = false;
    if (o.no_fallback) c.fallback = false;
    // An explicit --n is an operator override of the list-size set.
    config::validate(c, o.allow_any_n || o.n.has_value());
    return c;
}

net::Timeouts timeouts_of(const config::Config& c) {
    net::Timeouts t;
    t.read = std::chrono::milliseconds(c.timeout_ms);
    return t;
}

std::unique_ptr<genctx::GenerationBackend> make_backend(const config::Config& c) {
    if (c.backend == config::BackendKind::Service)
        return std::make_unique<net::ServiceBackend>(c.service_url, c.max_new_tokens, timeouts_of(c));
    return std::make_unique<genctx::ExtractiveBackend>();
}

std::optional<rerank::EmbeddingStore> load_store(const config::Config& c, bool required) {
    if (c.embeddings.empty() && !required) return std::nullopt;
    require_file(c.embeddings, "embeddings", "pass --embeddings or set [paths] embeddings");
    Stage stage("load-embeddings");
    auto store = rerank::load_embeddings(c.embeddings);
    spdlog::info("embeddings vectors={} dim={}", store.size(), store.dim());
    return store;
}

Corpus load_checked_corpus(const config::Config& c) {
    require_file(c.corpus, "corpus", "run `clarifyd mine` first or pass --corpus");
    Stage stage("load-corpus");
    std::vector<std::string> dropped;
    Corpus corpus = load_corpus(c.corpus, &dropped);
    if (!dropped.empty())
        spdlog::warn("dropped {} corpus record(s) lacking a question or candidate answer", dropped.size());
    spdlog::info("corpus entries={}", corpus.size());
    return corpus;
}

retrieval::FieldedIndex load_index(const config::Config& c, const Corpus& corpus) {
    require_file(c.index, "index", "run `clarifyd index` first or pass --index");
    Stage stage("load-index");
    std::ifstream in(c.index);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("index '" + c.index.string() + "' is not valid JSON: " + e.what());
    }
    auto index = retrieval::FieldedIndex::from_snapshot(j);
    if (!index.same_entries(corpus))
        throw ContractError("index '" + c.index.string() + "' is stale for corpus '" + c.corpus.string() +
                            "'; re-run `clarifyd index`");
    return index;
}

pipeline::RecommenderOptions recommender_options(const config::Config& c) {
    pipeline::RecommenderOptions o;
    o.n = c.n;
    o.sim_tolerance = c.sim_tolerance;
    o.use_rerank = c.rerank;
    o.ranking.similarity = retrieval::make_similarity(c.scorer);
    o.ranking.aggregation = c.aggregation;
    return o;
}

// ---------------------------------------------------------------------------

int cmd_ingest(const Options& o) {
    const auto c = resolve(o);
    if (c.repos.empty()) throw ContractError("no repositories configured; set [ingest] repos or pass --repo");
    std::shared_ptr<ingest::HttpTransport> transport;
    std::optional<std::string> token;
    if (!c.fixtures.empty()) {
        if (!fs::is_directory(c.fixtures)) throw ContractError("fixture directory '" + c.fixtures.string() + "' not found");
        transport = std::make_shared<ingest::FixtureTransport>(c.fixtures);
        spdlog::info("ingest from fixtures {}", c.fixtures.string());
    } else {
        transport = std::make_shared<net::HttplibTransport>(c.api_url, timeouts_of(c));
        if (const char* t = std::getenv("CLARIFYD_TOKEN"); t && *t) token = t;
        else spdlog::warn("CLARIFYD_TOKEN not set; unauthenticated requests are heavily rate limited");
    }
    FileLock lock_issues(c.issues);
    FileLock lock_comments(c.comments);
    ingest::GitHubClient client(transport);

    std::vector<BugReport> reports;
    std::vector<Comment> comments;
    for (const auto& repo : c.repos) {
        Stage stage("ingest:" + repo);
        ingest::FetchSpec spec;
        spec.repo = repo;
        spec.labels = c.labels;
        spec.state = c.state;
        spec.since = c.since;
        spec.max_issues = c.max_issues;
        spec.per_page = c.per_page;
        spec.auth_token = token;
        spec.language = c.language_of(repo);
        auto issues = client.fetch_issues(spec);
        for (const auto& issue : issues) {
            const auto number = std::stoull(issue.id.substr(issue.id.rfind('#') + 1));
            auto list = client.fetch_comments(repo, number, token);
            comments.insert(comments.end(), list.begin(), list.end());
        }
        spdlog::info("repo={} issues={}", repo, issues.size());
        reports.insert(reports.end(), issues.begin(), issues.end());
    }
    write_atomically(c.issues, [&](std::ostream& out) { write_reports(out, reports); });
    write_atomically(c.comments, [&](std::ostream& out) { write_comments(out, comments); });
    if (o.json) {
        std::cout << nlohmann::json{{"issues", reports.size()}, {"comments", comments.size()}}.dump() << '\n';
    } else {
        std::cout << "ingested " << reports.size() << " issues and " << comments.size() << " comments\n";
    }
    return 0;
}

int cmd_mine(const Options& o) {
    const auto c = resolve(o);
    require_file(c.issues, "issues", "run `clarifyd ingest` first or pass --issues");
    require_file(c.comments, "comments", "run `clarifyd ingest` first or pass --comments");
    const bool with_votes = !c.votes.empty();
    if (with_votes) {
        require_file(c.votes, "votes", "pass --votes");
        if (c.heldout.empty()) throw ContractError("--votes needs a held-out output path (--heldout)");
    }
    FileLock lock_corpus(c.corpus);
    std::optional<FileLock> lock_heldout;
    if (with_votes) lock_heldout.emplace(c.heldout);

    Stage stage("mine");
    auto issues = read_reports(c.issues);
    std::map<std::string, std::vector<Comment>> by_issue;
    for (auto& cm : read_comments(c.comments)) by_issue[cm.issue_id].push_back(std::move(cm));

    std::vector<BugReport> accepted;
    std::map<std::string, std::size_t> rejections;
    nlohmann::json details = nlohmann::json::array();
    for (const auto& issue : issues) {
        auto it = by_issue.find(issue.id);
        const auto result = mine::mine_issue(issue, it == by_issue.end() ? std::vector<Comment>{} : it->second);
        std::string outcome = "accepted";
        if (!result.question) {
            outcome = "no-question";
        } else if (!Corpus::admits(result.entry)) {
            outcome = "missing-answer";
        } else if (!result.verdict.keep) {
            outcome = std::string(mine::to_string(result.verdict.reasons.front().second));
        }
        if (outcome == "accepted") accepted.push_back(result.entry);
        else ++rejections[outcome];
        details.push_back({{"id", issue.id}, {"outcome", outcome}});
    }

    std::vector<BugReport> heldout;
    if (with_votes) {
        const auto outcomes = mine::aggregate_vote_table(mine::read_votes_csv(c.votes));
        std::size_t discussion = 0;
        for (const auto& [id, outcome] : outcomes) {
            if (std::holds_alternative<mine::NeedsDiscussion>(outcome)) ++discussion;
        }
        mine::apply_votes(accepted, outcomes);
        std::vector<BugReport> rest;
        for (auto& r : accepted) (r.gold ? heldout : rest).push_back(std::move(r));
        accepted = std::move(rest);
        if (discussion) spdlog::warn("{} issue(s) need discussion (no majority vote)", discussion);
    }

    write_atomically(c.corpus, [&](std::ostream& out) { write_reports(out, accepted); });
    if (with_votes) write_atomically(c.heldout, [&](std::ostream& out) { write_reports(out, heldout); });

    if (o.json) {
        std::cout << nlohmann::json{{"issues", issues.size()},
                                    {"corpus", accepted.size()},
                                    {"heldout", heldout.size()},
                                    {"rejected", rejections},
                                    {"details", details}}
                         .dump()
                  << '\n';
    } else {
        std::cout << "mined " << accepted.size() << " corpus entries from " << issues.size() << " issues";
        if (with_votes) std::cout << ", " << heldout.size() << " held out with gold answers";
        std::cout << '\n';
        for (const auto& [reason, count] : rejections) std::cout << "  rejected " << reason << ": " << count << '\n';
    }
    return 0;
}

int cmd_index(const Options& o) {
    const auto c = resolve(o);
    const Corpus corpus = load_checked_corpus(c);
    FileLock lock(c.index);
    retrieval::FieldedIndex index;
    {
        Stage stage("build-index");
        index = retrieval::FieldedIndex::build(corpus);
    }
    const std::string text = index.snapshot().dump() + "\n";
    write_atomically(c.index, [&](std::ostream& out) { out << text; });
    if (o.json) {
        std::cout << nlohmann::json{{"entries", index.size()}, {"index", c.index.string()}}.dump() << '\n';
    } else {
        std::cout << "indexed " << index.size() << " entries into " << c.index.string() << '\n';
    }
    return 0;
}

BugReport read_single_report(const fs::path& path) {
    require_file(path, "report", "pass the deficient report as a JSON file");
    std::ifstream in(path);
    std::ostringstream text;
    text << in.rdbuf();
    std::istringstream lines(text.str());
    // Either one JSON object (possibly pretty-printed) or the first JSON-lines record.
    try {
        return report_from_json(nlohmann::json::parse(text.str()));
    } catch (const nlohmann::json::parse_error&) {
    }
    auto reports = read_reports(lines);
    if (reports.empty()) throw Error("report file '" + path.string() + "' holds no record");
    return reports.front();
}

std::string_view slot_name(AnswerSlot s) { return to_string(s); }

int cmd_ask(const Options& o) {
    const auto c = resolve(o);
    const BugReport report = read_single_report(o.report);
    const Corpus corpus = load_checked_corpus(c);
    const auto index = load_index(c, corpus);
    const auto store = load_store(c, c.rerank);
    const pipeline::Recommender recommender(corpus, index, store ? &*store : nullptr, recommender_options(c));

    std::vector<retrieval::RankedAnswer> ranked;
    {
        Stage stage("recommend");
        ranked = recommender.recommend(report);
    }
    if (ranked.empty()) throw Error("the corpus holds no candidate answers");
    const std::size_t k = std::min(c.k, ranked.size());
    if (k < c.k) spdlog::warn("only {} candidate answers available for K={}", ranked.size(), c.k);
    const auto contexts = recommender.contexts(report, ranked, c.context_mode, c.max_chars);
    auto backend = make_backend(c);
    std::vector<genctx::GeneratedAnswer> generated;
    {
        Stage stage("generate");
        genctx::GenerationOptions gen;
        gen.fallback = c.fallback;
        gen.parallelism = c.parallelism;
        generated = genctx::generate_answers(report.question.value_or(report.title), contexts, *backend, k, gen);
    }
    for (const auto& g : generated) {
        if (g.used_fallback) spdlog::warn("backend failed, used extractive answer: {}", g.error);
    }

    if (o.json) {
        nlohmann::json j;
        j["report"] = report.id;
        j["question"] = report.question ? nlohmann::json(*report.question) : nlohmann::json(nullptr);
        j["context_mode"] = static_cast<int>(c.context_mode);
        j["n"] = c.n;
        j["k"] = k;
        j["ranked"] = nlohmann::json::array();
        for (const auto& a : ranked) {
            j["ranked"].push_back({{"entry", a.entry_id},
                                   {"slot", slot_name(a.slot)},
                                   {"relevance_score", a.relevance_score},
                                   {"relevance_rank", a.relevance_rank},
                                   {"embed_sim", a.embed_sim},
                                   {"doi", a.doi}});
        }
        j["answers"] = nlohmann::json::array();
        for (std::size_t i = 0; i < k; ++i) {
            const auto& a = ranked[i];
            nlohmann::json segments = nlohmann::json::array();
            for (const auto& s : contexts[i].segments) segments.push_back(s.label);
            j["answers"].push_back({{"rank", i + 1},
                                    {"answer", generated[i].text},
                                    {"backend", generated[i].backend},
                                    {"used_fallback", generated[i].used_fallback},
                                    {"source", a.entry_id},
                                    {"slot", slot_name(a.slot)},
                                    {"relevance_score", a.relevance_score},
                                    {"embed_sim", a.embed_sim},
                                    {"doi", a.doi},
                                    {"context_segments", segments}});
        }
        std::cout << j.dump(2) << '\n';
        return 0;
    }

    std::cout << "report " << report.id << '\n';
    if (report.question) std::cout << "question: " << *report.question << '\n';
    std::cout << "context mode " << static_cast<int>(c.context_mode)
              << (c.context_mode == genctx::ContextMode::WithDeficientReport
                      ? " (retrieved answer + source report + deficient report)"
                      : " (retrieved answer + source report)")
              << '\n';
    for (std::size_t i = 0; i < k; ++i) {
        const auto& a = ranked[i];
        std::cout << '\n'
                  << '#' << i + 1 << "  source=" << a.entry_id << ' ' << slot_name(a.slot)
                  << "  relevance=" << a.relevance_score << "  embed_sim=" << a.embed_sim << "  doi=" << a.doi
                  << "  backend=" << generated[i].backend << '\n'
                  << generated[i].text << '\n';
    }
    return 0;
}

int cmd_evaluate(const Options& o) {
    auto c = resolve(o);
    require_file(c.heldout, "held-out set", "pass --heldout or set [paths] heldout");
    FileLock lock(c.out);
    const auto heldout = read_reports(c.heldout);
    metrics::EvaluationReport report;
    report.backend = c.backend == config::BackendKind::Service ? "service" : "extractive";

    auto write_outputs = [&] {
        write_atomically(fs::path(c.out.string() + ".csv"), [&](std::ostream& out) { report.write_csv(out); });
        write_atomically(fs::path(c.out.string() + ".json"),
                         [&](std::ostream& out) { out << report.to_json().dump(2) << '\n'; });
    };

    if (heldout.empty()) {
        spdlog::warn("held-out set '{}' is empty; writing an empty report", c.heldout.string());
        report.semsim_provider = "none";
        write_outputs();
        if (o.json) std::cout << report.to_json().dump(2) << '\n';
        return 0;
    }

    const Corpus corpus = load_checked_corpus(c);
    const auto index = load_index(c, corpus);
    const auto store = load_store(c, c.rerank || c.semsim == config::SemsimProvider::WordVectors);
    const pipeline::Recommender recommender(corpus, index, store ? &*store : nullptr, recommender_options(c));
    auto backend = make_backend(c);

    std::unique_ptr<metrics::SentenceEmbedder> embedder;
    if (c.semsim == config::SemsimProvider::Service) {
        embedder = std::make_unique<net::ServiceEmbedder>(c.service_url, timeouts_of(c));
    } else if (store) {
        embedder = std::make_unique<metrics::WordVectorEmbedder>(*store);
    }
    report.semsim_provider = embedder ? embedder->identity() : "none";

    metrics::Evaluator evaluator;
    evaluator.bleu_options.smoothing = c.smoothing;
    evaluator.wmd_store = store ? &*store : nullptr;
    evaluator.embedder = embedder.get();
    evaluator.relaxed_wmd = c.relaxed_wmd;

    std::vector<std::size_t> ks = c.eval_k;
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    const std::size_t max_k = ks.back();

    Stage stage("evaluate");
    std::size_t short_lists = 0;
    for (const auto& item : heldout) {
        if (!item.gold) {
            ++report.skipped_without_gold;
            continue;
        }
        const auto ranked = recommender.recommend(item, item.id);
        if (ranked.empty()) throw Error("the corpus holds no candidate answers");
        const std::size_t available = std::min(max_k, ranked.size());
        if (available < max_k) ++short_lists;
        const auto contexts = recommender.contexts(item, ranked, c.context_mode, c.max_chars);
        genctx::GenerationOptions gen;
        gen.fallback = c.fallback;
        gen.parallelism = c.parallelism;
        const auto generated =
            genctx::generate_answers(item.question.value_or(item.title), contexts, *backend, available, gen);
        std::vector<std::string> texts;
        for (const auto& g : generated) texts.push_back(g.text);
        for (const auto k : ks) {
            auto row = metrics::evaluate_topk(item.id, texts, *item.gold, std::min(k, available), evaluator);
            row.k = k;
            report.rows.push_back({row, item.language});
        }
    }
    if (report.skipped_without_gold)
        spdlog::warn("skipped {} held-out record(s) without a gold answer", report.skipped_without_gold);
    if (short_lists) spdlog::warn("{} quer(ies) had fewer than {} candidate answers", short_lists, max_k);
    write_outputs();

    if (o.json) {
        std::cout << report.to_json().dump(2) << '\n';
    } else {
        std::cout << "evaluated " << report.rows.size() << " rows into " << c.out.string() << ".{csv,json}\n";
        for (const auto& a : report.aggregates()) {
            std::cout << "  " << to_string(a.language) << " top-" << a.k << ": n=" << a.count << " bleu=" << a.bleu
                      << " meteor=" << a.meteor;
            if (a.semsim) std::cout << " semsim=" << *a.semsim;
            if (a.wmd) std::cout << " wmd=" << *a.wmd;
            std::cout << '\n';
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_color_mt("clarifyd");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    spdlog::set_level(spdlog::level::warn);

    Options o;
    CLI::App app{"Recommend and generate answers to follow-up questions on bug reports"};
    app.require_subcommand(1);
    app.add_option("--config", o.config_path, "TOML configuration file")->check(CLI::ExistingFile);
    app.add_flag("--json", o.json, "Machine-readable output on stdout");
    app.add_flag("-v,--verbose", o.verbose, "Log stage timings");

    auto add_paths = [&](CLI::App* cmd) {
        cmd->add_option("--corpus", o.corpus, "Corpus JSON-lines file");
        cmd->add_option("--index", o.index, "Index artifact");
    };
    auto add_ranking = [&](CLI::App* cmd) {
        add_paths(cmd);
        cmd->add_option("--embeddings", o.embeddings, "Word vectors (word2vec text format)");
        cmd->add_option("--n", o.n, "Candidate list size N")->check(CLI::PositiveNumber);
        cmd->add_option("--context-mode", o.context_mode, "1: retrieved answer + source; 2: also the report")
            ->check(CLI::IsMember({1, 2}));
        cmd->add_option("--backend", o.backend, "Generation backend")->check(CLI::IsMember({"fallback", "service"}));
        cmd->add_option("--service-url", o.service_url, "Inference service base URL");
        cmd->add_flag("--no-rerank", o.no_rerank, "Keep the lexical relevance order");
        cmd->add_flag("--no-fallback", o.no_fallback, "Fail instead of using the extractive answer");
    };

    auto* ingest_cmd = app.add_subcommand("ingest", "Fetch labeled issues and their comments");
    ingest_cmd->add_option("--repo", o.repos, "owner/name (repeatable; overrides the config)");
    ingest_cmd->add_option("--fixtures", o.fixtures, "Serve API responses from recorded JSON");
    ingest_cmd->add_option("--issues", o.issues, "Issues output file");
    ingest_cmd->add_option("--comments", o.comments, "Comments output file");

    auto* mine_cmd = app.add_subcommand("mine", "Build corpus entries from issues and comments");
    mine_cmd->add_option("--issues", o.issues, "Issues JSON-lines file");
    mine_cmd->add_option("--comments", o.comments, "Comments JSON-lines file");
    mine_cmd->add_option("--votes", o.votes, "Annotator votes CSV (issue_id,annotator,choice)");
    mine_cmd->add_option("--heldout", o.heldout, "Output for reports with an accepted gold answer");
    mine_cmd->add_option("--corpus", o.corpus, "Corpus output file");

    auto* index_cmd = app.add_subcommand("index", "Build the retrieval index for a corpus");
    add_paths(index_cmd);

    auto* ask_cmd = app.add_subcommand("ask", "Recommend and generate answers for one deficient report");
    add_ranking(ask_cmd);
    ask_cmd->add_option("--k", o.k, "Number of answers to generate")->check(CLI::PositiveNumber);
    ask_cmd->add_option("report", o.report, "Deficient report (JSON)")->required();

    auto* eval_cmd = app.add_subcommand("evaluate", "Score generated answers against gold answers");
    add_ranking(eval_cmd);
    eval_cmd->add_option("--heldout", o.heldout, "Held-out JSON-lines file with gold answers");
    eval_cmd->add_option("--out", o.out, "Report path prefix (writes .csv and .json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    if (o.verbose) spdlog::set_level(spdlog::level::info);

    try {
        if (*ingest_cmd) return cmd_ingest(o);
        if (*mine_cmd) return cmd_mine(o);
        if (*index_cmd) return cmd_index(o);
        if (*ask_cmd) return cmd_ask(o);
        if (*eval_cmd) return cmd_evaluate(o);
    } catch (const ContractError& e) {
        spdlog::error("{}", e.what());
        return kExitUsage;
    } catch (const ParseError& e) {
        spdlog::error("{}", e.what());
        return kExitUsage;
    } catch (const ingest::CredentialError& e) {
        spdlog::error("{} (check CLARIFYD_TOKEN)", e.what());
        return kExitRemote;
    } catch (const ingest::RateLimitError& e) {
        spdlog::error("{}", e.what());
        return kExitRemote;
    } catch (const ingest::TransportError& e) {
        spdlog::error("{}", e.what());
        return kExitRemote;
    } catch (const net::ServiceError& e) {
        spdlog::error("{}", e.what());
        return kExitRemote;
    } catch (const genctx::GenerationError& e) {
        spdlog::error("{}", e.what());
        for (const auto& cause : e.causes()) spdlog::error("  {}", cause);
        return kExitRemote;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitError;
    }
    return kExitError;
}
