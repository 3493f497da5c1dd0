// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The clarifyd Authors

#pragma once

// Issue-tracker client for the GitHub v3 REST shape. All network access goes
// through HttpTransport, so recorded JSON fixtures stand in for the live API.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "clarifyd/corpus.hpp"
#include "clarifyd/error.hpp"
#include "clarifyd/timestamp.hpp"

namespace clarifyd::ingest {

// ---------------------------------------------------------------------------
// Errors

class TransportError : public Error {
public:
    using Error::Error;
};

class RateLimitError : public Error {
public:
    RateLimitError(const std::string& what, std::chrono::seconds retry_after)
        : Error(what + " (retry after " + std::to_string(retry_after.count()) + "s)"), retry_after_(retry_after) {}

    std::chrono::seconds retry_after() const noexcept { return retry_after_; }

private:
    std::chrono::seconds retry_after_;
};

class CredentialError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Transport

struct HttpResponse {
    int status = 0;
    std::string body;
    /// Header names lowercased.
    std::map<std::string, std::string> headers;

    std::optional<std::string> header(const std::string& lower_name) const {
        auto it = headers.find(lower_name);
        if (it == headers.end()) return std::nullopt;
        return it->second;
    }
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    /// GET `target` (path plus query string). Network failures throw
    /// TransportError; HTTP error statuses are returned, not thrown.
    virtual HttpResponse get(const std::string& target, const std::map<std::string, std::string>& headers) = 0;
};

/// Serves recorded responses from disk. `/repos/o/r/issues?page=2` maps to
/// `<root>/repos/o/r/issues/page-2.json`; a missing page inside an existing
/// directory is an empty list, a missing directory is a 404.
class FixtureTransport final : public HttpTransport {
public:
    explicit FixtureTransport(std::filesystem::path root) : root_(std::move(root)) {}

    HttpResponse get(const std::string& target, const std::map<std::string, std::string>&) override {
        const auto q = target.find('?');
        std::string path = target.substr(0, q);
        while (!path.empty() && path.front() == '/') path.erase(path.begin());
        std::string page = "1";
        if (q != std::string::npos) {
            std::istringstream params(target.substr(q + 1));
            std::string kv;
            while (std::getline(params, kv, '&')) {
                if (kv.rfind("page=", 0) == 0) page = kv.substr(5);
            }
        }
        const auto dir = root_ / path;
        if (!std::filesystem::is_directory(dir)) return {404, R"({"message":"Not Found"})", {}};
        const auto file = dir / ("page-" + page + ".json");
        if (!std::filesystem::exists(file)) return {200, "[]", {}};
        std::ifstream in(file);
        std::ostringstream body;
        body << in.rdbuf();
        return {200, body.str(), {}};
    }

private:
    std::filesystem::path root_;
};

// ---------------------------------------------------------------------------
// Fetch parameters

enum class IssueState { Closed, Open, All };

inline std::string_view to_string(IssueState s) {
    switch (s) {
    case IssueState::Closed: return "closed";
    case IssueState::Open: return "open";
    case IssueState::All: break;
    }
    return "all";
}

inline IssueState issue_state_from_string(std::string_view s) {
    if (s == "closed") return IssueState::Closed;
    if (s == "open") return IssueState::Open;
    if (s == "all") return IssueState::All;
    throw ContractError("issue state must be closed, open or all");
}

inline const std::set<std::string>& default_labels() {
    static const std::set<std::string> labels{"bug", "crash", "defect", "needs more info"};
    return labels;
}

struct FetchSpec {
    std::string repo; ///< owner/name
    std::set<std::string> labels = default_labels();
    IssueState state = IssueState::Closed;
    std::optional<Timestamp> since;
    std::size_t max_issues = 2000;
    std::optional<std::string> auth_token;
    Language language = Language::Other;
    std::size_t per_page = 30;
};

inline bool is_repo_name(std::string_view repo) {
    const auto slash = repo.find('/');
    if (slash == std::string_view::npos || slash == 0 || slash + 1 == repo.size()) return false;
    if (repo.find('/', slash + 1) != std::string_view::npos) return false;
    return std::all_of(repo.begin(), repo.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' || c == '/';
    });
}

inline void validate(const FetchSpec& spec) {
    if (!is_repo_name(spec.repo)) throw ContractError("repo '" + spec.repo + "' is not of the form owner/name");
    if (spec.max_issues < 1) throw ContractError("max_issues must be at least 1");
    if (spec.per_page < 1 || spec.per_page > 100) throw ContractError("per_page must be within 1..100");
}

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds base_delay{500};
    std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
        std::this_thread::sleep_for(d);
    };
};

namespace detail {

inline std::string url_encode(std::string_view s) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    for (const char ch : s) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(ch);
        } else {
            out.push_back('%');
            out.push_back(kHex[c >> 4]);
            out.push_back(kHex[c & 0xF]);
        }
    }
    return out;
}

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline std::string string_or_empty(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    return (it == j.end() || !it->is_string()) ? std::string{} : it->get<std::string>();
}

inline std::string login_of(const nlohmann::json& j) {
    auto it = j.find("user");
    return (it == j.end() || !it->is_object()) ? std::string{} : string_or_empty(*it, "login");
}

inline Timestamp required_time(const nlohmann::json& j, const char* key) {
    auto t = parse_timestamp(string_or_empty(j, key));
    if (!t) throw TransportError(std::string("response field '") + key + "' is not a timestamp");
    return *t;
}

} // namespace detail

/// Maps one issue object of the REST response onto a report without a
/// question.
inline BugReport report_from_issue(const nlohmann::json& issue, const std::string& repo, Language language) {
    BugReport r;
    r.id = repo + "#" + std::to_string(issue.at("number").get<std::uint64_t>());
    r.repo = repo;
    r.title = detail::string_or_empty(issue, "title");
    r.description = detail::string_or_empty(issue, "body");
    if (auto it = issue.find("labels"); it != issue.end() && it->is_array()) {
        for (const auto& l : *it) {
            if (l.is_object()) r.labels.insert(detail::string_or_empty(l, "name"));
            else if (l.is_string()) r.labels.insert(l.get<std::string>());
        }
    }
    r.author = detail::login_of(issue);
    r.created_at = detail::required_time(issue, "created_at");
    if (auto closed = parse_timestamp(detail::string_or_empty(issue, "closed_at"))) r.closed_at = *closed;
    r.language = language;
    return r;
}

class GitHubClient {
public:
    explicit GitHubClient(std::shared_ptr<HttpTransport> transport, RetryPolicy retry = {})
        : transport_(std::move(transport)), retry_(std::move(retry)) {}

    /// Issues carrying at least one requested label, following pagination
    /// until `max_issues` or exhaustion. Pull requests are skipped.
    std::vector<BugReport> fetch_issues(const FetchSpec& spec) {
        validate(spec);
        std::set<std::string> wanted;
        for (const auto& l : spec.labels) wanted.insert(detail::lower(l));

        std::vector<BugReport> out;
        for (std::size_t page = 1;; ++page) {
            std::string target = "/repos/" + spec.repo + "/issues?state=" + std::string(to_string(spec.state)) +
                                 "&per_page=" + std::to_string(spec.per_page) + "&page=" + std::to_string(page);
            // The API ANDs multiple labels, so only a single label is pushed
            // server-side; the OR filter below is always applied.
            if (spec.labels.size() == 1) target += "&labels=" + detail::url_encode(*spec.labels.begin());
            if (spec.since) target += "&since=" + format_timestamp(*spec.since);

            HttpResponse response;
            const auto items = get_json(target, spec.auth_token, &response);
            if (!items.is_array()) throw TransportError("issues response is not a JSON array");
            if (items.empty()) break;
            for (const auto& issue : items) {
                if (issue.contains("pull_request")) continue;
                BugReport r = report_from_issue(issue, spec.repo, spec.language);
                const bool match = std::any_of(r.labels.begin(), r.labels.end(),
                                               [&](const std::string& l) { return wanted.count(detail::lower(l)); });
                if (!match) continue;
                out.push_back(std::move(r));
                if (out.size() >= spec.max_issues) return out;
            }
            if (auto link = response.header("link")) {
                if (link->find("rel=\"next\"") == std::string::npos) break;
            } else if (items.size() < spec.per_page) {
                break;
            }
        }
        return out;
    }

    /// Comments of one issue in ascending time order; equal times keep API
    /// order. Throws NotFoundError for an unknown issue.
    std::vector<Comment> fetch_comments(const std::string& repo, std::uint64_t number,
                                        const std::optional<std::string>& auth_token = std::nullopt) {
        if (!is_repo_name(repo)) throw ContractError("repo '" + repo + "' is not of the form owner/name");
        const std::string issue_id = repo + "#" + std::to_string(number);
        constexpr std::size_t kPerPage = 100;
        std::vector<Comment> out;
        for (std::size_t page = 1;; ++page) {
            const std::string target = "/repos/" + repo + "/issues/" + std::to_string(number) +
                                       "/comments?per_page=" + std::to_string(kPerPage) + "&page=" + std::to_string(page);
            HttpResponse response;
            const auto items = get_json(target, auth_token, &response);
            if (!items.is_array()) throw TransportError("comments response is not a JSON array");
            for (const auto& c : items) {
                Comment comment;
                const auto& id = c.at("id");
                comment.comment_id = id.is_string() ? id.get<std::string>() : id.dump();
                comment.issue_id = issue_id;
                comment.author = detail::login_of(c);
                comment.body = detail::string_or_empty(c, "body");
                comment.time = detail::required_time(c, "created_at");
                out.push_back(std::move(comment));
            }
            if (auto link = response.header("link")) {
                if (link->find("rel=\"next\"") == std::string::npos) break;
            } else if (items.size() < kPerPage) {
                break;
            }
        }
        std::stable_sort(out.begin(), out.end(), [](const Comment& a, const Comment& b) { return a.time < b.time; });
        return out;
    }

private:
    nlohmann::json get_json(const std::string& target, const std::optional<std::string>& token, HttpResponse* last) {
        using namespace std::chrono;
        const auto now = duration_cast<seconds>(system_clock::now().time_since_epoch()).count();
        if (const auto until = blocked_until_.load(); until > now)
            throw RateLimitError("rate limited", seconds(until - now));

        std::map<std::string, std::string> headers{{"Accept", "application/vnd.github+json"},
                                                   {"User-Agent", "clarifyd"}};
        if (token && !token->empty()) headers["Authorization"] = "Bearer " + *token;

        std::string failure;
        for (int attempt = 0; attempt <= retry_.max_retries; ++attempt) {
            if (attempt > 0) retry_.sleep(retry_.base_delay * (1 << (attempt - 1)));
            HttpResponse r;
            try {
                r = transport_->get(target, headers);
            } catch (const TransportError& e) {
                failure = e.what();
                continue;
            }
            if (r.status == 200) {
                *last = r;
                try {
                    return nlohmann::json::parse(r.body);
                } catch (const nlohmann::json::parse_error& e) {
                    throw TransportError("malformed JSON from " + target + ": " + e.what());
                }
            }
            if (auto wait = rate_limit_wait(r)) {
                blocked_until_.store(duration_cast<seconds>(system_clock::now().time_since_epoch()).count() +
                                     wait->count());
                throw RateLimitError("rate limited on " + target, *wait);
            }
            if (r.status == 401 || r.status == 403)
                throw CredentialError("authentication failed (HTTP " + std::to_string(r.status) + ") for " + target);
            if (r.status == 404) throw NotFoundError("not found: " + target);
            failure = "HTTP " + std::to_string(r.status);
            if (r.status < 500) break;
        }
        throw TransportError("GET " + target + " failed: " + failure);
    }

    static std::optional<std::chrono::seconds> rate_limit_wait(const HttpResponse& r) {
        using namespace std::chrono;
        if (r.status != 429 && r.status != 403) return std::nullopt;
        if (auto after = r.header("retry-after")) {
            try {
                return seconds(std::stoll(*after));
            } catch (const std::exception&) {
                return seconds(60);
            }
        }
        if (r.header("x-ratelimit-remaining") == std::optional<std::string>("0")) {
            if (auto reset = r.header("x-ratelimit-reset")) {
                try {
                    const auto now = duration_cast<seconds>(system_clock::now().time_since_epoch()).count();
                    return seconds(std::max<long long>(0, std::stoll(*reset) - now));
                } catch (const std::exception&) {
                }
            }
            return seconds(60);
        }
        if (r.status == 429) return seconds(60);
        return std::nullopt;
    }

    std::shared_ptr<HttpTransport> transport_;
    RetryPolicy retry_;
    std::atomic<long long> blocked_until_{0};
};

} // namespace clarifyd::ingest
