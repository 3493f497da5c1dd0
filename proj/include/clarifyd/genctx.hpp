// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The clarifyd Authors

#pragma once

#include <algorithm>
#include <cstddef>
#include <future>
#include <string>
#include <string_view>
#include <vector>

#include "clarifyd/corpus.hpp"
#include "clarifyd/error.hpp"
#include "clarifyd/retrieval.hpp"
#include "clarifyd/textprep.hpp"

namespace clarifyd::genctx {

enum class ContextMode {
    /// Retrieved answer plus the report it came from.
    RetrievedOnly = 1,
    /// Additionally the deficient report being answered.
    WithDeficientReport = 2,
};

inline ContextMode context_mode_from_int(int mode) {
    if (mode == 1) return ContextMode::RetrievedOnly;
    if (mode == 2) return ContextMode::WithDeficientReport;
    throw ContractError("context mode must be 1 or 2, got " + std::to_string(mode));
}

struct Segment {
    std::string label;
    std::string text;

    bool operator==(const Segment&) const = default;
};

inline constexpr std::size_t kDefaultMaxChars = 4000;

struct Context {
    ContextMode mode = ContextMode::RetrievedOnly;
    std::string question;
    /// [answer, source title, source description, (report title, report description)]
    std::vector<Segment> segments;
    std::size_t max_chars = kDefaultMaxChars;
    /// Untruncated retrieved answer and where it came from.
    std::string retrieved_answer;
    std::string source_id;
    AnswerSlot source_slot = AnswerSlot::Ca1;

    /// Non-empty segment texts joined by newlines.
    std::string render() const {
        std::string out;
        for (const auto& s : segments) {
            if (s.text.empty()) continue;
            if (!out.empty()) out.push_back('\n');
            out += s.text;
        }
        return out;
    }
};

namespace detail {

inline std::size_t rendered_length(const std::vector<Segment>& segments) {
    std::size_t total = 0, parts = 0;
    for (const auto& s : segments) {
        if (s.text.empty()) continue;
        total += s.text.size();
        ++parts;
    }
    return parts == 0 ? 0 : total + parts - 1;
}

inline void cut_tail(std::string& text, std::size_t count) {
    std::size_t keep = text.size() > count ? text.size() - count : 0;
    // Never split a UTF-8 sequence.
    while (keep > 0 && (static_cast<unsigned char>(text[keep]) & 0xC0) == 0x80) --keep;
    text.resize(keep);
}

// Shortens supporting segments (index >= 1) longest-first; the retrieved
// answer at index 0 is cut only once nothing else is left.
inline void fit_budget(std::vector<Segment>& segments, std::size_t max_chars) {
    while (true) {
        const std::size_t total = rendered_length(segments);
        if (total <= max_chars) return;
        const std::size_t excess = total - max_chars;
        std::size_t longest = 0;
        for (std::size_t i = 1; i < segments.size(); ++i) {
            if (segments[i].text.empty()) continue;
            if (longest == 0 || segments[i].text.size() >= segments[longest].text.size()) longest = i;
        }
        if (longest == 0) {
            cut_tail(segments[0].text, excess);
            continue;
        }
        std::size_t runner_up = 0;
        for (std::size_t i = 1; i < segments.size(); ++i) {
            if (i != longest) runner_up = std::max(runner_up, segments[i].text.size());
        }
        const std::size_t len = segments[longest].text.size();
        const std::size_t cut = std::max<std::size_t>(1, std::min(excess, len - std::min(len, runner_up)));
        cut_tail(segments[longest].text, cut);
    }
}

} // namespace detail

/// Assembles the generator input for one retrieved answer. `source` must be
/// the corpus entry `top` was drawn from.
inline Context build_context(ContextMode mode, const BugReport& deficient, const retrieval::RankedAnswer& top,
                             const BugReport& source, std::size_t max_chars = kDefaultMaxChars) {
    if (top.entry_id != source.id)
        throw ContractError("build_context: answer from '" + top.entry_id + "' paired with '" + source.id + "'");
    Context ctx;
    ctx.mode = mode;
    ctx.question = deficient.question.value_or("");
    ctx.max_chars = max_chars;
    ctx.retrieved_answer = top.text;
    ctx.source_id = top.entry_id;
    ctx.source_slot = top.slot;
    ctx.segments = {
        {"answer", textprep::clean(top.text)},
        {"source_title", textprep::clean(source.title)},
        {"source_description", textprep::clean(source.description)},
    };
    if (mode == ContextMode::WithDeficientReport) {
        ctx.segments.push_back({"report_title", textprep::clean(deficient.title)});
        ctx.segments.push_back({"report_description", textprep::clean(deficient.description)});
    }
    detail::fit_budget(ctx.segments, max_chars);
    return ctx;
}

// ---------------------------------------------------------------------------
// Backends

class GenerationBackend {
public:
    virtual ~GenerationBackend() = default;
    /// Must be safe to call concurrently.
    virtual std::string generate(const std::string& question, const Context& context) = 0;
    virtual std::string tag() const = 0;
};

/// Returns the retrieved answer verbatim; also the retrieval-only baseline.
class ExtractiveBackend final : public GenerationBackend {
public:
    std::string generate(const std::string&, const Context& context) override { return context.retrieved_answer; }
    std::string tag() const override { return "extractive"; }
};

class GenerationError : public Error {
public:
    GenerationError(const std::string& what, std::vector<std::string> causes)
        : Error(what), causes_(std::move(causes)) {}

    const std::vector<std::string>& causes() const noexcept { return causes_; }

private:
    std::vector<std::string> causes_;
};

struct GeneratedAnswer {
    std::string text;
    std::string backend;
    bool used_fallback = false;
    std::string error; ///< backend failure that triggered the fallback
};

struct GenerationOptions {
    /// Substitute the extractive answer when the backend fails.
    bool fallback = true;
    std::size_t parallelism = 4;
};

/// One answer per context for the first `k` contexts, in order. Backend
/// failures fall back to the extractive answer for that context; with the
/// fallback disabled any failure raises GenerationError listing every cause.
inline std::vector<GeneratedAnswer> generate_answers(const std::string& question, const std::vector<Context>& contexts,
                                                     GenerationBackend& backend, std::size_t k,
                                                     const GenerationOptions& options = {}) {
    if (k < 1) throw ContractError("generate_answers: K must be at least 1");
    if (contexts.size() < k)
        throw ContractError("generate_answers: " + std::to_string(contexts.size()) + " contexts for K=" +
                            std::to_string(k));

    std::vector<GeneratedAnswer> out(k);
    std::vector<std::string> causes;
    const std::size_t width = std::max<std::size_t>(1, options.parallelism);
    for (std::size_t begin = 0; begin < k; begin += width) {
        const std::size_t end = std::min(k, begin + width);
        std::vector<std::future<std::string>> pending;
        for (std::size_t i = begin; i < end; ++i) {
            pending.push_back(std::async(std::launch::async,
                                         [&, i] { return backend.generate(question, contexts[i]); }));
        }
        for (std::size_t i = begin; i < end; ++i) {
            auto& slot = out[i];
            try {
                slot.text = pending[i - begin].get();
                slot.backend = backend.tag();
            } catch (const std::exception& e) {
                causes.push_back("context " + std::to_string(i + 1) + ": " + e.what());
                slot.error = e.what();
                slot.used_fallback = true;
                slot.backend = "extractive";
                slot.text = contexts[i].retrieved_answer;
            }
        }
    }
    if (!options.fallback && !causes.empty()) {
        std::string what = "generation failed for " + std::to_string(causes.size()) + " of " + std::to_string(k) +
                           " contexts";
        throw GenerationError(what, std::move(causes));
    }
    return out;
}

} // namespace clarifyd::genctx
