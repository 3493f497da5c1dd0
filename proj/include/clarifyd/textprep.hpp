// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The clarifyd Authors

#pragma once

// Text normalization shared by every scorer: noise removal, tokenization and
// a small rule-based English lemmatizer. Query and corpus text always pass
// through the same functions, so scores stay comparable even where a lemma is
// linguistically imperfect.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace clarifyd::textprep {

namespace detail {

inline bool is_ascii_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_token_char(unsigned char c) {
    return std::isalnum(c) != 0 || c == '_' || c >= 0x80;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && is_ascii_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && is_ascii_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline bool istarts_with(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) != std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    }
    return true;
}

inline std::size_t ifind(std::string_view s, std::string_view needle, std::size_t from = 0) {
    if (needle.empty()) return from;
    for (std::size_t i = from; i + needle.size() <= s.size(); ++i) {
        if (istarts_with(s.substr(i), needle)) return i;
    }
    return std::string_view::npos;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (true) {
        const std::size_t nl = text.find('\n', start);
        std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return lines;
}

// `at com.example.Foo.bar(Foo.java:42)`: at least package, class and method.
inline bool is_jvm_frame(std::string_view line) {
    std::string_view s = trim(line);
    if (s.size() < 3 || s.substr(0, 2) != "at" || !is_ascii_space(static_cast<unsigned char>(s[2]))) return false;
    s.remove_prefix(2);
    s = trim(s);
    std::size_t i = 0;
    int dots = 0;
    bool last_was_dot = true;
    for (; i < s.size() && s[i] != '('; ++i) {
        const auto c = static_cast<unsigned char>(s[i]);
        if (c == '.') {
            if (last_was_dot) return false;
            ++dots;
            last_was_dot = true;
        } else if (std::isalnum(c) || c == '_' || c == '$' || c == '<' || c == '>') {
            last_was_dot = false;
        } else {
            return false;
        }
    }
    return i < s.size() && dots >= 2 && !last_was_dot && s.back() == ')';
}

inline bool is_indented_at_line(std::string_view line) {
    if (line.empty() || !is_ascii_space(static_cast<unsigned char>(line.front()))) return false;
    const std::string_view s = trim(line);
    return s.size() > 3 && s.substr(0, 2) == "at" && is_ascii_space(static_cast<unsigned char>(s[2]));
}

inline bool is_traceback_header(std::string_view line) {
    return line.find("Traceback (most recent call last)") != std::string_view::npos;
}

// Final line of a Python traceback: `ValueError: ...`, `KeyboardInterrupt`.
inline bool is_exception_summary(std::string_view line) {
    const std::string_view s = trim(line);
    std::size_t i = 0;
    while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_' || s[i] == '.')) ++i;
    const std::string_view name = s.substr(0, i);
    if (name.empty() || (i < s.size() && s[i] != ':')) return false;
    for (std::string_view suffix : {"Error", "Exception", "Exit", "Interrupt"}) {
        if (name.size() >= suffix.size() && name.substr(name.size() - suffix.size()) == suffix) return true;
    }
    return false;
}

inline std::vector<bool> stack_trace_mask(const std::vector<std::string_view>& lines) {
    std::vector<bool> drop(lines.size(), false);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (is_jvm_frame(lines[i])) drop[i] = true;
        if (is_traceback_header(lines[i])) {
            drop[i] = true;
            std::size_t j = i + 1;
            while (j < lines.size() && !lines[j].empty() && is_ascii_space(static_cast<unsigned char>(lines[j].front()))) {
                drop[j++] = true;
            }
            if (j < lines.size() && is_exception_summary(lines[j])) drop[j] = true;
        }
    }
    for (std::size_t i = 0; i < lines.size();) {
        std::size_t j = i;
        while (j < lines.size() && is_indented_at_line(lines[j])) ++j;
        if (j - i >= 3) std::fill(drop.begin() + static_cast<std::ptrdiff_t>(i), drop.begin() + static_cast<std::ptrdiff_t>(j), true);
        i = (j == i) ? i + 1 : j;
    }
    return drop;
}

inline constexpr std::array<std::string_view, 14> kMediaExtensions{
    ".png", ".jpg", ".jpeg", ".gif", ".bmp", ".svg", ".webp", ".mp4", ".mov", ".webm", ".avi", ".mkv", ".m4v", ".gifv"};

inline bool url_start_at(std::string_view s, std::size_t i) {
    if (i > 0 && is_token_char(static_cast<unsigned char>(s[i - 1]))) return false;
    const std::string_view rest = s.substr(i);
    return istarts_with(rest, "http://") || istarts_with(rest, "https://") || istarts_with(rest, "www.");
}

inline std::size_t url_end(std::string_view s, std::size_t i) {
    while (i < s.size()) {
        const char c = s[i];
        if (is_ascii_space(static_cast<unsigned char>(c)) || c == ')' || c == ']' || c == '>' || c == '<' || c == '"' ||
            c == '\'')
            break;
        ++i;
    }
    return i;
}

// Returns [begin, end) of `![alt](target)` starting at `i`, if present.
inline std::optional<std::size_t> markdown_image_end(std::string_view s, std::size_t i) {
    if (s.substr(i, 2) != "![") return std::nullopt;
    const std::size_t close = s.find("](", i + 2);
    if (close == std::string_view::npos) return std::nullopt;
    if (s.substr(i + 2, close - i - 2).find('\n') != std::string_view::npos) return std::nullopt;
    const std::size_t paren = s.find(')', close + 2);
    if (paren == std::string_view::npos) return std::nullopt;
    return paren + 1;
}

// Returns the end of a `<img ...>` or `<video ...>...</video>` element at `i`.
inline std::optional<std::size_t> html_media_end(std::string_view s, std::size_t i) {
    const std::string_view rest = s.substr(i);
    if (istarts_with(rest, "<img")) {
        const std::size_t gt = s.find('>', i);
        return gt == std::string_view::npos ? s.size() : gt + 1;
    }
    if (istarts_with(rest, "<video")) {
        const std::size_t close = ifind(s, "</video>", i);
        if (close != std::string_view::npos) return close + 8;
        const std::size_t gt = s.find('>', i);
        return gt == std::string_view::npos ? s.size() : gt + 1;
    }
    return std::nullopt;
}

inline bool is_kept_punct(unsigned char c) {
    static constexpr std::string_view kKeep = "_.,:;?!'\"()-+=/#@$%&";
    return kKeep.find(static_cast<char>(c)) != std::string_view::npos;
}

inline bool is_escape_letter(char c) {
    static constexpr std::string_view kEscapes = "ntrfvab0'\"\\";
    return kEscapes.find(c) != std::string_view::npos;
}

// One normalization pass. Every rewrite either shortens the text or turns a
// non-space byte into a space, so iterating reaches a fixed point.
inline std::string clean_pass(std::string_view text) {
    // Stack traces are line-structured; handle them before anything merges lines.
    const auto lines = split_lines(text);
    const auto drop = stack_trace_mask(lines);
    std::string joined;
    joined.reserve(text.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i > 0) joined.push_back('\n');
        if (!drop[i]) joined.append(lines[i]);
    }

    std::string out;
    out.reserve(joined.size());
    const std::string_view s = joined;
    for (std::size_t i = 0; i < s.size();) {
        if (auto end = markdown_image_end(s, i)) {
            out.push_back(' ');
            i = *end;
            continue;
        }
        if (s[i] == '<') {
            if (auto end = html_media_end(s, i)) {
                out.push_back(' ');
                i = *end;
                continue;
            }
        }
        if (s[i] == '[') {
            // [label](target) keeps the label only.
            const std::size_t close = s.find("](", i + 1);
            if (close != std::string_view::npos && s.substr(i + 1, close - i - 1).find_first_of("[\n") == std::string_view::npos) {
                const std::size_t paren = s.find(')', close + 2);
                if (paren != std::string_view::npos) {
                    const std::string_view target = s.substr(close + 2, paren - close - 2);
                    if (std::none_of(target.begin(), target.end(),
                                     [](char c) { return is_ascii_space(static_cast<unsigned char>(c)); })) {
                        out.push_back(' ');
                        out.append(s.substr(i + 1, close - i - 1));
                        out.push_back(' ');
                        i = paren + 1;
                        continue;
                    }
                }
            }
        }
        if (url_start_at(s, i)) {
            out.push_back(' ');
            i = url_end(s, i);
            continue;
        }
        if (s[i] == '\\' && i + 1 < s.size() && is_escape_letter(s[i + 1])) {
            out.push_back(' ');
            i += 2;
            continue;
        }
        const auto c = static_cast<unsigned char>(s[i]);
        if (std::isalnum(c) || c >= 0x80 || is_kept_punct(c)) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back(' ');
        }
        ++i;
    }

    std::string collapsed;
    collapsed.reserve(out.size());
    for (const char c : out) {
        if (is_ascii_space(static_cast<unsigned char>(c))) {
            if (!collapsed.empty() && collapsed.back() != ' ') collapsed.push_back(' ');
        } else {
            collapsed.push_back(c);
        }
    }
    if (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
    return collapsed;
}

} // namespace detail

/// True when the text carries a JVM frame, a Python traceback, or a run of
/// three or more indented `at ...` lines.
inline bool contains_stack_trace(std::string_view text) {
    const auto mask = detail::stack_trace_mask(detail::split_lines(text));
    return std::find(mask.begin(), mask.end(), true) != mask.end();
}

/// True when the text embeds an image or video: markdown images, `<img>` or
/// `<video>` tags, or links to media files.
inline bool contains_media_markup(std::string_view text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (detail::markdown_image_end(text, i)) return true;
        if (text[i] == '<' && detail::html_media_end(text, i)) return true;
        if (detail::url_start_at(text, i)) {
            const std::size_t end = detail::url_end(text, i);
            const std::string_view url = text.substr(i, end - i);
            if (detail::ifind(url, "user-attachments/assets") != std::string_view::npos) return true;
            for (const auto ext : detail::kMediaExtensions) {
                const std::size_t pos = detail::ifind(url, ext);
                if (pos != std::string_view::npos) {
                    const std::size_t after = pos + ext.size();
                    if (after == url.size() || url[after] == '?' || url[after] == '#') return true;
                }
            }
            i = end;
        }
    }
    return false;
}

/// Strips URLs, media markup, escape sequences, stack traces and decorative
/// punctuation, then collapses whitespace. Idempotent.
inline std::string clean(std::string_view text) {
    std::string current = detail::clean_pass(text);
    while (true) {
        std::string next = detail::clean_pass(current);
        if (next == current) return current;
        current = std::move(next);
    }
}

struct TokenStream {
    std::vector<std::string> tokens;
    /// Byte span [first, second) of each token in the text it came from.
    std::vector<std::pair<std::size_t, std::size_t>> spans;

    bool empty() const noexcept { return tokens.empty(); }
    std::size_t size() const noexcept { return tokens.size(); }
};

/// Maximal runs of ASCII alphanumerics, `_` and non-ASCII bytes, lowercased.
inline TokenStream tokenize(std::string_view text) {
    TokenStream out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !detail::is_token_char(static_cast<unsigned char>(text[i]))) ++i;
        const std::size_t start = i;
        while (i < text.size() && detail::is_token_char(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) {
            std::string tok(text.substr(start, i - start));
            for (char& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            out.tokens.push_back(std::move(tok));
            out.spans.emplace_back(start, i);
        }
    }
    return out;
}

namespace detail {

inline const std::unordered_map<std::string_view, std::string_view>& irregular_forms() {
    static const std::unordered_map<std::string_view, std::string_view> table{
        {"am", "be"},          {"is", "be"},          {"are", "be"},         {"was", "be"},
        {"were", "be"},        {"been", "be"},        {"being", "be"},       {"did", "do"},
        {"does", "do"},        {"done", "do"},        {"doing", "do"},       {"has", "have"},
        {"had", "have"},       {"having", "have"},    {"went", "go"},        {"gone", "go"},
        {"ran", "run"},        {"made", "make"},      {"got", "get"},        {"gotten", "get"},
        {"found", "find"},     {"built", "build"},    {"wrote", "write"},    {"written", "write"},
        {"saw", "see"},        {"seen", "see"},       {"took", "take"},      {"taken", "take"},
        {"gave", "give"},      {"given", "give"},     {"knew", "know"},      {"known", "know"},
        {"thought", "think"},  {"brought", "bring"},  {"sent", "send"},      {"kept", "keep"},
        {"left", "leave"},     {"children", "child"}, {"men", "man"},        {"women", "woman"},
        {"mice", "mouse"},     {"feet", "foot"},      {"used", "use"},       {"using", "use"},
        {"caused", "cause"},   {"causing", "cause"},  {"added", "add"},      {"adding", "add"},
        {"changed", "change"}, {"changing", "change"}, {"during", "during"}, {"nothing", "nothing"},
        {"something", "something"}, {"anything", "anything"}, {"everything", "everything"},
        {"morning", "morning"}, {"evening", "evening"}, {"ceiling", "ceiling"},
        {"this", "this"},      {"thus", "thus"},      {"always", "always"},  {"perhaps", "perhaps"},
        {"news", "news"},      {"series", "series"},  {"species", "species"},
    };
    return table;
}

inline bool is_vowel_at(std::string_view w, std::size_t i) {
    switch (w[i]) {
    case 'a': case 'e': case 'i': case 'o': case 'u': return true;
    case 'y': return i > 0 && !is_vowel_at(w, i - 1);
    default: return false;
    }
}

inline bool has_vowel(std::string_view w) {
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (is_vowel_at(w, i)) return true;
    }
    return false;
}

// Number of vowel-consonant sequences, as in Porter's measure.
inline int measure(std::string_view w) {
    int m = 0;
    bool prev_vowel = false;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const bool v = is_vowel_at(w, i);
        if (prev_vowel && !v) ++m;
        prev_vowel = v;
    }
    return m;
}

inline bool ends_cvc(std::string_view w) {
    if (w.size() < 3) return false;
    const std::size_t n = w.size();
    const char last = w[n - 1];
    return !is_vowel_at(w, n - 3) && is_vowel_at(w, n - 2) && !is_vowel_at(w, n - 1) && last != 'w' &&
           last != 'x' && last != 'y';
}

inline bool ends_with(std::string_view w, std::string_view suffix) {
    return w.size() >= suffix.size() && w.substr(w.size() - suffix.size()) == suffix;
}

// Repairs a stem left behind by removing -ed / -ing.
inline std::string restore_stem(std::string stem) {
    const std::size_t n = stem.size();
    if (ends_with(stem, "at") || ends_with(stem, "bl") || ends_with(stem, "iz") || ends_with(stem, "v")) return stem + "e";
    if (n >= 3 && is_vowel_at(stem, n - 3) && is_vowel_at(stem, n - 2) && stem[n - 1] == 's') return stem + "e";
    if (n >= 2 && is_vowel_at(stem, n - 2) && stem[n - 1] == 'c') return stem + "e";
    if (n >= 2 && stem[n - 1] == stem[n - 2] && !is_vowel_at(stem, n - 1) && stem[n - 1] != 'l' && stem[n - 1] != 's' &&
        stem[n - 1] != 'z') {
        stem.pop_back();
        return stem;
    }
    if (measure(stem) == 1 && ends_cvc(stem)) return stem + "e";
    return stem;
}

inline std::optional<std::string> lemma_step(std::string_view w) {
    const auto& irregular = irregular_forms();
    if (auto it = irregular.find(w); it != irregular.end()) return std::string(it->second);
    if (w.size() < 4) return std::nullopt;
    if (!std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; })) return std::nullopt;

    auto strip = [&](std::size_t n) { return std::string(w.substr(0, w.size() - n)); };

    if (ends_with(w, "sses")) return strip(2);
    if (ends_with(w, "ies") && w.size() > 4) return strip(3) + "y";
    if (ends_with(w, "xes") || ends_with(w, "ches") || ends_with(w, "shes") || ends_with(w, "oes")) return strip(2);
    if (ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") && !ends_with(w, "is")) return strip(1);
    if (ends_with(w, "ied") && w.size() > 4) return strip(3) + "y";
    if (ends_with(w, "eed")) return std::nullopt;
    if (ends_with(w, "ed")) {
        const std::string stem = strip(2);
        if (stem.size() >= 2 && has_vowel(stem)) return restore_stem(stem);
        return std::nullopt;
    }
    if (ends_with(w, "ing")) {
        const std::string stem = strip(3);
        if (stem.size() >= 2 && has_vowel(stem)) return restore_stem(stem);
        return std::nullopt;
    }
    return std::nullopt;
}

} // namespace detail

/// Base form of a single lowercase token; identifiers with digits or `_`
/// pass through unchanged.
inline std::string lemmatize_token(std::string_view token) {
    std::string current(token);
    // Each step strictly shortens the word or maps it to a fixed irregular form.
    for (int guard = 0; guard < 16; ++guard) {
        auto next = detail::lemma_step(current);
        if (!next || *next == current) break;
        current = std::move(*next);
    }
    return current;
}

inline std::vector<std::string> lemmatize(const std::vector<std::string>& tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(lemmatize_token(t));
    return out;
}

inline TokenStream lemmatize(TokenStream stream) {
    for (auto& t : stream.tokens) t = lemmatize_token(t);
    return stream;
}

/// clean → tokenize → lemmatize: the form every lexical scorer consumes.
inline std::vector<std::string> preprocess(std::string_view text) {
    return lemmatize(tokenize(clean(text)).tokens);
}

/// clean → tokenize, keeping surface forms (embedding lookups, metrics).
inline std::vector<std::string> surface_tokens(std::string_view text) {
    return tokenize(clean(text)).tokens;
}

} // namespace clarifyd::textprep
