#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace domprune {

inline bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
    return out;
}

/// Case-fold and collapse whitespace runs to single spaces, trimming ends.
inline std::string normalize_text(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (is_ascii_space(c)) {
            if (!out.empty()) pending_space = true;
        } else {
            if (pending_space) {
                out += ' ';
                pending_space = false;
            }
            out += ascii_lower(c);
        }
    }
    return out;
}

/// Word characters are ASCII alphanumerics plus any non-ASCII byte, so
/// multi-byte UTF-8 sequences stay inside one token.
inline bool is_word_char(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || u >= 0x80;
}

/// Split into maximal word-character runs (whitespace and punctuation both
/// act as boundaries). Input is expected lowercased already; tokens are
/// lowercased regardless.
inline std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : s) {
        if (is_word_char(c)) {
            cur += ascii_lower(c);
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

namespace detail {

// Porter stemmer, original algorithm. Operates on lowercase ASCII words;
// words shorter than 3 characters are returned unchanged, as are tokens
// containing non-alphabetic bytes.
class PorterStemmer {
public:
    static std::string stem(std::string_view word) {
        if (word.size() < 3) return std::string(word);
        for (char c : word)
            if (c < 'a' || c > 'z') return std::string(word);
        PorterStemmer p(word);
        p.step1a();
        p.step1b();
        p.step1c();
        p.step2();
        p.step3();
        p.step4();
        p.step5a();
        p.step5b();
        return p.w_;
    }

private:
    explicit PorterStemmer(std::string_view word) : w_(word) {}

    bool is_consonant(std::size_t i) const {
        char c = w_[i];
        if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return false;
        if (c == 'y') return i == 0 ? true : !is_consonant(i - 1);
        return true;
    }

    // Number of VC sequences in w_[0..end).
    int measure(std::size_t end) const {
        int m = 0;
        std::size_t i = 0;
        while (i < end && is_consonant(i)) ++i;
        while (i < end) {
            while (i < end && !is_consonant(i)) ++i;
            if (i >= end) break;
            ++m;
            while (i < end && is_consonant(i)) ++i;
        }
        return m;
    }

    bool has_vowel(std::size_t end) const {
        for (std::size_t i = 0; i < end; ++i)
            if (!is_consonant(i)) return true;
        return false;
    }

    bool ends_double_consonant() const {
        std::size_t n = w_.size();
        return n >= 2 && w_[n - 1] == w_[n - 2] && is_consonant(n - 1);
    }

    // cvc at the end, where the final c is not w, x or y.
    bool ends_cvc(std::size_t end) const {
        if (end < 3) return false;
        if (!is_consonant(end - 3) || is_consonant(end - 2) || !is_consonant(end - 1)) return false;
        char c = w_[end - 1];
        return c != 'w' && c != 'x' && c != 'y';
    }

    bool ends_with(std::string_view suffix) const {
        return w_.size() >= suffix.size() && std::string_view(w_).substr(w_.size() - suffix.size()) == suffix;
    }

    std::size_t stem_len(std::string_view suffix) const { return w_.size() - suffix.size(); }

    // Replace suffix if the measure of the remaining stem is > min_m.
    bool replace_if(std::string_view suffix, std::string_view repl, int min_m) {
        if (!ends_with(suffix)) return false;
        std::size_t sl = stem_len(suffix);
        if (measure(sl) <= min_m) return true;  // matched, condition failed: stop rule scan
        w_.resize(sl);
        w_.append(repl);
        return true;
    }

    void step1a() {
        if (ends_with("sses"))
            w_.resize(w_.size() - 2);
        else if (ends_with("ies"))
            w_.resize(w_.size() - 2);
        else if (ends_with("ss"))
            ;
        else if (ends_with("s"))
            w_.resize(w_.size() - 1);
    }

    void step1b() {
        if (ends_with("eed")) {
            if (measure(stem_len("eed")) > 0) w_.resize(w_.size() - 1);
            return;
        }
        bool removed = false;
        if (ends_with("ed") && has_vowel(stem_len("ed"))) {
            w_.resize(stem_len("ed"));
            removed = true;
        } else if (ends_with("ing") && has_vowel(stem_len("ing"))) {
            w_.resize(stem_len("ing"));
            removed = true;
        }
        if (!removed) return;
        if (ends_with("at") || ends_with("bl") || ends_with("iz")) {
            w_ += 'e';
        } else if (ends_double_consonant()) {
            char c = w_.back();
            if (c != 'l' && c != 's' && c != 'z') w_.resize(w_.size() - 1);
        } else if (measure(w_.size()) == 1 && ends_cvc(w_.size())) {
            w_ += 'e';
        }
    }

    void step1c() {
        if (ends_with("y") && has_vowel(w_.size() - 1)) w_.back() = 'i';
    }

    void step2() {
        static constexpr std::pair<std::string_view, std::string_view> rules[] = {
            {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"}, {"izer", "ize"},
            {"bli", "ble"},     {"alli", "al"},     {"entli", "ent"}, {"eli", "e"},     {"ousli", "ous"},
            {"ization", "ize"}, {"ation", "ate"},   {"ator", "ate"},  {"alism", "al"},  {"iveness", "ive"},
            {"fulness", "ful"}, {"ousness", "ous"}, {"aliti", "al"},  {"iviti", "ive"}, {"biliti", "ble"},
            {"logi", "log"},
        };
        for (const auto& [suf, rep] : rules)
            if (replace_if(suf, rep, 0)) return;
    }

    void step3() {
        static constexpr std::pair<std::string_view, std::string_view> rules[] = {
            {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
            {"ical", "ic"},  {"ful", ""},   {"ness", ""},
        };
        for (const auto& [suf, rep] : rules)
            if (replace_if(suf, rep, 0)) return;
    }

    void step4() {
        static constexpr std::string_view suffixes[] = {
            "al",  "ance", "ence", "er",  "ic",  "able", "ible", "ant", "ement", "ment",
            "ent", "ion",  "ou",   "ism", "ate", "iti",  "ous",  "ive", "ize",
        };
        for (std::string_view suf : suffixes) {
            if (!ends_with(suf)) continue;
            std::size_t sl = stem_len(suf);
            if (suf == "ion" && !(sl >= 1 && (w_[sl - 1] == 's' || w_[sl - 1] == 't'))) continue;
            if (measure(sl) > 1) w_.resize(sl);
            return;
        }
    }

    void step5a() {
        if (!ends_with("e")) return;
        std::size_t sl = w_.size() - 1;
        int m = measure(sl);
        if (m > 1 || (m == 1 && !ends_cvc(sl))) w_.resize(sl);
    }

    void step5b() {
        if (w_.size() >= 2 && w_.back() == 'l' && w_[w_.size() - 2] == 'l' && measure(w_.size()) > 1)
            w_.resize(w_.size() - 1);
    }

    std::string w_;
};

}  // namespace detail

inline std::string porter_stem(std::string_view word) { return detail::PorterStemmer::stem(word); }

struct NormalizedText {
    std::string normalized;
    std::vector<std::string> tokens;
    std::vector<std::string> stems;
};

/// Case-fold, collapse whitespace, tokenize on word boundaries and stem
/// each token.
inline NormalizedText normalize_and_stem(std::string_view text) {
    NormalizedText out;
    out.normalized = normalize_text(text);
    out.tokens = tokenize(out.normalized);
    out.stems.reserve(out.tokens.size());
    for (const auto& t : out.tokens) out.stems.push_back(porter_stem(t));
    return out;
}

/// Levenshtein distance with unit costs.
inline std::size_t edit_distance(std::string_view a, std::string_view b) {
    if (a.size() > b.size()) std::swap(a, b);
    std::vector<std::size_t> row(a.size() + 1);
    for (std::size_t i = 0; i <= a.size(); ++i) row[i] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
        std::size_t prev_diag = row[0];
        row[0] = j;
        for (std::size_t i = 1; i <= a.size(); ++i) {
            std::size_t tmp = row[i];
            std::size_t cost = (a[i - 1] == b[j - 1]) ? 0 : 1;
            row[i] = std::min({row[i] + 1, row[i - 1] + 1, prev_diag + cost});
            prev_diag = tmp;
        }
    }
    return row[a.size()];
}

/// 1 - editdistance/max(len); 0 when exactly one side is empty, 1 when both
/// are.
inline double similarity(std::string_view a, std::string_view b) {
    std::size_t longer = std::max(a.size(), b.size());
    if (longer == 0) return 1.0;
    return 1.0 - static_cast<double>(edit_distance(a, b)) / static_cast<double>(longer);
}

/// Best normalized similarity of the keyword against the whole text and
/// each token.
inline double fuzzy_score(std::string_view keyword, std::string_view text,
                          const std::vector<std::string>& tokens) {
    double best = similarity(keyword, text);
    for (const auto& t : tokens) best = std::max(best, similarity(keyword, t));
    return best;
}

}  // namespace domprune
