#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "domprune/errors.hpp"
#include "domprune/extract.hpp"
#include "domprune/text.hpp"

namespace domprune {

class KeywordWeights {
public:
    KeywordWeights() = default;

    const std::vector<std::pair<std::string, int>>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

    int max_weight() const {
        int m = 0;
        for (const auto& [k, w] : entries_)
            if (w > m) m = w;
        return m;
    }

    static KeywordWeights validated(const std::vector<std::pair<std::string, int>>& raw) {
        KeywordWeights out;
        for (const auto& [key, weight] : raw) {
            std::string folded = normalize_text(key);
            if (folded.empty()) throw InvalidWeights("keyword is empty after normalization", key);
            if (weight < 1 || weight > 50)
                throw InvalidWeights("weight " + std::to_string(weight) + " outside [1,50]", key);
            bool merged = false;
            for (const auto& [k, w] : out.entries_) {
                if (k != folded) continue;
                if (w != weight)
                    throw InvalidWeights("conflicting weights " + std::to_string(w) + " and " +
                                             std::to_string(weight) + " after case-folding",
                                         key);
                merged = true;
                break;
            }
            if (!merged) out.entries_.emplace_back(std::move(folded), weight);
        }
        return out;
    }

private:
    std::vector<std::pair<std::string, int>> entries_;
};

inline KeywordWeights validate_weights(const std::vector<std::pair<std::string, int>>& raw) {
    return KeywordWeights::validated(raw);
}

struct ScoringConfig {
    double alpha1 = 1.0;   // exact match
    double alpha2 = 0.75;  // phrase match
    double alpha3 = 0.5;   // word match
    double alpha4 = 0.25;  // fuzzy match
    double beta1 = 2.0;    // visible text
    double beta2 = 1.5;    // trusted attribute
    double beta3 = 1.0;    // other attribute
    double theta = 0.85;   // fuzzy acceptance threshold
    double top_weight_bonus = 0.0;
    double visual_text_bonus = 0.0;

    void validate() const {
        if (!(alpha1 > alpha2 && alpha2 > alpha3 && alpha3 > alpha4 && alpha4 > 0))
            throw ConfigError("match-quality multipliers must satisfy alpha1 > alpha2 > alpha3 > alpha4 > 0");
        if (!(beta1 > beta2 && beta2 > beta3 && beta3 > 0))
            throw ConfigError("attribute-priority multipliers must satisfy beta1 > beta2 > beta3 > 0");
        if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("theta must lie in (0,1)");
        if (top_weight_bonus < 0 || visual_text_bonus < 0) throw ConfigError("bonuses must be >= 0");
    }

    double beta_for(const AttributeKind& kind) const {
        switch (kind.tier) {
            case AttrTier::VisualText: return beta1;
            case AttrTier::TrustedAttribute: return beta2;
            case AttrTier::OtherAttribute: return beta3;
        }
        return beta3;
    }
};

enum class MatchType { Exact, Phrase, Word, Fuzzy };

inline std::string_view match_type_name(MatchType t) {
    switch (t) {
        case MatchType::Exact: return "exact";
        case MatchType::Phrase: return "phrase";
        case MatchType::Word: return "word";
        case MatchType::Fuzzy: return "fuzzy";
    }
    return "";
}

struct MatchPath {
    std::string keyword;
    AttributeKind attr_kind;
    MatchType match_type = MatchType::Exact;
    double alpha_applied = 0.0;
    double contribution = 0.0;
};

struct ScoreResult {
    int element_id = 0;
    double score = 0.0;
    std::vector<MatchPath> paths;
};

struct MatchOutcome {
    std::optional<MatchType> type;
    double alpha = 0.0;
};

/// First match wins: exact equality, then phrase containment for multi-word
/// keywords, then token or stem membership for single words, then fuzzy
/// similarity above theta (with alpha scaled by the similarity itself).
inline MatchOutcome classify_match(std::string_view keyword, std::string_view text,
                                   const std::vector<std::string>& tokens,
                                   const std::vector<std::string>& stems, const ScoringConfig& cfg) {
    if (text == keyword) return {MatchType::Exact, cfg.alpha1};
    bool has_space = keyword.find(' ') != std::string_view::npos;
    if (has_space) {
        if (text.find(keyword) != std::string_view::npos) return {MatchType::Phrase, cfg.alpha2};
    } else {
        std::string kw(keyword);
        for (const auto& t : tokens)
            if (t == kw) return {MatchType::Word, cfg.alpha3};
        std::string ks = porter_stem(kw);
        for (const auto& s : stems)
            if (s == ks) return {MatchType::Word, cfg.alpha3};
    }
    double fs = fuzzy_score(keyword, text, tokens);
    if (fs > cfg.theta) return {MatchType::Fuzzy, cfg.alpha4 * fs};
    return {std::nullopt, 0.0};
}

inline std::vector<ScoreResult> score_elements(const std::vector<ElementRecord>& elements,
                                               const KeywordWeights& weights,
                                               const ScoringConfig& cfg = {}) {
    cfg.validate();
    for (const auto& [k, w] : weights.entries())
        if (w < 1 || w > 50)
            throw InvalidWeights("weight " + std::to_string(w) + " outside [1,50]", k);

    int max_w = weights.max_weight();
    std::vector<ScoreResult> out;
    out.reserve(elements.size());
    for (const auto& el : elements) {
        ScoreResult res;
        res.element_id = el.element_id;

        std::vector<std::pair<std::string, AttributeKind>> texts = el.attribute_texts;
        if (!el.context_text.empty()) texts.emplace_back(el.context_text, visual_text_kind());

        for (const auto& [raw_text, kind] : texts) {
            NormalizedText nt = normalize_and_stem(raw_text);
            for (const auto& [keyword, weight] : weights.entries()) {
                MatchOutcome m = classify_match(keyword, nt.normalized, nt.tokens, nt.stems, cfg);
                if (!m.type) continue;
                MatchPath path;
                path.keyword = keyword;
                path.attr_kind = kind;
                path.match_type = *m.type;
                path.alpha_applied = m.alpha;
                path.contribution = static_cast<double>(weight) * m.alpha * cfg.beta_for(kind);
                res.paths.push_back(std::move(path));
            }
        }

        if (cfg.top_weight_bonus > 0 && max_w > 0) {
            for (auto& p : res.paths) {
                int w = 0;
                for (const auto& [k, kw_w] : weights.entries())
                    if (k == p.keyword) {
                        w = kw_w;
                        break;
                    }
                if (w == max_w) {
                    p.contribution += cfg.top_weight_bonus;
                    break;
                }
            }
        }
        if (cfg.visual_text_bonus > 0) {
            for (auto& p : res.paths) {
                if (p.attr_kind.tier == AttrTier::VisualText) {
                    p.contribution += cfg.visual_text_bonus;
                    break;
                }
            }
        }

        for (const auto& p : res.paths) res.score += p.contribution;
        out.push_back(std::move(res));
    }
    return out;
}

}  // namespace domprune
