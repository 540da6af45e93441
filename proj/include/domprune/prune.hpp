#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "domprune/errors.hpp"
#include "domprune/extract.hpp"
#include "domprune/scoring.hpp"

namespace domprune {

struct CandidateEntry {
    int element_id = 0;
    std::string tag;
    std::string display_text;
    double score = 0.0;
    int doc_order_index = 0;
};

struct CandidateList {
    std::vector<CandidateEntry> entries;
    int n_limit = 20;

    bool contains(int element_id) const {
        for (const auto& e : entries)
            if (e.element_id == element_id) return true;
        return false;
    }

    const CandidateEntry* find(int element_id) const {
        for (const auto& e : entries)
            if (e.element_id == element_id) return &e;
        return nullptr;
    }
};

namespace detail {

constexpr std::size_t kDisplayTextLimit = 200;

inline std::string sanitize_display_text(std::string text) {
    for (char& c : text)
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    if (text.size() > kDisplayTextLimit) {
        std::size_t cut = kDisplayTextLimit;
        // Do not split a UTF-8 sequence.
        while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
        text = text.substr(0, cut) + "...";
    }
    return text;
}

inline std::string display_text_for(const ElementRecord& el) {
    for (const auto& [text, kind] : el.attribute_texts)
        if (kind.tier == AttrTier::VisualText) return sanitize_display_text(text);
    for (const auto& [text, kind] : el.attribute_texts)
        if (kind.tier == AttrTier::TrustedAttribute) return sanitize_display_text(text);
    return sanitize_display_text(el.context_text);
}

}  // namespace detail

inline CandidateList top_n(const std::vector<ScoreResult>& results, const std::vector<ElementRecord>& elements,
                           int n, bool include_zero_scores = false) {
    CandidateList list;
    list.n_limit = n;

    std::vector<std::size_t> order;
    order.reserve(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!include_zero_scores && results[i].score <= 0.0) continue;
        order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (results[a].score != results[b].score) return results[a].score > results[b].score;
        return elements[a].doc_order_index < elements[b].doc_order_index;
    });
    if (order.size() > static_cast<std::size_t>(n)) order.resize(static_cast<std::size_t>(n));

    for (std::size_t i : order) {
        const ElementRecord& el = elements[i];
        CandidateEntry entry;
        entry.element_id = results[i].element_id;
        entry.tag = el.tag;
        entry.display_text = detail::display_text_for(el);
        entry.score = results[i].score;
        entry.doc_order_index = el.doc_order_index;
        list.entries.push_back(std::move(entry));
    }
    return list;
}

inline std::string serialize_candidates(const CandidateList& list) {
    std::string out;
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
        const CandidateEntry& e = list.entries[i];
        if (i > 0) out += '\n';
        out += '[';
        out += std::to_string(e.element_id);
        out += "]<";
        out += e.tag;
        out += '>';
        out += e.display_text;
        out += "</";
        out += e.tag;
        out += '>';
    }
    return out;
}

inline double reduction_ratio(int total_interactive, int kept) {
    if (kept == 0) throw DomainError("reduction ratio undefined for an empty candidate list");
    return static_cast<double>(total_interactive) / static_cast<double>(kept);
}

}  // namespace domprune
