#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "domprune/html.hpp"
#include "domprune/text.hpp"

namespace domprune {

enum class AttrTier { VisualText, TrustedAttribute, OtherAttribute };

struct AttributeKind {
    AttrTier tier = AttrTier::VisualText;
    std::string name;  // empty for VisualText

    bool operator==(const AttributeKind&) const = default;
};

inline AttributeKind visual_text_kind() { return {AttrTier::VisualText, ""}; }
inline AttributeKind trusted_kind(std::string name) { return {AttrTier::TrustedAttribute, std::move(name)}; }
inline AttributeKind other_kind(std::string name) { return {AttrTier::OtherAttribute, std::move(name)}; }

struct ElementRecord {
    int element_id = 0;
    std::string tag;
    std::vector<std::pair<std::string, AttributeKind>> attribute_texts;
    std::string context_text;
    int doc_order_index = 0;
};

struct ExtractionConfig {
    std::unordered_set<std::string> interactive_tags = {
        "a", "button", "input", "select", "textarea", "option", "label", "summary", "details",
    };
    std::unordered_set<std::string> interactive_roles = {
        "button",   "link",   "checkbox", "radio",  "tab",       "menuitem",
        "combobox", "switch", "slider",   "option", "searchbox", "textbox",
    };
    std::unordered_set<std::string> interactive_attributes = {
        "onclick", "onmousedown", "onkeydown", "tabindex", "contenteditable",
    };
    std::vector<std::string> trusted_attributes = {
        "aria-label", "placeholder", "name", "title", "alt", "value",
    };
    std::vector<std::string> overlay_keywords = {"cookie", "consent"};
    bool overlay_keywords_enabled = true;
    bool hidden_filters_enabled = true;
};

namespace detail {

inline std::string style_compact(std::string_view style) {
    std::string out;
    out.reserve(style.size());
    for (char c : style)
        if (!is_ascii_space(c)) out += ascii_lower(c);
    return out;
}

inline bool contains_ci(std::string_view haystack, std::string_view needle) {
    std::string h = to_lower(haystack);
    return h.find(needle) != std::string::npos;
}

}  // namespace detail

inline bool is_interactive(const DomNode& node, const ExtractionConfig& cfg) {
    if (cfg.interactive_tags.count(node.tag)) return true;
    if (const std::string* role = node.attr("role")) {
        if (cfg.interactive_roles.count(to_lower(*role))) return true;
    }
    for (const auto& [name, value] : node.attributes) {
        if (!cfg.interactive_attributes.count(name)) continue;
        if (name == "tabindex" && normalize_text(value) == "-1") continue;
        return true;
    }
    if (const std::string* style = node.attr("style")) {
        if (detail::style_compact(*style).find("cursor:pointer") != std::string::npos) return true;
    }
    if (cfg.overlay_keywords_enabled) {
        const std::string* cls = node.attr("class");
        const std::string* role = node.attr("role");
        for (const auto& kw : cfg.overlay_keywords) {
            if (cls && detail::contains_ci(*cls, kw)) return true;
            if (role && detail::contains_ci(*role, kw)) return true;
        }
    }
    return false;
}

namespace detail {

inline bool self_hidden(const DomNode& node) {
    if (node.has_attr("hidden")) return true;
    if (const std::string* v = node.attr("aria-hidden"); v && to_lower(*v) == "true") return true;
    if (const std::string* style = node.attr("style")) {
        std::string compact = style_compact(*style);
        if (compact.find("display:none") != std::string::npos) return true;
        if (compact.find("visibility:hidden") != std::string::npos) return true;
    }
    if (node.tag == "input") {
        if (const std::string* t = node.attr("type"); t && to_lower(*t) == "hidden") return true;
    }
    return false;
}

}  // namespace detail

inline bool is_visible(const DomNode& node, const Document& doc, const ExtractionConfig& cfg) {
    if (!cfg.hidden_filters_enabled) return true;
    const DomNode* cur = &node;
    while (true) {
        if (detail::self_hidden(*cur)) return false;
        if (cur->parent < 0) return true;
        cur = &doc.node(cur->parent);
    }
}

namespace detail {

/// Visible text of an element's subtree, excluding subtrees rooted at nested
/// interactive elements (those carry their own records).
inline std::string aggregate_visual_text(const Document& doc, int index, const ExtractionConfig& cfg) {
    std::string joined;
    std::vector<int> stack = {index};
    while (!stack.empty()) {
        int i = stack.back();
        stack.pop_back();
        const DomNode& n = doc.node(i);
        if (i != index && is_interactive(n, cfg)) continue;
        if (!n.text.empty()) {
            if (!joined.empty()) joined += ' ';
            joined += n.text;
        }
        for (std::size_t c = n.children.size(); c-- > 0;) stack.push_back(n.children[c]);
    }
    return joined;
}

}  // namespace detail

inline std::vector<std::pair<std::string, AttributeKind>> attach_attribute_texts(const DomNode& node,
                                                                                 const Document& doc,
                                                                                 const ExtractionConfig& cfg) {
    std::vector<std::pair<std::string, AttributeKind>> out;
    std::string visual = detail::aggregate_visual_text(doc, node.doc_order_index, cfg);
    if (!visual.empty()) out.emplace_back(visual, visual_text_kind());

    std::unordered_set<std::string> emitted;
    for (const auto& name : cfg.trusted_attributes) {
        if (const std::string* v = node.attr(name); v && !v->empty()) {
            out.emplace_back(*v, trusted_kind(name));
            emitted.insert(name);
        }
    }
    for (std::string_view name : {"class", "id", "href"}) {
        std::string key(name);
        if (emitted.count(key)) continue;
        if (const std::string* v = node.attr(key); v && !v->empty()) {
            out.emplace_back(*v, other_kind(key));
            emitted.insert(key);
        }
    }
    for (const auto& [name, value] : node.attributes) {
        if (value.empty() || emitted.count(name)) continue;
        out.emplace_back(value, other_kind(name));
        emitted.insert(name);
    }
    return out;
}

namespace detail {

inline std::vector<int> depths(const Document& doc) {
    std::vector<int> d(doc.size(), 0);
    for (std::size_t i = 1; i < doc.size(); ++i)
        d[i] = d[static_cast<std::size_t>(doc.node(static_cast<int>(i)).parent)] + 1;
    return d;
}

inline int tree_distance(const Document& doc, const std::vector<int>& depth, int a, int b) {
    int da = depth[static_cast<std::size_t>(a)];
    int db = depth[static_cast<std::size_t>(b)];
    int dist = 0;
    while (da > db) {
        a = doc.node(a).parent;
        --da;
        ++dist;
    }
    while (db > da) {
        b = doc.node(b).parent;
        --db;
        ++dist;
    }
    while (a != b) {
        a = doc.node(a).parent;
        b = doc.node(b).parent;
        dist += 2;
    }
    return dist;
}

}  // namespace detail

/// Attach free-standing text to the nearest interactive element. Only nodes
/// outside every interactive subtree donate text; text inside an interactive
/// element already belongs to that element's visible text.
inline void attach_context(std::vector<ElementRecord>& records, const Document& doc,
                           const ExtractionConfig& cfg) {
    if (records.empty()) return;
    std::vector<int> depth = detail::depths(doc);

    std::vector<bool> inside_interactive(doc.size(), false);
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const DomNode& n = doc.node(static_cast<int>(i));
        bool parent_inside = n.parent >= 0 && inside_interactive[static_cast<std::size_t>(n.parent)];
        inside_interactive[i] = parent_inside || is_interactive(n, cfg);
    }

    for (std::size_t i = 0; i < doc.size(); ++i) {
        const DomNode& n = doc.node(static_cast<int>(i));
        if (inside_interactive[i] || n.text.empty()) continue;
        int best = -1;
        int best_dist = 0;
        for (const auto& r : records) {
            int dist = detail::tree_distance(doc, depth, static_cast<int>(i), r.doc_order_index);
            if (best < 0 || dist < best_dist) {
                best = r.element_id;
                best_dist = dist;
            }
        }
        ElementRecord& target = records[static_cast<std::size_t>(best)];
        if (!target.context_text.empty()) target.context_text += ' ';
        target.context_text += n.text;
    }
}

inline std::vector<ElementRecord> extract(const Document& doc, const ExtractionConfig& cfg = {}) {
    std::vector<ElementRecord> records;
    for (const auto& n : doc.nodes()) {
        if (!is_interactive(n, cfg)) continue;
        if (!is_visible(n, doc, cfg)) continue;
        ElementRecord r;
        r.element_id = static_cast<int>(records.size());
        r.tag = n.tag;
        r.doc_order_index = n.doc_order_index;
        r.attribute_texts = attach_attribute_texts(n, doc, cfg);
        records.push_back(std::move(r));
    }
    attach_context(records, doc, cfg);
    return records;
}

}  // namespace domprune
