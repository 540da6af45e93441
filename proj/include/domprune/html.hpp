#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "domprune/errors.hpp"
#include "domprune/text.hpp"

namespace domprune {

struct RawDocument {
    std::string html_text;
    std::string source_id;
};

/// One element node in an arena-backed tree. `children` and `parent` are
/// indices into Document::nodes(), which is stored in pre-order, so
/// doc_order_index always equals the node's position in that vector.
struct DomNode {
    std::string tag;                                              // lowercase
    std::vector<std::pair<std::string, std::string>> attributes;  // document order, first wins
    std::string text;  // direct text children, whitespace-normalized
    std::vector<int> children;
    int parent = -1;
    int doc_order_index = 0;

    const std::string* attr(std::string_view name) const {
        for (const auto& [k, v] : attributes)
            if (k == name) return &v;
        return nullptr;
    }
    bool has_attr(std::string_view name) const { return attr(name) != nullptr; }
};

class Document {
public:
    Document() = default;
    explicit Document(std::vector<DomNode> nodes) : nodes_(std::move(nodes)) {}

    const std::vector<DomNode>& nodes() const { return nodes_; }
    const DomNode& root() const { return nodes_.front(); }
    const DomNode& node(int index) const { return nodes_[static_cast<std::size_t>(index)]; }
    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }

    bool operator==(const Document& other) const {
        if (nodes_.size() != other.nodes_.size()) return false;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const DomNode& a = nodes_[i];
            const DomNode& b = other.nodes_[i];
            if (a.tag != b.tag || a.attributes != b.attributes || a.text != b.text ||
                a.children != b.children || a.parent != b.parent)
                return false;
        }
        return true;
    }

private:
    std::vector<DomNode> nodes_;
};

namespace detail {

inline const std::unordered_set<std::string_view>& void_tags() {
    static const std::unordered_set<std::string_view> s = {
        "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
        "track", "wbr",
    };
    return s;
}

inline const std::unordered_set<std::string_view>& head_only_tags() {
    static const std::unordered_set<std::string_view> s = {"title", "meta", "link", "base"};
    return s;
}

// Start tags that imply </p>.
inline const std::unordered_set<std::string_view>& p_closers() {
    static const std::unordered_set<std::string_view> s = {
        "address", "article", "aside", "blockquote", "div",  "dl",   "fieldset", "footer", "form",
        "h1",      "h2",      "h3",    "h4",         "h5",   "h6",   "header",   "hr",     "main",
        "nav",     "ol",      "p",     "pre",        "section", "table", "ul",
    };
    return s;
}

inline void append_utf8(std::string& out, unsigned long cp) {
    if (cp == 0 || cp > 0x10FFFF) cp = 0xFFFD;
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

// Minimal entity decoding: the common named set plus numeric references.
// Unknown entities pass through literally. &nbsp; becomes a plain space so
// downstream whitespace normalization treats it as a separator.
inline std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] != '&') {
            out += s[i++];
            continue;
        }
        std::size_t semi = s.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 12) {
            out += s[i++];
            continue;
        }
        std::string_view name = s.substr(i + 1, semi - i - 1);
        if (name == "amp") {
            out += '&';
        } else if (name == "lt") {
            out += '<';
        } else if (name == "gt") {
            out += '>';
        } else if (name == "quot") {
            out += '"';
        } else if (name == "apos") {
            out += '\'';
        } else if (name == "nbsp") {
            out += ' ';
        } else if (name.size() >= 2 && name[0] == '#') {
            unsigned long cp = 0;
            bool ok = true;
            if (name[1] == 'x' || name[1] == 'X') {
                if (name.size() < 3) ok = false;
                for (std::size_t k = 2; ok && k < name.size(); ++k) {
                    char c = ascii_lower(name[k]);
                    if (c >= '0' && c <= '9')
                        cp = cp * 16 + static_cast<unsigned long>(c - '0');
                    else if (c >= 'a' && c <= 'f')
                        cp = cp * 16 + static_cast<unsigned long>(c - 'a' + 10);
                    else
                        ok = false;
                }
            } else {
                for (std::size_t k = 1; ok && k < name.size(); ++k) {
                    char c = name[k];
                    if (c >= '0' && c <= '9')
                        cp = cp * 10 + static_cast<unsigned long>(c - '0');
                    else
                        ok = false;
                }
            }
            if (!ok) {
                out += s[i++];
                continue;
            }
            append_utf8(out, cp);
        } else {
            out += s[i++];
            continue;
        }
        i = semi + 1;
    }
    return out;
}

// Mutable node used during tree construction, flattened afterwards.
struct BuildNode {
    std::string tag;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<std::string> text_pieces;
    std::vector<int> children;
};

class Parser {
public:
    explicit Parser(std::string_view html) : in_(html) {}

    Document run() {
        html_index_ = new_node("html");
        open_.push_back(html_index_);
        while (pos_ < in_.size()) {
            if (in_[pos_] == '<') {
                parse_markup();
            } else {
                parse_text();
            }
        }
        return flatten();
    }

private:
    int new_node(std::string tag) {
        nodes_.push_back(BuildNode{std::move(tag), {}, {}, {}});
        return static_cast<int>(nodes_.size() - 1);
    }

    int top() const { return open_.back(); }

    bool body_open() const { return body_index_ >= 0 && on_stack(body_index_); }

    bool on_stack(int idx) const {
        for (int i : open_)
            if (i == idx) return true;
        return false;
    }

    void ensure_body() {
        if (body_open()) return;
        // Reopen or create <body> directly under <html>.
        while (open_.size() > 1) open_.pop_back();
        if (body_index_ < 0) {
            body_index_ = new_node("body");
            nodes_[static_cast<std::size_t>(html_index_)].children.push_back(body_index_);
        }
        open_.push_back(body_index_);
    }

    void ensure_head() {
        if (head_index_ >= 0 && on_stack(head_index_)) return;
        while (open_.size() > 1) open_.pop_back();
        if (head_index_ < 0) {
            head_index_ = new_node("head");
            nodes_[static_cast<std::size_t>(html_index_)].children.push_back(head_index_);
        }
        open_.push_back(head_index_);
    }

    void parse_text() {
        std::size_t start = pos_;
        while (pos_ < in_.size() && in_[pos_] != '<') ++pos_;
        std::string_view raw = in_.substr(start, pos_ - start);
        bool all_space = true;
        for (char c : raw)
            if (!is_ascii_space(c)) {
                all_space = false;
                break;
            }
        if (all_space) return;
        if (!body_open() && (head_index_ < 0 || !on_stack(head_index_))) ensure_body();
        nodes_[static_cast<std::size_t>(top())].text_pieces.push_back(decode_entities(raw));
    }

    void parse_markup() {
        // pos_ points at '<'.
        if (in_.compare(pos_, 4, "<!--") == 0) {
            std::size_t end = in_.find("-->", pos_ + 4);
            pos_ = (end == std::string_view::npos) ? in_.size() : end + 3;
            return;
        }
        if (pos_ + 1 < in_.size() && (in_[pos_ + 1] == '!' || in_[pos_ + 1] == '?')) {
            std::size_t end = in_.find('>', pos_ + 1);
            pos_ = (end == std::string_view::npos) ? in_.size() : end + 1;
            return;
        }
        if (pos_ + 1 < in_.size() && in_[pos_ + 1] == '/') {
            parse_end_tag();
            return;
        }
        if (pos_ + 1 >= in_.size() || !is_tag_start(in_[pos_ + 1])) {
            // Stray '<' is literal text.
            if (!body_open() && (head_index_ < 0 || !on_stack(head_index_))) ensure_body();
            nodes_[static_cast<std::size_t>(top())].text_pieces.push_back("<");
            ++pos_;
            return;
        }
        parse_start_tag();
    }

    static bool is_tag_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

    static bool is_tag_char(char c) {
        return is_tag_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '_' || c == ':';
    }

    void parse_end_tag() {
        pos_ += 2;
        std::string name;
        while (pos_ < in_.size() && is_tag_char(in_[pos_])) name += ascii_lower(in_[pos_++]);
        while (pos_ < in_.size() && in_[pos_] != '>') ++pos_;
        if (pos_ < in_.size()) ++pos_;
        if (name.empty() || name == "html" || name == "body" || name == "head") {
            if (name == "head" && head_index_ >= 0 && on_stack(head_index_)) {
                while (open_.size() > 1 && top() != head_index_) open_.pop_back();
                if (top() == head_index_) open_.pop_back();
            }
            return;
        }
        // Pop to the matching open element; ignore if there is none.
        for (std::size_t i = open_.size(); i-- > 1;) {
            int idx = open_[i];
            if (nodes_[static_cast<std::size_t>(idx)].tag == name) {
                open_.resize(i);
                return;
            }
        }
    }

    void parse_start_tag() {
        ++pos_;
        std::string name;
        while (pos_ < in_.size() && is_tag_char(in_[pos_])) name += ascii_lower(in_[pos_++]);

        std::vector<std::pair<std::string, std::string>> attrs;
        bool self_closing = false;
        while (pos_ < in_.size() && in_[pos_] != '>') {
            if (is_ascii_space(in_[pos_])) {
                ++pos_;
                continue;
            }
            if (in_[pos_] == '/') {
                ++pos_;
                if (pos_ < in_.size() && in_[pos_] == '>') self_closing = true;
                continue;
            }
            std::string attr_name;
            while (pos_ < in_.size() && !is_ascii_space(in_[pos_]) && in_[pos_] != '=' && in_[pos_] != '>' &&
                   in_[pos_] != '/')
                attr_name += ascii_lower(in_[pos_++]);
            while (pos_ < in_.size() && is_ascii_space(in_[pos_])) ++pos_;
            std::string value;
            if (pos_ < in_.size() && in_[pos_] == '=') {
                ++pos_;
                while (pos_ < in_.size() && is_ascii_space(in_[pos_])) ++pos_;
                if (pos_ < in_.size() && (in_[pos_] == '"' || in_[pos_] == '\'')) {
                    char quote = in_[pos_++];
                    std::size_t start = pos_;
                    while (pos_ < in_.size() && in_[pos_] != quote) ++pos_;
                    value = decode_entities(in_.substr(start, pos_ - start));
                    if (pos_ < in_.size()) ++pos_;
                } else {
                    std::size_t start = pos_;
                    while (pos_ < in_.size() && !is_ascii_space(in_[pos_]) && in_[pos_] != '>') ++pos_;
                    value = decode_entities(in_.substr(start, pos_ - start));
                }
            }
            if (!attr_name.empty()) {
                bool seen = false;
                for (const auto& [k, v] : attrs)
                    if (k == attr_name) {
                        seen = true;
                        break;
                    }
                if (!seen) attrs.emplace_back(std::move(attr_name), std::move(value));
            }
        }
        if (pos_ < in_.size()) ++pos_;
        if (name.empty()) return;

        if (name == "html") {
            merge_attrs(html_index_, attrs);
            return;
        }
        if (name == "body") {
            ensure_body();
            merge_attrs(body_index_, attrs);
            return;
        }
        if (name == "head") {
            if (!body_open()) ensure_head();
            if (head_index_ >= 0) merge_attrs(head_index_, attrs);
            return;
        }

        if (name == "script" || name == "style") {
            skip_raw_text(name);
            return;
        }

        if (!body_open()) {
            if (head_only_tags().count(name)) {
                ensure_head();
            } else {
                ensure_body();
            }
        }

        apply_implied_closes(name);

        int idx = new_node(name);
        nodes_[static_cast<std::size_t>(idx)].attributes = std::move(attrs);
        nodes_[static_cast<std::size_t>(top())].children.push_back(idx);
        if (!self_closing && !void_tags().count(name)) open_.push_back(idx);
    }

    void merge_attrs(int idx, const std::vector<std::pair<std::string, std::string>>& attrs) {
        if (idx < 0) return;
        auto& dst = nodes_[static_cast<std::size_t>(idx)].attributes;
        for (const auto& [k, v] : attrs) {
            bool seen = false;
            for (const auto& [dk, dv] : dst)
                if (dk == k) {
                    seen = true;
                    break;
                }
            if (!seen) dst.emplace_back(k, v);
        }
    }

    void apply_implied_closes(std::string_view name) {
        auto close_while_top_is = [&](std::initializer_list<std::string_view> tags) {
            while (open_.size() > 1) {
                const std::string& t = nodes_[static_cast<std::size_t>(top())].tag;
                bool match = false;
                for (std::string_view c : tags)
                    if (t == c) {
                        match = true;
                        break;
                    }
                if (!match) break;
                open_.pop_back();
            }
        };
        if (name == "li") close_while_top_is({"li"});
        else if (name == "option") close_while_top_is({"option"});
        else if (name == "tr") close_while_top_is({"td", "th", "tr"});
        else if (name == "td" || name == "th") close_while_top_is({"td", "th"});
        else if (p_closers().count(name)) close_while_top_is({"p"});
    }

    void skip_raw_text(std::string_view tag) {
        // Content of <script>/<style> is never user-visible: skip to the
        // matching close tag without emitting nodes or text.
        std::string close = "</" + std::string(tag);
        while (pos_ < in_.size()) {
            std::size_t lt = in_.find('<', pos_);
            if (lt == std::string_view::npos) {
                pos_ = in_.size();
                return;
            }
            bool match = true;
            for (std::size_t k = 0; k < close.size(); ++k) {
                if (lt + k >= in_.size() || ascii_lower(in_[lt + k]) != close[k]) {
                    match = false;
                    break;
                }
            }
            if (match) {
                std::size_t end = in_.find('>', lt);
                pos_ = (end == std::string_view::npos) ? in_.size() : end + 1;
                return;
            }
            pos_ = lt + 1;
        }
    }

    Document flatten() const {
        std::vector<DomNode> out;
        out.reserve(nodes_.size());
        // Iterative pre-order walk from the html root, renumbering nodes.
        std::vector<std::pair<int, int>> stack;  // (build index, parent final index)
        stack.emplace_back(html_index_, -1);
        while (!stack.empty()) {
            auto [bidx, parent_final] = stack.back();
            stack.pop_back();
            const BuildNode& b = nodes_[static_cast<std::size_t>(bidx)];
            int final_idx = static_cast<int>(out.size());
            DomNode n;
            n.tag = b.tag;
            n.attributes = b.attributes;
            std::string joined;
            for (const auto& piece : b.text_pieces) {
                joined += piece;
                joined += ' ';
            }
            n.text = normalize_raw(joined);
            n.parent = parent_final;
            n.doc_order_index = final_idx;
            out.push_back(std::move(n));
            if (parent_final >= 0) out[static_cast<std::size_t>(parent_final)].children.push_back(final_idx);
            for (std::size_t i = b.children.size(); i-- > 0;) stack.emplace_back(b.children[i], final_idx);
        }
        return Document(std::move(out));
    }

    // Whitespace collapse without case folding: tags and attribute names are
    // folded, text content is preserved verbatim apart from whitespace.
    static std::string normalize_raw(std::string_view s) {
        std::string out;
        out.reserve(s.size());
        bool pending = false;
        for (char c : s) {
            if (is_ascii_space(c)) {
                if (!out.empty()) pending = true;
            } else {
                if (pending) {
                    out += ' ';
                    pending = false;
                }
                out += c;
            }
        }
        return out;
    }

    std::string_view in_;
    std::size_t pos_ = 0;
    std::vector<BuildNode> nodes_;
    std::vector<int> open_;
    int html_index_ = -1;
    int head_index_ = -1;
    int body_index_ = -1;
};

}  // namespace detail

/// Error-recovering parse. Never throws on malformed markup; only an empty
/// or whitespace-only document is rejected.
inline Document parse_html(const RawDocument& doc) {
    bool all_space = true;
    for (char c : doc.html_text)
        if (!is_ascii_space(c)) {
            all_space = false;
            break;
        }
    if (doc.html_text.empty() || all_space) throw EmptyInput();
    return detail::Parser(doc.html_text).run();
}

inline Document parse_html(std::string_view html, std::string_view source_id = "") {
    return parse_html(RawDocument{std::string(html), std::string(source_id)});
}

/// Nodes in document order. The arena is stored pre-order, so this is the
/// arena itself.
inline const std::vector<DomNode>& pre_order(const Document& doc) { return doc.nodes(); }

/// Find the first node satisfying a tag name, or nullptr.
inline const DomNode* find_first(const Document& doc, std::string_view tag) {
    for (const auto& n : doc.nodes())
        if (n.tag == tag) return &n;
    return nullptr;
}

namespace detail {

inline void escape_into(std::string& out, std::string_view s, bool attr) {
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"':
                if (attr) {
                    out += "&quot;";
                    break;
                }
                [[fallthrough]];
            default: out += c;
        }
    }
}

}  // namespace detail

/// Serialize back to HTML text. An element's aggregated text is emitted
/// before its children; re-parsing the result reproduces the tree.
inline std::string serialize_html(const Document& doc) {
    std::string out;
    // Iterative traversal with explicit close markers.
    std::vector<std::pair<int, bool>> stack;  // (node, is_close)
    stack.emplace_back(0, false);
    while (!stack.empty()) {
        auto [idx, closing] = stack.back();
        stack.pop_back();
        const DomNode& n = doc.node(idx);
        if (closing) {
            out += "</" + n.tag + ">";
            continue;
        }
        out += "<" + n.tag;
        for (const auto& [k, v] : n.attributes) {
            out += " " + k + "=\"";
            detail::escape_into(out, v, true);
            out += "\"";
        }
        out += ">";
        bool is_void = detail::void_tags().count(n.tag) > 0;
        if (is_void) continue;
        stack.emplace_back(idx, true);
        for (std::size_t i = n.children.size(); i-- > 0;) stack.emplace_back(n.children[i], false);
        detail::escape_into(out, n.text, false);
    }
    return out;
}

}  // namespace domprune
