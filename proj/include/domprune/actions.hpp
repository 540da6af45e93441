#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "domprune/errors.hpp"
#include "domprune/prune.hpp"
#include "domprune/text.hpp"

namespace domprune {

enum class ActionKind { Click, Type, Scroll, SelectOption, Navigate, Done, Fail };

inline std::string_view action_kind_name(ActionKind k) {
    switch (k) {
        case ActionKind::Click: return "CLICK";
        case ActionKind::Type: return "TYPE";
        case ActionKind::Scroll: return "SCROLL";
        case ActionKind::SelectOption: return "SELECT_OPTION";
        case ActionKind::Navigate: return "NAVIGATE";
        case ActionKind::Done: return "DONE";
        case ActionKind::Fail: return "FAIL";
    }
    return "";
}

inline std::optional<ActionKind> action_kind_from_name(std::string_view name) {
    if (name == "CLICK") return ActionKind::Click;
    if (name == "TYPE") return ActionKind::Type;
    if (name == "SCROLL") return ActionKind::Scroll;
    if (name == "SELECT_OPTION") return ActionKind::SelectOption;
    if (name == "NAVIGATE") return ActionKind::Navigate;
    if (name == "DONE") return ActionKind::Done;
    if (name == "FAIL") return ActionKind::Fail;
    return std::nullopt;
}

struct ActionCommand {
    ActionKind kind = ActionKind::Done;
    std::optional<int> element_id;
    std::optional<std::string> text_arg;
};

inline void validate_action(const ActionCommand& a) {
    switch (a.kind) {
        case ActionKind::Click:
            if (!a.element_id) throw InvalidAction("CLICK requires an element id");
            break;
        case ActionKind::Type:
            if (!a.element_id) throw InvalidAction("TYPE requires an element id");
            if (!a.text_arg || a.text_arg->empty()) throw InvalidAction("TYPE requires text");
            break;
        case ActionKind::SelectOption:
            if (!a.element_id) throw InvalidAction("SELECT_OPTION requires an element id");
            if (!a.text_arg || a.text_arg->empty()) throw InvalidAction("SELECT_OPTION requires an option value");
            break;
        case ActionKind::Scroll:
            if (!a.text_arg || (*a.text_arg != "up" && *a.text_arg != "down"))
                throw InvalidAction("SCROLL direction must be \"up\" or \"down\"");
            break;
        case ActionKind::Navigate:
            if (!a.text_arg || a.text_arg->empty()) throw InvalidAction("NAVIGATE requires a URL");
            break;
        case ActionKind::Done:
        case ActionKind::Fail:
            if (a.element_id || a.text_arg)
                throw InvalidAction(std::string(action_kind_name(a.kind)) + " carries no arguments");
            break;
    }
}

struct GrounderDecision {
    std::string action_name;
    int id = 0;
    std::optional<std::string> input_text;
};

inline constexpr std::string_view kNoInputSentinel = "no input text";

inline bool is_grounder_action_name(std::string_view name) {
    return name == "click_element" || name == "input_text" || name == "select_element" || name == "scroll";
}

inline GrounderDecision parse_grounder_decision(const std::string& answer_json) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(answer_json);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedDecision(e.what(), e.byte);
    }
    if (!j.is_object()) throw MalformedDecision("decision must be a JSON object", 0);
    if (!j.contains("action") || !j["action"].is_string())
        throw MalformedDecision("missing string field \"action\"", 0);

    GrounderDecision d;
    d.action_name = j["action"].get<std::string>();
    if (!is_grounder_action_name(d.action_name))
        throw MalformedDecision("unknown action \"" + d.action_name + "\"", 0);

    if (j.contains("id")) {
        const auto& id = j["id"];
        if (id.is_number_integer()) {
            d.id = id.get<int>();
        } else if (id.is_string()) {
            try {
                d.id = std::stoi(id.get<std::string>());
            } catch (...) {
                throw MalformedDecision("field \"id\" is not an integer", 0);
            }
        } else {
            throw MalformedDecision("field \"id\" is not an integer", 0);
        }
    } else if (d.action_name != "scroll") {
        throw MalformedDecision("missing field \"id\"", 0);
    }

    const char* text_key = j.contains("input text") ? "input text" : j.contains("input_text") ? "input_text" : nullptr;
    if (text_key) {
        const auto& t = j[text_key];
        if (!t.is_string()) throw MalformedDecision("input text field is not a string", 0);
        std::string value = t.get<std::string>();
        if (value != kNoInputSentinel) d.input_text = std::move(value);
    }
    return d;
}

inline ActionCommand to_canonical(const GrounderDecision& d, const CandidateList& candidates) {
    ActionCommand a;
    if (d.action_name == "click_element") {
        if (!candidates.contains(d.id)) throw UnknownElement(d.id);
        a.kind = ActionKind::Click;
        a.element_id = d.id;
    } else if (d.action_name == "input_text") {
        if (!candidates.contains(d.id)) throw UnknownElement(d.id);
        if (!d.input_text || d.input_text->empty()) throw InvalidAction("input_text requires text");
        a.kind = ActionKind::Type;
        a.element_id = d.id;
        a.text_arg = d.input_text;
    } else if (d.action_name == "select_element") {
        if (!candidates.contains(d.id)) throw UnknownElement(d.id);
        if (!d.input_text || d.input_text->empty()) throw InvalidAction("select_element requires an option value");
        a.kind = ActionKind::SelectOption;
        a.element_id = d.id;
        a.text_arg = d.input_text;
    } else if (d.action_name == "scroll") {
        a.kind = ActionKind::Scroll;
        std::string dir = d.input_text ? normalize_text(*d.input_text) : "down";
        if (dir.empty()) dir = "down";
        if (dir != "up" && dir != "down") throw InvalidAction("scroll direction must be \"up\" or \"down\"");
        a.text_arg = dir;
    } else {
        throw InvalidAction("unknown grounder action \"" + d.action_name + "\"");
    }
    validate_action(a);
    return a;
}

namespace detail {

inline std::string collapse_ws(std::string_view s) {
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

}  // namespace detail

inline bool actions_equal(const ActionCommand& a, const ActionCommand& b) {
    if (a.kind != b.kind) return false;
    if (a.element_id != b.element_id) return false;
    if (a.text_arg.has_value() != b.text_arg.has_value()) return false;
    if (!a.text_arg) return true;
    std::string ta = detail::collapse_ws(*a.text_arg);
    std::string tb = detail::collapse_ws(*b.text_arg);
    if (a.kind == ActionKind::SelectOption) {
        ta = to_lower(ta);
        tb = to_lower(tb);
    }
    return ta == tb;
}

inline nlohmann::json action_to_json(const ActionCommand& a) {
    nlohmann::json j;
    j["kind"] = std::string(action_kind_name(a.kind));
    if (a.element_id) j["element_id"] = *a.element_id;
    if (a.text_arg) j["text"] = *a.text_arg;
    return j;
}

inline ActionCommand action_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw InvalidAction("action record must be an object with a \"kind\" field");
    auto kind = action_kind_from_name(j["kind"].get<std::string>());
    if (!kind) throw InvalidAction("unknown action kind \"" + j["kind"].get<std::string>() + "\"");
    ActionCommand a;
    a.kind = *kind;
    if (j.contains("element_id") && !j["element_id"].is_null()) a.element_id = j["element_id"].get<int>();
    if (j.contains("text") && !j["text"].is_null()) a.text_arg = j["text"].get<std::string>();
    return a;
}

}  // namespace domprune
