#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "domprune/errors.hpp"
#include "domprune/eval.hpp"
#include "domprune/extract.hpp"
#include "domprune/gateway.hpp"
#include "domprune/scoring.hpp"
#include "domprune/text.hpp"

namespace domprune {

struct CliConfig {
    ExtractionConfig extraction;
    ScoringConfig scoring;
    EndpointConfig endpoint;
    int top_n = 20;
    PromptVariant variant = PromptVariant::ZeroShot;
    bool two_turn = false;
    bool include_zero_scores = false;
    EvalMode eval_mode = EvalMode::GtPlan;
    std::string backend_attr = "backend_node_id";

    PipelineConfig pipeline() const {
        PipelineConfig p;
        p.variant = variant;
        p.two_turn = two_turn;
        p.top_n = top_n;
        p.include_zero_scores = include_zero_scores;
        p.scoring = scoring;
        return p;
    }

    void validate() const {
        scoring.validate();
        if (top_n < 1) throw ConfigError("top_n must be >= 1");
        if (endpoint.max_retries < 0) throw ConfigError("max_retries must be >= 0");
        if (endpoint.timeout_ms <= 0) throw ConfigError("timeout_ms must be > 0");
        if (extraction.interactive_tags.empty() || extraction.interactive_roles.empty() ||
            extraction.interactive_attributes.empty() || extraction.trusted_attributes.empty())
            throw ConfigError("extraction keyword sets must be non-empty");
    }
};

namespace detail {

inline std::string trim_view(std::string_view s) {
    while (!s.empty() && is_ascii_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_ascii_space(s.back())) s.remove_suffix(1);
    return std::string(s);
}

inline bool parse_bool(const std::string& value, const std::string& key) {
    std::string v = to_lower(value);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("key " + key + ": expected a boolean, got \"" + value + "\"");
}

inline int parse_int(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError("key " + key + ": expected an integer, got \"" + value + "\"");
    }
}

inline double parse_double(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError("key " + key + ": expected a number, got \"" + value + "\"");
    }
}

inline std::vector<std::string> parse_list(const std::string& value) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        std::size_t comma = value.find(',', start);
        std::string item = trim_view(
            std::string_view(value).substr(start, comma == std::string::npos ? value.size() - start : comma - start));
        if (!item.empty()) out.push_back(std::move(item));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::unordered_set<std::string> parse_set(const std::string& value) {
    std::unordered_set<std::string> out;
    for (auto& item : parse_list(value)) out.insert(std::move(item));
    return out;
}

struct ConfigKey {
    const char* section;
    const char* key;
    std::function<void(CliConfig&, const std::string&)> apply;
};

inline const std::vector<ConfigKey>& config_schema() {
    static const std::vector<ConfigKey> schema = {
        {"extract", "interactive_tags",
         [](CliConfig& c, const std::string& v) { c.extraction.interactive_tags = parse_set(v); }},
        {"extract", "interactive_roles",
         [](CliConfig& c, const std::string& v) { c.extraction.interactive_roles = parse_set(v); }},
        {"extract", "interactive_attributes",
         [](CliConfig& c, const std::string& v) { c.extraction.interactive_attributes = parse_set(v); }},
        {"extract", "trusted_attributes",
         [](CliConfig& c, const std::string& v) { c.extraction.trusted_attributes = parse_list(v); }},
        {"extract", "overlay_keywords",
         [](CliConfig& c, const std::string& v) { c.extraction.overlay_keywords = parse_list(v); }},
        {"extract", "overlay_keywords_enabled",
         [](CliConfig& c, const std::string& v) {
             c.extraction.overlay_keywords_enabled = parse_bool(v, "overlay_keywords_enabled");
         }},
        {"extract", "hidden_filters_enabled",
         [](CliConfig& c, const std::string& v) {
             c.extraction.hidden_filters_enabled = parse_bool(v, "hidden_filters_enabled");
         }},
        {"scoring", "alpha1", [](CliConfig& c, const std::string& v) { c.scoring.alpha1 = parse_double(v, "alpha1"); }},
        {"scoring", "alpha2", [](CliConfig& c, const std::string& v) { c.scoring.alpha2 = parse_double(v, "alpha2"); }},
        {"scoring", "alpha3", [](CliConfig& c, const std::string& v) { c.scoring.alpha3 = parse_double(v, "alpha3"); }},
        {"scoring", "alpha4", [](CliConfig& c, const std::string& v) { c.scoring.alpha4 = parse_double(v, "alpha4"); }},
        {"scoring", "beta1", [](CliConfig& c, const std::string& v) { c.scoring.beta1 = parse_double(v, "beta1"); }},
        {"scoring", "beta2", [](CliConfig& c, const std::string& v) { c.scoring.beta2 = parse_double(v, "beta2"); }},
        {"scoring", "beta3", [](CliConfig& c, const std::string& v) { c.scoring.beta3 = parse_double(v, "beta3"); }},
        {"scoring", "theta", [](CliConfig& c, const std::string& v) { c.scoring.theta = parse_double(v, "theta"); }},
        {"scoring", "top_weight_bonus",
         [](CliConfig& c, const std::string& v) { c.scoring.top_weight_bonus = parse_double(v, "top_weight_bonus"); }},
        {"scoring", "visual_text_bonus",
         [](CliConfig& c, const std::string& v) {
             c.scoring.visual_text_bonus = parse_double(v, "visual_text_bonus");
         }},
        {"endpoint", "base_url", [](CliConfig& c, const std::string& v) { c.endpoint.base_url = v; }},
        {"endpoint", "model_name", [](CliConfig& c, const std::string& v) { c.endpoint.model_name = v; }},
        {"endpoint", "api_key_env", [](CliConfig& c, const std::string& v) { c.endpoint.api_key_env = v; }},
        {"endpoint", "timeout_ms",
         [](CliConfig& c, const std::string& v) { c.endpoint.timeout_ms = parse_int(v, "timeout_ms"); }},
        {"endpoint", "max_retries",
         [](CliConfig& c, const std::string& v) { c.endpoint.max_retries = parse_int(v, "max_retries"); }},
        {"endpoint", "backoff_base_ms",
         [](CliConfig& c, const std::string& v) { c.endpoint.backoff_base_ms = parse_int(v, "backoff_base_ms"); }},
        {"endpoint", "temperature",
         [](CliConfig& c, const std::string& v) { c.endpoint.temperature = parse_double(v, "temperature"); }},
        {"pipeline", "top_n", [](CliConfig& c, const std::string& v) { c.top_n = parse_int(v, "top_n"); }},
        {"pipeline", "prompt_variant",
         [](CliConfig& c, const std::string& v) {
             std::string s = to_lower(v);
             if (s == "zero_shot")
                 c.variant = PromptVariant::ZeroShot;
             else if (s == "training")
                 c.variant = PromptVariant::Training;
             else
                 throw ConfigError("prompt_variant must be zero_shot or training, got \"" + v + "\"");
         }},
        {"pipeline", "two_turn",
         [](CliConfig& c, const std::string& v) { c.two_turn = parse_bool(v, "two_turn"); }},
        {"pipeline", "include_zero_scores",
         [](CliConfig& c, const std::string& v) { c.include_zero_scores = parse_bool(v, "include_zero_scores"); }},
        {"pipeline", "eval_mode",
         [](CliConfig& c, const std::string& v) {
             std::string s = to_lower(v);
             if (s == "gt_plan")
                 c.eval_mode = EvalMode::GtPlan;
             else if (s == "full")
                 c.eval_mode = EvalMode::FullPipeline;
             else
                 throw ConfigError("eval_mode must be gt_plan or full, got \"" + v + "\"");
         }},
        {"pipeline", "backend_id_attribute",
         [](CliConfig& c, const std::string& v) { c.backend_attr = v; }},
    };
    return schema;
}

inline std::string env_name(const ConfigKey& key) {
    std::string name = "DOMPRUNE_";
    for (const char* p = key.section; *p; ++p) name += static_cast<char>(std::toupper(*p));
    name += '_';
    for (const char* p = key.key; *p; ++p) name += *p == '-' ? '_' : static_cast<char>(std::toupper(*p));
    return name;
}

}  // namespace detail

inline void apply_config_file(CliConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = detail::trim_view(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError(path + ":" + std::to_string(line_no) + ": unterminated section header");
            section = to_lower(detail::trim_view(std::string_view(t).substr(1, t.size() - 2)));
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        std::string key = to_lower(detail::trim_view(std::string_view(t).substr(0, eq)));
        std::string value = detail::trim_view(std::string_view(t).substr(eq + 1));
        bool known = false;
        for (const auto& entry : detail::config_schema()) {
            if (section == entry.section && key == entry.key) {
                try {
                    entry.apply(cfg, value);
                } catch (const ConfigError&) {
                    throw;
                } catch (const std::exception& e) {
                    throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
                }
                known = true;
                break;
            }
        }
        if (!known)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown key [" + section + "] " + key);
    }
}

inline void apply_environment(CliConfig& cfg) {
    for (const auto& entry : detail::config_schema()) {
        std::string name = detail::env_name(entry);
        if (const char* value = std::getenv(name.c_str()); value && *value) entry.apply(cfg, value);
    }
}

inline CliConfig load_cli_config(const std::optional<std::string>& config_path) {
    CliConfig cfg;
    if (config_path) apply_config_file(cfg, *config_path);
    apply_environment(cfg);
    return cfg;
}

}  // namespace domprune
