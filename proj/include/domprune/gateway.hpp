#pragma once

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "domprune/actions.hpp"
#include "domprune/errors.hpp"
#include "domprune/extract.hpp"
#include "domprune/prompts.hpp"
#include "domprune/prune.hpp"
#include "domprune/scoring.hpp"
#include "domprune/text.hpp"

namespace domprune {

struct EndpointConfig {
    std::string base_url = "http://127.0.0.1:8000/v1";
    std::string model_name = "local-model";
    std::string api_key_env = "DOMPRUNE_API_KEY";
    int timeout_ms = 30000;
    int max_retries = 2;
    int backoff_base_ms = 100;
    double temperature = 0.0;
};

inline std::string extract_tagged(const std::string& body, const std::string& tag) {
    std::string open = "<" + tag + ">";
    std::string close = "</" + tag + ">";
    std::size_t start = body.find(open);
    if (start == std::string::npos) throw TagMissing(tag);
    start += open.size();
    std::size_t end = body.find(close, start);
    if (end == std::string::npos) throw TagUnclosed(tag);
    std::string_view content(body.data() + start, end - start);
    while (!content.empty() && is_ascii_space(content.front())) content.remove_prefix(1);
    while (!content.empty() && is_ascii_space(content.back())) content.remove_suffix(1);
    return std::string(content);
}

namespace detail {

inline std::string trim_copy(std::string_view s) {
    while (!s.empty() && is_ascii_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_ascii_space(s.back())) s.remove_suffix(1);
    return std::string(s);
}

// Models often wrap JSON in markdown fences; strip one outer fence if present.
inline std::string strip_code_fence(std::string payload) {
    if (payload.rfind("```", 0) != 0) return payload;
    std::size_t first_newline = payload.find('\n');
    if (first_newline == std::string::npos) return payload;
    std::size_t closing = payload.rfind("```");
    if (closing <= first_newline) return payload;
    return trim_copy(std::string_view(payload).substr(first_newline + 1, closing - first_newline - 1));
}

}  // namespace detail

struct PlannerOutput {
    std::string state_analysis;
    std::string progress_evaluation;
    std::vector<std::string> challenges;
    std::vector<std::string> next_steps;
    std::string action_type;
    std::string target_text;
    std::string raw_think;

    bool is_terminate() const {
        if (next_steps.empty()) return false;
        return detail::trim_copy(next_steps.front()).rfind("TERMINATE", 0) == 0;
    }
};

namespace detail {

inline bool valid_planner_action_type(std::string_view t) {
    return t == "click" || t == "select" || t == "input" || t == "scroll" || t == "type" || t == "navigate";
}

}  // namespace detail

inline PlannerOutput parse_planner(const std::string& body, PromptVariant variant = PromptVariant::ZeroShot) {
    PlannerOutput out;
    try {
        out.raw_think = extract_tagged(body, "think");
    } catch (const Error&) {
    }

    std::string payload;
    if (variant == PromptVariant::Training) {
        try {
            payload = extract_tagged(body, "answer");
        } catch (const Error&) {
            throw FormatError({"answer"});
        }
    } else {
        try {
            payload = extract_tagged(body, "answer");
        } catch (const Error&) {
            payload = detail::trim_copy(body);
        }
    }
    payload = detail::strip_code_fence(std::move(payload));

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(payload);
    } catch (const nlohmann::json::parse_error&) {
        throw FormatError({"json"});
    }
    if (!j.is_object()) throw FormatError({"json"});

    std::vector<std::string> missing;
    auto need_string = [&](const char* key) -> std::string {
        if (!j.contains(key) || !j[key].is_string()) {
            missing.push_back(key);
            return "";
        }
        return j[key].get<std::string>();
    };
    out.state_analysis = need_string("state_analysis");
    out.progress_evaluation = need_string("progress_evaluation");

    if (!j.contains("challenges") || !j["challenges"].is_array()) {
        missing.push_back("challenges");
    } else {
        for (const auto& c : j["challenges"]) out.challenges.push_back(c.is_string() ? c.get<std::string>() : c.dump());
    }
    if (!j.contains("next_steps") || !j["next_steps"].is_array() || j["next_steps"].empty()) {
        missing.push_back("next_steps");
    } else {
        for (const auto& s : j["next_steps"]) out.next_steps.push_back(s.is_string() ? s.get<std::string>() : s.dump());
    }
    out.action_type = need_string("action_type");
    if (!out.action_type.empty() && !detail::valid_planner_action_type(out.action_type))
        missing.push_back("action_type");
    if (!j.contains("target") || !j["target"].is_object() || !j["target"].contains("text") ||
        !j["target"]["text"].is_string()) {
        missing.push_back("target.text");
    } else {
        out.target_text = j["target"]["text"].get<std::string>();
    }

    if (!missing.empty()) throw FormatError(std::move(missing));
    return out;
}

inline KeywordWeights parse_keyword_weights(const std::string& body) {
    std::string payload;
    try {
        payload = extract_tagged(body, "answer");
    } catch (const Error&) {
        try {
            payload = extract_tagged(body, "keywords_weights");
        } catch (const Error&) {
            payload = detail::trim_copy(body);
        }
    }
    payload = detail::strip_code_fence(std::move(payload));

    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(payload);
    } catch (const nlohmann::ordered_json::parse_error&) {
        throw FormatError({"json"});
    }
    if (!j.is_object() || !j.contains("keyword_weights") || !j["keyword_weights"].is_object())
        throw FormatError({"keyword_weights"});

    std::vector<std::pair<std::string, int>> raw;
    for (const auto& [key, value] : j["keyword_weights"].items()) {
        if (!value.is_number_integer()) throw InvalidWeights("weight is not an integer", key);
        raw.emplace_back(key, value.get<int>());
    }
    return validate_weights(raw);
}

struct VerifierVerdict {
    bool success = false;
    std::string reasoning;
};

inline VerifierVerdict parse_verifier(const std::string& body) {
    std::string payload;
    try {
        payload = extract_tagged(body, "answer");
    } catch (const Error&) {
        payload = detail::trim_copy(body);
    }
    payload = detail::strip_code_fence(std::move(payload));
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(payload);
    } catch (const nlohmann::json::parse_error&) {
        throw FormatError({"json"});
    }
    std::vector<std::string> missing;
    if (!j.contains("success") || !j["success"].is_boolean()) missing.push_back("success");
    if (!j.contains("reasoning") || !j["reasoning"].is_string()) missing.push_back("reasoning");
    if (!missing.empty()) throw FormatError(std::move(missing));
    return {j["success"].get<bool>(), j["reasoning"].get<std::string>()};
}

namespace detail {

struct SplitUrl {
    std::string base;
    std::string path_prefix;
};

inline SplitUrl split_url(const std::string& url) {
    std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint base_url must include a scheme: " + url);
    std::size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path_start), prefix};
}

}  // namespace detail

struct StageKey {
    std::string stage;
    std::string task_id;
    int step_index = -1;
};

/// Serialized JSONL log of every request/response pair, replayable by
/// ReplayChatClient.
class TranscriptWriter {
public:
    explicit TranscriptWriter(const std::string& path) : out_(path, std::ios::app) {
        if (!out_) throw ConfigError("cannot open transcript file " + path);
    }

    void record(const StageKey& key, const nlohmann::json& request, const std::string& response) {
        nlohmann::ordered_json line;
        line["stage"] = key.stage;
        if (!key.task_id.empty()) {
            line["task_id"] = key.task_id;
            line["step_index"] = key.step_index;
        }
        line["request"] = request;
        line["response"] = response;
        std::lock_guard<std::mutex> lock(mu_);
        out_ << line.dump() << "\n";
        out_.flush();
    }

private:
    std::ofstream out_;
    std::mutex mu_;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;

    std::string complete(const std::vector<Message>& messages, const StageKey& key) {
        std::string reply = do_complete(messages, key);
        {
            std::lock_guard<std::mutex> lock(mu_);
            ++calls_;
        }
        return reply;
    }

    int calls() const {
        std::lock_guard<std::mutex> lock(mu_);
        return calls_;
    }

protected:
    virtual std::string do_complete(const std::vector<Message>& messages, const StageKey& key) = 0;

private:
    mutable std::mutex mu_;
    int calls_ = 0;
};

namespace detail {

inline nlohmann::json completion_request(const EndpointConfig& cfg, const std::vector<Message>& messages) {
    nlohmann::json body;
    body["model"] = cfg.model_name;
    body["temperature"] = cfg.temperature;
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    body["messages"] = msgs;
    return body;
}

}  // namespace detail

inline std::string chat(const EndpointConfig& cfg, const std::vector<Message>& messages) {
    detail::SplitUrl url = detail::split_url(cfg.base_url);
    nlohmann::json request = detail::completion_request(cfg, messages);
    std::string payload = request.dump();

    int attempts = 0;
    int last_status = 0;
    bool timed_out = false;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0) {
            int delay = cfg.backoff_base_ms << (attempt - 1);
            if (delay > 2000) delay = 2000;
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        httplib::Client cli(url.base);
        cli.set_connection_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
        cli.set_read_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);

        httplib::Headers headers;
        if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);

        auto res = cli.Post(url.path_prefix + "/chat/completions", headers, payload, "application/json");
        ++attempts;
        if (!res) {
            timed_out = res.error() == httplib::Error::ConnectionTimeout;
            last_status = 0;
            continue;
        }
        timed_out = false;
        if (res->status >= 500) {
            last_status = res->status;
            continue;
        }
        if (res->status != 200) throw EndpointError(res->status, attempts);

        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error&) {
            throw EndpointError(res->status, attempts, "completion payload is not JSON");
        }
        if (!reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty() ||
            !reply["choices"][0].contains("message") || !reply["choices"][0]["message"].contains("content"))
            throw EndpointError(res->status, attempts, "completion payload missing choices[0].message.content");
        return reply["choices"][0]["message"]["content"].get<std::string>();
    }
    if (timed_out) throw Timeout();
    throw EndpointError(last_status, attempts);
}

class HttpChatClient : public ChatClient {
public:
    explicit HttpChatClient(EndpointConfig cfg, TranscriptWriter* transcript = nullptr)
        : cfg_(std::move(cfg)), transcript_(transcript) {}

protected:
    std::string do_complete(const std::vector<Message>& messages, const StageKey& key) override {
        std::string reply = chat(cfg_, messages);
        if (transcript_) transcript_->record(key, detail::completion_request(cfg_, messages), reply);
        return reply;
    }

private:
    EndpointConfig cfg_;
    TranscriptWriter* transcript_;
};

/// Replays responses from a recorded transcript. Entries carrying a task_id
/// are matched exactly on (task_id, step_index, stage); entries with a stage
/// only are consumed per-stage in file order; entries with neither are a
/// global fallback queue.
class ReplayChatClient : public ChatClient {
public:
    explicit ReplayChatClient(const std::string& transcript_path) {
        std::ifstream in(transcript_path);
        if (!in) throw ConfigError("cannot open mock transcript " + transcript_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (detail::trim_copy(line).empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw ConfigError("mock transcript line " + std::to_string(line_no) + ": " + e.what());
            }
            if (!j.contains("response") || !j["response"].is_string())
                throw ConfigError("mock transcript line " + std::to_string(line_no) +
                                  ": missing string field \"response\"");
            Entry entry;
            entry.key.stage = j.value("stage", "");
            entry.key.task_id = j.value("task_id", "");
            entry.key.step_index = j.value("step_index", -1);
            entry.response = j["response"].get<std::string>();
            entries_.push_back(std::move(entry));
        }
    }

protected:
    std::string do_complete(const std::vector<Message>&, const StageKey& key) override {
        std::lock_guard<std::mutex> lock(mu_);
        for (auto& e : entries_) {
            if (e.used || e.key.task_id.empty()) continue;
            if (e.key.task_id == key.task_id && e.key.step_index == key.step_index && e.key.stage == key.stage) {
                e.used = true;
                return e.response;
            }
        }
        for (auto& e : entries_) {
            if (e.used || !e.key.task_id.empty() || e.key.stage.empty()) continue;
            if (e.key.stage == key.stage) {
                e.used = true;
                return e.response;
            }
        }
        for (auto& e : entries_) {
            if (e.used || !e.key.task_id.empty() || !e.key.stage.empty()) continue;
            e.used = true;
            return e.response;
        }
        throw EndpointError(0, 0, "no mock response recorded for stage '" + key.stage + "'");
    }

private:
    struct Entry {
        StageKey key;
        std::string response;
        bool used = false;
    };
    std::vector<Entry> entries_;
    std::mutex mu_;
};

struct PipelineConfig {
    PromptVariant variant = PromptVariant::ZeroShot;
    bool two_turn = false;
    int top_n = 20;
    bool include_zero_scores = false;
    ScoringConfig scoring;
};

struct StepOutcome {
    std::optional<PlannerOutput> planner;
    std::optional<std::string> plan_text;
    std::optional<KeywordWeights> weights;
    CandidateList candidates;
    std::optional<ActionCommand> action;
    bool terminated = false;
    int llm_calls = 0;
    std::optional<std::string> failure_stage;
    std::optional<std::string> failure_reason;

    bool ok() const { return !failure_stage.has_value(); }
};

namespace detail {

inline std::string synthesize_plan_json(const std::string& subtask) {
    nlohmann::ordered_json j;
    j["state_analysis"] = "";
    j["progress_evaluation"] = "";
    j["challenges"] = nlohmann::ordered_json::array();
    j["next_steps"] = nlohmann::ordered_json::array({subtask});
    j["action_type"] = "click";
    j["target"] = {{"text", subtask}};
    return j.dump();
}

inline std::optional<std::string> extract_url(const std::string& text) {
    for (std::string_view prefix : {"https://", "http://"}) {
        std::size_t pos = text.find(prefix);
        if (pos == std::string::npos) continue;
        std::size_t end = pos;
        while (end < text.size() && !is_ascii_space(text[end]) && text[end] != '"' && text[end] != '\'' &&
               text[end] != ')')
            ++end;
        return text.substr(pos, end - pos);
    }
    return std::nullopt;
}

inline std::string scroll_direction(const std::string& step_text) {
    for (const auto& token : tokenize(step_text))
        if (token == "up") return "up";
    return "down";
}

}  // namespace detail

inline StepOutcome run_step(ChatClient& client, const StepContext& ctx,
                            const std::vector<ElementRecord>& elements, const PipelineConfig& pcfg,
                            const StageKey& base_key = {}, const KeywordWeights* preset_weights = nullptr) {
    StepOutcome outcome;
    int calls_before = client.calls();
    auto key_for = [&](const char* stage) {
        StageKey k = base_key;
        k.stage = stage;
        return k;
    };
    auto fail = [&](const char* stage, const std::exception& e) {
        outcome.failure_stage = stage;
        outcome.failure_reason = e.what();
        outcome.llm_calls = client.calls() - calls_before;
        return outcome;
    };

    if (pcfg.two_turn) {
        std::vector<Message> turn1 = render_prompt(PromptRole::UnifiedTurn1, ctx, {}, pcfg.variant);
        std::string body1;
        try {
            body1 = client.complete(turn1, key_for("unified_turn1"));
        } catch (const EndpointError&) {
            throw;
        } catch (const Timeout&) {
            throw;
        } catch (const Error& e) {
            return fail("unified_turn1", e);
        }
        try {
            outcome.plan_text = extract_tagged(body1, "plan");
        } catch (const Error&) {
        }
        try {
            outcome.weights = parse_keyword_weights(body1);
        } catch (const Error& e) {
            return fail("filter", e);
        }

        try {
            std::vector<ScoreResult> scores = score_elements(elements, *outcome.weights, pcfg.scoring);
            outcome.candidates = top_n(scores, elements, pcfg.top_n, pcfg.include_zero_scores);
        } catch (const Error& e) {
            return fail("scoring", e);
        }

        PromptExtra extra;
        extra.candidates = serialize_candidates(outcome.candidates);
        std::vector<Message> msgs = turn1;
        msgs.push_back({"assistant", body1});
        std::vector<Message> turn2 = render_prompt(PromptRole::UnifiedTurn2, ctx, extra, pcfg.variant);
        msgs.insert(msgs.end(), turn2.begin(), turn2.end());

        std::string body2;
        try {
            body2 = client.complete(msgs, key_for("unified_turn2"));
        } catch (const EndpointError&) {
            throw;
        } catch (const Timeout&) {
            throw;
        } catch (const Error& e) {
            return fail("unified_turn2", e);
        }
        try {
            std::string answer = extract_tagged(body2, "answer");
            GrounderDecision decision = parse_grounder_decision(answer);
            outcome.action = to_canonical(decision, outcome.candidates);
        } catch (const Error& e) {
            return fail("grounder", e);
        }
        outcome.llm_calls = client.calls() - calls_before;
        return outcome;
    }

    std::string planner_json;
    StepContext grounder_ctx = ctx;
    if (ctx.subtask) {
        planner_json = detail::synthesize_plan_json(*ctx.subtask);
    } else {
        std::vector<Message> msgs = render_prompt(PromptRole::Planner, ctx, {}, pcfg.variant);
        std::string body;
        try {
            body = client.complete(msgs, key_for("planner"));
            outcome.planner = parse_planner(body, pcfg.variant);
        } catch (const EndpointError&) {
            throw;
        } catch (const Timeout&) {
            throw;
        } catch (const Error& e) {
            return fail("planner", e);
        }
        const PlannerOutput& plan = *outcome.planner;
        grounder_ctx.subtask = plan.next_steps.front();

        if (plan.is_terminate()) {
            outcome.terminated = true;
            ActionCommand a;
            a.kind = plan.progress_evaluation.rfind("100", 0) == 0 ? ActionKind::Done : ActionKind::Fail;
            outcome.action = a;
            outcome.llm_calls = client.calls() - calls_before;
            return outcome;
        }
        if (plan.action_type == "scroll") {
            ActionCommand a;
            a.kind = ActionKind::Scroll;
            a.text_arg = detail::scroll_direction(plan.next_steps.front());
            outcome.action = a;
            outcome.llm_calls = client.calls() - calls_before;
            return outcome;
        }
        if (plan.action_type == "navigate") {
            std::optional<std::string> url = detail::extract_url(plan.next_steps.front());
            if (!url) url = detail::extract_url(plan.target_text);
            if (!url) {
                InvalidAction err("navigate step names no URL");
                return fail("planner", err);
            }
            ActionCommand a;
            a.kind = ActionKind::Navigate;
            a.text_arg = *url;
            outcome.action = a;
            outcome.llm_calls = client.calls() - calls_before;
            return outcome;
        }

        nlohmann::ordered_json plan_json;
        plan_json["state_analysis"] = plan.state_analysis;
        plan_json["progress_evaluation"] = plan.progress_evaluation;
        plan_json["challenges"] = plan.challenges;
        plan_json["next_steps"] = plan.next_steps;
        plan_json["action_type"] = plan.action_type;
        plan_json["target"] = {{"text", plan.target_text}};
        planner_json = plan_json.dump();
    }

    if (preset_weights) {
        outcome.weights = *preset_weights;
    } else {
        PromptExtra extra;
        extra.planner_json = planner_json;
        std::vector<Message> msgs = render_prompt(PromptRole::Filter, ctx, extra, pcfg.variant);
        try {
            std::string body = client.complete(msgs, key_for("filter"));
            outcome.weights = parse_keyword_weights(body);
        } catch (const EndpointError&) {
            throw;
        } catch (const Timeout&) {
            throw;
        } catch (const Error& e) {
            return fail("filter", e);
        }
    }

    try {
        std::vector<ScoreResult> scores = score_elements(elements, *outcome.weights, pcfg.scoring);
        outcome.candidates = top_n(scores, elements, pcfg.top_n, pcfg.include_zero_scores);
    } catch (const Error& e) {
        return fail("scoring", e);
    }

    {
        PromptExtra extra;
        extra.candidates = serialize_candidates(outcome.candidates);
        std::vector<Message> msgs = render_prompt(PromptRole::Grounder, grounder_ctx, extra, pcfg.variant);
        try {
            std::string body = client.complete(msgs, key_for("grounder"));
            std::string answer;
            if (pcfg.variant == PromptVariant::Training) {
                try {
                    answer = extract_tagged(body, "answer");
                } catch (const Error&) {
                    answer = detail::trim_copy(body);
                }
            } else {
                answer = extract_tagged(body, "answer");
            }
            GrounderDecision decision = parse_grounder_decision(detail::strip_code_fence(std::move(answer)));
            outcome.action = to_canonical(decision, outcome.candidates);
        } catch (const EndpointError&) {
            throw;
        } catch (const Timeout&) {
            throw;
        } catch (const Error& e) {
            return fail("grounder", e);
        }
    }
    outcome.llm_calls = client.calls() - calls_before;
    return outcome;
}

}  // namespace domprune
