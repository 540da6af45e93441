#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "domprune/actions.hpp"
#include "domprune/errors.hpp"
#include "domprune/extract.hpp"
#include "domprune/gateway.hpp"
#include "domprune/html.hpp"
#include "domprune/prune.hpp"
#include "domprune/scoring.hpp"
#include "domprune/text.hpp"

namespace domprune {

inline constexpr std::string_view kDatasetSchema = "p4w/1";

struct StepRecord {
    std::string task_id;
    int step_index = 0;
    std::string task;
    std::string html;
    std::optional<std::string> screenshot_ref;
    std::optional<std::string> gt_subtask;
    std::optional<std::vector<std::pair<std::string, int>>> gt_keyword_weights;
    std::optional<std::string> gt_element_backend_id;
    std::optional<int> gt_element_id;
    std::optional<std::string> gt_element_tag;
    std::optional<std::string> gt_element_text;
    std::optional<std::pair<std::string, std::string>> gt_element_attr;
    ActionCommand gt_action;
};

inline StepRecord parse_step_record(const nlohmann::ordered_json& j) {
    std::vector<std::string> missing;
    if (!j.contains("schema") || !j["schema"].is_string() || j["schema"].get<std::string>() != kDatasetSchema)
        missing.push_back("schema");
    auto need_string = [&](const char* key) -> std::string {
        if (!j.contains(key) || !j[key].is_string()) {
            missing.push_back(key);
            return "";
        }
        return j[key].get<std::string>();
    };
    StepRecord r;
    r.task_id = need_string("task_id");
    if (!j.contains("step_index") || !j["step_index"].is_number_integer())
        missing.push_back("step_index");
    else
        r.step_index = j["step_index"].get<int>();
    r.task = need_string("task");
    r.html = need_string("html");
    if (!j.contains("gt_action") || !j["gt_action"].is_object()) missing.push_back("gt_action");
    if (!missing.empty()) throw FormatError(std::move(missing));
    r.gt_action = action_from_json(j["gt_action"]);

    if (j.contains("screenshot_ref") && j["screenshot_ref"].is_string())
        r.screenshot_ref = j["screenshot_ref"].get<std::string>();
    if (j.contains("gt_subtask") && j["gt_subtask"].is_string()) r.gt_subtask = j["gt_subtask"].get<std::string>();
    if (j.contains("gt_keyword_weights") && j["gt_keyword_weights"].is_object()) {
        std::vector<std::pair<std::string, int>> kw;
        for (const auto& [key, value] : j["gt_keyword_weights"].items()) {
            if (!value.is_number_integer()) throw InvalidWeights("weight is not an integer", key);
            kw.emplace_back(key, value.get<int>());
        }
        r.gt_keyword_weights = std::move(kw);
    }
    if (j.contains("gt_element_backend_id")) {
        const auto& b = j["gt_element_backend_id"];
        if (b.is_string())
            r.gt_element_backend_id = b.get<std::string>();
        else if (b.is_number_integer())
            r.gt_element_backend_id = std::to_string(b.get<long long>());
    }
    if (j.contains("gt_element_id") && j["gt_element_id"].is_number_integer())
        r.gt_element_id = j["gt_element_id"].get<int>();
    if (j.contains("gt_element_tag") && j["gt_element_tag"].is_string())
        r.gt_element_tag = j["gt_element_tag"].get<std::string>();
    if (j.contains("gt_element_text") && j["gt_element_text"].is_string())
        r.gt_element_text = j["gt_element_text"].get<std::string>();
    if (j.contains("gt_element_attr") && j["gt_element_attr"].is_object() &&
        j["gt_element_attr"].contains("name") && j["gt_element_attr"].contains("value"))
        r.gt_element_attr = {j["gt_element_attr"]["name"].get<std::string>(),
                             j["gt_element_attr"]["value"].get<std::string>()};
    return r;
}

inline std::vector<StepRecord> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset " + path);
    std::vector<StepRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        bool all_space = true;
        for (char c : line)
            if (!is_ascii_space(c)) {
                all_space = false;
                break;
            }
        if (all_space) continue;
        try {
            records.push_back(parse_step_record(nlohmann::ordered_json::parse(line)));
        } catch (const std::exception& e) {
            throw ConfigError("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

struct GtLocation {
    std::optional<int> element_id;
    bool ambiguous = false;
};

inline GtLocation locate_gt(const StepRecord& record, const std::vector<ElementRecord>& elements,
                            const std::string& backend_attr = "backend_node_id") {
    if (record.gt_element_backend_id) {
        for (const auto& el : elements)
            for (const auto& [text, kind] : el.attribute_texts)
                if (kind.tier != AttrTier::VisualText && kind.name == backend_attr &&
                    text == *record.gt_element_backend_id)
                    return {el.element_id, false};
    }
    if (record.gt_element_id) {
        for (const auto& el : elements)
            if (el.element_id == *record.gt_element_id) return {el.element_id, false};
        return {};
    }
    if (record.gt_element_tag || record.gt_element_text || record.gt_element_attr) {
        std::vector<int> matches;
        for (const auto& el : elements) {
            if (record.gt_element_tag && el.tag != *record.gt_element_tag) continue;
            if (record.gt_element_text) {
                std::string visual;
                for (const auto& [text, kind] : el.attribute_texts)
                    if (kind.tier == AttrTier::VisualText) {
                        visual = text;
                        break;
                    }
                if (normalize_text(visual) != normalize_text(*record.gt_element_text)) continue;
            }
            if (record.gt_element_attr) {
                bool found = false;
                for (const auto& [text, kind] : el.attribute_texts)
                    if (kind.tier != AttrTier::VisualText && kind.name == record.gt_element_attr->first &&
                        text == record.gt_element_attr->second) {
                        found = true;
                        break;
                    }
                if (!found) continue;
            }
            matches.push_back(el.element_id);
        }
        if (!matches.empty()) return {matches.front(), matches.size() > 1};
    }
    return {};
}

inline bool recall_at_k(const CandidateList& candidates, int gt_id, int k) {
    std::size_t limit = std::min(static_cast<std::size_t>(k), candidates.entries.size());
    for (std::size_t i = 0; i < limit; ++i)
        if (candidates.entries[i].element_id == gt_id) return true;
    return false;
}

namespace detail {

inline std::vector<std::string> op_tokens(const ActionCommand& a) {
    std::string s = to_lower(std::string(action_kind_name(a.kind)));
    if (a.text_arg) {
        s += ' ';
        s += to_lower(*a.text_arg);
    }
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : s) {
        if (is_ascii_space(c)) {
            if (!cur.empty()) tokens.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

inline double token_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gt) {
    if (pred.empty() || gt.empty()) return pred.empty() && gt.empty() ? 1.0 : 0.0;
    std::map<std::string, int> gt_counts;
    for (const auto& t : gt) ++gt_counts[t];
    int overlap = 0;
    for (const auto& t : pred) {
        auto it = gt_counts.find(t);
        if (it != gt_counts.end() && it->second > 0) {
            ++overlap;
            --it->second;
        }
    }
    if (overlap == 0) return 0.0;
    double precision = static_cast<double>(overlap) / static_cast<double>(pred.size());
    double recall = static_cast<double>(overlap) / static_cast<double>(gt.size());
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace detail

struct StepMetrics {
    int ele_acc = 0;
    double op_f1 = 0.0;
    int step_sr = 0;
};

inline StepMetrics step_metrics(const ActionCommand& pred, const ActionCommand& gt,
                                std::optional<int> pred_element, std::optional<int> gt_element) {
    StepMetrics m;
    m.ele_acc = pred_element == gt_element ? 1 : 0;
    m.op_f1 = detail::token_f1(detail::op_tokens(pred), detail::op_tokens(gt));
    m.step_sr = (m.ele_acc == 1 && pred.kind == gt.kind && m.op_f1 == 1.0) ? 1 : 0;
    return m;
}

struct RewardBreakdown {
    int r_format = 0;
    int r_filtering = 0;
    int r_grounding = 0;
    double alpha = 1.0;
    double beta = 1.0;
    double total = 0.0;
};

inline RewardBreakdown hierarchical_reward(bool format_ok, bool filter_ok, bool ground_ok, double alpha = 1.0,
                                           double beta = 1.0) {
    RewardBreakdown r;
    r.alpha = alpha;
    r.beta = beta;
    r.r_format = format_ok ? 1 : 0;
    r.r_filtering = (format_ok && filter_ok) ? 1 : 0;
    r.r_grounding = (r.r_filtering == 1 && ground_ok) ? 1 : 0;
    r.total = r.r_format + alpha * r.r_filtering + beta * r.r_grounding;
    return r;
}

inline std::vector<double> grpo_advantages(const std::vector<double>& rewards, double eps = 1e-8) {
    std::vector<double> out(rewards.size(), 0.0);
    if (rewards.empty()) return out;
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(rewards.size());
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(rewards.size());
    double sd = std::sqrt(var);
    for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / (sd + eps);
    return out;
}

enum class EvalMode { GtPlan, FullPipeline };

struct EvalOptions {
    EvalMode mode = EvalMode::GtPlan;
    ExtractionConfig extraction;
    PipelineConfig pipeline;
    std::string backend_attr = "backend_node_id";
    int jobs = 1;
    std::vector<int> recall_ks = {1, 3, 5, 10, 20};
};

struct EvalReport {
    int n_steps = 0;
    std::map<int, double> recall_at;
    double grounding_accuracy = 0.0;
    double element_accuracy = 0.0;
    double operation_f1 = 0.0;
    double step_success_rate = 0.0;
    double mean_reduction_ratio = 0.0;
    int n_failures = 0;
    int n_gt_unresolved = 0;
    int n_ambiguous = 0;
    int n_recall_evaluable = 0;
    int n_grounding_evaluable = 0;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["n_steps"] = n_steps;
        nlohmann::ordered_json rec;
        for (const auto& [k, v] : recall_at) rec[std::to_string(k)] = v;
        j["recall_at"] = rec;
        j["grounding_accuracy"] = grounding_accuracy;
        j["element_accuracy"] = element_accuracy;
        j["operation_f1"] = operation_f1;
        j["step_success_rate"] = step_success_rate;
        j["mean_reduction_ratio"] = mean_reduction_ratio;
        j["n_failures"] = n_failures;
        j["n_gt_unresolved"] = n_gt_unresolved;
        j["n_ambiguous"] = n_ambiguous;
        j["n_recall_evaluable"] = n_recall_evaluable;
        j["n_grounding_evaluable"] = n_grounding_evaluable;
        return j;
    }

    std::string recall_csv() const {
        std::string header = "k";
        std::string row = "recall";
        for (const auto& [k, v] : recall_at) {
            header += "," + std::to_string(k);
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6f", v);
            row += ",";
            row += buf;
        }
        return header + "\n" + row + "\n";
    }
};

namespace detail {

struct RecordOutcome {
    bool hard_failure = false;
    bool soft_failure = false;
    bool gt_applicable = false;
    bool gt_resolved = false;
    bool ambiguous = false;
    std::optional<int> gt_element;
    bool has_pred = false;
    std::map<int, bool> recall;
    bool recall_evaluable = false;
    bool grounding_evaluable = false;
    int grounded = 0;
    int ele_acc = 0;
    double op_f1 = 0.0;
    int step_sr = 0;
    bool has_reduction = false;
    double reduction = 0.0;
    std::string trace_line;
};

inline bool element_bearing_kind(ActionKind k) {
    return k == ActionKind::Click || k == ActionKind::Type || k == ActionKind::SelectOption;
}

inline RecordOutcome eval_one(const StepRecord& rec, ChatClient& client, const EvalOptions& opts) {
    RecordOutcome oc;
    nlohmann::ordered_json trace;
    trace["task_id"] = rec.task_id;
    trace["step_index"] = rec.step_index;
    oc.gt_applicable = element_bearing_kind(rec.gt_action.kind);

    try {
        Document doc = parse_html(rec.html, rec.task_id);
        std::vector<ElementRecord> elements = extract(doc, opts.extraction);
        trace["n_elements"] = elements.size();

        if (oc.gt_applicable) {
            GtLocation loc = locate_gt(rec, elements, opts.backend_attr);
            oc.gt_resolved = loc.element_id.has_value();
            oc.ambiguous = loc.ambiguous;
            oc.gt_element = loc.element_id;
            trace["gt_resolved"] = oc.gt_resolved;
            if (oc.gt_element) trace["gt_element_id"] = *oc.gt_element;
        }

        StepContext ctx;
        ctx.task = rec.task;
        if (opts.mode == EvalMode::GtPlan) {
            if (!rec.gt_subtask) throw FormatError({"gt_subtask"});
            ctx.subtask = rec.gt_subtask;
        }
        KeywordWeights gt_weights;
        const KeywordWeights* preset = nullptr;
        if (opts.mode == EvalMode::GtPlan && rec.gt_keyword_weights) {
            gt_weights = validate_weights(*rec.gt_keyword_weights);
            preset = &gt_weights;
        }

        StageKey key;
        key.task_id = rec.task_id;
        key.step_index = rec.step_index;
        StepOutcome step = run_step(client, ctx, elements, opts.pipeline, key, preset);

        trace["n_candidates"] = step.candidates.entries.size();
        nlohmann::ordered_json ids = nlohmann::ordered_json::array();
        for (const auto& e : step.candidates.entries) ids.push_back(e.element_id);
        trace["candidate_ids"] = ids;

        if (oc.gt_resolved) {
            oc.recall_evaluable = true;
            nlohmann::ordered_json rj;
            for (int k : opts.recall_ks) {
                bool hit = recall_at_k(step.candidates, *oc.gt_element, k);
                oc.recall[k] = hit;
                rj[std::to_string(k)] = hit;
            }
            trace["recall"] = rj;
        }
        if (!step.candidates.entries.empty() && !elements.empty()) {
            oc.reduction =
                reduction_ratio(static_cast<int>(elements.size()), static_cast<int>(step.candidates.entries.size()));
            oc.has_reduction = true;
            trace["reduction_ratio"] = oc.reduction;
        }

        oc.grounding_evaluable = oc.gt_resolved || !oc.gt_applicable;
        trace["gt_action"] = action_to_json(rec.gt_action);
        if (step.ok() && step.action) {
            oc.has_pred = true;
            const ActionCommand& pred = *step.action;
            trace["pred_action"] = action_to_json(pred);
            if (oc.grounding_evaluable) {
                ActionCommand effective_gt = rec.gt_action;
                if (oc.gt_applicable && !effective_gt.element_id && oc.gt_element)
                    effective_gt.element_id = oc.gt_element;
                oc.grounded = actions_equal(pred, effective_gt) ? 1 : 0;
                StepMetrics m = step_metrics(pred, effective_gt, pred.element_id, effective_gt.element_id);
                oc.ele_acc = m.ele_acc;
                oc.op_f1 = m.op_f1;
                oc.step_sr = m.step_sr;
                trace["grounding_ok"] = oc.grounded == 1;
                trace["ele_acc"] = oc.ele_acc;
                trace["op_f1"] = oc.op_f1;
                trace["step_sr"] = oc.step_sr;
            }
        } else if (step.failure_stage) {
            oc.soft_failure = true;
            trace["failure_stage"] = *step.failure_stage;
            trace["failure_reason"] = *step.failure_reason;
        }
    } catch (const std::exception& e) {
        oc.hard_failure = true;
        trace["failure_stage"] = "record";
        trace["failure_reason"] = e.what();
    }
    oc.trace_line = trace.dump();
    return oc;
}

}  // namespace detail

inline EvalReport run_eval(const std::vector<StepRecord>& records, ChatClient& client, const EvalOptions& opts,
                           std::ostream* trace_out = nullptr) {
    std::vector<detail::RecordOutcome> outcomes(records.size());

    int jobs = opts.jobs < 1 ? 1 : opts.jobs;
    if (jobs == 1 || records.size() <= 1) {
        for (std::size_t i = 0; i < records.size(); ++i) outcomes[i] = detail::eval_one(records[i], client, opts);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            while (true) {
                std::size_t i = next.fetch_add(1);
                if (i >= records.size()) break;
                outcomes[i] = detail::eval_one(records[i], client, opts);
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    EvalReport report;
    report.n_steps = static_cast<int>(records.size());
    std::map<int, int> recall_hits;
    for (int k : opts.recall_ks) recall_hits[k] = 0;
    int n_recall = 0, n_ground = 0;
    int grounded = 0, ele = 0, sr = 0;
    double opf1 = 0.0, reduction = 0.0;
    int n_reduction = 0;

    for (const auto& oc : outcomes) {
        if (trace_out) *trace_out << oc.trace_line << "\n";
        if (oc.hard_failure || oc.soft_failure) ++report.n_failures;
        if (oc.gt_applicable && !oc.gt_resolved && !oc.hard_failure) ++report.n_gt_unresolved;
        if (oc.ambiguous) ++report.n_ambiguous;
        if (oc.recall_evaluable) {
            ++n_recall;
            for (const auto& [k, hit] : oc.recall)
                if (hit) ++recall_hits[k];
        }
        if (oc.grounding_evaluable && !oc.hard_failure) {
            ++n_ground;
            grounded += oc.grounded;
            ele += oc.ele_acc;
            opf1 += oc.op_f1;
            sr += oc.step_sr;
        }
        if (oc.has_reduction) {
            ++n_reduction;
            reduction += oc.reduction;
        }
    }

    report.n_recall_evaluable = n_recall;
    report.n_grounding_evaluable = n_ground;
    for (int k : opts.recall_ks)
        report.recall_at[k] = n_recall > 0 ? static_cast<double>(recall_hits[k]) / n_recall : 0.0;
    if (n_ground > 0) {
        report.grounding_accuracy = static_cast<double>(grounded) / n_ground;
        report.element_accuracy = static_cast<double>(ele) / n_ground;
        report.operation_f1 = opf1 / n_ground;
        report.step_success_rate = static_cast<double>(sr) / n_ground;
    }
    if (n_reduction > 0) report.mean_reduction_ratio = reduction / n_reduction;
    return report;
}

}  // namespace domprune
