#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <domprune/domprune.hpp>

namespace {

using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUnreadableFile = 2;
constexpr int kExitConfigError = 3;
constexpr int kExitInvalidWeights = 4;
constexpr int kExitEndpointFailure = 5;

struct FileUnreadable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileUnreadable("cannot read file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void require_readable(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileUnreadable("cannot read file: " + path);
}

domprune::KeywordWeights load_weights_file(const std::string& path) {
    std::string text = read_file(path);
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw domprune::ConfigError("weights file " + path + ": " + e.what());
    }
    if (doc.is_object() && doc.contains("keyword_weights")) doc = doc.at("keyword_weights");
    if (!doc.is_object())
        throw domprune::ConfigError("weights file " + path + ": expected a JSON object of keyword -> weight");
    std::vector<std::pair<std::string, int>> raw;
    for (const auto& [key, value] : doc.items()) {
        if (!value.is_number_integer())
            throw domprune::InvalidWeights("weight is not an integer", key);
        raw.emplace_back(key, value.get<int>());
    }
    return domprune::validate_weights(raw);
}

std::string_view tier_name(domprune::AttrTier tier) {
    switch (tier) {
        case domprune::AttrTier::VisualText: return "visual_text";
        case domprune::AttrTier::TrustedAttribute: return "trusted_attribute";
        default: return "other_attribute";
    }
}

ordered_json record_to_json(const domprune::ElementRecord& rec) {
    ordered_json j;
    j["element_id"] = rec.element_id;
    j["tag"] = rec.tag;
    j["doc_order_index"] = rec.doc_order_index;
    ordered_json texts = ordered_json::array();
    for (const auto& [text, kind] : rec.attribute_texts) {
        ordered_json t;
        t["text"] = text;
        t["tier"] = tier_name(kind.tier);
        if (!kind.name.empty()) t["name"] = kind.name;
        texts.push_back(std::move(t));
    }
    j["attribute_texts"] = std::move(texts);
    j["context_text"] = rec.context_text;
    return j;
}

ordered_json score_to_json(const domprune::ScoreResult& res, bool explain) {
    ordered_json j;
    j["element_id"] = res.element_id;
    j["score"] = res.score;
    if (explain) {
        ordered_json paths = ordered_json::array();
        for (const auto& p : res.paths) {
            ordered_json pj;
            pj["keyword"] = p.keyword;
            pj["tier"] = tier_name(p.attr_kind.tier);
            if (!p.attr_kind.name.empty()) pj["attr_name"] = p.attr_kind.name;
            pj["match_type"] = std::string(domprune::match_type_name(p.match_type));
            pj["alpha"] = p.alpha_applied;
            pj["contribution"] = p.contribution;
            paths.push_back(std::move(pj));
        }
        j["paths"] = std::move(paths);
    }
    return j;
}

ordered_json planner_to_json(const domprune::PlannerOutput& p) {
    ordered_json j;
    j["state_analysis"] = p.state_analysis;
    j["progress_evaluation"] = p.progress_evaluation;
    j["challenges"] = p.challenges;
    j["next_steps"] = p.next_steps;
    j["action_type"] = p.action_type;
    j["target_text"] = p.target_text;
    return j;
}

ordered_json outcome_to_json(const domprune::StepOutcome& outcome) {
    ordered_json j;
    if (outcome.planner)
        j["plan"] = planner_to_json(*outcome.planner);
    else if (outcome.plan_text)
        j["plan"] = *outcome.plan_text;
    else
        j["plan"] = nullptr;
    if (outcome.weights) {
        ordered_json w = ordered_json::object();
        for (const auto& [key, weight] : outcome.weights->entries()) w[key] = weight;
        j["keyword_weights"] = std::move(w);
    } else {
        j["keyword_weights"] = nullptr;
    }
    j["candidates"] = domprune::serialize_candidates(outcome.candidates);
    if (outcome.action)
        j["action"] = ordered_json::parse(domprune::action_to_json(*outcome.action).dump());
    else
        j["action"] = nullptr;
    j["terminated"] = outcome.terminated;
    j["llm_calls"] = outcome.llm_calls;
    j["failure_stage"] = outcome.failure_stage ? ordered_json(*outcome.failure_stage) : ordered_json(nullptr);
    j["failure_reason"] = outcome.failure_reason ? ordered_json(*outcome.failure_reason) : ordered_json(nullptr);
    return j;
}

domprune::PromptVariant parse_variant(const std::string& name) {
    if (name == "zero_shot") return domprune::PromptVariant::ZeroShot;
    if (name == "training") return domprune::PromptVariant::Training;
    throw domprune::ConfigError("unknown prompt variant '" + name + "' (expected zero_shot or training)");
}

domprune::EvalMode parse_mode(const std::string& name) {
    if (name == "gt_plan") return domprune::EvalMode::GtPlan;
    if (name == "full") return domprune::EvalMode::FullPipeline;
    throw domprune::ConfigError("unknown eval mode '" + name + "' (expected gt_plan or full)");
}

struct GlobalFlags {
    std::optional<std::string> config_path;
    std::optional<int> top_n;
    std::optional<int> jobs;
    std::optional<std::string> mock_path;
    std::optional<std::string> variant;
    bool two_turn = false;
    bool include_zero_scores = false;
};

domprune::CliConfig build_config(const GlobalFlags& flags) {
    domprune::CliConfig cfg = domprune::load_cli_config(flags.config_path);
    if (flags.top_n) cfg.top_n = *flags.top_n;
    if (flags.variant) cfg.variant = parse_variant(*flags.variant);
    if (flags.two_turn) cfg.two_turn = true;
    if (flags.include_zero_scores) cfg.include_zero_scores = true;
    cfg.validate();
    return cfg;
}

std::unique_ptr<domprune::ChatClient> make_client(const domprune::CliConfig& cfg, const GlobalFlags& flags,
                                                  domprune::TranscriptWriter* transcript) {
    if (flags.mock_path) return std::make_unique<domprune::ReplayChatClient>(*flags.mock_path);
    return std::make_unique<domprune::HttpChatClient>(cfg.endpoint, transcript);
}

int cmd_extract(const GlobalFlags& flags, const std::string& html_path, bool no_hidden_filters) {
    domprune::CliConfig cfg = build_config(flags);
    if (no_hidden_filters) cfg.extraction.hidden_filters_enabled = false;
    domprune::Document doc = domprune::parse_html(read_file(html_path), html_path);
    for (const auto& rec : domprune::extract(doc, cfg.extraction))
        std::cout << record_to_json(rec).dump() << "\n";
    return kExitOk;
}

int cmd_score(const GlobalFlags& flags, const std::string& html_path, const std::string& weights_path,
              bool explain) {
    domprune::CliConfig cfg = build_config(flags);
    domprune::Document doc = domprune::parse_html(read_file(html_path), html_path);
    auto elements = domprune::extract(doc, cfg.extraction);
    auto weights = load_weights_file(weights_path);
    for (const auto& res : domprune::score_elements(elements, weights, cfg.scoring))
        std::cout << score_to_json(res, explain).dump() << "\n";
    return kExitOk;
}

int cmd_prune(const GlobalFlags& flags, const std::string& html_path, const std::string& weights_path) {
    domprune::CliConfig cfg = build_config(flags);
    domprune::Document doc = domprune::parse_html(read_file(html_path), html_path);
    auto elements = domprune::extract(doc, cfg.extraction);
    auto weights = load_weights_file(weights_path);
    auto scores = domprune::score_elements(elements, weights, cfg.scoring);
    auto candidates = domprune::top_n(scores, elements, cfg.top_n, cfg.include_zero_scores);
    std::string block = domprune::serialize_candidates(candidates);
    if (!block.empty()) std::cout << block << "\n";
    return kExitOk;
}

struct StepArgs {
    std::string html_path;
    std::string task;
    std::optional<std::string> gt_plan;
    std::vector<std::string> history;
    std::string task_id;
    int step_index = -1;
    std::optional<std::string> screenshot;
    std::optional<std::string> transcript_path;
};

int cmd_step(const GlobalFlags& flags, const StepArgs& args) {
    domprune::CliConfig cfg = build_config(flags);
    domprune::Document doc = domprune::parse_html(read_file(args.html_path), args.html_path);
    auto elements = domprune::extract(doc, cfg.extraction);

    domprune::StepContext ctx;
    ctx.task = args.task;
    ctx.subtask = args.gt_plan;
    ctx.screenshot = args.screenshot;
    for (std::size_t i = 0; i < args.history.size(); ++i)
        ctx.history.push_back({static_cast<int>(i) + 1, args.history[i]});

    std::unique_ptr<domprune::TranscriptWriter> transcript;
    if (args.transcript_path && !flags.mock_path)
        transcript = std::make_unique<domprune::TranscriptWriter>(*args.transcript_path);
    auto client = make_client(cfg, flags, transcript.get());

    domprune::StageKey base_key;
    base_key.task_id = args.task_id;
    base_key.step_index = args.step_index;
    auto outcome = domprune::run_step(*client, ctx, elements, cfg.pipeline(), base_key);
    std::cout << outcome_to_json(outcome).dump(2) << "\n";
    return kExitOk;
}

struct EvalArgs {
    std::string dataset_path;
    std::optional<std::string> mode;
    std::optional<std::string> report_path;
    std::optional<std::string> trace_path;
    std::optional<std::string> recall_csv_path;
};

int cmd_eval(const GlobalFlags& flags, const EvalArgs& args) {
    domprune::CliConfig cfg = build_config(flags);
    require_readable(args.dataset_path);
    auto records = domprune::load_dataset(args.dataset_path);

    domprune::EvalOptions opts;
    opts.mode = args.mode ? parse_mode(*args.mode) : cfg.eval_mode;
    opts.extraction = cfg.extraction;
    opts.pipeline = cfg.pipeline();
    opts.backend_attr = cfg.backend_attr;
    if (flags.jobs) opts.jobs = *flags.jobs;

    auto client = make_client(cfg, flags, nullptr);

    std::ofstream trace_file;
    std::ostream* trace_out = nullptr;
    if (args.trace_path) {
        trace_file.open(*args.trace_path);
        if (!trace_file) throw domprune::ConfigError("cannot open trace file " + *args.trace_path);
        trace_out = &trace_file;
    }

    auto report = domprune::run_eval(records, *client, opts, trace_out);

    std::string report_text = report.to_json().dump(2);
    if (args.report_path) {
        std::ofstream out(*args.report_path);
        if (!out) throw domprune::ConfigError("cannot open report file " + *args.report_path);
        out << report_text << "\n";
    } else {
        std::cout << report_text << "\n";
    }
    if (args.recall_csv_path) {
        std::ofstream out(*args.recall_csv_path);
        if (!out) throw domprune::ConfigError("cannot open recall csv file " + *args.recall_csv_path);
        out << report.recall_csv();
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DOM pruning and grounding toolkit for web agents"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "configuration file (INI sections: extract, scoring, endpoint, pipeline)");
    app.add_option("--top-n", flags.top_n, "keep the N best-scoring candidates (default 20)");
    app.add_option("--jobs", flags.jobs, "worker threads for eval (default 1)");
    app.add_option("--mock", flags.mock_path, "replay endpoint responses from a JSONL transcript instead of HTTP");
    app.add_option("--variant", flags.variant, "prompt variant: zero_shot or training");
    app.add_flag("--two-turn", flags.two_turn, "use the single-model two-turn conversation flow");
    app.add_flag("--include-zero-scores", flags.include_zero_scores, "keep zero-scored elements as candidates");

    auto* extract_cmd = app.add_subcommand("extract", "parse HTML and dump interactive elements as JSON lines");
    std::string extract_html;
    bool no_hidden_filters = false;
    extract_cmd->add_option("html", extract_html, "HTML file to parse")->required();
    extract_cmd->add_flag("--no-hidden-filters", no_hidden_filters, "also keep elements marked hidden");

    auto* score_cmd = app.add_subcommand("score", "score interactive elements against keyword weights");
    std::string score_html, score_weights;
    bool explain = false;
    score_cmd->add_option("html", score_html, "HTML file to parse")->required();
    score_cmd->add_option("weights", score_weights, "JSON file of keyword -> integer weight")->required();
    score_cmd->add_flag("--explain", explain, "include per-keyword match paths");

    auto* prune_cmd = app.add_subcommand("prune", "print the serialized top-N candidate block");
    std::string prune_html, prune_weights;
    prune_cmd->add_option("html", prune_html, "HTML file to parse")->required();
    prune_cmd->add_option("weights", prune_weights, "JSON file of keyword -> integer weight")->required();

    auto* step_cmd = app.add_subcommand("step", "run one plan / filter / ground step against the endpoint");
    StepArgs step_args;
    step_cmd->add_option("html", step_args.html_path, "HTML file for the current page")->required();
    step_cmd->add_option("--task", step_args.task, "high-level task description")->required();
    step_cmd->add_option("--gt-plan", step_args.gt_plan, "use this sub-task directly and skip the planner");
    step_cmd->add_option("--history", step_args.history, "summary of a previous step (repeatable)");
    step_cmd->add_option("--task-id", step_args.task_id, "task id used to key transcript entries");
    step_cmd->add_option("--step-index", step_args.step_index, "step index used to key transcript entries");
    step_cmd->add_option("--screenshot", step_args.screenshot, "screenshot placeholder for two-turn prompts");
    step_cmd->add_option("--transcript", step_args.transcript_path, "append request/response pairs to this JSONL file");

    auto* eval_cmd = app.add_subcommand("eval", "run batch evaluation over a JSONL dataset");
    EvalArgs eval_args;
    eval_cmd->add_option("dataset", eval_args.dataset_path, "JSONL dataset of step records")->required();
    eval_cmd->add_option("--mode", eval_args.mode, "gt_plan (use recorded sub-tasks) or full (run the planner)");
    eval_cmd->add_option("--report", eval_args.report_path, "write the report JSON here instead of stdout");
    eval_cmd->add_option("--trace", eval_args.trace_path, "write per-record trace JSONL here");
    eval_cmd->add_option("--recall-csv", eval_args.recall_csv_path, "write the recall-at-k table as CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfigError;
    }

    try {
        if (extract_cmd->parsed()) return cmd_extract(flags, extract_html, no_hidden_filters);
        if (score_cmd->parsed()) return cmd_score(flags, score_html, score_weights, explain);
        if (prune_cmd->parsed()) return cmd_prune(flags, prune_html, prune_weights);
        if (step_cmd->parsed()) return cmd_step(flags, step_args);
        if (eval_cmd->parsed()) return cmd_eval(flags, eval_args);
        std::cerr << "no subcommand given\n";
        return kExitConfigError;
    } catch (const FileUnreadable& e) {
        std::cerr << e.what() << "\n";
        return kExitUnreadableFile;
    } catch (const domprune::InvalidWeights& e) {
        std::cerr << e.what() << "\n";
        return kExitInvalidWeights;
    } catch (const domprune::EndpointError& e) {
        std::cerr << e.what() << "\n";
        return kExitEndpointFailure;
    } catch (const domprune::Timeout& e) {
        std::cerr << e.what() << "\n";
        return kExitEndpointFailure;
    } catch (const domprune::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfigError;
    } catch (const domprune::Error& e) {
        std::cerr << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitError;
    }
}
