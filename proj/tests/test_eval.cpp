#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>
#include <json.hpp>

#include "domprune/domprune.hpp"

using namespace domprune;
using Catch::Approx;

namespace {

std::string temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "domprune-eval-tests";
    std::filesystem::create_directories(dir);
    auto path = dir / name;
    std::filesystem::remove(path);
    return path.string();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

nlohmann::ordered_json minimal_record() {
    nlohmann::ordered_json j;
    j["schema"] = "p4w/1";
    j["task_id"] = "t1";
    j["step_index"] = 0;
    j["task"] = "add the item to the cart";
    j["html"] = "<button>Add to cart</button>";
    j["gt_action"] = {{"kind", "CLICK"}, {"element_id", 0}};
    return j;
}

std::vector<ElementRecord> shop_elements() {
    std::vector<ElementRecord> els(3);
    els[0] = {0,
              "button",
              {{"Add to Cart", visual_text_kind()}, {"n42", other_kind("backend_node_id")}},
              "",
              2};
    els[1] = {1, "input", {{"q", trusted_kind("name")}, {"n43", other_kind("backend_node_id")}}, "", 3};
    els[2] = {2, "button", {{"Add to Cart", visual_text_kind()}}, "", 4};
    return els;
}

ActionCommand click(int id) {
    ActionCommand a;
    a.kind = ActionKind::Click;
    a.element_id = id;
    return a;
}

ActionCommand typed(int id, std::string text) {
    ActionCommand a;
    a.kind = ActionKind::Type;
    a.element_id = id;
    a.text_arg = std::move(text);
    return a;
}

}  // namespace

TEST_CASE("parse_step_record") {
    SECTION("minimal record") {
        StepRecord r = parse_step_record(minimal_record());
        CHECK(r.task_id == "t1");
        CHECK(r.step_index == 0);
        CHECK(r.task == "add the item to the cart");
        CHECK(r.gt_action.kind == ActionKind::Click);
        CHECK(r.gt_action.element_id == 0);
        CHECK_FALSE(r.gt_subtask.has_value());
        CHECK_FALSE(r.gt_keyword_weights.has_value());
    }
    SECTION("schema string must match exactly") {
        auto j = minimal_record();
        j["schema"] = "p4w/2";
        try {
            parse_step_record(j);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.missing_keys() == std::vector<std::string>{"schema"});
        }
    }
    SECTION("missing required keys are all reported") {
        auto j = minimal_record();
        j.erase("task_id");
        j.erase("html");
        try {
            parse_step_record(j);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            auto& keys = e.missing_keys();
            CHECK(std::find(keys.begin(), keys.end(), "task_id") != keys.end());
            CHECK(std::find(keys.begin(), keys.end(), "html") != keys.end());
        }
    }
    SECTION("optional ground-truth fields") {
        auto j = minimal_record();
        j["gt_subtask"] = "click the add to cart button";
        j["gt_keyword_weights"] = {{"add", 10}, {"cart", 5}};
        j["gt_element_backend_id"] = 42;
        j["gt_element_tag"] = "button";
        j["gt_element_text"] = "Add to Cart";
        j["gt_element_attr"] = {{"name", "id"}, {"value", "add-btn"}};
        StepRecord r = parse_step_record(j);
        CHECK(r.gt_subtask == "click the add to cart button");
        REQUIRE(r.gt_keyword_weights.has_value());
        CHECK(r.gt_keyword_weights->size() == 2);
        CHECK(r.gt_element_backend_id == "42");
        CHECK(r.gt_element_tag == "button");
        CHECK(r.gt_element_attr == std::pair<std::string, std::string>{"id", "add-btn"});
    }
    SECTION("fractional ground-truth weights are rejected") {
        auto j = minimal_record();
        j["gt_keyword_weights"] = {{"add", 2.5}};
        CHECK_THROWS_AS(parse_step_record(j), InvalidWeights);
    }
    SECTION("bad gt_action") {
        auto j = minimal_record();
        j["gt_action"] = {{"kind", "HOVER"}};
        CHECK_THROWS_AS(parse_step_record(j), InvalidAction);
    }
}

TEST_CASE("load_dataset") {
    SECTION("blank lines are skipped") {
        std::string path = temp_path("ok.jsonl");
        write_file(path, minimal_record().dump() + "\n\n   \n" + minimal_record().dump() + "\n");
        auto records = load_dataset(path);
        CHECK(records.size() == 2);
    }
    SECTION("parse errors carry the line number") {
        std::string path = temp_path("broken.jsonl");
        write_file(path, minimal_record().dump() + "\n{ nope\n");
        try {
            load_dataset(path);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
    SECTION("schema violations carry the line number too") {
        std::string path = temp_path("schema.jsonl");
        auto j = minimal_record();
        j.erase("task");
        write_file(path, j.dump() + "\n");
        try {
            load_dataset(path);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("line 1") != std::string::npos);
        }
    }
    SECTION("missing file") {
        CHECK_THROWS_AS(load_dataset("/nonexistent/data.jsonl"), ConfigError);
    }
}

TEST_CASE("locate_gt") {
    auto els = shop_elements();
    StepRecord rec;

    SECTION("backend id match wins") {
        rec.gt_element_backend_id = "n43";
        GtLocation loc = locate_gt(rec, els);
        CHECK(loc.element_id == 1);
        CHECK_FALSE(loc.ambiguous);
    }
    SECTION("a custom backend attribute name can be used") {
        std::vector<ElementRecord> custom(1);
        custom[0] = {0, "a", {{"77", other_kind("node-ref")}}, "", 1};
        rec.gt_element_backend_id = "77";
        CHECK_FALSE(locate_gt(rec, custom).element_id.has_value());
        CHECK(locate_gt(rec, custom, "node-ref").element_id == 0);
    }
    SECTION("explicit element id") {
        rec.gt_element_id = 1;
        CHECK(locate_gt(rec, els).element_id == 1);
    }
    SECTION("an explicit id that is absent does not fall through to weaker matchers") {
        rec.gt_element_id = 99;
        rec.gt_element_tag = "button";
        rec.gt_element_text = "Add to Cart";
        GtLocation loc = locate_gt(rec, els);
        CHECK_FALSE(loc.element_id.has_value());
    }
    SECTION("tag plus visible text, normalized") {
        rec.gt_element_tag = "button";
        rec.gt_element_text = "  add TO cart ";
        GtLocation loc = locate_gt(rec, els);
        CHECK(loc.element_id == 0);
        CHECK(loc.ambiguous);
    }
    SECTION("an attribute pin disambiguates") {
        rec.gt_element_tag = "button";
        rec.gt_element_text = "Add to Cart";
        rec.gt_element_attr = {{"backend_node_id"}, {"n42"}};
        GtLocation loc = locate_gt(rec, els);
        CHECK(loc.element_id == 0);
        CHECK_FALSE(loc.ambiguous);
    }
    SECTION("text matching reads only the visible text") {
        rec.gt_element_text = "n42";
        CHECK_FALSE(locate_gt(rec, els).element_id.has_value());
    }
    SECTION("no criteria resolves nothing") {
        CHECK_FALSE(locate_gt(rec, els).element_id.has_value());
    }
}

TEST_CASE("recall_at_k") {
    CandidateList list;
    list.entries = {{5, "a", "", 9.0, 1}, {3, "a", "", 7.0, 2}, {8, "a", "", 5.0, 3}};

    CHECK(recall_at_k(list, 5, 1));
    CHECK_FALSE(recall_at_k(list, 8, 1));
    CHECK(recall_at_k(list, 8, 3));
    CHECK(recall_at_k(list, 8, 100));
    CHECK_FALSE(recall_at_k(list, 99, 100));

    SECTION("hits are monotone in k") {
        std::mt19937 rng(20240817);
        for (int trial = 0; trial < 50; ++trial) {
            CandidateList random_list;
            int n = static_cast<int>(rng() % 12);
            for (int i = 0; i < n; ++i)
                random_list.entries.push_back({static_cast<int>(rng() % 20), "a", "", 0.0, i});
            int gt = static_cast<int>(rng() % 20);
            for (int k = 1; k < 20; ++k)
                if (recall_at_k(random_list, gt, k)) CHECK(recall_at_k(random_list, gt, k + 1));
        }
    }
}

TEST_CASE("operation F1 and step metrics") {
    SECTION("shared tokens score six sevenths") {
        StepMetrics m = step_metrics(typed(4, "New York"), typed(4, "New York City"), 4, 4);
        CHECK(m.ele_acc == 1);
        CHECK(m.op_f1 == Approx(6.0 / 7.0));
        CHECK(m.step_sr == 0);
    }
    SECTION("identical click actions get full marks") {
        StepMetrics m = step_metrics(click(3), click(3), 3, 3);
        CHECK(m.ele_acc == 1);
        CHECK(m.op_f1 == 1.0);
        CHECK(m.step_sr == 1);
    }
    SECTION("element mismatch blocks step success") {
        StepMetrics m = step_metrics(click(3), click(4), 3, 4);
        CHECK(m.ele_acc == 0);
        CHECK(m.op_f1 == 1.0);
        CHECK(m.step_sr == 0);
    }
    SECTION("kind mismatch blocks step success even when elements agree") {
        ActionCommand done;
        done.kind = ActionKind::Done;
        ActionCommand fail;
        fail.kind = ActionKind::Fail;
        StepMetrics m = step_metrics(done, fail, std::nullopt, std::nullopt);
        CHECK(m.ele_acc == 1);
        CHECK(m.op_f1 == 0.0);
        CHECK(m.step_sr == 0);
    }
    SECTION("both element-free actions compare equal on the element axis") {
        ActionCommand done;
        done.kind = ActionKind::Done;
        StepMetrics m = step_metrics(done, done, std::nullopt, std::nullopt);
        CHECK(m.ele_acc == 1);
        CHECK(m.step_sr == 1);
    }
    SECTION("token F1 edge cases") {
        CHECK(detail::token_f1({}, {}) == 1.0);
        CHECK(detail::token_f1({"click"}, {}) == 0.0);
        CHECK(detail::token_f1({}, {"click"}) == 0.0);
        CHECK(detail::token_f1({"a", "b"}, {"c", "d"}) == 0.0);
        CHECK(detail::token_f1({"a", "a"}, {"a"}) == Approx(2.0 / 3.0));
    }
    SECTION("text casing does not matter for the operation score") {
        StepMetrics m = step_metrics(typed(4, "BOSTON"), typed(4, "boston"), 4, 4);
        CHECK(m.op_f1 == 1.0);
        CHECK(m.step_sr == 1);
    }
}

TEST_CASE("hierarchical reward gates each level on the one below") {
    struct Case {
        bool fmt, filt, grnd;
        double total;
    };
    const Case table[] = {
        {false, false, false, 0.0}, {false, false, true, 0.0}, {false, true, false, 0.0},
        {false, true, true, 0.0},   {true, false, false, 1.0}, {true, false, true, 1.0},
        {true, true, false, 2.0},   {true, true, true, 3.0},
    };
    for (const auto& c : table) {
        RewardBreakdown r = hierarchical_reward(c.fmt, c.filt, c.grnd);
        INFO("fmt=" << c.fmt << " filt=" << c.filt << " grnd=" << c.grnd);
        CHECK(r.total == c.total);
        CHECK((r.total == 0.0 || r.total == 1.0 || r.total == 2.0 || r.total == 3.0));
        CHECK(r.r_filtering <= r.r_format);
        CHECK(r.r_grounding <= r.r_filtering);
    }

    SECTION("custom stage weights scale the gated terms") {
        RewardBreakdown r = hierarchical_reward(true, true, true, 0.5, 2.0);
        CHECK(r.total == Approx(3.5));
        r = hierarchical_reward(true, false, true, 0.5, 2.0);
        CHECK(r.total == Approx(1.0));
    }
}

TEST_CASE("grpo_advantages normalizes rewards within a group") {
    SECTION("uniform rewards carry no signal") {
        auto adv = grpo_advantages({1.0, 1.0, 1.0, 1.0});
        for (double a : adv) CHECK(a == 0.0);
    }
    SECTION("split rewards normalize to plus and minus one") {
        auto adv = grpo_advantages({1.0, 0.0, 0.0, 1.0});
        REQUIRE(adv.size() == 4);
        CHECK(adv[0] == Approx(1.0).epsilon(1e-6));
        CHECK(adv[1] == Approx(-1.0).epsilon(1e-6));
        CHECK(adv[2] == Approx(-1.0).epsilon(1e-6));
        CHECK(adv[3] == Approx(1.0).epsilon(1e-6));
    }
    SECTION("degenerate groups") {
        CHECK(grpo_advantages({}).empty());
        auto single = grpo_advantages({2.0});
        REQUIRE(single.size() == 1);
        CHECK(single[0] == 0.0);
    }
    SECTION("advantages sum to roughly zero") {
        std::mt19937 rng(99);
        std::uniform_real_distribution<double> dist(0.0, 3.0);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> rewards;
            for (int i = 0; i < 8; ++i) rewards.push_back(dist(rng));
            auto adv = grpo_advantages(rewards);
            double sum = 0.0;
            for (double a : adv) sum += a;
            CHECK(sum == Approx(0.0).margin(1e-6));
        }
    }
}

namespace {

std::string demo_dataset() {
    nlohmann::ordered_json r1 = minimal_record();
    r1["task_id"] = "shop-1";
    r1["html"] =
        R"(<button backend_node_id="n1">Add to cart</button><input backend_node_id="n2" placeholder="Search products">)";
    r1["gt_subtask"] = "click the add to cart button";
    r1["gt_keyword_weights"] = {{"add", 10}, {"cart", 5}};
    r1["gt_element_backend_id"] = "n1";
    r1["gt_action"] = {{"kind", "CLICK"}};

    nlohmann::ordered_json r2 = r1;
    r2["task_id"] = "shop-2";
    r2["task"] = "search for red shoes";
    r2["gt_subtask"] = "type red shoes into the search box";
    r2["gt_keyword_weights"] = {{"search", 9}};
    r2["gt_element_backend_id"] = "n2";
    r2["gt_action"] = {{"kind", "TYPE"}, {"text", "red shoes"}};

    nlohmann::ordered_json r3 = r1;
    r3["task_id"] = "shop-3";
    r3["gt_subtask"] = "click the add to cart button";
    r3["gt_keyword_weights"] = {{"search", 9}};
    r3["gt_element_backend_id"] = "n1";

    return r1.dump() + "\n" + r2.dump() + "\n" + r3.dump() + "\n";
}

std::string demo_transcript() {
    auto line = [](const std::string& task_id, const std::string& response) {
        nlohmann::ordered_json j;
        j["stage"] = "grounder";
        j["task_id"] = task_id;
        j["step_index"] = 0;
        j["response"] = response;
        return j.dump();
    };
    return line("shop-1", R"(<answer>{"action": "click_element", "id": 0}</answer>)") + "\n" +
           line("shop-2", R"(<answer>{"action": "input_text", "id": 1, "input text": "red shoes"}</answer>)") +
           "\n" + line("shop-3", R"(<answer>{"action": "click_element", "id": 1}</answer>)") + "\n";
}

}  // namespace

TEST_CASE("run_eval end to end with a replayed transcript") {
    std::string data_path = temp_path("demo.jsonl");
    std::string mock_path = temp_path("demo-mock.jsonl");
    write_file(data_path, demo_dataset());
    write_file(mock_path, demo_transcript());

    auto records = load_dataset(data_path);
    REQUIRE(records.size() == 3);

    EvalOptions opts;
    opts.pipeline.top_n = 20;

    auto run_once = [&](int jobs, std::string* trace) {
        ReplayChatClient client(mock_path);
        EvalOptions o = opts;
        o.jobs = jobs;
        std::ostringstream trace_stream;
        EvalReport report = run_eval(records, client, o, trace ? &trace_stream : nullptr);
        if (trace) *trace = trace_stream.str();
        return report;
    };

    std::string trace;
    EvalReport report = run_once(1, &trace);

    CHECK(report.n_steps == 3);
    CHECK(report.n_failures == 0);
    CHECK(report.n_gt_unresolved == 0);
    CHECK(report.n_recall_evaluable == 3);
    CHECK(report.n_grounding_evaluable == 3);
    CHECK(report.recall_at[1] == Approx(2.0 / 3.0));
    CHECK(report.recall_at[20] == Approx(2.0 / 3.0));
    CHECK(report.grounding_accuracy == Approx(2.0 / 3.0));
    CHECK(report.element_accuracy == Approx(2.0 / 3.0));
    CHECK(report.operation_f1 == Approx(1.0));
    CHECK(report.step_success_rate == Approx(2.0 / 3.0));
    CHECK(report.mean_reduction_ratio == Approx(2.0));

    SECTION("trace lines appear in record order with per-step detail") {
        std::istringstream in(trace);
        std::string line;
        std::vector<std::string> task_ids;
        while (std::getline(in, line)) {
            auto j = nlohmann::json::parse(line);
            task_ids.push_back(j["task_id"].get<std::string>());
            CHECK(j.contains("recall"));
            CHECK(j.contains("pred_action"));
        }
        CHECK(task_ids == std::vector<std::string>{"shop-1", "shop-2", "shop-3"});
    }
    SECTION("reports and traces are identical across job counts") {
        std::string trace4;
        EvalReport parallel = run_once(4, &trace4);
        CHECK(parallel.to_json().dump() == report.to_json().dump());
        CHECK(trace4 == trace);
    }
    SECTION("the report serializes every headline number") {
        auto j = report.to_json();
        CHECK(j["n_steps"] == 3);
        CHECK(j["recall_at"]["1"] == Approx(2.0 / 3.0));
        CHECK(j["recall_at"].size() == 5);
    }
}

TEST_CASE("run_eval failure accounting") {
    SECTION("ground-truth plan mode requires a sub-task per record") {
        std::string data_path = temp_path("nosubtask.jsonl");
        auto j = minimal_record();
        j.erase("gt_subtask");
        write_file(data_path, j.dump() + "\n");
        auto records = load_dataset(data_path);

        std::string mock_path = temp_path("nosubtask-mock.jsonl");
        write_file(mock_path, R"({"response": "unused"})" "\n");
        ReplayChatClient client(mock_path);

        std::ostringstream trace_stream;
        EvalReport report = run_eval(records, client, {}, &trace_stream);
        CHECK(report.n_steps == 1);
        CHECK(report.n_failures == 1);
        CHECK(report.n_grounding_evaluable == 0);
        CHECK(trace_stream.str().find("\"failure_stage\":\"record\"") != std::string::npos);
    }
    SECTION("a grounder that names a pruned-away element is a soft failure") {
        std::string data_path = temp_path("softfail.jsonl");
        auto j = minimal_record();
        j["html"] = R"(<button backend_node_id="n1">Add to cart</button>)";
        j["gt_subtask"] = "click add to cart";
        j["gt_keyword_weights"] = {{"add", 10}};
        j["gt_element_backend_id"] = "n1";
        write_file(data_path, j.dump() + "\n");
        auto records = load_dataset(data_path);

        std::string mock_path = temp_path("softfail-mock.jsonl");
        write_file(mock_path,
                   R"({"stage": "grounder", "response": "<answer>{\"action\": \"click_element\", \"id\": 404}</answer>"})"
                   "\n");
        ReplayChatClient client(mock_path);

        EvalReport report = run_eval(records, client, {});
        CHECK(report.n_failures == 1);
        CHECK(report.n_recall_evaluable == 1);
        CHECK(report.recall_at[1] == 1.0);
        CHECK(report.grounding_accuracy == 0.0);
    }
    SECTION("an unresolvable ground truth is counted, not scored") {
        std::string data_path = temp_path("unresolved.jsonl");
        auto j = minimal_record();
        j["html"] = R"(<button backend_node_id="n1">Add to cart</button>)";
        j["gt_subtask"] = "click add to cart";
        j["gt_keyword_weights"] = {{"add", 10}};
        j["gt_element_backend_id"] = "missing-node";
        write_file(data_path, j.dump() + "\n");
        auto records = load_dataset(data_path);

        std::string mock_path = temp_path("unresolved-mock.jsonl");
        write_file(mock_path,
                   R"({"stage": "grounder", "response": "<answer>{\"action\": \"click_element\", \"id\": 0}</answer>"})"
                   "\n");
        ReplayChatClient client(mock_path);

        EvalReport report = run_eval(records, client, {});
        CHECK(report.n_gt_unresolved == 1);
        CHECK(report.n_recall_evaluable == 0);
        CHECK(report.n_grounding_evaluable == 0);
        CHECK(report.n_failures == 0);
    }
    SECTION("element-free ground truth is graded without element resolution") {
        std::string data_path = temp_path("scrollgt.jsonl");
        auto j = minimal_record();
        j["html"] = R"(<button backend_node_id="n1">Add to cart</button>)";
        j["gt_subtask"] = "scroll down for more results";
        j["gt_keyword_weights"] = {{"add", 10}};
        j["gt_action"] = {{"kind", "SCROLL"}, {"text", "down"}};
        write_file(data_path, j.dump() + "\n");
        auto records = load_dataset(data_path);

        std::string mock_path = temp_path("scrollgt-mock.jsonl");
        write_file(mock_path,
                   R"({"stage": "grounder", "response": "<answer>{\"action\": \"scroll\", \"input text\": \"down\"}</answer>"})"
                   "\n");
        ReplayChatClient client(mock_path);

        EvalReport report = run_eval(records, client, {});
        CHECK(report.n_grounding_evaluable == 1);
        CHECK(report.grounding_accuracy == 1.0);
        CHECK(report.n_recall_evaluable == 0);
    }
}

TEST_CASE("run_eval full pipeline mode drives all three stages") {
    std::string data_path = temp_path("fullmode.jsonl");
    auto j = minimal_record();
    j["task_id"] = "full-1";
    j["html"] = R"(<button backend_node_id="n1">Add to cart</button>)";
    j["gt_element_backend_id"] = "n1";
    write_file(data_path, j.dump() + "\n");
    auto records = load_dataset(data_path);

    nlohmann::ordered_json plan;
    plan["state_analysis"] = "product page";
    plan["progress_evaluation"] = "10% done";
    plan["challenges"] = nlohmann::ordered_json::array();
    plan["next_steps"] = nlohmann::ordered_json::array({"click the add to cart button"});
    plan["action_type"] = "click";
    plan["target"] = {{"text", "Add to cart"}};

    auto line = [](const std::string& stage, const std::string& response) {
        nlohmann::ordered_json t;
        t["stage"] = stage;
        t["response"] = response;
        return t.dump();
    };
    std::string mock_path = temp_path("fullmode-mock.jsonl");
    write_file(mock_path, line("planner", plan.dump()) + "\n" +
                              line("filter", R"({"keyword_weights": {"add": 10, "cart": 5}})") + "\n" +
                              line("grounder", R"(<answer>{"action": "click_element", "id": 0}</answer>)") + "\n");
    ReplayChatClient client(mock_path);

    EvalOptions opts;
    opts.mode = EvalMode::FullPipeline;
    EvalReport report = run_eval(records, client, opts);

    CHECK(client.calls() == 3);
    CHECK(report.grounding_accuracy == 1.0);
    CHECK(report.recall_at[1] == 1.0);
}

TEST_CASE("empty evaluations produce a zeroed report") {
    std::string mock_path = temp_path("empty-mock.jsonl");
    write_file(mock_path, "");
    ReplayChatClient client(mock_path);

    EvalReport report = run_eval({}, client, {});
    CHECK(report.n_steps == 0);
    CHECK(report.recall_at.at(1) == 0.0);
    CHECK(report.grounding_accuracy == 0.0);
    CHECK(report.mean_reduction_ratio == 0.0);

    SECTION("the recall CSV still has a full header") {
        CHECK(report.recall_csv() == "k,1,3,5,10,20\nrecall,0.000000,0.000000,0.000000,0.000000,0.000000\n");
    }
}

TEST_CASE("recall_csv formats one column per cutoff") {
    EvalReport report;
    report.recall_at = {{1, 1.0}, {5, 0.5}};
    CHECK(report.recall_csv() == "k,1,5\nrecall,1.000000,0.500000\n");
}
