// Drives one full plan / filter / ground step of the agent pipeline against
// a replayed endpoint transcript, so the demo runs without network access.
// The same transcript format works as `domprune step --mock <file>`.
#include <filesystem>
#include <fstream>
#include <iostream>

#include <domprune/domprune.hpp>

int main() {
    const char* page = R"html(
<h1>Flight search</h1>
<form>
  <input placeholder="Departure city">
  <input placeholder="Destination city">
  <select name="class"><option>Economy</option><option>Business</option></select>
  <button>Search flights</button>
</form>
<a href="/deals">Today's deals</a>
)html";

    auto transcript_path = std::filesystem::temp_directory_path() / "domprune-step-demo.jsonl";
    {
        std::ofstream out(transcript_path);
        out << R"({"stage": "planner", "response": "<answer>{\"state_analysis\": \"Search form visible\", \"progress_evaluation\": \"30% - filling the form\", \"challenges\": [], \"next_steps\": [\"type 'Paris' in the destination field\"], \"action_type\": \"type\", \"target\": {\"text\": \"Destination city\"}}</answer>"})"
            << "\n";
        out << R"({"stage": "filter", "response": "<answer>{\"keyword_weights\": {\"destination\": 40, \"city\": 10, \"search\": 5}}</answer>"})"
            << "\n";
        out << R"({"stage": "grounder", "response": "<answer>{\"action\": \"input_text\", \"id\": 1, \"input text\": \"Paris\"}</answer>"})"
            << "\n";
    }

    domprune::Document doc = domprune::parse_html(page, "flight-search");
    auto elements = domprune::extract(doc);

    domprune::StepContext ctx;
    ctx.task = "Book a one-way flight from Boston to Paris on July 4";
    ctx.history = {{1, "click 'Flights' tab"}, {2, "click 'One-way' option"}};

    domprune::PipelineConfig pcfg;
    pcfg.top_n = 4;
    pcfg.variant = domprune::PromptVariant::Training;

    domprune::ReplayChatClient client(transcript_path.string());
    domprune::StepOutcome outcome = domprune::run_step(client, ctx, elements, pcfg);

    if (!outcome.ok()) {
        std::cout << "step failed at stage " << *outcome.failure_stage << ": " << *outcome.failure_reason
                  << "\n";
        return 1;
    }

    std::cout << "plan:       " << outcome.planner->next_steps.front() << "\n";
    std::cout << "weights:   ";
    for (const auto& [k, w] : outcome.weights->entries()) std::cout << " " << k << "=" << w;
    std::cout << "\ncandidates:\n" << domprune::serialize_candidates(outcome.candidates) << "\n";
    std::cout << "action:     " << domprune::action_kind_name(outcome.action->kind) << " on element "
              << *outcome.action->element_id << " with text '" << *outcome.action->text_arg << "'\n";
    std::cout << "llm calls:  " << outcome.llm_calls << "\n";

    std::filesystem::remove(transcript_path);
    return 0;
}
