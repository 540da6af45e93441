#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "domprune/errors.hpp"

namespace domprune {

struct Message {
    std::string role;
    std::string content;

    bool operator==(const Message&) const = default;
};

enum class PromptRole { Planner, Filter, Grounder, UnifiedTurn1, UnifiedTurn2, Verifier };
enum class PromptVariant { ZeroShot, Training };

struct HistoryEntry {
    int step_index = 0;
    std::string summary;
};

struct StepContext {
    std::string task;
    std::vector<HistoryEntry> history;
    std::optional<std::string> screenshot;
    std::optional<std::string> subtask;
};

struct PromptExtra {
    std::optional<std::string> planner_json;
    std::optional<std::string> candidates;
    std::vector<std::string> trajectory_actions;
};

namespace prompts {

inline constexpr std::string_view kPlannerZeroShotSystem =
    R"PROMPT(You are a planning agent that breaks down tasks into executable UI steps with strict safety protocols. Follow ABSOLUTELY:

Core Rules:
1. POP-UP HANDLING: Only close non-normal pop-ups that block or interfere with the task (e.g., ads, mandatory login walls, cookie consent dialogs). Do not close or dismiss any normal UI pop-ups that do not affect task execution (e.g., search suggestion dropdowns, informational tooltips).
2. UI-ACTION FORMATTING: Phrase steps as EXACT interface commands (e.g., "click 'Submit' button", "type 'Paris' in search field").
3. LOGIN RESTRICTIONS: NEVER trigger login UNLESS task explicitly mentions credentials or an undismissable login wall appears.
4. TERMINATION CRITERIA: TERMINATE SOLELY when: login wall appears WITH NO close option, paywall or other physical UI blockage occurs, or system security could be compromised.

Available Actions:
- Click elements
- Input text into forms
- Scroll page up/down
- Navigate to URLs (only for initial navigation)

Output Format:
{
  "state_analysis": "Brief context analysis",
  "progress_evaluation": "X% - Description",
  "challenges": ["list"],
  "next_steps": ["Only output ONE action. Format: click 'X' button | type 'Y' in Z field | TERMINATE if..."],
  "action_type": "click | type | scroll | navigate",
  "target": {
    "text": "ELEMENT TEXT to interact with (e.g., 'Search box', 'Login button')"
  },
  "reasoning": "Security/UI rationale"
}

Critical Instructions:
- For ALL actions: "target.text" must ONLY contain the TEXT OF THE ELEMENT to interact with
- For "type" actions: "target.text" is the element to type into (e.g., "Search box"), NOT what you want to type
- The content to type should ONLY appear in "next_steps", NOT in "target.text")PROMPT";

inline constexpr std::string_view kPlannerTrainingSystem =
    R"PROMPT(You are a planning agent that breaks down tasks into executable UI steps. Output the thinking process in <think> ... </think> tags, and the final answer in <answer> ... </answer> tags.

Output Format:
<think>
[Your thinking process here]
</think>
<answer>
{
  "state_analysis": "Brief context analysis",
  "progress_evaluation": "X% - Description",
  "challenges": ["list"],
  "next_steps": ["Only output ONE action. Format: click 'X' button | type 'Y' in Z field"],
  "action_type": "click | select | input | scroll",
  "target": {
    "text": "ELEMENT TEXT to interact with (e.g., 'Search box', 'Login button')"
  }
}
</answer>)PROMPT";

inline constexpr std::string_view kFilterZeroShotSystem =
    R"PROMPT(You are a professional filter keyword generator. Your task is to generate keywords with their corresponding weights for filtering and scoring interactive elements based on the complete plan output from the Planner. Output the thinking process in <think> ... </think> tags, and the final answer in <answer> ... </answer> tags.

Task Description:
Analyze the Planner's output and generate relevant keywords with appropriate weights that can be used to score and filter webpage elements for the given task.

Keyword Weighting Strategy:
- Assign higher weights (e.g., 30-50) to critical, task-specific keywords.
- Assign medium weights (e.g., 10-25) for supporting or contextual terms.
- Assign lower weights (e.g., 1-10) for general relevance terms.

Output Format:
<think>
[Your keyword analysis and weight assignment thinking process]
</think>
<answer>
{
  "keyword_weights": {
    "keyword1": weight1,
    "keyword2": weight2
  }
}
</answer>)PROMPT";

inline constexpr std::string_view kFilterTrainingSystem =
    R"PROMPT(You are a professional filter keyword generator. Your task is to generate keywords and weights for scoring elements based on the provided plan.

Task Description:
Analyze the planner's output and generate relevant keywords with appropriate weights that can be used to score and filter webpage elements for the given task.

Output Format:
Directly output a JSON object with the following structure:
{
  "keyword_weights": {
    "keyword1": weight1,
    "keyword2": weight2
  }
})PROMPT";

inline constexpr std::string_view kGrounderZeroShotSystem =
    R"PROMPT(You are an AI agent designed to automate browser tasks. Your goal is to accomplish the ultimate task by following the rules.

Thinking Requirements:
In your thinking process, carefully analyze both the Planner's results and the pruned DOM tree to identify the correct element. Specifically describe how you used the Planner's target information and the DOM tree to make your decision. IMPORTANT: Explicitly mention element IDs when discussing them (e.g., "I identified element ID 123 as the target because..." or "Comparing elements with IDs 456 and 789, I determined that ID 456 is more appropriate because...").

Input Format:
Elements are presented in a standard format with IDs: [id]<type>text</type>
- Only elements with numeric IDs in [] are interactive.
- Elements without [] provide only context.

Output Format:
<think>
[Your thinking process with explicit element ID mentions]
</think>
<answer>
{
  "action": "click_element | input_text | select_element | scroll",
  "id": element_id_integer,
  "input text": "input_text_content or 'no input text' [default]"
}
</answer>)PROMPT";

inline constexpr std::string_view kGrounderTrainingSystem =
    R"PROMPT(You are an AI agent designed to automate browser tasks. Your goal is to accomplish the ultimate task by selecting the correct element from the provided list.

Input Format:
Elements are presented in a standard format with IDs: [id]<type>text</type>
- Only elements with numeric IDs in [] are interactive.
- Elements without [] provide only context.

Output Format:
Directly output a JSON object with the following structure:
{
  "action": "click_element | input_text | select_element | scroll",
  "id": element_id_integer,
  "input text": "input_text_content or 'no input text' [default]"
})PROMPT";

inline constexpr std::string_view kUnifiedSystem =
    R"PROMPT(You are an expert web automation assistant. Based on the user's task description, history, and a screenshot of the current webpage, you must first generate a thought process, a plan, and a set of keywords and weights for scoring DOM elements. Afterwards, when presented with a list of candidate elements, you must make the final selection.)PROMPT";

inline constexpr std::string_view kUnifiedTurn2Header =
    "Here is the list of candidate elements, each with a unique ID. Please choose the ID of the correct element.";

inline constexpr std::string_view kVerifierSystem =
    R"PROMPT(You are an impartial evaluator. Your task is to determine if a web agent successfully completed its assigned task based on its final actions and observations.)PROMPT";

inline constexpr std::string_view kVerifierInstruction =
    R"PROMPT(Your Task:
Based on the final trajectory, did the agent successfully complete the core objective of the task instruction? Please answer with a JSON object containing two keys: "success" (boolean) and "reasoning" (a brief explanation for your decision).

Output Format:
{
  "success": true|false,
  "reasoning": "Your brief explanation here."
})PROMPT";

}  // namespace prompts

namespace detail {

inline std::string context_payload(const StepContext& ctx) {
    nlohmann::ordered_json j;
    j["task_description"] = ctx.task;
    nlohmann::ordered_json hist = nlohmann::ordered_json::array();
    for (const auto& h : ctx.history) hist.push_back("step " + std::to_string(h.step_index) + ": " + h.summary);
    j["history"] = hist;
    return j.dump();
}

}  // namespace detail

inline std::vector<Message> render_prompt(PromptRole role, const StepContext& ctx, const PromptExtra& extra = {},
                                          PromptVariant variant = PromptVariant::ZeroShot) {
    using namespace prompts;
    if (ctx.task.empty()) throw MissingSlot("task");

    switch (role) {
        case PromptRole::Planner: {
            std::string_view system =
                variant == PromptVariant::Training ? kPlannerTrainingSystem : kPlannerZeroShotSystem;
            return {{"system", std::string(system)}, {"user", detail::context_payload(ctx)}};
        }
        case PromptRole::Filter: {
            if (!extra.planner_json) throw MissingSlot("planner_json");
            std::string_view system =
                variant == PromptVariant::Training ? kFilterTrainingSystem : kFilterZeroShotSystem;
            std::string user = "Planner output:\n" + *extra.planner_json;
            return {{"system", std::string(system)}, {"user", std::move(user)}};
        }
        case PromptRole::Grounder: {
            if (!extra.candidates) throw MissingSlot("candidates");
            std::string_view system =
                variant == PromptVariant::Training ? kGrounderTrainingSystem : kGrounderZeroShotSystem;
            std::string user = "Task: " + ctx.task + "\n";
            user += "Sub-task: " + (ctx.subtask ? *ctx.subtask : ctx.task) + "\n";
            user += "Elements:\n" + *extra.candidates;
            return {{"system", std::string(system)}, {"user", std::move(user)}};
        }
        case PromptRole::UnifiedTurn1: {
            std::string user;
            if (ctx.screenshot) user += "<image>";
            user += detail::context_payload(ctx);
            return {{"system", std::string(kUnifiedSystem)}, {"user", std::move(user)}};
        }
        case PromptRole::UnifiedTurn2: {
            if (!extra.candidates) throw MissingSlot("candidates");
            std::string user = std::string(kUnifiedTurn2Header) + "\n" + *extra.candidates;
            return {{"user", std::move(user)}};
        }
        case PromptRole::Verifier: {
            if (extra.trajectory_actions.empty()) throw MissingSlot("trajectory");
            std::size_t n = extra.trajectory_actions.size();
            std::size_t take = n < 3 ? n : 3;
            std::string user = "Task Instruction:\n" + ctx.task + "\n\n";
            user += "Agent's Final Trajectory (Last 3 Steps):\n";
            static constexpr std::string_view labels[3] = {"Step N-2:", "Step N-1:", "Step N:"};
            for (std::size_t i = 0; i < take; ++i) {
                user += std::string(labels[3 - take + i]) + "\n";
                user += "Observation: [Screenshot Image]\n";
                user += "Action: " + extra.trajectory_actions[n - take + i] + "\n";
            }
            user += "\n";
            user += std::string(kVerifierInstruction);
            return {{"system", std::string(kVerifierSystem)}, {"user", std::move(user)}};
        }
    }
    throw MissingSlot("role");
}

}  // namespace domprune
