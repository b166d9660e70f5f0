#include "skillrank/prompts.hpp"

#include <filesystem>
#include <fstream>

#include "skillrank/types.hpp"

namespace skillrank {

const PromptTemplate& query_generation_prompt() {
    static const PromptTemplate kTemplate{
        "query_generation", 1,
        "You are an experienced user of AI assistants. You write clear, realistic task "
        "requests that describe what you need to accomplish.",
        "Given the following skill specification, write a realistic task description that "
        "someone would ask an AI assistant to help with. The task should naturally require "
        "the capabilities described in this skill.\n\n"
        "Skill name: {name}\n"
        "Category: {category}\n"
        "Description: {description}\n"
        "Skill body: {body}\n\n"
        "Requirements: (1) Describe a concrete scenario with specific inputs/outputs. "
        "(2) Include enough detail that the skill would be clearly useful. "
        "(3) Do NOT mention the skill name \"{name}\" anywhere in the task.\n\n"
        "Output ONLY the task description."};
    return kTemplate;
}

const PromptTemplate& distractor_generation_prompt() {
    static const PromptTemplate kTemplate{
        "distractor_generation", 1,
        "You are a skill document writer for a coding agent platform. You produce "
        "SKILL.md-style documents that are plausible but address a DIFFERENT problem than "
        "the reference skill. Each distractor must look like a real, useful skill document "
        "but must NOT solve the same task as the reference.",
        "I have a ground-truth skill used for the task(s): {task_ids}\n\n"
        "Reference skill (name: {skill_name}, category: {category}):\n"
        "{body}\n\n"
        "Generate {num_distractors} HARD distractor skills. Each distractor must be a "
        "complete SKILL.md document that looks relevant to someone searching for this "
        "skill, but actually solves a different problem.\n\n"
        "Use these distractor strategies (one per distractor):\n"
        "same-domain-diff-problem, same-tech-diff-use, over-generalized\n\n"
        "For EACH distractor, output a JSON object with fields:\n"
        "distractor_type, name, description, body (400-1200 words)."};
    return kTemplate;
}

const PromptTemplate& scenario_query_prompt() {
    static const PromptTemplate kTemplate{
        "scenario_query", 1,
        "",
        "Given this skill specification, write a realistic user query describing a task "
        "that requires this skill's capabilities.\n\n"
        "Skill name: {name}\n"
        "Description: {description}\n"
        "Skill content preview: {body}\n\n"
        "Requirements:\n"
        "1. Describe a specific task or problem the user wants to solve\n"
        "2. Include enough context for the skill to be clearly the right one\n"
        "3. Write naturally --- as a user would describe their need to an AI assistant\n"
        "4. Do NOT follow a rigid structure (no mandatory file paths, no mandatory "
        "numbered lists)\n"
        "5. Total length: 80-250 words\n"
        "6. Do NOT mention the skill name \"{name}\" or reference this specification "
        "document\n"
        "7. Do NOT use any unique identifiers or CLI command names from the skill "
        "content\n\n"
        "Output ONLY the user query. No preamble, no explanation."};
    return kTemplate;
}

const PromptTemplate& developer_query_prompt() {
    static const PromptTemplate kTemplate{
        "developer_query", 1,
        "",
        "Given this skill specification, write a concise user query from someone who "
        "needs this capability but doesn't know the specific skill exists.\n\n"
        "Skill name: {name}\n"
        "Description: {description}\n"
        "Skill content preview: {body}\n\n"
        "Requirements:\n"
        "1. Write as a user naturally asking for help --- could be casual or formal\n"
        "2. Describe what they want to achieve, not what skill to use\n"
        "3. Be specific enough that this skill is clearly the best match\n"
        "4. Total length: 40-120 words\n"
        "5. Do NOT mention the skill name \"{name}\" or any CLI commands from the skill\n"
        "6. Do NOT reference this specification document\n\n"
        "Output ONLY the user query."};
    return kTemplate;
}

const PromptTemplate& indirect_query_prompt() {
    static const PromptTemplate kTemplate{
        "indirect_query", 1,
        "",
        "Given this skill specification, write a user query that describes a high-level "
        "need which this skill would address, without revealing the skill itself.\n\n"
        "Skill name: {name}\n"
        "Description: {description}\n"
        "Skill content preview: {body}\n\n"
        "Requirements:\n"
        "1. Describe a real-world problem or goal, not a skill request\n"
        "2. The user should not know this specific skill exists --- they're describing "
        "their situation\n"
        "3. Do NOT mention the skill name \"{name}\" or any specific CLI commands from "
        "the skill\n"
        "4. Avoid using keywords that directly appear in the skill's name or description\n"
        "5. The connection between the query and this skill should require understanding "
        "the skill's capabilities\n"
        "6. Total length: 50-180 words\n"
        "7. Be specific enough that this skill is the clear best answer (not too vague)\n\n"
        "Output ONLY the user query."};
    return kTemplate;
}

std::vector<const PromptTemplate*> all_prompt_templates() {
    return {&query_generation_prompt(), &distractor_generation_prompt(),
            &scenario_query_prompt(), &developer_query_prompt(), &indirect_query_prompt()};
}

std::string render_template(std::string_view text,
                            const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t open = text.find('{', pos);
        if (open == std::string_view::npos) {
            out += text.substr(pos);
            break;
        }
        const std::size_t close = text.find('}', open + 1);
        if (close == std::string_view::npos) {
            out += text.substr(pos);
            break;
        }
        out += text.substr(pos, open - pos);
        const std::string key(text.substr(open + 1, close - open - 1));
        const auto it = values.find(key);
        if (it == values.end()) {
            throw ValidationError("render_template: no value for placeholder '{" + key +
                                  "}'");
        }
        out += it->second;
        pos = close + 1;
    }
    return out;
}

void write_prompt_files(const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const PromptTemplate* tmpl : all_prompt_templates()) {
        const auto path = std::filesystem::path(dir) /
                          (tmpl->name + ".v" + std::to_string(tmpl->version) + ".txt");
        std::ofstream out(path);
        if (!out) throw Error("cannot write prompt file: " + path.string());
        out << "# SYSTEM\n" << tmpl->system << "\n\n# USER\n" << tmpl->user << '\n';
    }
}

}  // namespace skillrank
