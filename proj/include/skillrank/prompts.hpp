#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace skillrank {

// Versioned prompt templates with {placeholder} substitution. Generation
// itself runs through an external chat service; these templates are the
// interface contract.

struct PromptTemplate {
    std::string name;     // file stem, e.g. "query_generation"
    int version = 1;
    std::string system;
    std::string user;     // contains {placeholders}
};

// {name}, {category}, {description}, {body}
const PromptTemplate& query_generation_prompt();

// {task_ids}, {skill_name}, {category}, {body}, {num_distractors}
const PromptTemplate& distractor_generation_prompt();

// {name}, {description}, {body}; one per supplementary query style.
const PromptTemplate& scenario_query_prompt();
const PromptTemplate& developer_query_prompt();
const PromptTemplate& indirect_query_prompt();

std::vector<const PromptTemplate*> all_prompt_templates();

// Replaces every "{key}" with its value; throws ValidationError on a
// placeholder with no substitution.
std::string render_template(std::string_view text,
                            const std::map<std::string, std::string>& values);

// Writes each template to <dir>/<name>.v<version>.txt with a SYSTEM/USER
// section layout.
void write_prompt_files(const std::string& dir);

}  // namespace skillrank
