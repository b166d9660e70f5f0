#include "skillrank/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <json.hpp>

#include "skillrank/text.hpp"

namespace skillrank {

namespace {

using nlohmann::json;

std::string get_string_field(const json& record, const char* key, std::size_t line) {
    const auto it = record.find(key);
    if (it == record.end() || it->is_null()) return {};
    if (!it->is_string()) {
        throw ParseError("line " + std::to_string(line) + ": field '" + key +
                         "' must be a string");
    }
    return it->get<std::string>();
}

// Lower median of a sorted vector.
std::size_t lower_median(const std::vector<std::size_t>& sorted) {
    return sorted[(sorted.size() - 1) / 2];
}

// Nearest-rank percentile of a sorted vector, p in (0, 100].
std::size_t nearest_rank(const std::vector<std::size_t>& sorted, double p) {
    const auto rank = static_cast<std::size_t>(
        std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
    return sorted[std::max<std::size_t>(rank, 1) - 1];
}

}  // namespace

std::string_view tier_name(Tier tier) {
    switch (tier) {
        case Tier::easy: return "easy";
        case Tier::hard: return "hard";
        case Tier::custom: return "custom";
    }
    return "custom";
}

Tier tier_from_name(std::string_view name) {
    if (name == "easy") return Tier::easy;
    if (name == "hard") return Tier::hard;
    if (name == "custom") return Tier::custom;
    throw ValidationError("unknown tier '" + std::string(name) + "'");
}

std::string_view format_name(SkillFormat format) {
    return format == SkillFormat::nd ? "nd" : "full";
}

SkillFormat format_from_name(std::string_view name) {
    if (name == "nd") return SkillFormat::nd;
    if (name == "full") return SkillFormat::full;
    throw ValidationError("unknown skill format '" + std::string(name) + "'");
}

IdIndex build_id_index(const SkillPool& pool) {
    IdIndex index;
    index.reserve(pool.size());
    for (std::size_t i = 0; i < pool.skills.size(); ++i) {
        index.emplace(pool.skills[i].id, i);
    }
    return index;
}

void validate_caps(const FieldCaps& caps) {
    if (caps.query_chars == 0 || caps.description_chars == 0 || caps.body_chars == 0) {
        throw ValidationError("field caps must all be positive");
    }
}

SkillPool load_pool(std::istream& in, Tier tier) {
    SkillPool pool;
    pool.tier = tier;
    std::unordered_map<std::string, std::size_t> first_line_of_id;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
        }
        if (!record.is_object()) {
            throw ParseError("line " + std::to_string(line_no) + ": record must be an object");
        }

        Skill skill;
        skill.id = get_string_field(record, "id", line_no);
        skill.name = get_string_field(record, "name", line_no);
        if (skill.id.empty()) {
            throw ParseError("line " + std::to_string(line_no) + ": missing or empty 'id'");
        }
        if (skill.name.empty()) {
            throw ParseError("line " + std::to_string(line_no) + ": missing or empty 'name'");
        }
        skill.description = get_string_field(record, "description", line_no);
        skill.body = get_string_field(record, "body", line_no);
        skill.category = get_string_field(record, "category", line_no);
        if (skill.category.empty()) skill.category = std::string(kUncategorized);

        const auto [it, inserted] = first_line_of_id.emplace(skill.id, line_no);
        if (!inserted) {
            throw ValidationError("duplicate skill id '" + skill.id + "' at lines " +
                                  std::to_string(it->second) + " and " +
                                  std::to_string(line_no));
        }
        pool.skills.push_back(std::move(skill));
    }
    return pool;
}

DedupResult dedup_by_id(const SkillPool& pool) {
    DedupResult result;
    result.pool.tier = pool.tier;
    std::unordered_set<std::string> seen;
    seen.reserve(pool.size());
    for (const Skill& skill : pool.skills) {
        if (seen.insert(skill.id).second) {
            result.pool.skills.push_back(skill);
        } else {
            ++result.removed;
        }
    }
    return result;
}

std::string flatten_skill(const Skill& skill, SkillFormat format, const FieldCaps& caps) {
    validate_caps(caps);
    std::string out = skill.name;
    out += " | ";
    out += utf8_prefix(skill.description, caps.description_chars);
    if (format == SkillFormat::full) {
        out += " | ";
        out += utf8_prefix(skill.body, caps.body_chars);
    }
    return out;
}

std::string truncate_query(std::string_view query_text, const FieldCaps& caps) {
    validate_caps(caps);
    return utf8_prefix(query_text, caps.query_chars);
}

MetadataAudit audit_pool(const SkillPool& pool) {
    if (pool.empty()) throw ValidationError("audit_pool: pool is empty");

    std::vector<std::size_t> desc_words;
    std::vector<std::size_t> body_words;
    desc_words.reserve(pool.size());
    body_words.reserve(pool.size());
    std::size_t empty_desc = 0, under_10 = 0, under_25 = 0;
    for (const Skill& skill : pool.skills) {
        const std::size_t dw = word_count(skill.description);
        desc_words.push_back(dw);
        body_words.push_back(word_count(skill.body));
        if (dw == 0) ++empty_desc;
        if (dw < 10) ++under_10;
        if (dw < 25) ++under_25;
    }
    std::sort(desc_words.begin(), desc_words.end());
    std::sort(body_words.begin(), body_words.end());

    const auto n = static_cast<double>(pool.size());
    MetadataAudit audit;
    audit.fraction_empty_descriptions = static_cast<double>(empty_desc) / n;
    audit.fraction_desc_under_10_words = static_cast<double>(under_10) / n;
    audit.fraction_desc_under_25_words = static_cast<double>(under_25) / n;
    audit.median_desc_words = lower_median(desc_words);
    audit.median_body_words = lower_median(body_words);
    audit.p90_body_words = nearest_rank(body_words, 90.0);
    return audit;
}

SkillPool assemble_tier(const SkillPool& base, const SkillPool& distractors) {
    std::unordered_set<std::string> base_ids;
    base_ids.reserve(base.size());
    for (const Skill& skill : base.skills) base_ids.insert(skill.id);
    for (const Skill& skill : distractors.skills) {
        if (base_ids.count(skill.id)) {
            throw ValidationError("assemble_tier: distractor id '" + skill.id +
                                  "' collides with a base skill");
        }
    }
    SkillPool pool;
    pool.tier = Tier::hard;
    pool.skills.reserve(base.size() + distractors.size());
    pool.skills.insert(pool.skills.end(), base.skills.begin(), base.skills.end());
    pool.skills.insert(pool.skills.end(), distractors.skills.begin(), distractors.skills.end());
    return pool;
}

Skill parse_skill_md(std::string_view content, std::string_view fallback_id) {
    Skill skill;
    skill.id = std::string(fallback_id);

    // Find the metadata fence: first non-blank line must be "---".
    std::size_t pos = 0;
    auto next_line = [&](std::size_t from, std::size_t& line_end) {
        line_end = content.find('\n', from);
        const std::size_t end = line_end == std::string_view::npos ? content.size() : line_end;
        std::string_view line = content.substr(from, end - from);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        return line;
    };

    std::size_t line_end = 0;
    std::size_t body_start = 0;
    bool fenced = false;
    // Skip leading blank lines.
    while (pos < content.size()) {
        const std::string_view line = next_line(pos, line_end);
        if (line.find_first_not_of(" \t") != std::string_view::npos) {
            fenced = (line == "---");
            break;
        }
        if (line_end == std::string_view::npos) break;
        pos = line_end + 1;
    }

    if (fenced) {
        pos = line_end == std::string_view::npos ? content.size() : line_end + 1;
        bool closed = false;
        while (pos <= content.size() && !closed) {
            const std::string_view line = next_line(pos, line_end);
            if (line == "---") {
                closed = true;
                body_start = line_end == std::string_view::npos ? content.size() : line_end + 1;
            } else {
                const std::size_t colon = line.find(':');
                if (colon != std::string_view::npos) {
                    std::string_view key = line.substr(0, colon);
                    std::string_view value = line.substr(colon + 1);
                    while (!value.empty() && (value.front() == ' ' || value.front() == '\t')) {
                        value.remove_prefix(1);
                    }
                    while (!value.empty() && (value.back() == ' ' || value.back() == '\t')) {
                        value.remove_suffix(1);
                    }
                    if (key == "name") skill.name = std::string(value);
                    else if (key == "description") skill.description = std::string(value);
                    else if (key == "category") skill.category = std::string(value);
                }
            }
            if (line_end == std::string_view::npos) break;
            pos = line_end + 1;
        }
        if (!closed) {
            throw ParseError("SKILL.md metadata fence opened but never closed");
        }
        skill.body = std::string(content.substr(std::min(body_start, content.size())));
    } else {
        skill.body = std::string(content);
    }

    if (skill.name.empty()) skill.name = std::string(fallback_id);
    if (skill.category.empty()) skill.category = std::string(kUncategorized);
    if (skill.name.empty()) {
        throw ParseError("SKILL.md has no name and no fallback id");
    }
    return skill;
}

}  // namespace skillrank
