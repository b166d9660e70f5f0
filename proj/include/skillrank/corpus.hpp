#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "skillrank/types.hpp"

namespace skillrank {

inline constexpr std::string_view kUncategorized = "uncategorized";

struct Skill {
    std::string id;
    std::string name;
    std::string description;
    std::string body;
    std::string category = std::string(kUncategorized);
};

enum class Tier { easy, hard, custom };

std::string_view tier_name(Tier tier);
Tier tier_from_name(std::string_view name);

// Immutable after construction; iteration order is insertion order.
struct SkillPool {
    std::vector<Skill> skills;
    Tier tier = Tier::custom;

    std::size_t size() const { return skills.size(); }
    bool empty() const { return skills.empty(); }
};

// Skill id -> position in pool. Assumes ids are unique (pool invariant).
using IdIndex = std::unordered_map<std::string, std::size_t>;
IdIndex build_id_index(const SkillPool& pool);

// Character caps applied before any model sees text. Counts are Unicode
// scalar values, not bytes.
struct FieldCaps {
    std::size_t query_chars = 1500;
    std::size_t description_chars = 300;
    std::size_t body_chars = 2500;
};

// Encoder-side defaults: query 1500 / description 300 / body 2500 chars.
inline constexpr FieldCaps kEncoderCaps{1500, 300, 2500};
// Reranker- and judge-side defaults: description 500 / body 2000 chars.
inline constexpr FieldCaps kRerankerCaps{1500, 500, 2000};

void validate_caps(const FieldCaps& caps);

enum class SkillFormat { nd, full };

std::string_view format_name(SkillFormat format);
SkillFormat format_from_name(std::string_view name);

// Reads line-delimited JSON records {id, name, description?, body?, category?}.
// Missing description/body become empty strings; missing category becomes
// "uncategorized". Throws ParseError naming the 1-based line of a malformed
// record, or ValidationError naming both lines of a duplicate id.
SkillPool load_pool(std::istream& in, Tier tier);

struct DedupResult {
    SkillPool pool;
    std::size_t removed = 0;
};

// Keeps the first occurrence of each id. Same-name skills under different
// ids are left alone.
DedupResult dedup_by_id(const SkillPool& pool);

// full: "name | description | body", nd: "name | description"; description
// and body are capped before joining, the name is never cut.
std::string flatten_skill(const Skill& skill, SkillFormat format, const FieldCaps& caps);

std::string truncate_query(std::string_view query_text, const FieldCaps& caps);

// Word-count statistics over a pool's descriptions and bodies. Medians use
// the lower-median convention; p90 is nearest-rank.
struct MetadataAudit {
    double fraction_empty_descriptions = 0.0;
    double fraction_desc_under_10_words = 0.0;
    double fraction_desc_under_25_words = 0.0;
    std::size_t median_desc_words = 0;
    std::size_t median_body_words = 0;
    std::size_t p90_body_words = 0;
};

MetadataAudit audit_pool(const SkillPool& pool);

// base + distractors with tier=hard. Throws ValidationError naming the first
// colliding id.
SkillPool assemble_tier(const SkillPool& base, const SkillPool& distractors);

// SKILL.md grammar: an optional leading metadata fence
//   ---
//   name: <value>
//   description: <value>
//   category: <value>
//   ---
// followed by the body. Unknown keys are ignored; a missing name falls back
// to `fallback_id`. Without a fence the whole document is the body.
Skill parse_skill_md(std::string_view content, std::string_view fallback_id);

}  // namespace skillrank
