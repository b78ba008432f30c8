#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dcqual/corpus_store.hpp"
#include "dcqual/record_model.hpp"

// Rule-driven normalization of language, type and format values. Rules are
// data (see rules/*.tsv); the shipped files are compiled in as defaults.
namespace dcqual {

enum class Matcher {
  /// Trimmed value equals the pattern byte for byte.
  exact,
  /// Folded value equals the folded pattern.
  case_insensitive,
  /// Folded value contains the folded pattern.
  token_contains,
};

std::string_view matcher_name(Matcher m) noexcept;
std::optional<Matcher> matcher_from_name(std::string_view name) noexcept;

struct MappingRule {
  Matcher matcher = Matcher::exact;
  std::string pattern;
  std::string canonical;

  bool matches(std::string_view value) const;
  /// Same test against a value already passed through text::fold.
  bool matches_folded(std::string_view value, std::string_view folded) const;
};

class MappingRuleSet {
 public:
  MappingRuleSet() = default;
  MappingRuleSet(DcElement field, std::vector<MappingRule> rules);

  DcElement field() const noexcept { return field_; }
  const std::vector<MappingRule>& rules() const noexcept { return rules_; }
  bool empty() const noexcept { return rules_.empty(); }

  /// Canonical term of the first matching rule.
  std::optional<std::string> resolve(std::string_view value) const;
  /// First rule in file order that matches any of `parts`.
  std::optional<std::string> resolve_any(std::span<const std::string> parts) const;

 private:
  DcElement field_ = DcElement::language;
  std::vector<MappingRule> rules_;
  std::vector<std::string> folded_patterns_;
};

/// Parses `<matcher>TAB<pattern>TAB<canonical>` lines. Blank lines and lines
/// starting with "#" are skipped. Throws FileFormatError naming `source` and
/// the 1-based line.
MappingRuleSet parse_rules(std::string_view content, DcElement field, std::string source = "<rules>");
/// Throws IoError when unreadable.
MappingRuleSet load_rules(const std::filesystem::path& path, DcElement field);

const MappingRuleSet& default_language_rules();
const MappingRuleSet& default_type_rules();
const MappingRuleSet& default_format_rules();

/// Split on ";", trim each part, drop empty parts.
std::vector<std::string> split_multivalue(std::string_view value);

/// Single token to an ISO 639-1 code, or nullopt when unresolved.
std::optional<std::string> normalize_language(std::string_view value,
                                              const MappingRuleSet& rules = default_language_rules());

/// Single or compound value to a controlled type term.
std::optional<std::string> normalize_type(std::string_view value,
                                          const MappingRuleSet& rules = default_type_rules());

struct FormatResult {
  /// Lowercased, deduplicated, in order of appearance.
  std::vector<std::string> mime_types;
  /// Parts (or leftovers of parts) that yielded nothing, joined with ";".
  std::string residue;
  /// Split parts that produced at least one MIME type.
  std::size_t resolved_parts = 0;
  std::vector<std::string> unresolved_parts;
};

FormatResult normalize_format(std::string_view value,
                              const MappingRuleSet& rules = default_format_rules());

struct NormalizationReport {
  DcElement field = DcElement::language;
  /// Language: split tokens. Type: filled records (joined value).
  /// Format: split parts.
  std::uint64_t total_values = 0;
  std::uint64_t resolved = 0;
  /// Count descending, then value.
  std::vector<std::pair<std::string, std::uint64_t>> unresolved_values;
  std::map<std::string, std::uint64_t> canonical_distribution;
};

struct NormalizedField {
  DcElement field = DcElement::language;
  std::vector<std::string> canonical;
  std::vector<std::string> unresolved;
  /// Format only.
  std::string residue;
};

struct NormalizedRecord {
  /// Points into the corpus passed to apply_normalization.
  const HarvestedRecord* record = nullptr;
  std::vector<NormalizedField> fields;
};

struct NormalizationResult {
  std::vector<NormalizedRecord> records;
  /// One per rule set, in the order given.
  std::vector<NormalizationReport> reports;
};

/// Rule sets for language, type and format are recognised by their field;
/// any other field is normalized token by token like language. The corpus is
/// not modified and must outlive the result.
NormalizationResult apply_normalization(const Corpus& corpus,
                                        std::span<const MappingRuleSet> rule_sets);

}  // namespace dcqual
