#include "dcqual/normalization.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>
#include <unordered_map>

#include "dcqual/errors.hpp"
#include "dcqual/text.hpp"
#include "default_rules.inc"

namespace dcqual {

namespace {

const std::regex& mime_pattern() {
  static const std::regex re("[A-Za-z][A-Za-z0-9.+-]*/[A-Za-z0-9][A-Za-z0-9.+-]*");
  return re;
}

using Tally = std::unordered_map<std::string, std::uint64_t>;

std::vector<std::pair<std::string, std::uint64_t>> sorted_tally(const Tally& t) {
  std::vector<std::pair<std::string, std::uint64_t>> out(t.begin(), t.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

enum class Mode { per_token, whole_value, format };

Mode mode_for(DcElement field) {
  switch (field) {
    case DcElement::type: return Mode::whole_value;
    case DcElement::format: return Mode::format;
    default: return Mode::per_token;
  }
}

}  // namespace

std::string_view matcher_name(Matcher m) noexcept {
  switch (m) {
    case Matcher::exact: return "exact";
    case Matcher::case_insensitive: return "case-insensitive";
    case Matcher::token_contains: return "token-contains";
  }
  return "exact";
}

std::optional<Matcher> matcher_from_name(std::string_view name) noexcept {
  for (auto m : {Matcher::exact, Matcher::case_insensitive, Matcher::token_contains}) {
    if (matcher_name(m) == name) return m;
  }
  return std::nullopt;
}

bool MappingRule::matches(std::string_view value) const {
  return matches_folded(value, text::fold(text::trim(value)));
}

bool MappingRule::matches_folded(std::string_view value, std::string_view folded) const {
  switch (matcher) {
    case Matcher::exact: return text::trim(value) == pattern;
    case Matcher::case_insensitive: return folded == text::fold(pattern);
    case Matcher::token_contains: return folded.find(text::fold(pattern)) != std::string_view::npos;
  }
  return false;
}

MappingRuleSet::MappingRuleSet(DcElement field, std::vector<MappingRule> rules)
    : field_(field), rules_(std::move(rules)) {
  folded_patterns_.reserve(rules_.size());
  for (const auto& r : rules_) folded_patterns_.push_back(text::fold(r.pattern));
}

std::optional<std::string> MappingRuleSet::resolve(std::string_view value) const {
  const std::string one(value);
  return resolve_any(std::span<const std::string>(&one, 1));
}

std::optional<std::string> MappingRuleSet::resolve_any(std::span<const std::string> parts) const {
  std::vector<std::string> folded;
  folded.reserve(parts.size());
  for (const auto& p : parts) folded.push_back(text::fold(text::trim(p)));

  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& rule = rules_[i];
    const auto& fp = folded_patterns_[i];
    for (std::size_t j = 0; j < parts.size(); ++j) {
      bool hit = false;
      switch (rule.matcher) {
        case Matcher::exact: hit = text::trim(parts[j]) == rule.pattern; break;
        case Matcher::case_insensitive: hit = folded[j] == fp; break;
        case Matcher::token_contains: hit = folded[j].find(fp) != std::string::npos; break;
      }
      if (hit) return rule.canonical;
    }
  }
  return std::nullopt;
}

MappingRuleSet parse_rules(std::string_view content, DcElement field, std::string source) {
  std::vector<MappingRule> rules;
  std::size_t line_no = 0;
  for (auto line : text::split(content, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (text::is_blank(line) || line.front() == '#') continue;

    const auto cols = text::split(line, '\t');
    if (cols.size() != 3) {
      throw FileFormatError(source, line_no,
                            "expected 3 tab-separated columns, found " + std::to_string(cols.size()));
    }
    const auto matcher = matcher_from_name(text::trim(cols[0]));
    if (!matcher) {
      throw FileFormatError(source, line_no, "unknown matcher '" + std::string(cols[0]) + "'");
    }
    const auto pattern = text::trim(cols[1]);
    const auto canonical = text::trim(cols[2]);
    if (pattern.empty()) throw FileFormatError(source, line_no, "empty pattern");
    if (canonical.empty()) throw FileFormatError(source, line_no, "empty canonical term");
    rules.push_back({*matcher, std::string(pattern), std::string(canonical)});
  }
  return MappingRuleSet(field, std::move(rules));
}

MappingRuleSet load_rules(const std::filesystem::path& path, DcElement field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read rule file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_rules(buf.str(), field, path.string());
}

const MappingRuleSet& default_language_rules() {
  static const auto rules = parse_rules(kDefaultLanguageRules, DcElement::language, "language.tsv");
  return rules;
}

const MappingRuleSet& default_type_rules() {
  static const auto rules = parse_rules(kDefaultTypeRules, DcElement::type, "type.tsv");
  return rules;
}

const MappingRuleSet& default_format_rules() {
  static const auto rules = parse_rules(kDefaultFormatRules, DcElement::format, "format.tsv");
  return rules;
}

std::vector<std::string> split_multivalue(std::string_view value) {
  std::vector<std::string> out;
  for (auto part : text::split(value, ';')) {
    part = text::trim(part);
    if (!part.empty()) out.emplace_back(part);
  }
  return out;
}

std::optional<std::string> normalize_language(std::string_view value, const MappingRuleSet& rules) {
  return rules.resolve(text::trim(value));
}

std::optional<std::string> normalize_type(std::string_view value, const MappingRuleSet& rules) {
  const auto parts = split_multivalue(value);
  if (parts.empty()) return std::nullopt;
  return rules.resolve_any(parts);
}

FormatResult normalize_format(std::string_view value, const MappingRuleSet& rules) {
  FormatResult r;
  const auto parts = split_multivalue(value);
  std::vector<std::string> residue;
  const auto add_mime = [&](std::string mime) {
    if (std::find(r.mime_types.begin(), r.mime_types.end(), mime) == r.mime_types.end()) {
      r.mime_types.push_back(std::move(mime));
    }
  };

  for (const auto& part : parts) {
    std::string leftover;
    bool found = false;
    auto last = part.cbegin();
    for (std::sregex_iterator it(part.begin(), part.end(), mime_pattern()), end; it != end; ++it) {
      found = true;
      add_mime(text::ascii_lower(it->str()));
      leftover.append(last, (*it)[0].first);
      leftover.push_back(' ');
      last = (*it)[0].second;
    }
    leftover.append(last, part.cend());

    if (found) {
      ++r.resolved_parts;
      if (!text::is_blank(leftover)) residue.emplace_back(text::trim(leftover));
      continue;
    }
    std::optional<std::string> mapped;
    if (parts.size() == 1 && text::ascii_lower(part) == "text") {
      mapped = "text/plain";
    } else {
      mapped = rules.resolve(part);
    }
    if (mapped) {
      ++r.resolved_parts;
      add_mime(*mapped);
    } else {
      r.unresolved_parts.push_back(part);
      residue.push_back(part);
    }
  }
  r.residue = text::join(residue, ";");
  return r;
}

NormalizationResult apply_normalization(const Corpus& corpus,
                                        std::span<const MappingRuleSet> rule_sets) {
  NormalizationResult out;
  if (corpus.empty()) return out;

  std::vector<Tally> unresolved(rule_sets.size());
  out.reports.resize(rule_sets.size());
  for (std::size_t i = 0; i < rule_sets.size(); ++i) out.reports[i].field = rule_sets[i].field();

  // Values repeat heavily across records; resolve each distinct input once.
  std::vector<std::unordered_map<std::string, std::optional<std::string>>> memo(rule_sets.size());

  out.records.reserve(corpus.size());
  for (const auto& rec : corpus.records()) {
    NormalizedRecord nr;
    nr.record = &rec;
    for (std::size_t i = 0; i < rule_sets.size(); ++i) {
      const auto& rules = rule_sets[i];
      auto& report = out.reports[i];
      NormalizedField nf;
      nf.field = rules.field();
      if (!is_filled(rec.metadata, nf.field)) {
        nr.fields.push_back(std::move(nf));
        continue;
      }
      const auto resolve = [&](const std::string& unit, auto&& fn) -> const std::optional<std::string>& {
        auto it = memo[i].find(unit);
        if (it == memo[i].end()) it = memo[i].emplace(unit, fn(unit)).first;
        return it->second;
      };

      switch (mode_for(nf.field)) {
        case Mode::per_token:
          for (const auto& v : rec.metadata.values(nf.field)) {
            for (const auto& token : split_multivalue(v)) {
              ++report.total_values;
              const auto& c = resolve(token, [&](const std::string& t) { return rules.resolve(t); });
              if (c) {
                ++report.resolved;
                ++report.canonical_distribution[*c];
                nf.canonical.push_back(*c);
              } else {
                ++unresolved[i][token];
                nf.unresolved.push_back(token);
              }
            }
          }
          break;
        case Mode::whole_value: {
          const auto joined = joined_value(rec.metadata, nf.field);
          ++report.total_values;
          const auto& c =
              resolve(joined, [&](const std::string& v) { return normalize_type(v, rules); });
          if (c) {
            ++report.resolved;
            ++report.canonical_distribution[*c];
            nf.canonical.push_back(*c);
          } else {
            ++unresolved[i][joined];
            nf.unresolved.push_back(joined);
          }
          break;
        }
        case Mode::format: {
          const auto fr = normalize_format(joined_value(rec.metadata, nf.field), rules);
          report.total_values += fr.resolved_parts + fr.unresolved_parts.size();
          report.resolved += fr.resolved_parts;
          for (const auto& m : fr.mime_types) ++report.canonical_distribution[m];
          for (const auto& p : fr.unresolved_parts) ++unresolved[i][p];
          nf.canonical = fr.mime_types;
          nf.unresolved = fr.unresolved_parts;
          nf.residue = fr.residue;
          break;
        }
      }
      nr.fields.push_back(std::move(nf));
    }
    out.records.push_back(std::move(nr));
  }
  for (std::size_t i = 0; i < rule_sets.size(); ++i) {
    out.reports[i].unresolved_values = sorted_tally(unresolved[i]);
  }
  return out;
}

}  // namespace dcqual
