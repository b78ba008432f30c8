#include "dcqual/report.hpp"

#include <algorithm>

#include "dcqual/errors.hpp"

namespace dcqual::report {

namespace {

std::string md_cell(std::string_view value) {
  std::string out;
  out.reserve(value.size());
  for (char c : value) {
    if (c == '|') {
      out += "\\|";
    } else if (c == '\n' || c == '\r') {
      out += ' ';
    } else {
      out += c;
    }
  }
  return out;
}

std::string bucket_range(const LengthRange& r) {
  if (!r.max) return std::to_string(r.min) + "+";
  return std::to_string(r.min) + "-" + std::to_string(*r.max);
}

std::string pct2(const Share& s) { return s.format_percent(2); }

}  // namespace

std::string_view format_extension(Format f) noexcept {
  return f == Format::csv ? "csv" : "md";
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string render_table(const Table& table, Format format) {
  std::string out;
  if (format == Format::csv) {
    const auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += csv_field(cells[i]);
      }
      out += '\n';
    };
    line(table.header);
    for (const auto& row : table.rows) line(row);
    return out;
  }
  const auto line = [&](const std::vector<std::string>& cells) {
    out += '|';
    for (const auto& c : cells) {
      out += ' ';
      out += md_cell(c);
      out += " |";
    }
    out += '\n';
  };
  line(table.header);
  out += '|';
  for (std::size_t i = 0; i < table.header.size(); ++i) out += " --- |";
  out += '\n';
  for (const auto& row : table.rows) line(row);
  return out;
}

std::string format_ratio(std::uint64_t part, std::uint64_t whole, int decimals) {
  unsigned __int128 scale = 1;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  unsigned __int128 scaled = 0;
  if (whole != 0) scaled = (2 * scale * part + whole) / (2 * static_cast<unsigned __int128>(whole));
  const auto integral = static_cast<std::uint64_t>(scaled / scale);
  std::string out = std::to_string(integral);
  if (decimals > 0) {
    std::string frac = std::to_string(static_cast<std::uint64_t>(scaled % scale));
    frac.insert(frac.begin(), static_cast<std::size_t>(decimals) - frac.size(), '0');
    out += '.';
    out += frac;
  }
  return out;
}

Table completeness_table(const CompletenessMatrix& matrix, CompletenessStyle style) {
  Table t;
  if (style == CompletenessStyle::relative_grid) {
    std::vector<std::string> labels;
    for (const auto& l : grid_labels()) {
      for (const auto& [repo, shares] : matrix.per_repo) {
        if (shares.count(l)) {
          labels.push_back(l);
          break;
        }
      }
    }
    std::vector<std::pair<std::string, std::uint64_t>> repos;
    for (const auto& [repo, shares] : matrix.per_repo) {
      auto it = matrix.repo_totals.find(repo);
      repos.emplace_back(repo, it == matrix.repo_totals.end() ? 0 : it->second);
    }
    std::stable_sort(repos.begin(), repos.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    t.caption = "relative completeness";
    t.header.push_back("repository");
    t.header.insert(t.header.end(), labels.begin(), labels.end());
    for (const auto& [repo, total] : repos) {
      const auto& shares = matrix.per_repo.at(repo);
      std::vector<std::string> row{repo};
      for (const auto& l : labels) {
        auto it = shares.find(l);
        row.push_back(it == shares.end() ? "" : it->second.format_percent(0));
      }
      t.rows.push_back(std::move(row));
    }
    return t;
  }

  std::vector<std::pair<std::string, Share>> entries(matrix.absolute.begin(), matrix.absolute.end());
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return share_less(b.second, a.second);
  });
  t.caption = "absolute completeness";
  t.header = {"attribute", "percentage"};
  for (const auto& [label, share] : entries) t.rows.push_back({label, pct2(share)});
  return t;
}

std::string render_completeness(const CompletenessMatrix& matrix, CompletenessStyle style,
                                Format format) {
  if (matrix.total_records == 0 || (matrix.per_repo.empty() && matrix.absolute.empty())) {
    throw EmptyInput("completeness matrix is empty");
  }
  return render_table(completeness_table(matrix, style), format);
}

Table variant_table_rows(const VariantTable& table) {
  Table t;
  t.caption = std::string(metric_label(table.field)) + " variants";
  t.header = {"value", "records", "percentage"};
  for (const auto& r : table.rows) t.rows.push_back({r.value, std::to_string(r.count), pct2(r.share)});
  t.rows.push_back({"otros", std::to_string(table.other.count), pct2(table.other.share)});
  t.rows.push_back({"vacíos", std::to_string(table.empty.count), pct2(table.empty.share)});
  return t;
}

std::string render_variant_table(const VariantTable& table, Format format) {
  return render_table(variant_table_rows(table), format);
}

Table repo_size_table(const std::vector<RepoSize>& sizes) {
  Table t;
  t.caption = "repository sizes";
  t.header = {"repository", "records", "percentage"};
  for (const auto& s : sizes) t.rows.push_back({s.repo_id, std::to_string(s.records), pct2(s.share)});
  return t;
}

Table length_bucket_table(const LengthHistogram& h) {
  Table t;
  t.caption = std::string(metric_label(h.field)) + " length buckets";
  t.header = {"characters", "records", "percentage"};
  for (const auto& b : h.buckets) {
    t.rows.push_back({bucket_range(b.range), std::to_string(b.count), pct2(b.share)});
  }
  return t;
}

Table top_length_table(const LengthHistogram& h) {
  Table t;
  t.caption = std::string(metric_label(h.field)) + " most frequent lengths";
  t.header = {"characters", "records"};
  for (const auto& [len, n] : h.top_lengths) t.rows.push_back({std::to_string(len), std::to_string(n)});
  return t;
}

Table descriptor_summary_table(const DescriptorStats& s) {
  Table t;
  t.caption = "descriptor summary";
  t.header = {"metric", "value"};
  t.rows = {
      {"distinct descriptors", std::to_string(s.distinct_count)},
      {"records with descriptors", std::to_string(s.records_with_descriptors)},
      {"records without descriptors", std::to_string(s.records_without_descriptors)},
      {"descriptor uses", std::to_string(s.total_descriptors)},
      {"mean per record", format_ratio(s.total_descriptors, s.records_with_descriptors, 2)},
      {"max per record", std::to_string(s.max_per_record)},
  };
  return t;
}

Table descriptor_per_count_table(const DescriptorStats& s) {
  Table t;
  t.caption = "descriptors per record";
  t.header = {"descriptors", "records", "in_title", "in_description"};
  for (const auto& [k, n] : s.per_record_counts) {
    const auto get = [k = k](const std::map<std::size_t, std::uint64_t>& m) {
      auto it = m.find(k);
      return std::to_string(it == m.end() ? 0 : it->second);
    };
    t.rows.push_back({std::to_string(k), std::to_string(n), get(s.in_title), get(s.in_description)});
  }
  return t;
}

Table top_descriptor_table(const DescriptorStats& s) {
  Table t;
  t.caption = "most used descriptors";
  t.header = {"descriptor", "uses"};
  for (const auto& [d, n] : s.top_descriptors) t.rows.push_back({d, std::to_string(n)});
  return t;
}

Table pattern_table(const std::vector<PatternResult>& patterns) {
  Table t;
  t.caption = "pattern variant counts";
  t.header = {"pattern", "field", "distinct_variants", "records"};
  for (const auto& p : patterns) {
    t.rows.push_back({p.query.name, std::string(metric_label(p.query.field)),
                      std::to_string(p.result.distinct_matching_variants),
                      std::to_string(p.result.matching_records)});
  }
  return t;
}

Table pattern_per_repo_table(const std::vector<PatternResult>& patterns) {
  Table t;
  t.caption = "pattern variants per repository";
  t.header = {"pattern", "repository", "distinct_variants"};
  for (const auto& p : patterns) {
    for (const auto& [repo, n] : p.result.per_repo) {
      if (n) t.rows.push_back({p.query.name, repo, std::to_string(n)});
    }
  }
  return t;
}

Table author_bucket_table(const AuthorStats& s) {
  Table t;
  t.caption = "authors per record";
  t.header = {"authors", "records"};
  for (std::size_t i = 0; i < AuthorStats::kBuckets; ++i) {
    t.rows.push_back({AuthorStats::bucket_label(i), std::to_string(s.per_record_counts[i])});
  }
  return t;
}

Table author_summary_table(const AuthorStats& s) {
  Table t;
  t.caption = "author summary";
  t.header = {"metric", "value"};
  t.rows = {
      {"records with authors", std::to_string(s.records_with_authors)},
      {"sin autor", std::to_string(s.records_without_authors)},
      {"distinct authors", std::to_string(s.distinct_authors)},
      {"surname-first authors", std::to_string(s.surname_first)},
      {"surname-first percentage", pct2(s.surname_first_share)},
      {"max per record", std::to_string(s.max_per_record)},
  };
  return t;
}

std::vector<Section> report_sections(const AnalysisBundle& b) {
  std::vector<Section> s;
  s.push_back({"repository sizes", {repo_size_table(b.repo_sizes)}});
  s.push_back({"relative completeness",
               {completeness_table(b.completeness, CompletenessStyle::relative_grid)}});
  s.push_back({"absolute completeness",
               {completeness_table(b.completeness, CompletenessStyle::absolute_list)}});
  s.push_back({"length histograms",
               {length_bucket_table(b.title_lengths), top_length_table(b.title_lengths),
                length_bucket_table(b.description_lengths), top_length_table(b.description_lengths)}});
  s.push_back({"language variants", {variant_table_rows(b.language)}});
  s.push_back({"descriptor stats",
               {descriptor_summary_table(b.descriptors), descriptor_per_count_table(b.descriptors),
                top_descriptor_table(b.descriptors)}});
  s.push_back({"type variants", {variant_table_rows(b.type)}});
  s.push_back({"format variants",
               {variant_table_rows(b.format), pattern_table(b.patterns),
                pattern_per_repo_table(b.patterns)}});
  s.push_back({"author stats", {author_bucket_table(b.authors), author_summary_table(b.authors)}});
  return s;
}

std::string render_full_report(const AnalysisBundle& bundle, Format format) {
  if (bundle.total_records == 0) throw EmptyInput("no records to report on");
  std::string out;
  if (format == Format::markdown) {
    out += "# Metadata quality report\n\nRecords analysed: " + std::to_string(bundle.total_records) +
           "\n";
  }
  for (const auto& section : report_sections(bundle)) {
    if (format == Format::markdown) {
      out += "\n## " + section.name + "\n";
      for (const auto& t : section.tables) {
        if (section.tables.size() > 1) out += "\n### " + t.caption + "\n";
        out += '\n';
        out += render_table(t, format);
      }
      continue;
    }
    for (const auto& t : section.tables) {
      if (!out.empty()) out += '\n';
      out += '[' + section.name;
      if (section.tables.size() > 1) out += ": " + t.caption;
      out += "]\n";
      out += render_table(t, format);
    }
  }
  return out;
}

Table normalization_summary_table(const std::vector<NormalizationReport>& reports) {
  Table t;
  t.caption = "normalization summary";
  t.header = {"field", "values", "resolved", "unresolved", "resolved_percentage", "canonical_terms"};
  for (const auto& r : reports) {
    t.rows.push_back({std::string(metric_label(r.field)), std::to_string(r.total_values),
                      std::to_string(r.resolved), std::to_string(r.total_values - r.resolved),
                      format_ratio(100 * r.resolved, r.total_values, 2),
                      std::to_string(r.canonical_distribution.size())});
  }
  return t;
}

Table canonical_distribution_table(const NormalizationReport& r) {
  std::vector<std::pair<std::string, std::uint64_t>> rows(r.canonical_distribution.begin(),
                                                          r.canonical_distribution.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Table t;
  t.caption = std::string(metric_label(r.field)) + " canonical terms";
  t.header = {"canonical", "count"};
  for (const auto& [term, n] : rows) t.rows.push_back({term, std::to_string(n)});
  return t;
}

Table unresolved_table(const NormalizationReport& r) {
  Table t;
  t.caption = std::string(metric_label(r.field)) + " unresolved values";
  t.header = {"value", "count"};
  for (const auto& [v, n] : r.unresolved_values) t.rows.push_back({v, std::to_string(n)});
  return t;
}

}  // namespace dcqual::report
