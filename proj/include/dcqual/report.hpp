#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dcqual/normalization.hpp"
#include "dcqual/quality_metrics.hpp"

// Deterministic CSV and Markdown rendering. Numbers always use "." as the
// decimal point.
namespace dcqual::report {

enum class Format { csv, markdown };

/// "csv" or "md".
std::string_view format_extension(Format f) noexcept;

struct Table {
  std::string caption;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC 4180 field quoting.
std::string csv_field(std::string_view value);
/// A bare table: header line plus rows, CRLF-free.
std::string render_table(const Table& table, Format format);

enum class CompletenessStyle {
  /// Repositories by size descending; grid labels as columns; integer %.
  relative_grid,
  /// (attribute, percentage) with two decimals, highest first.
  absolute_list,
};

Table completeness_table(const CompletenessMatrix& matrix, CompletenessStyle style);
/// Throws EmptyInput when the matrix holds no records.
std::string render_completeness(const CompletenessMatrix& matrix, CompletenessStyle style,
                                Format format);

/// Top rows, then "otros", then "vacíos".
Table variant_table_rows(const VariantTable& table);
std::string render_variant_table(const VariantTable& table, Format format);

Table repo_size_table(const std::vector<RepoSize>& sizes);
Table length_bucket_table(const LengthHistogram& histogram);
Table top_length_table(const LengthHistogram& histogram);
Table descriptor_summary_table(const DescriptorStats& stats);
Table descriptor_per_count_table(const DescriptorStats& stats);
Table top_descriptor_table(const DescriptorStats& stats);
Table pattern_table(const std::vector<PatternResult>& patterns);
Table pattern_per_repo_table(const std::vector<PatternResult>& patterns);
Table author_bucket_table(const AuthorStats& stats);
Table author_summary_table(const AuthorStats& stats);

struct Section {
  std::string name;
  std::vector<Table> tables;
};

/// The nine report sections in reading order.
std::vector<Section> report_sections(const AnalysisBundle& bundle);

/// Throws EmptyInput when the bundle covers no records.
std::string render_full_report(const AnalysisBundle& bundle, Format format);

Table normalization_summary_table(const std::vector<NormalizationReport>& reports);
Table canonical_distribution_table(const NormalizationReport& report);
Table unresolved_table(const NormalizationReport& report);

/// part/whole rounded half-up to `decimals` places; "0" style output when
/// whole is 0.
std::string format_ratio(std::uint64_t part, std::uint64_t whole, int decimals);

}  // namespace dcqual::report
