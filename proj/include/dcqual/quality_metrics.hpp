#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dcqual/corpus_store.hpp"
#include "dcqual/record_model.hpp"

// Metadata-quality metrics over a Corpus. Every function is pure and
// deterministic; percentages are kept as exact ratios and only rounded when
// formatted.
namespace dcqual {

/// An exact part/whole ratio. A zero whole reads as 0%.
struct Share {
  std::uint64_t part = 0;
  std::uint64_t whole = 0;

  double percent() const noexcept;
  /// round_half_up(percent * 10^decimals).
  std::int64_t scaled_percent(int decimals) const noexcept;
  /// scaled_percent() rendered with a "." decimal point, e.g. "28.46".
  std::string format_percent(int decimals) const;
  /// Truncated integer percentage.
  std::uint64_t floor_percent() const noexcept;

  friend bool operator==(const Share&, const Share&) = default;
};

/// Orders by value; equal ratios with different wholes compare equal.
bool share_less(const Share& a, const Share& b) noexcept;

inline constexpr std::string_view kSetSpecLabel = "setSpec";

/// The fifteen metric labels in the column order of the per-repository
/// completeness grid (metadata identifier last, as "identifier2").
const std::vector<std::string>& grid_labels();

/// grid_labels() followed by "setSpec".
const std::vector<std::string>& completeness_labels();

using FieldShares = std::map<std::string, Share>;

struct CompletenessMatrix {
  std::map<std::string, FieldShares> per_repo;
  std::map<std::string, std::uint64_t> repo_totals;
  FieldShares absolute;
  std::uint64_t total_records = 0;
};

/// filled/total per repository and label. Throws EmptyCorpus.
std::map<std::string, FieldShares> relative_completeness(const Corpus& corpus);
/// filled/total over the whole corpus per label. Throws EmptyCorpus.
FieldShares absolute_completeness(const Corpus& corpus);
CompletenessMatrix completeness_matrix(const Corpus& corpus);

struct RepoSize {
  std::string repo_id;
  std::uint64_t records = 0;
  Share share;
};

/// Sorted by size descending, then repo_id. Throws EmptyCorpus.
std::vector<RepoSize> repo_size_summary(const Corpus& corpus);

enum class VariantMode {
  /// One value per record: the ";"-joined value list.
  joined,
  /// Every non-blank value counted separately.
  individual,
};

struct VariantRow {
  std::string value;
  std::uint64_t count = 0;
  /// count / total records
  Share share;
};

struct VariantTable {
  DcElement field = DcElement::title;
  VariantMode mode = VariantMode::joined;
  std::uint64_t total_records = 0;
  /// Distinct non-empty values before the top-k cut.
  std::size_t distinct_values = 0;
  /// Count descending, then value ascending (bytewise, case-sensitive).
  std::vector<VariantRow> rows;
  /// Everything past top_k ("otros").
  VariantRow other;
  std::size_t other_distinct = 0;
  /// Records where the field is not filled ("vacíos").
  VariantRow empty;
};

/// Throws IllegalArgument when top_k is 0.
VariantTable variant_table(const Corpus& corpus, DcElement field, VariantMode mode,
                           std::size_t top_k);

std::size_t distinct_variant_count(const Corpus& corpus, DcElement field, VariantMode mode);

struct PatternVariantCount {
  /// Distinct joined values whose folded form contains one of the patterns.
  std::size_t distinct_matching_variants = 0;
  std::uint64_t matching_records = 0;
  /// Distinct matching variants seen in each repository.
  std::map<std::string, std::size_t> per_repo;
};

/// Case- and accent-insensitive substring match of any pattern against the
/// joined value of each filled record.
PatternVariantCount pattern_variant_count(const Corpus& corpus, DcElement field,
                                          std::span<const std::string> patterns);

struct LengthRange {
  std::uint64_t min = 1;
  /// Unset means unbounded.
  std::optional<std::uint64_t> max;
};

struct LengthBucket {
  LengthRange range;
  std::uint64_t count = 0;
  /// count / filled records
  Share share;
};

struct LengthHistogram {
  DcElement field = DcElement::title;
  std::uint64_t filled_records = 0;
  std::vector<LengthBucket> buckets;
  /// (length, records), most frequent first, ties by shorter length.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> top_lengths;
};

std::vector<LengthRange> default_title_buckets();
std::vector<LengthRange> default_description_buckets();

/// Lengths are code points of the joined value, filled records only. The
/// ranges must be ascending, contiguous, start at 1, and only the last may be
/// unbounded; otherwise IllegalArgument.
LengthHistogram length_histogram(const Corpus& corpus, DcElement field,
                                 std::span<const LengthRange> buckets, std::size_t top_n = 3);

struct DescriptorStats {
  std::uint64_t distinct_count = 0;
  std::uint64_t records_with_descriptors = 0;
  std::uint64_t records_without_descriptors = 0;
  std::uint64_t total_descriptors = 0;
  /// Keyed by the exact number of descriptors k >= 1.
  std::map<std::size_t, std::uint64_t> per_record_counts;
  std::map<std::size_t, std::uint64_t> in_title;
  std::map<std::size_t, std::uint64_t> in_description;
  /// total_descriptors / records_with_descriptors
  double mean_per_record = 0.0;
  std::size_t max_per_record = 0;
  std::vector<std::pair<std::string, std::uint64_t>> top_descriptors;
};

/// Descriptors are the non-blank subject values. A record counts towards
/// in_title[k] when the folded form of one of its descriptors is a substring
/// of its folded joined title (likewise for description).
DescriptorStats descriptor_stats(const Corpus& corpus, std::size_t top_n = 10);

struct AuthorStats {
  static constexpr std::size_t kBuckets = 11;
  /// Index i holds records with i+1 authors; the last bucket holds 11 or more.
  std::array<std::uint64_t, kBuckets> per_record_counts{};
  std::uint64_t records_with_authors = 0;
  std::uint64_t records_without_authors = 0;
  std::uint64_t distinct_authors = 0;
  std::uint64_t surname_first = 0;
  /// surname_first / distinct_authors
  Share surname_first_share;
  std::size_t max_per_record = 0;

  /// "1" ... "10", "+ de 10"
  static std::string bucket_label(std::size_t index);
};

/// "Apellidos, Nombres": a comma with non-blank text on both sides.
bool is_surname_first(std::string_view name) noexcept;

AuthorStats author_stats(const Corpus& corpus);

struct PatternQuery {
  std::string name;
  DcElement field = DcElement::type;
  std::vector<std::string> patterns;
};

struct AnalysisOptions {
  std::size_t language_top_k = 21;
  std::size_t type_top_k = 20;
  std::size_t format_top_k = 20;
  std::size_t descriptor_top_n = 10;
  std::size_t top_lengths = 3;
  std::vector<LengthRange> title_buckets = default_title_buckets();
  std::vector<LengthRange> description_buckets = default_description_buckets();
  std::vector<PatternQuery> patterns = {
      {"article", DcElement::type, {"article", "artículo"}},
      {"pdf", DcElement::format, {"pdf"}},
      {"html", DcElement::format, {"html"}},
  };
};

struct PatternResult {
  PatternQuery query;
  PatternVariantCount result;
};

struct AnalysisBundle {
  std::uint64_t total_records = 0;
  std::vector<RepoSize> repo_sizes;
  CompletenessMatrix completeness;
  LengthHistogram title_lengths;
  LengthHistogram description_lengths;
  VariantTable language;
  DescriptorStats descriptors;
  VariantTable type;
  VariantTable format;
  std::vector<PatternResult> patterns;
  AuthorStats authors;
};

/// Everything above in one pass over the options. Throws EmptyCorpus.
AnalysisBundle analyze(const Corpus& corpus, const AnalysisOptions& options = {});

}  // namespace dcqual
