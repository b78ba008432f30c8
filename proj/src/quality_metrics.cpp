#include "dcqual/quality_metrics.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "dcqual/errors.hpp"
#include "dcqual/text.hpp"

namespace dcqual {

namespace {

using Counts = std::unordered_map<std::string, std::uint64_t>;

void require_records(const Corpus& corpus) {
  if (corpus.empty()) throw EmptyCorpus();
}

bool set_spec_filled(const RecordHeader& h) noexcept {
  for (const auto& s : h.set_specs) {
    if (!text::is_blank(s)) return true;
  }
  return false;
}

// Filled flags for the sixteen completeness labels, in completeness_labels() order.
std::vector<bool> filled_flags(const HarvestedRecord& r) {
  const auto& labels = completeness_labels();
  std::vector<bool> flags(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kSetSpecLabel) {
      flags[i] = set_spec_filled(r.header);
    } else {
      flags[i] = is_filled(r.metadata, *element_from_name(labels[i]));
    }
  }
  return flags;
}

std::vector<std::pair<std::string, std::uint64_t>> sorted_counts(Counts counts) {
  std::vector<std::pair<std::string, std::uint64_t>> out(
      std::make_move_iterator(counts.begin()), std::make_move_iterator(counts.end()));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

Counts count_variants(const Corpus& corpus, DcElement field, VariantMode mode,
                      std::uint64_t* empty_records) {
  Counts counts;
  std::uint64_t empty = 0;
  for (const auto& r : corpus.records()) {
    if (!is_filled(r.metadata, field)) {
      ++empty;
      continue;
    }
    if (mode == VariantMode::joined) {
      ++counts[joined_value(r.metadata, field)];
    } else {
      for (const auto& v : r.metadata.values(field)) {
        if (!text::is_blank(v)) ++counts[v];
      }
    }
  }
  if (empty_records) *empty_records = empty;
  return counts;
}

void validate_buckets(std::span<const LengthRange> buckets) {
  if (buckets.empty()) throw IllegalArgument("length histogram needs at least one bucket");
  std::uint64_t expected_min = 1;
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    const auto& b = buckets[i];
    if (b.min != expected_min) {
      throw IllegalArgument("length buckets must be contiguous from 1; bucket " +
                            std::to_string(i) + " starts at " + std::to_string(b.min));
    }
    if (!b.max) {
      if (i + 1 != buckets.size()) throw IllegalArgument("only the last bucket may be unbounded");
      return;
    }
    if (*b.max < b.min) throw IllegalArgument("length bucket with max < min");
    expected_min = *b.max + 1;
  }
  throw IllegalArgument("the last length bucket must be unbounded");
}

}  // namespace

double Share::percent() const noexcept {
  if (whole == 0) return 0.0;
  return 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

std::int64_t Share::scaled_percent(int decimals) const noexcept {
  if (whole == 0) return 0;
  unsigned __int128 scale = 100;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  const unsigned __int128 num = 2 * scale * part + whole;
  return static_cast<std::int64_t>(num / (2 * static_cast<unsigned __int128>(whole)));
}

std::string Share::format_percent(int decimals) const {
  const auto scaled = scaled_percent(decimals);
  if (decimals <= 0) return std::to_string(scaled);
  std::int64_t scale = 1;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  std::string frac = std::to_string(scaled % scale);
  frac.insert(frac.begin(), static_cast<std::size_t>(decimals) - frac.size(), '0');
  return std::to_string(scaled / scale) + "." + frac;
}

std::uint64_t Share::floor_percent() const noexcept {
  if (whole == 0) return 0;
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(part) * 100) / whole);
}

bool share_less(const Share& a, const Share& b) noexcept {
  // a.part/a.whole < b.part/b.whole, with 0/0 treated as 0.
  const unsigned __int128 lhs = static_cast<unsigned __int128>(a.part) * (b.whole ? b.whole : 1);
  const unsigned __int128 rhs = static_cast<unsigned __int128>(b.part) * (a.whole ? a.whole : 1);
  const bool a_zero = a.whole == 0;
  const bool b_zero = b.whole == 0;
  if (a_zero && b_zero) return false;
  if (a_zero) return b.part > 0;
  if (b_zero) return false;
  return lhs < rhs;
}

const std::vector<std::string>& grid_labels() {
  static const std::vector<std::string> labels = {
      "title",  "creator",  "subject",  "description", "publisher", "contributor", "date",
      "type",   "format",   "source",   "language",    "relation",  "coverage",    "rights",
      "identifier2",
  };
  return labels;
}

const std::vector<std::string>& completeness_labels() {
  static const std::vector<std::string> labels = [] {
    auto l = grid_labels();
    l.emplace_back(kSetSpecLabel);
    return l;
  }();
  return labels;
}

CompletenessMatrix completeness_matrix(const Corpus& corpus) {
  require_records(corpus);
  const auto& labels = completeness_labels();
  CompletenessMatrix m;
  m.total_records = corpus.size();
  std::vector<std::uint64_t> corpus_filled(labels.size(), 0);

  for (const auto& group : corpus.repos()) {
    std::vector<std::uint64_t> filled(labels.size(), 0);
    for (const auto& r : corpus.repo_records(group)) {
      const auto flags = filled_flags(r);
      for (std::size_t i = 0; i < flags.size(); ++i) filled[i] += flags[i] ? 1 : 0;
    }
    auto& row = m.per_repo[group.repo_id];
    for (std::size_t i = 0; i < labels.size(); ++i) {
      row[labels[i]] = Share{filled[i], group.size()};
      corpus_filled[i] += filled[i];
    }
    m.repo_totals[group.repo_id] = group.size();
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    m.absolute[labels[i]] = Share{corpus_filled[i], m.total_records};
  }
  return m;
}

std::map<std::string, FieldShares> relative_completeness(const Corpus& corpus) {
  return completeness_matrix(corpus).per_repo;
}

FieldShares absolute_completeness(const Corpus& corpus) {
  return completeness_matrix(corpus).absolute;
}

std::vector<RepoSize> repo_size_summary(const Corpus& corpus) {
  require_records(corpus);
  std::vector<RepoSize> out;
  for (const auto& g : corpus.repos()) {
    out.push_back({g.repo_id, g.size(), Share{g.size(), corpus.size()}});
  }
  std::sort(out.begin(), out.end(), [](const RepoSize& a, const RepoSize& b) {
    if (a.records != b.records) return a.records > b.records;
    return a.repo_id < b.repo_id;
  });
  return out;
}

VariantTable variant_table(const Corpus& corpus, DcElement field, VariantMode mode,
                           std::size_t top_k) {
  if (top_k == 0) throw IllegalArgument("top_k must be >= 1");
  VariantTable t;
  t.field = field;
  t.mode = mode;
  t.total_records = corpus.size();

  std::uint64_t empty = 0;
  auto sorted = sorted_counts(count_variants(corpus, field, mode, &empty));
  t.distinct_values = sorted.size();
  t.empty = {"vacíos", empty, Share{empty, t.total_records}};

  std::uint64_t other = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i < top_k) {
      t.rows.push_back({std::move(sorted[i].first), sorted[i].second,
                        Share{sorted[i].second, t.total_records}});
    } else {
      other += sorted[i].second;
      ++t.other_distinct;
    }
  }
  t.other = {"otros", other, Share{other, t.total_records}};
  return t;
}

std::size_t distinct_variant_count(const Corpus& corpus, DcElement field, VariantMode mode) {
  return count_variants(corpus, field, mode, nullptr).size();
}

PatternVariantCount pattern_variant_count(const Corpus& corpus, DcElement field,
                                          std::span<const std::string> patterns) {
  std::vector<std::string> folded;
  for (const auto& p : patterns) {
    auto f = text::fold(text::trim(p));
    if (!f.empty()) folded.push_back(std::move(f));
  }

  // Fold each distinct value once; corpora repeat values heavily.
  std::unordered_map<std::string, bool> matches;
  std::unordered_set<std::string> matching;
  PatternVariantCount out;
  for (const auto& group : corpus.repos()) {
    std::unordered_set<std::string> in_repo;
    for (const auto& r : corpus.repo_records(group)) {
      if (!is_filled(r.metadata, field)) continue;
      auto value = joined_value(r.metadata, field);
      auto it = matches.find(value);
      if (it == matches.end()) {
        const auto f = text::fold(value);
        bool hit = false;
        for (const auto& p : folded) {
          if (f.find(p) != std::string::npos) {
            hit = true;
            break;
          }
        }
        it = matches.emplace(value, hit).first;
      }
      if (!it->second) continue;
      ++out.matching_records;
      in_repo.insert(value);
      matching.insert(std::move(value));
    }
    out.per_repo[group.repo_id] = in_repo.size();
  }
  out.distinct_matching_variants = matching.size();
  return out;
}

std::vector<LengthRange> default_title_buckets() {
  return {{1, 100}, {101, 200}, {201, 300}, {301, 400}, {401, std::nullopt}};
}

std::vector<LengthRange> default_description_buckets() {
  return {{1, 999}, {1000, 10000}, {10001, std::nullopt}};
}

LengthHistogram length_histogram(const Corpus& corpus, DcElement field,
                                 std::span<const LengthRange> buckets, std::size_t top_n) {
  validate_buckets(buckets);
  LengthHistogram h;
  h.field = field;
  for (const auto& b : buckets) h.buckets.push_back({b, 0, {}});

  std::map<std::uint64_t, std::uint64_t> by_length;
  for (const auto& r : corpus.records()) {
    if (!is_filled(r.metadata, field)) continue;
    ++h.filled_records;
    const std::uint64_t len = text::utf8_length(joined_value(r.metadata, field));
    ++by_length[len];
  }
  for (const auto& [len, count] : by_length) {
    for (auto& b : h.buckets) {
      if (len >= b.range.min && (!b.range.max || len <= *b.range.max)) {
        b.count += count;
        break;
      }
    }
  }
  for (auto& b : h.buckets) b.share = Share{b.count, h.filled_records};

  std::vector<std::pair<std::uint64_t, std::uint64_t>> lengths(by_length.begin(), by_length.end());
  std::stable_sort(lengths.begin(), lengths.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (lengths.size() > top_n) lengths.resize(top_n);
  h.top_lengths = std::move(lengths);
  return h;
}

DescriptorStats descriptor_stats(const Corpus& corpus, std::size_t top_n) {
  DescriptorStats s;
  Counts uses;
  std::unordered_map<std::string, std::string> folded_cache;
  const auto folded_of = [&](const std::string& v) -> const std::string& {
    auto it = folded_cache.find(v);
    if (it == folded_cache.end()) it = folded_cache.emplace(v, text::fold(text::trim(v))).first;
    return it->second;
  };

  for (const auto& r : corpus.records()) {
    std::vector<const std::string*> descriptors;
    for (const auto& v : r.metadata.values(DcElement::subject)) {
      if (!text::is_blank(v)) descriptors.push_back(&v);
    }
    const std::size_t k = descriptors.size();
    if (k == 0) {
      ++s.records_without_descriptors;
      continue;
    }
    ++s.records_with_descriptors;
    s.total_descriptors += k;
    s.max_per_record = std::max(s.max_per_record, k);
    ++s.per_record_counts[k];
    for (const auto* d : descriptors) ++uses[*d];

    const auto title = text::fold(joined_value(r.metadata, DcElement::title));
    const auto description = text::fold(joined_value(r.metadata, DcElement::description));
    bool hit_title = false;
    bool hit_description = false;
    for (const auto* d : descriptors) {
      const auto& f = folded_of(*d);
      if (!hit_title && title.find(f) != std::string::npos) hit_title = true;
      if (!hit_description && description.find(f) != std::string::npos) hit_description = true;
      if (hit_title && hit_description) break;
    }
    // Keep the maps dense over observed k so reports show explicit zeros.
    s.in_title[k] += hit_title ? 1 : 0;
    s.in_description[k] += hit_description ? 1 : 0;
  }
  s.distinct_count = uses.size();
  s.mean_per_record = s.records_with_descriptors == 0
                          ? 0.0
                          : static_cast<double>(s.total_descriptors) /
                                static_cast<double>(s.records_with_descriptors);
  auto sorted = sorted_counts(std::move(uses));
  if (sorted.size() > top_n) sorted.resize(top_n);
  s.top_descriptors = std::move(sorted);
  return s;
}

std::string AuthorStats::bucket_label(std::size_t index) {
  return index + 1 < kBuckets ? std::to_string(index + 1) : std::string("+ de 10");
}

bool is_surname_first(std::string_view name) noexcept {
  for (std::size_t pos = name.find(','); pos != std::string_view::npos;
       pos = name.find(',', pos + 1)) {
    if (!text::is_blank(name.substr(0, pos)) && !text::is_blank(name.substr(pos + 1))) return true;
  }
  return false;
}

AuthorStats author_stats(const Corpus& corpus) {
  AuthorStats s;
  std::unordered_set<std::string_view> distinct;
  for (const auto& r : corpus.records()) {
    std::size_t n = 0;
    for (const auto& v : r.metadata.values(DcElement::creator)) {
      if (text::is_blank(v)) continue;
      ++n;
      distinct.insert(v);
    }
    if (n == 0) {
      ++s.records_without_authors;
      continue;
    }
    ++s.records_with_authors;
    s.max_per_record = std::max(s.max_per_record, n);
    ++s.per_record_counts[std::min(n, AuthorStats::kBuckets) - 1];
  }
  s.distinct_authors = distinct.size();
  for (auto name : distinct) {
    if (is_surname_first(name)) ++s.surname_first;
  }
  s.surname_first_share = Share{s.surname_first, s.distinct_authors};
  return s;
}

AnalysisBundle analyze(const Corpus& corpus, const AnalysisOptions& options) {
  require_records(corpus);
  AnalysisBundle b;
  b.total_records = corpus.size();
  b.repo_sizes = repo_size_summary(corpus);
  b.completeness = completeness_matrix(corpus);
  b.title_lengths =
      length_histogram(corpus, DcElement::title, options.title_buckets, options.top_lengths);
  b.description_lengths = length_histogram(corpus, DcElement::description,
                                           options.description_buckets, options.top_lengths);
  b.language = variant_table(corpus, DcElement::language, VariantMode::joined,
                             options.language_top_k);
  b.descriptors = descriptor_stats(corpus, options.descriptor_top_n);
  b.type = variant_table(corpus, DcElement::type, VariantMode::joined, options.type_top_k);
  b.format = variant_table(corpus, DcElement::format, VariantMode::joined, options.format_top_k);
  for (const auto& q : options.patterns) {
    b.patterns.push_back({q, pattern_variant_count(corpus, q.field, q.patterns)});
  }
  b.authors = author_stats(corpus);
  return b;
}

}  // namespace dcqual
