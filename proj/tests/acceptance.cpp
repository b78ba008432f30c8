// Acceptance checks. Prints one PASS/FAIL line per criterion; exits non-zero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

#include "commands.hpp"
#include "dcqual/corpus_store.hpp"
#include "dcqual/mock_provider.hpp"
#include "dcqual/normalization.hpp"
#include "dcqual/oai_protocol.hpp"
#include "dcqual/quality_metrics.hpp"
#include "dcqual/text.hpp"
#include "oracle.hpp"
#include "census_fixtures.hpp"
#include "support.hpp"

using namespace dcqual;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances and limits.
constexpr double kPercentTolerance = 0.005;
constexpr double kHarvestSecondsPerCase = 10.0;
constexpr double kAnalyzeSeconds = 60.0;
constexpr std::size_t kOracleCorpora = 50;
constexpr std::size_t kOracleMaxRecords = 1000;
constexpr std::size_t kScaleRecords = 300000;

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Outcome ac1_protocol_totality() {
  Outcome o;
  std::mt19937_64 rng(1);
  double slowest = 0;
  for (std::size_t n : {0, 1, 99, 100, 101, 1234}) {
    for (std::size_t page_size : {1, 7, 100}) {
      const std::size_t deleted = n / 10;
      auto fixture = testing_support::random_fixture(n, deleted, rng);
      std::set<std::string> expected;
      for (const auto& r : fixture.records) {
        if (!r.header.deleted) expected.insert(r.header.identifier);
      }
      auto provider = std::make_shared<mock::MockProvider>(std::move(fixture), mock::MockOptions{page_size, {}, ""});
      mock::MockServer server(provider);
      std::vector<std::string> got;
      const auto t0 = Clock::now();
      const auto s = oai::harvest_list_records(oai::Endpoint("ac1", server.base_url()), "oai_dc", oai::FetchPolicy{},
                                               [&](oai::OaiRecord&& r) { got.push_back(r.header.identifier); });
      const double secs = seconds_since(t0);
      slowest = std::max(slowest, secs);
      const std::string tag = "N=" + std::to_string(n) + " page=" + std::to_string(page_size);
      if (!s.complete) o.fail(tag + ": incomplete");
      if (got.size() != expected.size()) o.fail(tag + ": got " + std::to_string(got.size()) + " records");
      if (std::set<std::string>(got.begin(), got.end()) != expected) o.fail(tag + ": wrong or duplicate records");
      if (secs >= kHarvestSecondsPerCase) o.fail(tag + ": took " + std::to_string(secs) + " s");
    }
  }
  if (o.pass) o.detail = "18 cases, slowest " + std::to_string(slowest).substr(0, 5) + " s";
  return o;
}

Outcome ac2_fault_tolerance() {
  Outcome o;
  std::mt19937_64 rng(2);
  const auto fixture = testing_support::random_fixture(95, 5, rng);

  // In process with a recording sleeper: the Retry-After value must be used verbatim.
  mock::MockOptions mo{10, mock::parse_fault_script("503:4@2,expire@5"), ""};
  auto provider = std::make_shared<mock::MockProvider>(fixture, mo);
  oai::FetchPolicy policy;
  policy.base_backoff = std::chrono::milliseconds(100);
  oai::Client client(policy, std::make_unique<testing_support::InProcessTransport>(provider));
  std::vector<std::chrono::milliseconds> sleeps;
  client.set_sleeper([&](std::chrono::milliseconds d) { sleeps.push_back(d); });
  std::set<std::string> ids;
  const auto s = client.harvest_list_records(oai::Endpoint("ac2", "http://127.0.0.1/oai"), "oai_dc",
                                             [&](oai::OaiRecord&& r) { ids.insert(r.header.identifier); });
  if (!s.complete || ids.size() != 95 || s.records != 95) o.fail("in-process harvest did not recover all 95 records");
  if (s.restarts != 1) o.fail("restarts = " + std::to_string(s.restarts));
  if (std::find(sleeps.begin(), sleeps.end(), std::chrono::seconds(4)) == sleeps.end()) o.fail("Retry-After 4 s not honored");
  if (provider->faults_fired() != 2) o.fail("faults fired = " + std::to_string(provider->faults_fired()));

  // Over HTTP with real sleeping.
  auto live = std::make_shared<mock::MockProvider>(fixture, mock::MockOptions{10, mock::parse_fault_script("503:1@3,expire@4"), ""});
  mock::MockServer server(live);
  std::size_t n = 0;
  const auto t0 = Clock::now();
  const auto hs = oai::harvest_list_records(oai::Endpoint("ac2", server.base_url()), "oai_dc", policy,
                                            [&](oai::OaiRecord&&) { ++n; });
  const double secs = seconds_since(t0);
  if (!hs.complete || n != 95) o.fail("HTTP harvest recovered " + std::to_string(n) + " records");
  if (hs.restarts != 1) o.fail("HTTP restarts = " + std::to_string(hs.restarts));
  if (secs < 1.0) o.fail("HTTP harvest did not wait for Retry-After");
  if (o.pass) o.detail = "95/95 records twice, 1 restart each, Retry-After honored";
  return o;
}

Outcome ac3_oracle() {
  Outcome o;
  std::mt19937_64 rng(3);
  std::size_t records = 0;
  for (std::size_t i = 0; i < kOracleCorpora; ++i) {
    const auto c = oracle::random_corpus(rng, kOracleMaxRecords);
    records += c.size();
    const auto bad = oracle::compare_all(c, kPercentTolerance);
    if (!bad.empty()) o.fail("corpus " + std::to_string(i) + ": " + bad.front());
  }
  if (o.pass) o.detail = std::to_string(kOracleCorpora) + " corpora, " + std::to_string(records) + " records";
  return o;
}

Outcome ac4_table1() {
  Outcome o;
  const auto abs = absolute_completeness(census::table1_corpus());
  for (const auto& [label, pct] : census::table1_percentages()) {
    const auto got = abs.at(label).format_percent(2);
    if (got != pct) o.fail(label + " " + got + " != " + pct);
  }
  if (o.pass) o.detail = "16 attributes match to two decimals";
  return o;
}

Outcome ac5_table2() {
  Outcome o;
  const auto t = variant_table(census::table2_corpus(), DcElement::language, VariantMode::joined, 21);
  const auto& want = census::table2_percentages();
  if (t.rows.size() != 21) o.fail("rows = " + std::to_string(t.rows.size()));
  for (std::size_t i = 0; i < t.rows.size() && i < 21; ++i) {
    if (t.rows[i].value != want[i].first) o.fail("row " + std::to_string(i) + " is " + t.rows[i].value);
    if (t.rows[i].share.format_percent(2) != want[i].second) o.fail(t.rows[i].value + " share " + t.rows[i].share.format_percent(2));
  }
  if (t.other.count != census::kTable2Other || t.other.share.format_percent(2) != want[21].second) o.fail("otros row differs");
  if (t.empty.count != census::kTable2Empty || t.empty.share.format_percent(2) != want[22].second) o.fail("vacíos row differs");
  if (t.distinct_values != 91) o.fail("distinct = " + std::to_string(t.distinct_values));
  if (o.pass) o.detail = "21 rows plus otros/vacíos, 91 distinct";
  return o;
}

Outcome ac6_closure() {
  Outcome o;
  std::set<std::string> codes;
  for (const auto& [value, count] : census::table2_rows()) {
    for (const auto& part : split_multivalue(value)) {
      const auto c = normalize_language(part);
      if (!c) o.fail("language '" + part + "' unresolved");
      else codes.insert(*c);
    }
  }
  if (codes.size() > 10) o.fail(std::to_string(codes.size()) + " language codes");
  const std::set<std::string> vocab{"article", "conferenceObject", "review", "bachelorThesis", "doctoralThesis",
                                    "masterThesis", "book", "bookPart", "report", "legislation", "image", "text", "other"};
  std::size_t article_rows = 0;
  for (const auto& [value, count] : census::table3_rows()) {
    const auto t = normalize_type(value);
    if (!t || !vocab.count(*t)) {
      o.fail("type '" + value + "' unresolved");
      continue;
    }
    const auto folded = text::fold(value);
    if (folded.find("articulo") != std::string::npos || folded.find("article") != std::string::npos) {
      ++article_rows;
      if (*t != "article") o.fail("article row '" + value + "' -> " + *t);
    }
  }
  if (o.pass) {
    o.detail = std::to_string(codes.size()) + " language codes; 20/20 types, " + std::to_string(article_rows) +
               " article rows -> article";
  }
  return o;
}

Outcome ac7_authors_descriptors() {
  Outcome o;
  const auto a = author_stats(census::table4_corpus());
  for (std::size_t i = 0; i < AuthorStats::kBuckets; ++i) {
    if (a.per_record_counts[i] != census::table4_counts()[i]) {
      o.fail("bucket " + AuthorStats::bucket_label(i) + " = " + std::to_string(a.per_record_counts[i]));
    }
  }
  auto d = descriptor_stats(census::figure2_corpus());
  if (d.per_record_counts[6] != 18715) o.fail("k=6 records " + std::to_string(d.per_record_counts[6]));
  if (d.in_title[6] != 11911) o.fail("k=6 in title " + std::to_string(d.in_title[6]));
  if (d.in_description[6] != 13398) o.fail("k=6 in description " + std::to_string(d.in_description[6]));
  if (o.pass) o.detail = "11 author buckets exact; k=6: 18715/11911/13398";
  return o;
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = testing_support::read_file(e.path());
  return out;
}

Outcome ac8_scale() {
  Outcome o;
  testing_support::TempDir dir;
  std::mt19937_64 rng(8);
  {
    const auto corpus = oracle::random_corpus(rng, kScaleRecords, true, 26);
    testing_support::write_store(dir / "store", {corpus.records().begin(), corpus.records().end()});
  }
  std::ostringstream sink;
  double slowest = 0;
  for (const char* run : {"a", "b"}) {
    const auto t0 = Clock::now();
    const int code = cli::analyze(dir / "store", dir / run, report::Format::csv, sink, sink);
    const double secs = seconds_since(t0);
    slowest = std::max(slowest, secs);
    if (code != cli::kExitOk) o.fail(std::string("analyze run ") + run + " exited " + std::to_string(code));
    if (secs >= kAnalyzeSeconds) o.fail("analyze took " + std::to_string(secs) + " s");
  }
  const auto a = read_dir(dir / "a");
  const auto b = read_dir(dir / "b");
  if (a != b) o.fail("outputs differ between runs");
  if (a.size() < 9) o.fail("only " + std::to_string(a.size()) + " output files");
  if (o.pass) {
    o.detail = std::to_string(kScaleRecords) + " records, " + std::to_string(a.size()) + " files identical, slowest " +
               std::to_string(slowest).substr(0, 5) + " s";
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, Outcome (*)()>> criteria = {
      {"AC1 protocol totality", ac1_protocol_totality},
      {"AC2 fault tolerance", ac2_fault_tolerance},
      {"AC3 oracle equivalence", ac3_oracle},
      {"AC4 absolute completeness fixture", ac4_table1},
      {"AC5 language variant fixture", ac5_table2},
      {"AC6 normalization closure", ac6_closure},
      {"AC7 author and descriptor fixtures", ac7_authors_descriptors},
      {"AC8 determinism and scale", ac8_scale},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
