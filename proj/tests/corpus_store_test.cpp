#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <random>

#include "dcqual/corpus_store.hpp"
#include "dcqual/errors.hpp"
#include "support.hpp"

using namespace dcqual;
using testing_support::make_record;
using testing_support::TempDir;

namespace fs = std::filesystem;

namespace {

std::vector<HarvestedRecord> three() {
  std::vector<HarvestedRecord> out;
  for (int i = 0; i < 3; ++i) {
    auto r = make_record("repo", "oai:r:" + std::to_string(i));
    r.metadata.add(DcElement::title, "Título " + std::to_string(i));
    out.push_back(r);
  }
  return out;
}

// Reference dedup: group by key, keep max (datestamp, harvested_at, input position).
std::vector<HarvestedRecord> dedup_oracle(const std::vector<HarvestedRecord>& in) {
  std::map<std::pair<std::string, std::string>, std::size_t> best;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const auto key = std::make_pair(in[i].repo_id, in[i].header.identifier);
    auto it = best.find(key);
    if (it == best.end()) {
      best[key] = i;
      continue;
    }
    const auto& cur = in[it->second];
    const auto a = std::make_tuple(in[i].header.datestamp, in[i].harvested_at);
    const auto b = std::make_tuple(cur.header.datestamp, cur.harvested_at);
    if (a >= b) it->second = i;
  }
  std::vector<HarvestedRecord> out;
  for (const auto& [key, idx] : best) out.push_back(in[idx]);
  return out;
}

}  // namespace

TEST(CorpusStore, AppendThreeToEmptyStore) {
  TempDir dir;
  EXPECT_EQ(append_page(dir.path(), "repo", three()), 3u);
  const auto c = load_corpus(dir.path());
  EXPECT_EQ(c.size(), 3u);
  EXPECT_EQ(c.records()[0], three()[0]);
}

TEST(CorpusStore, AppendTwiceDedupsAtLoad) {
  TempDir dir;
  append_page(dir.path(), "repo", three());
  append_page(dir.path(), "repo", three());
  const auto c = load_corpus(dir.path());
  EXPECT_EQ(c.size(), 3u);
  EXPECT_EQ(c.diagnostics.duplicates_dropped, 3u);
  EXPECT_EQ(load_manifest(dir.path()).repositories.at("repo").records_written, 6u);
}

TEST(CorpusStore, ReadOnlyPathIsIoError) {
  TempDir dir;
  std::ofstream(dir / "file") << "x";
  EXPECT_THROW(append_page(dir / "file" / "store", "repo", three()), IoError);
}

TEST(CorpusStore, TwoReposTwoGroups) {
  TempDir dir;
  auto a = three();
  std::vector<HarvestedRecord> b{make_record("other", "oai:o:1")};
  append_page(dir.path(), "repo", a);
  append_page(dir.path(), "other", b);
  const auto c = load_corpus(dir.path());
  ASSERT_EQ(c.repos().size(), 2u);
  EXPECT_EQ(c.repos()[0].repo_id, "other");
  EXPECT_EQ(c.repos()[1].repo_id, "repo");
  EXPECT_EQ(c.repo_records(c.repos()[1]).size(), 3u);
}

TEST(CorpusStore, CorruptLineReportedAndSkipped) {
  TempDir dir;
  std::vector<HarvestedRecord> recs;
  for (int i = 0; i < 10; ++i) recs.push_back(make_record("repo", "id" + std::to_string(i)));
  append_page(dir.path(), "repo", recs);
  const auto file = dir.path() / "records" / "repo.ndjson";
  std::vector<std::string> lines;
  {
    std::ifstream in(file);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
  }
  lines[4] = "{\"schema\":1, broken";
  {
    std::ofstream out(file, std::ios::trunc);
    for (const auto& l : lines) out << l << '\n';
  }
  const auto c = load_corpus(dir.path());
  EXPECT_EQ(c.size(), 9u);
  ASSERT_EQ(c.diagnostics.corrupt.size(), 1u);
  EXPECT_EQ(c.diagnostics.corrupt[0].line, 5u);
}

TEST(CorpusStore, EmptyStoreIsEmptyCorpus) {
  TempDir dir;
  { CorpusWriter w(dir.path()); }
  EXPECT_TRUE(load_corpus(dir.path()).empty());
  EXPECT_THROW(load_corpus(dir / "missing"), IoError);
}

TEST(CorpusStore, LaterDatestampWinsThenLaterHarvest) {
  TempDir dir;
  auto old_rec = make_record("r", "x", "2016-01-01", "2017-01-02T00:00:00.000Z");
  old_rec.metadata.add(DcElement::title, "old");
  auto new_rec = make_record("r", "x", "2017-01-01", "2017-01-01T00:00:00.000Z");
  new_rec.metadata.add(DcElement::title, "new");
  append_page(dir.path(), "r", std::vector{new_rec, old_rec});
  EXPECT_EQ(load_corpus(dir.path()).records()[0].metadata.values(DcElement::title)[0], "new");

  TempDir dir2;
  auto a = make_record("r", "x", "2017-01-01", "2017-02-01T00:00:00.000Z");
  a.metadata.add(DcElement::title, "later harvest");
  auto b = make_record("r", "x", "2017-01-01", "2017-01-01T00:00:00.000Z");
  b.metadata.add(DcElement::title, "earlier harvest");
  append_page(dir2.path(), "r", std::vector{a, b});
  EXPECT_EQ(load_corpus(dir2.path()).records()[0].metadata.values(DcElement::title)[0], "later harvest");
}

TEST(CorpusStore, LoadOfAppendEqualsDedupProperty) {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 25; ++round) {
    TempDir dir;
    std::vector<HarvestedRecord> all;
    const int batches = 1 + static_cast<int>(rng() % 4);
    for (int b = 0; b < batches; ++b) {
      for (const auto* repo : {"alpha", "beta/γ"}) {
        std::vector<HarvestedRecord> batch;
        for (int i = static_cast<int>(rng() % 12); i > 0; --i) {
          auto r = make_record(repo, "id" + std::to_string(rng() % 15), "2017-0" + std::to_string(1 + rng() % 3),
                               "2017-06-0" + std::to_string(1 + rng() % 3) + "T00:00:00.000Z");
          r.metadata.add(DcElement::title, "v" + std::to_string(rng() % 1000));
          batch.push_back(r);
        }
        append_page(dir.path(), repo, batch);
        all.insert(all.end(), batch.begin(), batch.end());
      }
    }
    const auto loaded = load_corpus(dir.path());
    const auto expected = dedup_oracle(all);
    ASSERT_EQ(loaded.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(loaded.records()[i], expected[i]);
    EXPECT_EQ(Corpus(all).size(), expected.size());
  }
}

TEST(CorpusStore, SecondWriterIsLockedOut) {
  TempDir dir;
  CorpusWriter first(dir.path());
  EXPECT_THROW(CorpusWriter second(dir.path()), IoError);
}

TEST(CorpusStore, ManifestKeepsHarvestSummary) {
  TempDir dir;
  {
    CorpusWriter w(dir.path());
    w.append_page("repo", three());
    oai::HarvestSummary s;
    s.pages = 2;
    s.records = 3;
    s.errors = {"x"};
    s.complete = true;
    w.record_harvest("repo", s);
  }
  const auto m = load_manifest(dir.path());
  const auto& e = m.repositories.at("repo");
  ASSERT_TRUE(e.last_harvest);
  EXPECT_EQ(e.last_harvest->pages, 2u);
  EXPECT_EQ(e.last_harvest->errors, std::vector<std::string>{"x"});
  EXPECT_FALSE(e.first_append.empty());
}

TEST(CorpusStore, RecordJsonSchema) {
  auto r = make_record("repo", "oai:x:1");
  r.metadata.add(DcElement::identifier, "http://x/1");
  const auto j = record_to_json(r);
  EXPECT_EQ(j.at("schema"), 1);
  EXPECT_EQ(j.at("metadata").at("identifier")[0], "http://x/1");
  EXPECT_EQ(record_from_json(j), r);
  auto bad = j;
  bad["schema"] = 2;
  EXPECT_THROW(record_from_json(bad), IllegalArgument);
  EXPECT_EQ(records_file_name("a b/c"), "a%20b%2Fc.ndjson");
}
