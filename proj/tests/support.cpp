#include "support.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <sstream>

namespace testing_support {

namespace fs = std::filesystem;
using namespace dcqual;

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("dcqual-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

HarvestedRecord make_record(std::string repo, std::string id, std::string datestamp, std::string harvested_at) {
  HarvestedRecord r;
  r.repo_id = std::move(repo);
  r.header.identifier = std::move(id);
  r.header.datestamp = std::move(datestamp);
  r.header.set_specs = {"set1"};
  r.harvested_at = std::move(harvested_at);
  return r;
}

std::string percent_decode(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      out += static_cast<char>(std::stoi(s.substr(i + 1, 2), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

oai::HttpResponse InProcessTransport::get(const std::string& url, const oai::RequestOptions&) {
  mock::MockProvider::Query query;
  const auto q = url.find('?');
  if (q != std::string::npos) {
    std::stringstream ss(url.substr(q + 1));
    std::string pair;
    while (std::getline(ss, pair, '&')) {
      const auto eq = pair.find('=');
      query.emplace(percent_decode(pair.substr(0, eq)),
                    eq == std::string::npos ? "" : percent_decode(pair.substr(eq + 1)));
    }
  }
  auto answer = provider_->handle(query);
  oai::HttpResponse r;
  r.status = answer.status;
  r.body = std::move(answer.body);
  if (answer.retry_after) r.retry_after = std::to_string(*answer.retry_after);
  return r;
}

mock::Fixture random_fixture(std::size_t n, std::size_t deleted, std::mt19937_64& rng) {
  mock::Fixture f;
  f.repository_name = "Random Fixture";
  std::vector<bool> is_deleted(n + deleted, false);
  std::fill(is_deleted.begin(), is_deleted.begin() + static_cast<std::ptrdiff_t>(deleted), true);
  std::shuffle(is_deleted.begin(), is_deleted.end(), rng);
  std::uniform_int_distribution<int> words(0, 3);
  for (std::size_t i = 0; i < is_deleted.size(); ++i) {
    mock::FixtureRecord r;
    r.header.identifier = "oai:random:" + std::to_string(rng() % 1000000) + ":" + std::to_string(i);
    r.header.datestamp = "2017-0" + std::to_string(1 + i % 9) + "-01T00:00:00Z";
    r.header.set_specs = {"col_" + std::to_string(i % 3)};
    r.header.deleted = is_deleted[i];
    if (!r.header.deleted) {
      r.metadata.add(DcElement::title, "Título <" + std::to_string(i) + "> & más");
      for (int w = words(rng); w > 0; --w) r.metadata.add(DcElement::subject, "tema " + std::to_string(w));
      r.metadata.add(DcElement::language, i % 2 ? "spa" : "es");
    }
    f.records.push_back(std::move(r));
  }
  return f;
}

void write_store(const fs::path& root, const std::vector<HarvestedRecord>& records) {
  CorpusWriter writer(root);
  std::map<std::string, std::vector<HarvestedRecord>> by_repo;
  for (const auto& r : records) by_repo[r.repo_id].push_back(r);
  for (const auto& [repo, recs] : by_repo) writer.append_page(repo, recs);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testing_support
