#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "dcqual/corpus_store.hpp"
#include "dcqual/http_transport.hpp"
#include "dcqual/mock_provider.hpp"
#include "dcqual/record_model.hpp"

namespace testing_support {

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

dcqual::HarvestedRecord make_record(std::string repo, std::string id, std::string datestamp = "2017-01-01",
                                    std::string harvested_at = "2017-06-01T00:00:00.000Z");

/// Routes requests straight into a MockProvider, no sockets involved.
class InProcessTransport : public dcqual::oai::HttpTransport {
 public:
  explicit InProcessTransport(std::shared_ptr<dcqual::mock::MockProvider> provider)
      : provider_(std::move(provider)) {}
  dcqual::oai::HttpResponse get(const std::string& url, const dcqual::oai::RequestOptions& options) override;

 private:
  std::shared_ptr<dcqual::mock::MockProvider> provider_;
};

/// Reverses RFC 3986 percent-encoding.
std::string percent_decode(const std::string& s);

/// `n` live records plus `deleted` deleted ones interleaved at random.
dcqual::mock::Fixture random_fixture(std::size_t n, std::size_t deleted, std::mt19937_64& rng);

/// Writes a corpus of records through CorpusWriter.
void write_store(const std::filesystem::path& root, const std::vector<dcqual::HarvestedRecord>& records);

std::string read_file(const std::filesystem::path& path);

}  // namespace testing_support
