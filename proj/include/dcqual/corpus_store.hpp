#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dcqual/oai_protocol.hpp"
#include "dcqual/record_model.hpp"

// On-disk corpus: <root>/records/<repo_id>.ndjson plus <root>/manifest.json.
namespace dcqual {

inline constexpr int kStoreSchemaVersion = 1;

struct RepoManifest {
  std::uint64_t records_written = 0;
  std::string first_append;
  std::string last_append;
  std::optional<oai::HarvestSummary> last_harvest;
};

struct Manifest {
  std::map<std::string, RepoManifest> repositories;
};

struct CorruptLine {
  std::string file;
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct LoadDiagnostics {
  std::size_t lines_read = 0;
  std::size_t duplicates_dropped = 0;
  std::vector<CorruptLine> corrupt;
};

struct RepoGroup {
  std::string repo_id;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
};

/// Deduplicated records ordered by (repo_id, identifier). On key conflicts
/// the later datestamp wins, then the later harvested_at, then the record
/// that came last in the input.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<HarvestedRecord> records);

  std::span<const HarvestedRecord> records() const noexcept { return records_; }
  const std::vector<RepoGroup>& repos() const noexcept { return groups_; }
  std::span<const HarvestedRecord> repo_records(const RepoGroup& g) const noexcept {
    return std::span<const HarvestedRecord>(records_).subspan(g.begin, g.size());
  }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  /// Key conflicts resolved by the constructor.
  std::size_t duplicates_dropped() const noexcept { return duplicates_dropped_; }

  Manifest manifest;
  LoadDiagnostics diagnostics;

 private:
  std::vector<HarvestedRecord> records_;
  std::vector<RepoGroup> groups_;
  std::size_t duplicates_dropped_ = 0;
};

nlohmann::json record_to_json(const HarvestedRecord& record);
/// Throws IllegalArgument when the document does not follow the schema.
HarvestedRecord record_from_json(const nlohmann::json& doc);

nlohmann::json summary_to_json(const oai::HarvestSummary& s);
oai::HarvestSummary summary_from_json(const nlohmann::json& doc);

/// File name for a repository's record file; characters outside
/// [A-Za-z0-9._-] are percent-encoded.
std::string records_file_name(std::string_view repo_id);

/// Exclusive writer for one store. Holds an advisory lock on <root>/.lock for
/// its lifetime; a second writer fails with IoError. Methods are thread-safe.
class CorpusWriter {
 public:
  /// Creates the store layout if needed. Throws IoError.
  explicit CorpusWriter(std::filesystem::path root);
  ~CorpusWriter();
  CorpusWriter(const CorpusWriter&) = delete;
  CorpusWriter& operator=(const CorpusWriter&) = delete;

  /// Appends in order and fsyncs, then rewrites the manifest. Every record's
  /// repo_id must equal `repo_id`. Returns the number written.
  std::size_t append_page(std::string_view repo_id, std::span<const HarvestedRecord> records);

  void record_harvest(std::string_view repo_id, const oai::HarvestSummary& summary);

  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  void write_manifest();

  std::filesystem::path root_;
  int lock_fd_ = -1;
  std::mutex mutex_;
  Manifest manifest_;
};

/// One-shot append with its own writer.
std::size_t append_page(const std::filesystem::path& store, std::string_view repo_id,
                        std::span<const HarvestedRecord> records);

/// Reads every record file. Corrupt lines are skipped and listed in
/// diagnostics. Throws IoError when the store root is missing or unreadable.
Corpus load_corpus(const std::filesystem::path& store);

Manifest load_manifest(const std::filesystem::path& store);

}  // namespace dcqual
