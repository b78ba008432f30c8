#include "dcqual/corpus_store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace dcqual {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

IoError io_error(const std::string& what, const fs::path& path) {
  return IoError(what + " '" + path.string() + "': " + std::strerror(errno));
}

bool better(const HarvestedRecord& cand, const HarvestedRecord& best) {
  if (cand.header.datestamp != best.header.datestamp) {
    return cand.header.datestamp > best.header.datestamp;
  }
  return cand.harvested_at >= best.harvested_at;
}

std::string dump_line(const json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

void write_all(int fd, std::string_view data, const fs::path& path) {
  while (!data.empty()) {
    const auto n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw io_error("cannot write", path);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::vector<std::string> string_list(const json& j, const char* key) {
  std::vector<std::string> out;
  const auto it = j.find(key);
  if (it == j.end()) return out;
  if (!it->is_array()) throw IllegalArgument(std::string("'") + key + "' must be an array");
  for (const auto& v : *it) {
    if (!v.is_string()) throw IllegalArgument(std::string("'") + key + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::string required_string(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw IllegalArgument(std::string("missing string field '") + key + "'");
  }
  return it->get<std::string>();
}

json manifest_to_json(const Manifest& m) {
  json repos = json::object();
  for (const auto& [id, r] : m.repositories) {
    json entry = {{"records_written", r.records_written},
                  {"first_append", r.first_append},
                  {"last_append", r.last_append}};
    if (r.last_harvest) entry["last_harvest"] = summary_to_json(*r.last_harvest);
    repos[id] = std::move(entry);
  }
  return {{"schema", kStoreSchemaVersion}, {"repositories", std::move(repos)}};
}

Manifest manifest_from_json(const json& j) {
  Manifest m;
  const auto repos = j.find("repositories");
  if (repos == j.end() || !repos->is_object()) return m;
  for (const auto& [id, entry] : repos->items()) {
    RepoManifest r;
    r.records_written = entry.value("records_written", std::uint64_t{0});
    r.first_append = entry.value("first_append", std::string());
    r.last_append = entry.value("last_append", std::string());
    if (entry.contains("last_harvest")) r.last_harvest = summary_from_json(entry["last_harvest"]);
    m.repositories[id] = std::move(r);
  }
  return m;
}

}  // namespace

Corpus::Corpus(std::vector<HarvestedRecord> records) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = records[a];
    const auto& rb = records[b];
    if (ra.repo_id != rb.repo_id) return ra.repo_id < rb.repo_id;
    return ra.header.identifier < rb.header.identifier;
  });

  records_.reserve(records.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t best = order[i];
    std::size_t j = i + 1;
    while (j < order.size() && records[order[j]].repo_id == records[best].repo_id &&
           records[order[j]].header.identifier == records[best].header.identifier) {
      if (better(records[order[j]], records[best])) best = order[j];
      ++j;
    }
    duplicates_dropped_ += j - i - 1;
    records_.push_back(std::move(records[best]));
    i = j;
  }

  for (std::size_t i = 0; i < records_.size();) {
    std::size_t j = i + 1;
    while (j < records_.size() && records_[j].repo_id == records_[i].repo_id) ++j;
    groups_.push_back({records_[i].repo_id, i, j});
    i = j;
  }
}

json record_to_json(const HarvestedRecord& record) {
  json metadata = json::object();
  for (auto e : kDcElements) {
    const auto& values = record.metadata.values(e);
    if (!values.empty()) metadata[std::string(element_name(e))] = values;
  }
  return {{"schema", kStoreSchemaVersion},
          {"repo_id", record.repo_id},
          {"identifier", record.header.identifier},
          {"datestamp", record.header.datestamp},
          {"set_specs", record.header.set_specs},
          {"harvested_at", record.harvested_at},
          {"metadata", std::move(metadata)}};
}

HarvestedRecord record_from_json(const json& doc) {
  if (!doc.is_object()) throw IllegalArgument("record is not a JSON object");
  const auto schema = doc.find("schema");
  if (schema == doc.end() || !schema->is_number_integer() ||
      schema->get<int>() != kStoreSchemaVersion) {
    throw IllegalArgument("unsupported or missing schema version");
  }
  HarvestedRecord r;
  r.repo_id = required_string(doc, "repo_id");
  r.header.identifier = required_string(doc, "identifier");
  if (r.repo_id.empty() || r.header.identifier.empty()) {
    throw IllegalArgument("empty repo_id or identifier");
  }
  r.header.datestamp = required_string(doc, "datestamp");
  r.header.set_specs = string_list(doc, "set_specs");
  r.harvested_at = required_string(doc, "harvested_at");
  const auto md = doc.find("metadata");
  if (md != doc.end()) {
    if (!md->is_object()) throw IllegalArgument("'metadata' must be an object");
    for (const auto& [key, value] : md->items()) {
      const auto e = element_from_name(key);
      if (!e || key == "identifier2") throw IllegalArgument("unknown metadata element '" + key + "'");
      r.metadata.set(*e, string_list(*md, key.c_str()));
    }
  }
  return r;
}

json summary_to_json(const oai::HarvestSummary& s) {
  return {{"pages", s.pages},         {"records", s.records},   {"deleted", s.deleted},
          {"duplicates", s.duplicates}, {"restarts", s.restarts}, {"errors", s.errors},
          {"complete", s.complete}};
}

oai::HarvestSummary summary_from_json(const json& doc) {
  oai::HarvestSummary s;
  s.pages = doc.value("pages", std::uint64_t{0});
  s.records = doc.value("records", std::uint64_t{0});
  s.deleted = doc.value("deleted", std::uint64_t{0});
  s.duplicates = doc.value("duplicates", std::uint64_t{0});
  s.restarts = doc.value("restarts", std::uint64_t{0});
  s.errors = doc.value("errors", std::vector<std::string>{});
  s.complete = doc.value("complete", false);
  return s;
}

std::string records_file_name(std::string_view repo_id) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : repo_id) {
    if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' ||
        c == '_' || c == '-') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0x0F]);
    }
  }
  // "." and ".." would escape the records directory.
  if (out == "." || out == "..") out = "%2E" + out.substr(1);
  return out + ".ndjson";
}

CorpusWriter::CorpusWriter(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_ / "records", ec);
  if (ec) throw IoError("cannot create store '" + root_.string() + "': " + ec.message());

  const auto lock_path = root_ / ".lock";
  lock_fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (lock_fd_ < 0) throw io_error("cannot open lock file", lock_path);
  if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(lock_fd_);
    lock_fd_ = -1;
    throw IoError("store '" + root_.string() + "' is locked by another writer");
  }
  try {
    manifest_ = load_manifest(root_);
  } catch (...) {
    ::close(lock_fd_);
    throw;
  }
}

CorpusWriter::~CorpusWriter() {
  if (lock_fd_ >= 0) ::close(lock_fd_);
}

std::size_t CorpusWriter::append_page(std::string_view repo_id,
                                      std::span<const HarvestedRecord> records) {
  std::string buffer;
  for (const auto& r : records) {
    if (r.repo_id != repo_id) {
      throw IllegalArgument("record '" + r.header.identifier + "' belongs to '" + r.repo_id +
                            "', not '" + std::string(repo_id) + "'");
    }
    if (r.header.identifier.empty()) throw IllegalArgument("record without identifier");
    buffer += dump_line(record_to_json(r));
    buffer += '\n';
  }

  std::lock_guard lock(mutex_);
  const auto path = root_ / "records" / records_file_name(repo_id);
  if (!buffer.empty()) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) throw io_error("cannot open", path);
    try {
      write_all(fd, buffer, path);
      if (::fsync(fd) != 0) throw io_error("cannot sync", path);
    } catch (...) {
      ::close(fd);
      throw;
    }
    ::close(fd);
  }

  auto& entry = manifest_.repositories[std::string(repo_id)];
  const auto now = utc_timestamp_now();
  if (entry.first_append.empty()) entry.first_append = now;
  entry.last_append = now;
  entry.records_written += records.size();
  write_manifest();
  return records.size();
}

void CorpusWriter::record_harvest(std::string_view repo_id, const oai::HarvestSummary& summary) {
  std::lock_guard lock(mutex_);
  manifest_.repositories[std::string(repo_id)].last_harvest = summary;
  write_manifest();
}

void CorpusWriter::write_manifest() {
  const auto path = root_ / "manifest.json";
  const auto tmp = root_ / "manifest.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << manifest_to_json(manifest_).dump(2) << '\n';
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot replace '" + path.string() + "': " + ec.message());
}

std::size_t append_page(const fs::path& store, std::string_view repo_id,
                        std::span<const HarvestedRecord> records) {
  CorpusWriter writer(store);
  return writer.append_page(repo_id, records);
}

Manifest load_manifest(const fs::path& store) {
  const auto path = store / "manifest.json";
  std::error_code ec;
  if (!fs::exists(path, ec)) return {};
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  try {
    return manifest_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw IoError("corrupt manifest '" + path.string() + "': " + e.what());
  }
}

Corpus load_corpus(const fs::path& store) {
  std::error_code ec;
  if (!fs::is_directory(store, ec)) throw IoError("store '" + store.string() + "' does not exist");

  std::vector<fs::path> files;
  const auto dir = store / "records";
  if (fs::is_directory(dir, ec)) {
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
      if (entry.is_regular_file() && entry.path().extension() == ".ndjson") {
        files.push_back(entry.path());
      }
    }
    if (ec) throw IoError("cannot list '" + dir.string() + "': " + ec.message());
  }
  std::sort(files.begin(), files.end());

  LoadDiagnostics diag;
  std::vector<HarvestedRecord> records;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot read '" + file.string() + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      ++diag.lines_read;
      try {
        records.push_back(record_from_json(json::parse(line)));
      } catch (const json::exception& e) {
        diag.corrupt.push_back({file.filename().string(), line_no, e.what()});
      } catch (const IllegalArgument& e) {
        diag.corrupt.push_back({file.filename().string(), line_no, e.what()});
      }
    }
    if (in.bad()) throw IoError("error reading '" + file.string() + "'");
  }

  Corpus corpus(std::move(records));
  diag.duplicates_dropped = corpus.duplicates_dropped();
  corpus.diagnostics = std::move(diag);
  corpus.manifest = load_manifest(store);
  return corpus;
}

}  // namespace dcqual
