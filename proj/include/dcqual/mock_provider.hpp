#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dcqual/oai_protocol.hpp"
#include "dcqual/record_model.hpp"

// A small OAI-PMH data provider over a fixed fixture, with scripted faults.
namespace dcqual::mock {

struct FixtureRecord {
  RecordHeader header;
  DublinCoreRecord metadata;
};

struct Fixture {
  std::string repository_name = "Mock Repository";
  std::string protocol_version = "2.0";
  std::string admin_email = "admin@example.org";
  std::string earliest_datestamp = "2000-01-01T00:00:00Z";
  std::string granularity = "YYYY-MM-DDThh:mm:ssZ";
  std::string deleted_record = "transient";
  std::vector<oai::MetadataFormat> formats = {
      {"oai_dc", "http://www.openarchives.org/OAI/2.0/oai_dc.xsd",
       std::string(kOaiDcNamespace)},
  };
  std::vector<oai::SetInfo> sets;
  std::vector<FixtureRecord> records;
};

/// Throws IllegalArgument on schema violations.
Fixture fixture_from_json(const nlohmann::json& doc);
nlohmann::json fixture_to_json(const Fixture& fixture);
/// Throws IoError or IllegalArgument.
Fixture load_fixture(const std::filesystem::path& path);

enum class FaultKind {
  /// HTTP 503 with a Retry-After header.
  unavailable,
  /// HTTP 200 with a truncated XML body.
  malformed,
  /// badResumptionToken for a token that would otherwise be valid.
  expire,
};

struct Fault {
  FaultKind kind = FaultKind::unavailable;
  int retry_after_seconds = 1;
  /// How many matching requests the fault answers before it is spent.
  int times = 1;
  /// A 1-based list page (ListRecords/ListIdentifiers) or a verb.
  std::variant<std::size_t, oai::Verb> target = std::size_t{1};
};

/// Comma-separated `<kind>[:<retry-after>][*<times>]@<page|Verb>`, with kind
/// one of 503, malformed, expire. Example: "503:2@2,expire@3". Throws
/// IllegalArgument.
std::vector<Fault> parse_fault_script(std::string_view script);

struct MockResponse {
  int status = 200;
  std::string body;
  std::optional<int> retry_after;
  std::string content_type = "text/xml; charset=UTF-8";
};

struct MockOptions {
  std::size_t page_size = 100;
  std::vector<Fault> faults;
  /// Echoed as baseURL in Identify.
  std::string base_url = "http://127.0.0.1/oai";
};

/// Answers OAI-PMH requests from a fixture. Resumption tokens are stateless
/// ("page:<n>", plus any filter arguments); only fault counters change, under
/// a mutex, so concurrent calls are safe.
class MockProvider {
 public:
  using Query = std::multimap<std::string, std::string>;

  /// Throws IllegalArgument when page_size is 0.
  MockProvider(Fixture fixture, MockOptions options = {});

  MockResponse handle(const Query& query);

  const Fixture& fixture() const noexcept { return fixture_; }
  const MockOptions& options() const noexcept { return options_; }
  void set_base_url(std::string url) { options_.base_url = std::move(url); }

  std::size_t requests() const;
  std::size_t faults_fired() const;

 private:
  std::optional<MockResponse> take_fault(oai::Verb verb, std::optional<std::size_t> page);

  Fixture fixture_;
  MockOptions options_;
  mutable std::mutex mutex_;
  std::vector<int> remaining_;
  std::size_t requests_ = 0;
  std::size_t fired_ = 0;
};

/// Envelope helpers shared with tests.
std::string render_error(oai::ErrorCode code, std::string_view message,
                         const MockProvider::Query& query, std::string_view base_url);
std::string render_records(oai::Verb verb, std::span<const FixtureRecord* const> records,
                           const std::optional<oai::ResumptionToken>& token,
                           const MockProvider::Query& query, std::string_view base_url);

/// Serves a MockProvider over HTTP on `host`. Requests to any path are
/// answered, so the base URL is "http://host:port/oai".
class MockServer {
 public:
  /// Port 0 picks a free port. Throws BindError.
  MockServer(std::shared_ptr<MockProvider> provider, std::string host = "127.0.0.1", int port = 0);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  int port() const noexcept { return port_; }
  std::string base_url() const;
  MockProvider& provider() noexcept { return *provider_; }

  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::shared_ptr<MockProvider> provider_;
  std::string host_;
  int port_ = 0;
};

}  // namespace dcqual::mock
