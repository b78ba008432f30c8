#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dcqual/errors.hpp"
#include "dcqual/http_transport.hpp"
#include "dcqual/record_model.hpp"

// OAI-PMH 2.0 harvesting client.
namespace dcqual::oai {

inline constexpr std::string_view kOaiNamespace = "http://www.openarchives.org/OAI/2.0/";

enum class Verb : std::uint8_t {
  Identify,
  ListMetadataFormats,
  ListSets,
  ListIdentifiers,
  ListRecords,
  GetRecord,
};

inline constexpr std::array<Verb, 6> kVerbs = {
    Verb::Identify,        Verb::ListMetadataFormats, Verb::ListSets,
    Verb::ListIdentifiers, Verb::ListRecords,         Verb::GetRecord,
};

std::string_view verb_name(Verb v) noexcept;
std::optional<Verb> verb_from_name(std::string_view name) noexcept;

/// An absolute http(s) URL split into the parts the transport needs.
struct Url {
  std::string scheme;
  std::string host;
  int port = 0;
  /// Path plus any query the base URL already carries; never empty.
  std::string path;

  /// Throws IllegalArgument unless `text` is an absolute http or https URL.
  static Url parse(std::string_view text);
  /// "scheme://host:port"
  std::string origin() const;
};

/// A repository to harvest. The constructor enforces the invariants: an
/// absolute http(s) base URL and a non-empty repo_id without whitespace.
class Endpoint {
 public:
  Endpoint(std::string repo_id, std::string base_url);

  const std::string& repo_id() const noexcept { return repo_id_; }
  const std::string& base_url() const noexcept { return base_url_; }

 private:
  std::string repo_id_;
  std::string base_url_;
};

struct ResumptionToken {
  std::string token;
  std::optional<std::uint64_t> complete_list_size;
  std::optional<std::uint64_t> cursor;

  /// An empty token ends the list.
  bool list_complete() const noexcept { return token.empty(); }
};

enum class ErrorCode : std::uint8_t {
  badArgument,
  badResumptionToken,
  badVerb,
  cannotDisseminateFormat,
  idDoesNotExist,
  noRecordsMatch,
  noMetadataFormats,
  noSetHierarchy,
};

std::string_view error_code_name(ErrorCode c) noexcept;
std::optional<ErrorCode> error_code_from_name(std::string_view name) noexcept;

/// An `<error>` answer from a data provider.
struct OaiProtocolError {
  ErrorCode code;
  std::string message;
};

/// Thrown where a protocol error answer cannot be returned as a value.
class ProtocolFailure : public Error {
 public:
  explicit ProtocolFailure(OaiProtocolError e)
      : Error(std::string(error_code_name(e.code)) + (e.message.empty() ? "" : ": " + e.message)),
        error_(std::move(e)) {}
  const OaiProtocolError& error() const noexcept { return error_; }

 private:
  OaiProtocolError error_;
};

struct RepositoryIdentity {
  std::string repository_name;
  std::string base_url;
  std::string protocol_version;
  std::string earliest_datestamp;
  std::string granularity;
  std::vector<std::string> admin_emails;
  std::string deleted_record_policy;
};

/// Retry and pacing knobs for one harvesting task.
struct FetchPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_backoff{500};
  std::chrono::milliseconds timeout{30000};
  std::chrono::milliseconds polite_delay{0};

  /// base_backoff * 2^attempt, attempt counted from 0.
  std::chrono::milliseconds backoff(int attempt) const noexcept;
};

struct OaiRecord {
  RecordHeader header;
  DublinCoreRecord metadata;
  /// False for header-only answers (ListIdentifiers, deleted records).
  bool has_metadata = false;
  ParseDiagnostics diagnostics;
};

struct RecordsPage {
  std::vector<OaiRecord> records;
  std::optional<ResumptionToken> token;
};

struct SetInfo {
  std::string spec;
  std::string name;
};

struct SetList {
  std::vector<SetInfo> sets;
  std::optional<ResumptionToken> token;
};

struct MetadataFormat {
  std::string prefix;
  std::string schema;
  std::string metadata_namespace;
};

struct FormatList {
  std::vector<MetadataFormat> formats;
};

using Response = std::variant<RecordsPage, RepositoryIdentity, SetList, FormatList, OaiProtocolError>;

using Params = std::map<std::string, std::string>;

/// RFC 3986 percent-encoding; only unreserved characters pass through.
std::string percent_encode(std::string_view s);

/// Request URL: base + "?verb=<Verb>" + remaining params in key order.
/// Throws IllegalArgument for keys the verb does not accept, a missing
/// required key, or resumptionToken combined with anything else.
std::string build_request(const Endpoint& endpoint, Verb verb, const Params& params);

/// Parses a response payload. Throws MalformedXml, NotOaiPmh or MissingElement.
Response parse_response(std::string_view body);

/// "dcqual/<version> (+contact)"
std::string user_agent(std::string_view contact);

struct VerificationResult {
  bool alive = false;
  bool supports_oai_dc = false;
  std::string detail;

  bool usable() const noexcept { return alive && supports_oai_dc; }
};

/// Optional selective-harvest arguments; the standard pipeline leaves them unset.
struct HarvestFilter {
  std::optional<std::string> from;
  std::optional<std::string> until;
  std::optional<std::string> set;
};

struct HarvestSummary {
  std::uint64_t pages = 0;
  std::uint64_t records = 0;
  std::uint64_t deleted = 0;
  /// Records whose identifier had already been delivered in this harvest.
  std::uint64_t duplicates = 0;
  /// Full-list restarts after badResumptionToken.
  std::uint64_t restarts = 0;
  std::vector<std::string> errors;
  /// False when the list was abandoned before its last page.
  bool complete = false;
};

using RecordSink = std::function<void(OaiRecord&&)>;

/// Stateless apart from its transport; not safe for concurrent use. Use one
/// client per harvesting task.
class Client {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit Client(FetchPolicy policy = {}, std::unique_ptr<HttpTransport> transport = nullptr,
                  std::string contact = {});

  const FetchPolicy& policy() const noexcept { return policy_; }

  /// Replaces the function used for backoff and polite delays (tests).
  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

  /// One request with the retry policy applied. Throws NetworkError or a
  /// ResponseError subclass; protocol errors are returned as values.
  Response request(const Endpoint& endpoint, Verb verb, const Params& params);

  /// Throws NetworkError, NotOaiPmh (and the other ResponseErrors),
  /// ProtocolFailure, or UnsupportedVersion unless protocolVersion is "2.0".
  RepositoryIdentity identify(const Endpoint& endpoint);

  std::vector<MetadataFormat> list_metadata_formats(const Endpoint& endpoint);

  /// Never throws for an unreachable or broken endpoint.
  VerificationResult verify_endpoint(const Endpoint& endpoint);

  /// Harvests a whole ListRecords sequence. Live records reach `sink` in
  /// arrival order, each identifier at most once; deleted records are only
  /// counted. Transport and parse failures end the harvest and are reported
  /// in the summary rather than thrown. `page_done`, when set, runs after
  /// each page's records have been delivered.
  HarvestSummary harvest_list_records(const Endpoint& endpoint, std::string_view metadata_prefix,
                                      const RecordSink& sink, const HarvestFilter& filter = {},
                                      const std::function<void()>& page_done = {});

 private:
  Response fetch(const std::string& url);

  FetchPolicy policy_;
  std::unique_ptr<HttpTransport> transport_;
  std::string user_agent_;
  Sleeper sleeper_;
};

RepositoryIdentity identify(const Endpoint& endpoint, const FetchPolicy& policy);
VerificationResult verify_endpoint(const Endpoint& endpoint, const FetchPolicy& policy);
HarvestSummary harvest_list_records(const Endpoint& endpoint, std::string_view metadata_prefix,
                                    const FetchPolicy& policy, const RecordSink& sink);

}  // namespace dcqual::oai
