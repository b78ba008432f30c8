#include "dcqual/oai_protocol.hpp"

#include <algorithm>
#include <charconv>
#include <ctime>
#include <thread>
#include <unordered_set>

#include "dcqual/text.hpp"

namespace dcqual::oai {

namespace {

constexpr std::array<std::string_view, 6> kVerbNames = {
    "Identify", "ListMetadataFormats", "ListSets", "ListIdentifiers", "ListRecords", "GetRecord",
};

constexpr std::array<std::string_view, 8> kErrorNames = {
    "badArgument",    "badResumptionToken", "badVerb",           "cannotDisseminateFormat",
    "idDoesNotExist", "noRecordsMatch",     "noMetadataFormats", "noSetHierarchy",
};

struct VerbArguments {
  std::vector<std::string_view> allowed;
  std::vector<std::string_view> required;
  bool exclusive_token = false;
};

VerbArguments arguments_for(Verb v) {
  switch (v) {
    case Verb::Identify:
      return {};
    case Verb::ListMetadataFormats:
      return {{"identifier"}, {}, false};
    case Verb::ListSets:
      return {{"resumptionToken"}, {}, true};
    case Verb::ListIdentifiers:
    case Verb::ListRecords:
      return {{"from", "metadataPrefix", "resumptionToken", "set", "until"}, {"metadataPrefix"}, true};
    case Verb::GetRecord:
      return {{"identifier", "metadataPrefix"}, {"identifier", "metadataPrefix"}, false};
  }
  return {};
}

std::string trimmed(std::string_view s) { return std::string(text::trim(s)); }

std::optional<std::uint64_t> parse_uint(std::string_view s) {
  s = text::trim(s);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::string child_text(const xml::Element& el, std::string_view name) {
  const auto* c = el.child(kOaiNamespace, name);
  return c ? trimmed(c->all_text()) : std::string();
}

std::string required_text(const xml::Element& el, std::string_view name) {
  const auto* c = el.child(kOaiNamespace, name);
  if (!c) throw MissingElement("<" + el.local + "> has no <" + std::string(name) + ">");
  return trimmed(c->all_text());
}

std::optional<ResumptionToken> parse_token(const xml::Element& list) {
  const auto* el = list.child(kOaiNamespace, "resumptionToken");
  if (!el) return std::nullopt;
  ResumptionToken token;
  token.token = trimmed(el->all_text());
  if (auto v = el->attribute("completeListSize")) token.complete_list_size = parse_uint(*v);
  if (auto v = el->attribute("cursor")) token.cursor = parse_uint(*v);
  return token;
}

RecordHeader parse_header(const xml::Element& header) {
  RecordHeader h;
  h.identifier = required_text(header, "identifier");
  if (h.identifier.empty()) throw MissingElement("<header> has an empty <identifier>");
  h.datestamp = child_text(header, "datestamp");
  for (const auto* s : header.children_named(kOaiNamespace, "setSpec")) {
    h.set_specs.push_back(trimmed(s->all_text()));
  }
  if (auto status = header.attribute("status")) h.deleted = (*status == "deleted");
  return h;
}

OaiRecord parse_record(const xml::Element& record) {
  const auto* header = record.child(kOaiNamespace, "header");
  if (!header) throw MissingElement("<record> has no <header>");
  OaiRecord out;
  out.header = parse_header(*header);
  if (const auto* metadata = record.child(kOaiNamespace, "metadata")) {
    out.has_metadata = true;
    if (!metadata->children.empty()) {
      out.metadata = parse_dc(metadata->children.front(), &out.diagnostics);
    }
  }
  return out;
}

bool looks_like_html(std::string_view body) {
  auto head = text::ascii_lower(text::trim(body).substr(0, 512));
  return head.find("<html") != std::string::npos || head.find("<!doctype html") != std::string::npos;
}

std::optional<std::chrono::milliseconds> parse_retry_after(std::string_view value) {
  value = text::trim(value);
  if (auto secs = parse_uint(value)) return std::chrono::seconds(*secs);
  std::tm tm{};
  const std::string copy(value);
  if (strptime(copy.c_str(), "%a, %d %b %Y %H:%M:%S GMT", &tm) == nullptr) return std::nullopt;
  const auto when = std::chrono::system_clock::from_time_t(timegm(&tm));
  const auto delta = when - std::chrono::system_clock::now();
  if (delta <= std::chrono::system_clock::duration::zero()) return std::chrono::milliseconds(0);
  return std::chrono::duration_cast<std::chrono::milliseconds>(delta);
}

}  // namespace

std::string_view verb_name(Verb v) noexcept { return kVerbNames[static_cast<std::size_t>(v)]; }

std::optional<Verb> verb_from_name(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kVerbNames.size(); ++i) {
    if (kVerbNames[i] == name) return static_cast<Verb>(i);
  }
  return std::nullopt;
}

std::string_view error_code_name(ErrorCode c) noexcept {
  return kErrorNames[static_cast<std::size_t>(c)];
}

std::optional<ErrorCode> error_code_from_name(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kErrorNames.size(); ++i) {
    if (kErrorNames[i] == name) return static_cast<ErrorCode>(i);
  }
  return std::nullopt;
}

Url Url::parse(std::string_view text) {
  const auto bad = [&](const char* why) {
    return IllegalArgument("invalid URL '" + std::string(text) + "': " + why);
  };
  const auto sep = text.find("://");
  if (sep == std::string_view::npos) throw bad("not absolute");
  Url url;
  url.scheme = text::ascii_lower(text.substr(0, sep));
  if (url.scheme != "http" && url.scheme != "https") throw bad("scheme must be http or https");

  auto rest = text.substr(sep + 3);
  if (const auto hash = rest.find('#'); hash != std::string_view::npos) rest = rest.substr(0, hash);
  const auto path_start = rest.find_first_of("/?");
  auto authority = rest.substr(0, path_start);
  std::string path = path_start == std::string_view::npos ? "/" : std::string(rest.substr(path_start));
  if (path.front() == '?') path.insert(path.begin(), '/');
  if (authority.find('@') != std::string_view::npos) throw bad("user info is not supported");

  std::string_view port_text;
  if (!authority.empty() && authority.front() == '[') {
    const auto close = authority.find(']');
    if (close == std::string_view::npos) throw bad("unterminated IPv6 literal");
    url.host = std::string(authority.substr(0, close + 1));
    if (close + 1 < authority.size()) {
      if (authority[close + 1] != ':') throw bad("junk after IPv6 literal");
      port_text = authority.substr(close + 2);
    }
  } else {
    const auto colon = authority.rfind(':');
    url.host = std::string(authority.substr(0, colon));
    if (colon != std::string_view::npos) port_text = authority.substr(colon + 1);
  }
  if (url.host.empty()) throw bad("empty host");
  for (char c : url.host) {
    if (text::is_space(c)) throw bad("whitespace in host");
  }
  if (!port_text.empty()) {
    auto port = parse_uint(port_text);
    if (!port || *port == 0 || *port > 65535) throw bad("invalid port");
    url.port = static_cast<int>(*port);
  } else {
    url.port = url.scheme == "https" ? 443 : 80;
  }
  url.path = std::move(path);
  return url;
}

std::string Url::origin() const { return scheme + "://" + host + ":" + std::to_string(port); }

Endpoint::Endpoint(std::string repo_id, std::string base_url)
    : repo_id_(std::move(repo_id)), base_url_(std::move(base_url)) {
  if (repo_id_.empty()) throw IllegalArgument("repo_id must not be empty");
  for (char c : repo_id_) {
    if (text::is_space(c)) throw IllegalArgument("repo_id '" + repo_id_ + "' contains whitespace");
  }
  Url::parse(base_url_);
}

std::chrono::milliseconds FetchPolicy::backoff(int attempt) const noexcept {
  const int shift = std::clamp(attempt, 0, 30);
  return base_backoff * (std::int64_t{1} << shift);
}

std::string percent_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    const bool unreserved = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                            (c >= '0' && c <= '9') || c == '-' || c == '.' || c == '_' || c == '~';
    if (unreserved) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0x0F]);
    }
  }
  return out;
}

std::string build_request(const Endpoint& endpoint, Verb verb, const Params& params) {
  const auto args = arguments_for(verb);
  for (const auto& [key, value] : params) {
    if (key == "verb") throw IllegalArgument("'verb' is set by the verb argument");
    if (std::find(args.allowed.begin(), args.allowed.end(), key) == args.allowed.end()) {
      throw IllegalArgument("argument '" + key + "' is not legal for " +
                            std::string(verb_name(verb)));
    }
  }
  const bool has_token = params.count("resumptionToken") > 0;
  if (has_token && args.exclusive_token && params.size() > 1) {
    throw IllegalArgument("resumptionToken must be the only argument besides verb");
  }
  if (!has_token) {
    for (auto key : args.required) {
      if (!params.count(std::string(key))) {
        throw IllegalArgument(std::string(verb_name(verb)) + " requires '" + std::string(key) + "'");
      }
    }
  }

  const auto& base = endpoint.base_url();
  std::string url = base;
  url += base.find('?') == std::string::npos ? '?' : '&';
  url += "verb=";
  url += verb_name(verb);
  for (const auto& [key, value] : params) {
    url += '&';
    url += key;
    url += '=';
    url += percent_encode(value);
  }
  return url;
}

Response parse_response(std::string_view body) {
  xml::Element root;
  try {
    root = xml::parse_expecting_root(body, kOaiNamespace, "OAI-PMH");
  } catch (const xml::UnexpectedRoot& e) {
    throw NotOaiPmh("root element is {" + e.ns() + "}" + e.local() + ", not OAI-PMH");
  } catch (const MalformedXml& e) {
    if (looks_like_html(body)) throw NotOaiPmh("response is an HTML page");
    throw;
  }

  if (const auto* err = root.child(kOaiNamespace, "error")) {
    const auto code_name = err->attribute("code");
    if (!code_name) throw MalformedXml("<error> without a code attribute");
    const auto code = error_code_from_name(*code_name);
    if (!code) throw MalformedXml("unknown OAI-PMH error code '" + std::string(*code_name) + "'");
    return OaiProtocolError{*code, trimmed(err->all_text())};
  }

  const xml::Element* payload = nullptr;
  Verb verb{};
  for (const auto& child : root.children) {
    if (child.ns != kOaiNamespace) continue;
    if (auto v = verb_from_name(child.local)) {
      payload = &child;
      verb = *v;
      break;
    }
  }
  if (!payload) throw MissingElement("OAI-PMH response has neither an error nor a verb element");

  switch (verb) {
    case Verb::Identify: {
      RepositoryIdentity id;
      id.repository_name = required_text(*payload, "repositoryName");
      id.protocol_version = required_text(*payload, "protocolVersion");
      id.base_url = child_text(*payload, "baseURL");
      id.earliest_datestamp = child_text(*payload, "earliestDatestamp");
      id.granularity = child_text(*payload, "granularity");
      id.deleted_record_policy = child_text(*payload, "deletedRecord");
      for (const auto* e : payload->children_named(kOaiNamespace, "adminEmail")) {
        id.admin_emails.push_back(trimmed(e->all_text()));
      }
      return id;
    }
    case Verb::ListMetadataFormats: {
      FormatList list;
      for (const auto* f : payload->children_named(kOaiNamespace, "metadataFormat")) {
        list.formats.push_back({required_text(*f, "metadataPrefix"), child_text(*f, "schema"),
                                child_text(*f, "metadataNamespace")});
      }
      return list;
    }
    case Verb::ListSets: {
      SetList list;
      for (const auto* s : payload->children_named(kOaiNamespace, "set")) {
        list.sets.push_back({required_text(*s, "setSpec"), child_text(*s, "setName")});
      }
      list.token = parse_token(*payload);
      return list;
    }
    case Verb::ListIdentifiers: {
      RecordsPage page;
      for (const auto* h : payload->children_named(kOaiNamespace, "header")) {
        OaiRecord r;
        r.header = parse_header(*h);
        page.records.push_back(std::move(r));
      }
      page.token = parse_token(*payload);
      return page;
    }
    case Verb::ListRecords: {
      RecordsPage page;
      for (const auto* r : payload->children_named(kOaiNamespace, "record")) {
        page.records.push_back(parse_record(*r));
      }
      page.token = parse_token(*payload);
      return page;
    }
    case Verb::GetRecord: {
      const auto* r = payload->child(kOaiNamespace, "record");
      if (!r) throw MissingElement("<GetRecord> has no <record>");
      RecordsPage page;
      page.records.push_back(parse_record(*r));
      return page;
    }
  }
  throw MissingElement("unhandled verb");
}

std::string user_agent(std::string_view contact) {
  std::string ua = "dcqual/" DCQUAL_VERSION;
  if (!contact.empty()) {
    ua += " (+";
    ua += contact;
    ua += ')';
  }
  return ua;
}

Client::Client(FetchPolicy policy, std::unique_ptr<HttpTransport> transport, std::string contact)
    : policy_(policy),
      transport_(transport ? std::move(transport) : make_http_transport()),
      user_agent_(user_agent(contact)),
      sleeper_([](std::chrono::milliseconds d) {
        if (d.count() > 0) std::this_thread::sleep_for(d);
      }) {
  if (policy_.max_retries < 0) throw IllegalArgument("max_retries must be >= 0");
}

Response Client::fetch(const std::string& url) {
  const RequestOptions options{policy_.timeout, user_agent_};
  for (int attempt = 0;; ++attempt) {
    const bool last = attempt >= policy_.max_retries;
    std::optional<std::chrono::milliseconds> wait;
    try {
      HttpResponse resp = transport_->get(url, options);
      if (resp.status >= 200 && resp.status < 300) {
        try {
          return parse_response(resp.body);
        } catch (const MalformedXml&) {
          // Truncated bodies are usually transient; other ResponseErrors are not.
          if (last) throw;
        }
      } else if (resp.status >= 500) {
        if (last) {
          throw NetworkError("HTTP " + std::to_string(resp.status) + " from " + url + " after " +
                             std::to_string(attempt + 1) + " attempt(s)");
        }
        if (resp.status == 503 && resp.retry_after) wait = parse_retry_after(*resp.retry_after);
      } else {
        try {
          return parse_response(resp.body);
        } catch (const ResponseError&) {
        }
        throw NetworkError("HTTP " + std::to_string(resp.status) + " from " + url);
      }
    } catch (const TransportFailure& e) {
      if (last) {
        throw NetworkError(std::string(e.what()) + " (after " + std::to_string(attempt + 1) +
                           " attempt(s))");
      }
    }
    sleeper_(wait.value_or(policy_.backoff(attempt)));
  }
}

Response Client::request(const Endpoint& endpoint, Verb verb, const Params& params) {
  return fetch(build_request(endpoint, verb, params));
}

RepositoryIdentity Client::identify(const Endpoint& endpoint) {
  Response r = request(endpoint, Verb::Identify, {});
  if (auto* err = std::get_if<OaiProtocolError>(&r)) throw ProtocolFailure(std::move(*err));
  auto* id = std::get_if<RepositoryIdentity>(&r);
  if (!id) throw MissingElement("Identify answered without an <Identify> element");
  if (id->protocol_version != "2.0") {
    throw UnsupportedVersion("repository speaks OAI-PMH " + id->protocol_version + ", need 2.0");
  }
  return std::move(*id);
}

std::vector<MetadataFormat> Client::list_metadata_formats(const Endpoint& endpoint) {
  Response r = request(endpoint, Verb::ListMetadataFormats, {});
  if (auto* err = std::get_if<OaiProtocolError>(&r)) {
    if (err->code == ErrorCode::noMetadataFormats) return {};
    throw ProtocolFailure(std::move(*err));
  }
  auto* list = std::get_if<FormatList>(&r);
  if (!list) throw MissingElement("ListMetadataFormats answered without a format list");
  return std::move(list->formats);
}

VerificationResult Client::verify_endpoint(const Endpoint& endpoint) {
  VerificationResult result;
  try {
    const auto id = identify(endpoint);
    result.alive = true;
    result.detail = id.repository_name;
  } catch (const Error& e) {
    result.detail = e.what();
    return result;
  }
  try {
    for (const auto& f : list_metadata_formats(endpoint)) {
      if (f.prefix == "oai_dc") result.supports_oai_dc = true;
    }
    if (!result.supports_oai_dc) result.detail += "; oai_dc not offered";
  } catch (const Error& e) {
    result.detail += std::string("; ListMetadataFormats failed: ") + e.what();
  }
  return result;
}

HarvestSummary Client::harvest_list_records(const Endpoint& endpoint,
                                            std::string_view metadata_prefix,
                                            const RecordSink& sink, const HarvestFilter& filter,
                                            const std::function<void()>& page_done) {
  HarvestSummary summary;
  std::unordered_set<std::string> seen;
  bool may_restart = true;

  Params first{{"metadataPrefix", std::string(metadata_prefix)}};
  if (filter.from) first["from"] = *filter.from;
  if (filter.until) first["until"] = *filter.until;
  if (filter.set) first["set"] = *filter.set;

  std::optional<std::string> token;
  bool any_request = false;
  while (true) {
    if (any_request) sleeper_(policy_.polite_delay);
    any_request = true;

    Response response;
    try {
      response = token ? request(endpoint, Verb::ListRecords, {{"resumptionToken", *token}})
                       : request(endpoint, Verb::ListRecords, first);
    } catch (const Error& e) {
      summary.errors.push_back(e.what());
      return summary;
    }

    if (auto* err = std::get_if<OaiProtocolError>(&response)) {
      if (err->code == ErrorCode::noRecordsMatch && !token) {
        summary.complete = true;
        return summary;
      }
      if (err->code == ErrorCode::badResumptionToken && token && may_restart) {
        may_restart = false;
        ++summary.restarts;
        token.reset();
        continue;
      }
      summary.errors.push_back(ProtocolFailure(*err).what());
      return summary;
    }

    auto* page = std::get_if<RecordsPage>(&response);
    if (!page) {
      summary.errors.push_back("ListRecords answered with a different verb");
      return summary;
    }
    ++summary.pages;
    for (auto& rec : page->records) {
      if (!seen.insert(rec.header.identifier).second) {
        ++summary.duplicates;
        continue;
      }
      if (rec.header.deleted) {
        ++summary.deleted;
        continue;
      }
      ++summary.records;
      sink(std::move(rec));
    }
    if (page_done) page_done();

    if (!page->token || page->token->list_complete()) {
      summary.complete = true;
      return summary;
    }
    token = page->token->token;
  }
}

RepositoryIdentity identify(const Endpoint& endpoint, const FetchPolicy& policy) {
  return Client(policy).identify(endpoint);
}

VerificationResult verify_endpoint(const Endpoint& endpoint, const FetchPolicy& policy) {
  return Client(policy).verify_endpoint(endpoint);
}

HarvestSummary harvest_list_records(const Endpoint& endpoint, std::string_view metadata_prefix,
                                    const FetchPolicy& policy, const RecordSink& sink) {
  return Client(policy).harvest_list_records(endpoint, metadata_prefix, sink);
}

}  // namespace dcqual::oai
