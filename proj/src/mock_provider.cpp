#include "dcqual/mock_provider.hpp"

#include <sys/socket.h>

#include <charconv>
#include <ctime>
#include <fstream>
#include <thread>
#include <unordered_map>

#include <httplib.h>

#include "dcqual/errors.hpp"
#include "dcqual/text.hpp"
#include "dcqual/xml.hpp"

namespace dcqual::mock {

using nlohmann::json;
using oai::ErrorCode;
using oai::Verb;

namespace {

std::string response_date() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string string_field(const json& doc, const char* key, std::string fallback) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return fallback;
  if (!it->is_string()) throw IllegalArgument(std::string("fixture field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::vector<std::string> string_list(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return {};
  if (!it->is_array()) throw IllegalArgument(std::string("fixture field '") + key + "' must be a list");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw IllegalArgument(std::string("fixture field '") + key + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

bool parse_int(std::string_view s, long long& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

struct VerbArgs {
  std::vector<std::string_view> allowed;
  std::vector<std::string_view> required;
  bool exclusive_token = false;
};

VerbArgs args_for(Verb v) {
  switch (v) {
    case Verb::Identify: return {{}, {}, false};
    case Verb::ListMetadataFormats: return {{"identifier"}, {}, false};
    case Verb::ListSets: return {{"resumptionToken"}, {}, true};
    case Verb::ListIdentifiers:
    case Verb::ListRecords:
      return {{"from", "metadataPrefix", "resumptionToken", "set", "until"}, {"metadataPrefix"}, true};
    case Verb::GetRecord: return {{"identifier", "metadataPrefix"}, {"identifier", "metadataPrefix"}, false};
  }
  return {};
}

std::string request_element(const MockProvider::Query& query, std::string_view base_url,
                            bool echo_arguments) {
  std::string out = "<request";
  if (echo_arguments) {
    for (const auto& [k, v] : query) {
      out += ' ' + k + "=\"" + xml::escape_attribute(v) + '"';
    }
  }
  out += '>' + xml::escape_text(base_url) + "</request>";
  return out;
}

std::string envelope(std::string_view inner, const MockProvider::Query& query,
                     std::string_view base_url, bool echo_arguments) {
  std::string out =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<OAI-PMH xmlns=\"http://www.openarchives.org/OAI/2.0/\" "
      "xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" "
      "xsi:schemaLocation=\"http://www.openarchives.org/OAI/2.0/ "
      "http://www.openarchives.org/OAI/2.0/OAI-PMH.xsd\">\n";
  out += "<responseDate>" + response_date() + "</responseDate>\n";
  out += request_element(query, base_url, echo_arguments) + '\n';
  out += inner;
  out += "</OAI-PMH>\n";
  return out;
}

std::string render_header(const RecordHeader& h) {
  std::string out = h.deleted ? "<header status=\"deleted\">" : "<header>";
  out += "<identifier>" + xml::escape_text(h.identifier) + "</identifier>";
  out += "<datestamp>" + xml::escape_text(h.datestamp) + "</datestamp>";
  for (const auto& s : h.set_specs) out += "<setSpec>" + xml::escape_text(s) + "</setSpec>";
  out += "</header>";
  return out;
}

std::string render_record(const FixtureRecord& r) {
  std::string out = "<record>" + render_header(r.header);
  if (!r.header.deleted) out += "<metadata>" + render_dc(r.metadata) + "</metadata>";
  out += "</record>";
  return out;
}

std::string render_token(const oai::ResumptionToken& t) {
  std::string out = "<resumptionToken";
  if (t.complete_list_size) out += " completeListSize=\"" + std::to_string(*t.complete_list_size) + '"';
  if (t.cursor) out += " cursor=\"" + std::to_string(*t.cursor) + '"';
  out += '>' + xml::escape_text(t.token) + "</resumptionToken>";
  return out;
}

// Filter arguments carried inside a resumption token.
struct ListArgs {
  std::string from;
  std::string until;
  std::string set;
};

std::string encode_token(std::size_t page, const ListArgs& a) {
  std::string t = "page:" + std::to_string(page);
  if (!a.from.empty() || !a.until.empty() || !a.set.empty()) t += '|' + a.from + '|' + a.until + '|' + a.set;
  return t;
}

std::optional<std::pair<std::size_t, ListArgs>> decode_token(std::string_view token) {
  const auto parts = text::split(token, '|');
  if (parts.size() != 1 && parts.size() != 4) return std::nullopt;
  if (parts[0].substr(0, 5) != "page:") return std::nullopt;
  long long page = 0;
  if (!parse_int(parts[0].substr(5), page) || page < 1) return std::nullopt;
  ListArgs a;
  if (parts.size() == 4) {
    a.from = parts[1];
    a.until = parts[2];
    a.set = parts[3];
  }
  return std::make_pair(static_cast<std::size_t>(page), a);
}

const std::string* single(const MockProvider::Query& q, const std::string& key) {
  auto it = q.find(key);
  return it == q.end() ? nullptr : &it->second;
}

}  // namespace

Fixture fixture_from_json(const json& doc) {
  if (!doc.is_object()) throw IllegalArgument("fixture must be a JSON object");
  Fixture f;
  f.repository_name = string_field(doc, "repository_name", f.repository_name);
  f.protocol_version = string_field(doc, "protocol_version", f.protocol_version);
  f.admin_email = string_field(doc, "admin_email", f.admin_email);
  f.earliest_datestamp = string_field(doc, "earliest_datestamp", f.earliest_datestamp);
  f.granularity = string_field(doc, "granularity", f.granularity);
  f.deleted_record = string_field(doc, "deleted_record", f.deleted_record);

  if (auto it = doc.find("formats"); it != doc.end()) {
    if (!it->is_array()) throw IllegalArgument("'formats' must be a list");
    f.formats.clear();
    for (const auto& e : *it) {
      if (e.is_string()) {
        const auto prefix = e.get<std::string>();
        f.formats.push_back({prefix, "", prefix == "oai_dc" ? std::string(kOaiDcNamespace) : ""});
      } else if (e.is_object()) {
        f.formats.push_back({string_field(e, "prefix", ""), string_field(e, "schema", ""),
                             string_field(e, "namespace", "")});
        if (f.formats.back().prefix.empty()) throw IllegalArgument("format without prefix");
      } else {
        throw IllegalArgument("'formats' entries must be strings or objects");
      }
    }
  }
  if (auto it = doc.find("sets"); it != doc.end()) {
    if (!it->is_array()) throw IllegalArgument("'sets' must be a list");
    for (const auto& e : *it) {
      if (!e.is_object()) throw IllegalArgument("'sets' entries must be objects");
      f.sets.push_back({string_field(e, "spec", ""), string_field(e, "name", "")});
      if (f.sets.back().spec.empty()) throw IllegalArgument("set without spec");
    }
  }
  if (auto it = doc.find("records"); it != doc.end()) {
    if (!it->is_array()) throw IllegalArgument("'records' must be a list");
    f.records.reserve(it->size());
    for (const auto& e : *it) {
      if (!e.is_object()) throw IllegalArgument("'records' entries must be objects");
      FixtureRecord r;
      r.header.identifier = string_field(e, "identifier", "");
      if (r.header.identifier.empty()) throw IllegalArgument("record without identifier");
      r.header.datestamp = string_field(e, "datestamp", f.earliest_datestamp);
      r.header.set_specs = string_list(e, "set_specs");
      if (auto d = e.find("deleted"); d != e.end()) {
        if (!d->is_boolean()) throw IllegalArgument("'deleted' must be a boolean");
        r.header.deleted = d->get<bool>();
      }
      if (auto md = e.find("metadata"); md != e.end()) {
        if (!md->is_object()) throw IllegalArgument("'metadata' must be an object");
        for (const auto& [key, value] : md->items()) {
          const auto el = element_from_name(key);
          if (!el || key == "identifier2") throw IllegalArgument("unknown metadata element '" + key + "'");
          r.metadata.set(*el, string_list(*md, key.c_str()));
        }
      }
      f.records.push_back(std::move(r));
    }
  }
  return f;
}

json fixture_to_json(const Fixture& f) {
  json formats = json::array();
  for (const auto& m : f.formats) {
    formats.push_back({{"prefix", m.prefix}, {"schema", m.schema}, {"namespace", m.metadata_namespace}});
  }
  json sets = json::array();
  for (const auto& s : f.sets) sets.push_back({{"spec", s.spec}, {"name", s.name}});
  json records = json::array();
  for (const auto& r : f.records) {
    json md = json::object();
    for (auto e : kDcElements) {
      if (!r.metadata.values(e).empty()) md[std::string(element_name(e))] = r.metadata.values(e);
    }
    records.push_back({{"identifier", r.header.identifier},
                       {"datestamp", r.header.datestamp},
                       {"set_specs", r.header.set_specs},
                       {"deleted", r.header.deleted},
                       {"metadata", std::move(md)}});
  }
  return {{"repository_name", f.repository_name},
          {"protocol_version", f.protocol_version},
          {"admin_email", f.admin_email},
          {"earliest_datestamp", f.earliest_datestamp},
          {"granularity", f.granularity},
          {"deleted_record", f.deleted_record},
          {"formats", std::move(formats)},
          {"sets", std::move(sets)},
          {"records", std::move(records)}};
}

Fixture load_fixture(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read fixture " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw IllegalArgument(path.string() + ": " + e.what());
  }
  return fixture_from_json(doc);
}

std::vector<Fault> parse_fault_script(std::string_view script) {
  std::vector<Fault> out;
  for (auto item : text::split(script, ',')) {
    item = text::trim(item);
    if (item.empty()) continue;
    const auto bad = [&](const std::string& why) {
      return IllegalArgument("bad fault '" + std::string(item) + "': " + why);
    };
    const auto at = item.find('@');
    if (at == std::string_view::npos) throw bad("missing '@<page|Verb>'");
    auto spec = item.substr(0, at);
    const auto target = item.substr(at + 1);

    Fault f;
    if (const auto star = spec.find('*'); star != std::string_view::npos) {
      long long n = 0;
      if (!parse_int(spec.substr(star + 1), n) || n < 1) throw bad("times must be a positive integer");
      f.times = static_cast<int>(n);
      spec = spec.substr(0, star);
    }
    std::string_view kind = spec;
    if (const auto colon = spec.find(':'); colon != std::string_view::npos) {
      kind = spec.substr(0, colon);
      long long secs = 0;
      if (!parse_int(spec.substr(colon + 1), secs) || secs < 0) throw bad("Retry-After must be >= 0");
      if (kind != "503") throw bad("only 503 takes a Retry-After value");
      f.retry_after_seconds = static_cast<int>(secs);
    }
    if (kind == "503") {
      f.kind = FaultKind::unavailable;
    } else if (kind == "malformed") {
      f.kind = FaultKind::malformed;
    } else if (kind == "expire") {
      f.kind = FaultKind::expire;
    } else {
      throw bad("kind must be 503, malformed or expire");
    }

    long long page = 0;
    if (parse_int(target, page)) {
      if (page < 1) throw bad("pages are 1-based");
      if (f.kind == FaultKind::expire && page < 2) throw bad("expire needs a page reached by token (>= 2)");
      f.target = static_cast<std::size_t>(page);
    } else if (auto verb = oai::verb_from_name(target)) {
      if (f.kind == FaultKind::expire) throw bad("expire targets a page number");
      f.target = *verb;
    } else {
      throw bad("target must be a page number or an OAI verb");
    }
    out.push_back(f);
  }
  return out;
}

std::string render_error(ErrorCode code, std::string_view message, const MockProvider::Query& query,
                         std::string_view base_url) {
  const bool echo = code != ErrorCode::badVerb && code != ErrorCode::badArgument;
  std::string inner = "<error code=\"" + std::string(oai::error_code_name(code)) + "\">" +
                      xml::escape_text(message) + "</error>\n";
  return envelope(inner, query, base_url, echo);
}

std::string render_records(Verb verb, std::span<const FixtureRecord* const> records,
                           const std::optional<oai::ResumptionToken>& token,
                           const MockProvider::Query& query, std::string_view base_url) {
  const auto name = std::string(oai::verb_name(verb));
  std::string inner = '<' + name + ">\n";
  for (const auto* r : records) {
    inner += verb == Verb::ListIdentifiers ? render_header(r->header) : render_record(*r);
    inner += '\n';
  }
  if (token) inner += render_token(*token) + '\n';
  inner += "</" + name + ">\n";
  return envelope(inner, query, base_url, true);
}

MockProvider::MockProvider(Fixture fixture, MockOptions options)
    : fixture_(std::move(fixture)), options_(std::move(options)) {
  if (options_.page_size == 0) throw IllegalArgument("page size must be >= 1");
  for (const auto& f : options_.faults) remaining_.push_back(f.times);
}

std::size_t MockProvider::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

std::size_t MockProvider::faults_fired() const {
  std::lock_guard lock(mutex_);
  return fired_;
}

std::optional<MockResponse> MockProvider::take_fault(Verb verb, std::optional<std::size_t> page) {
  std::lock_guard lock(mutex_);
  for (std::size_t i = 0; i < options_.faults.size(); ++i) {
    if (remaining_[i] == 0) continue;
    const auto& f = options_.faults[i];
    bool hit = false;
    if (const auto* v = std::get_if<Verb>(&f.target)) {
      hit = *v == verb;
    } else {
      hit = page && *page == std::get<std::size_t>(f.target);
    }
    if (!hit) continue;
    --remaining_[i];
    ++fired_;
    MockResponse r;
    switch (f.kind) {
      case FaultKind::unavailable:
        r.status = 503;
        r.retry_after = f.retry_after_seconds;
        r.content_type = "text/plain; charset=UTF-8";
        r.body = "Service temporarily unavailable\n";
        break;
      case FaultKind::malformed:
        r.body =
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
            "<OAI-PMH xmlns=\"http://www.openarchives.org/OAI/2.0/\"><responseDate>";
        break;
      case FaultKind::expire:
        // Answered by the caller so the envelope carries the request.
        r.status = -1;
        break;
    }
    return r;
  }
  return std::nullopt;
}

MockResponse MockProvider::handle(const Query& query) {
  {
    std::lock_guard lock(mutex_);
    ++requests_;
  }
  const auto& base = options_.base_url;
  const auto error = [&](ErrorCode code, std::string_view message) {
    return MockResponse{200, render_error(code, message, query, base), std::nullopt};
  };

  if (query.count("verb") != 1) return error(ErrorCode::badVerb, "verb missing or repeated");
  const auto verb = oai::verb_from_name(query.find("verb")->second);
  if (!verb) return error(ErrorCode::badVerb, "illegal verb");

  const auto rules = args_for(*verb);
  for (auto it = query.begin(); it != query.end(); it = query.upper_bound(it->first)) {
    if (it->first == "verb") continue;
    if (query.count(it->first) > 1) return error(ErrorCode::badArgument, "repeated argument " + it->first);
    if (std::find(rules.allowed.begin(), rules.allowed.end(), it->first) == rules.allowed.end()) {
      return error(ErrorCode::badArgument, "illegal argument " + it->first);
    }
  }
  const auto* token = single(query, "resumptionToken");
  if (token) {
    if (rules.exclusive_token && query.size() != 2) {
      return error(ErrorCode::badArgument, "resumptionToken is exclusive");
    }
  } else {
    for (auto req : rules.required) {
      if (!query.count(std::string(req))) {
        return error(ErrorCode::badArgument, "missing argument " + std::string(req));
      }
    }
  }

  const bool listing = *verb == Verb::ListRecords || *verb == Verb::ListIdentifiers;
  std::optional<std::size_t> page;
  ListArgs args;
  if (listing) {
    if (token) {
      auto decoded = decode_token(*token);
      if (!decoded || decoded->first < 2) return error(ErrorCode::badResumptionToken, "unknown token");
      page = decoded->first;
      args = std::move(decoded->second);
    } else {
      page = 1;
      if (const auto* v = single(query, "from")) args.from = *v;
      if (const auto* v = single(query, "until")) args.until = *v;
      if (const auto* v = single(query, "set")) args.set = *v;
    }
  }

  if (auto fault = take_fault(*verb, page)) {
    if (fault->status != -1) return *fault;
    return error(ErrorCode::badResumptionToken, "token expired");
  }

  const auto has_prefix = [&](const std::string& prefix) {
    for (const auto& f : fixture_.formats) {
      if (f.prefix == prefix) return prefix == "oai_dc";
    }
    return false;
  };
  const auto find_record = [&](const std::string& id) -> const FixtureRecord* {
    for (const auto& r : fixture_.records) {
      if (r.header.identifier == id) return &r;
    }
    return nullptr;
  };

  switch (*verb) {
    case Verb::Identify: {
      std::string inner = "<Identify>\n";
      inner += "<repositoryName>" + xml::escape_text(fixture_.repository_name) + "</repositoryName>\n";
      inner += "<baseURL>" + xml::escape_text(base) + "</baseURL>\n";
      inner += "<protocolVersion>" + xml::escape_text(fixture_.protocol_version) + "</protocolVersion>\n";
      inner += "<adminEmail>" + xml::escape_text(fixture_.admin_email) + "</adminEmail>\n";
      inner += "<earliestDatestamp>" + xml::escape_text(fixture_.earliest_datestamp) + "</earliestDatestamp>\n";
      inner += "<deletedRecord>" + xml::escape_text(fixture_.deleted_record) + "</deletedRecord>\n";
      inner += "<granularity>" + xml::escape_text(fixture_.granularity) + "</granularity>\n";
      inner += "</Identify>\n";
      return {200, envelope(inner, query, base, true), std::nullopt};
    }
    case Verb::ListMetadataFormats: {
      if (const auto* id = single(query, "identifier"); id && !find_record(*id)) {
        return error(ErrorCode::idDoesNotExist, "no such identifier");
      }
      if (fixture_.formats.empty()) return error(ErrorCode::noMetadataFormats, "no formats");
      std::string inner = "<ListMetadataFormats>\n";
      for (const auto& f : fixture_.formats) {
        inner += "<metadataFormat><metadataPrefix>" + xml::escape_text(f.prefix) +
                 "</metadataPrefix><schema>" + xml::escape_text(f.schema) +
                 "</schema><metadataNamespace>" + xml::escape_text(f.metadata_namespace) +
                 "</metadataNamespace></metadataFormat>\n";
      }
      inner += "</ListMetadataFormats>\n";
      return {200, envelope(inner, query, base, true), std::nullopt};
    }
    case Verb::ListSets: {
      if (token) return error(ErrorCode::badResumptionToken, "set lists are not paged");
      if (fixture_.sets.empty()) return error(ErrorCode::noSetHierarchy, "no sets");
      std::string inner = "<ListSets>\n";
      for (const auto& s : fixture_.sets) {
        inner += "<set><setSpec>" + xml::escape_text(s.spec) + "</setSpec><setName>" +
                 xml::escape_text(s.name) + "</setName></set>\n";
      }
      inner += "</ListSets>\n";
      return {200, envelope(inner, query, base, true), std::nullopt};
    }
    case Verb::GetRecord: {
      if (!has_prefix(query.find("metadataPrefix")->second)) {
        return error(ErrorCode::cannotDisseminateFormat, "format not available");
      }
      const auto* r = find_record(query.find("identifier")->second);
      if (!r) return error(ErrorCode::idDoesNotExist, "no such identifier");
      std::string inner = "<GetRecord>\n" + render_record(*r) + "\n</GetRecord>\n";
      return {200, envelope(inner, query, base, true), std::nullopt};
    }
    case Verb::ListRecords:
    case Verb::ListIdentifiers:
      break;
  }

  if (!token && !has_prefix(query.find("metadataPrefix")->second)) {
    return error(ErrorCode::cannotDisseminateFormat, "format not available");
  }
  if (!args.set.empty() && fixture_.sets.empty()) return error(ErrorCode::noSetHierarchy, "no sets");

  std::vector<const FixtureRecord*> selected;
  for (const auto& r : fixture_.records) {
    if (!args.from.empty() && r.header.datestamp < args.from) continue;
    if (!args.until.empty() && r.header.datestamp > args.until) continue;
    if (!args.set.empty() &&
        std::find(r.header.set_specs.begin(), r.header.set_specs.end(), args.set) == r.header.set_specs.end()) {
      continue;
    }
    selected.push_back(&r);
  }
  if (selected.empty()) return error(ErrorCode::noRecordsMatch, "no records");

  const std::size_t size = options_.page_size;
  const std::size_t pages = (selected.size() + size - 1) / size;
  if (*page > pages) return error(ErrorCode::badResumptionToken, "unknown token");

  const std::size_t begin = (*page - 1) * size;
  const std::size_t end = std::min(begin + size, selected.size());
  std::optional<oai::ResumptionToken> next;
  if (pages > 1) {
    next = oai::ResumptionToken{*page < pages ? encode_token(*page + 1, args) : std::string(),
                                selected.size(), begin};
  }
  const auto slice = std::span<const FixtureRecord* const>(selected).subspan(begin, end - begin);
  return {200, render_records(*verb, slice, next, query, base), std::nullopt};
}

struct MockServer::Impl {
  httplib::Server server;
  std::thread thread;
};

MockServer::MockServer(std::shared_ptr<MockProvider> provider, std::string host, int port)
    : impl_(std::make_unique<Impl>()), provider_(std::move(provider)), host_(std::move(host)) {
  auto& server = impl_->server;
  server.set_tcp_nodelay(true);
  // httplib's defaults add SO_REUSEPORT, which would let a second server
  // share an occupied port.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  server.Get(".*", [p = provider_](const httplib::Request& req, httplib::Response& res) {
    MockProvider::Query query(req.params.begin(), req.params.end());
    auto answer = p->handle(query);
    res.status = answer.status;
    if (answer.retry_after) res.set_header("Retry-After", std::to_string(*answer.retry_after));
    res.set_content(std::move(answer.body), answer.content_type);
  });

  if (port == 0) {
    port_ = server.bind_to_any_port(host_);
    if (port_ < 0) throw BindError("cannot bind " + host_);
  } else {
    if (!server.bind_to_port(host_, port)) {
      throw BindError("cannot bind " + host_ + ":" + std::to_string(port));
    }
    port_ = port;
  }
  provider_->set_base_url(base_url());
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  server.wait_until_ready();
}

MockServer::~MockServer() { stop(); }

std::string MockServer::base_url() const {
  return "http://" + host_ + ":" + std::to_string(port_) + "/oai";
}

void MockServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace dcqual::mock
