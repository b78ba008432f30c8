#include "dcqual/http_transport.hpp"

#include <httplib.h>

#include <map>

#include "dcqual/oai_protocol.hpp"

namespace dcqual::oai {

namespace {

class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse get(const std::string& url, const RequestOptions& options) override {
    const Url parsed = Url::parse(url);
    auto& client = client_for(parsed.origin());

    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(options.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (!options.user_agent.empty()) headers.emplace("User-Agent", options.user_agent);

    auto result = client.Get(parsed.path, headers);
    if (!result) {
      const auto err = result.error();
      const auto kind = (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
                            ? TransportFailure::Kind::timeout
                            : TransportFailure::Kind::connection;
      // Drop the connection so the next attempt starts clean.
      clients_.erase(parsed.origin());
      throw TransportFailure(kind, "GET " + url + ": " + httplib::to_string(err));
    }

    HttpResponse response;
    response.status = result->status;
    response.body = std::move(result->body);
    if (result->has_header("Retry-After")) {
      response.retry_after = result->get_header_value("Retry-After");
    }
    return response;
  }

 private:
  httplib::Client& client_for(const std::string& origin) {
    auto it = clients_.find(origin);
    if (it == clients_.end()) {
      auto client = std::make_unique<httplib::Client>(origin);
      client->set_keep_alive(true);
      client->set_tcp_nodelay(true);
      client->set_follow_location(true);
      client->set_url_encode(false);
      it = clients_.emplace(origin, std::move(client)).first;
    }
    return *it->second;
  }

  std::map<std::string, std::unique_ptr<httplib::Client>> clients_;
};

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport() { return std::make_unique<HttplibTransport>(); }

}  // namespace dcqual::oai
