#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>

#include "dcqual/errors.hpp"

namespace dcqual::oai {

struct HttpResponse {
  int status = 0;
  std::string body;
  /// Raw Retry-After header value, when the server sent one.
  std::optional<std::string> retry_after;
};

/// The request never produced an HTTP response.
class TransportFailure : public Error {
 public:
  enum class Kind { connection, timeout };
  TransportFailure(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct RequestOptions {
  std::chrono::milliseconds timeout{30000};
  std::string user_agent;
};

/// HTTP GET. Implementations throw TransportFailure when no response arrives;
/// any HTTP status, including 5xx, is returned.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse get(const std::string& url, const RequestOptions& options) = 0;
};

/// cpp-httplib backed transport with one keep-alive connection per origin.
std::unique_ptr<HttpTransport> make_http_transport();

}  // namespace dcqual::oai
