#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dcqual/http_transport.hpp"
#include "dcqual/oai_protocol.hpp"
#include "dcqual/report.hpp"

namespace dcqual::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDegraded = 1;
inline constexpr int kExitUsage = 2;

/// `<repo_id>TAB<base_url>` per line; "#" comments and blank lines skipped.
/// Throws IoError or FileFormatError.
std::vector<oai::Endpoint> load_config(const std::filesystem::path& path);

using TransportFactory = std::function<std::unique_ptr<oai::HttpTransport>()>;

struct NetworkOptions {
  oai::FetchPolicy policy;
  std::string contact;
  /// Defaults to the real HTTP transport.
  TransportFactory transport;
};

int verify(const std::filesystem::path& config, const NetworkOptions& net, std::ostream& out,
           std::ostream& err);

struct HarvestOptions {
  std::filesystem::path config;
  std::filesystem::path store;
  int concurrency = 4;
  NetworkOptions net;
  oai::HarvestFilter filter;
};

int harvest(const HarvestOptions& options, std::ostream& out, std::ostream& err);

int analyze(const std::filesystem::path& store, const std::filesystem::path& out_dir,
            report::Format format, std::ostream& out, std::ostream& err);

/// An empty `rules_dir` selects the shipped rules.
int normalize(const std::filesystem::path& store, const std::filesystem::path& rules_dir,
              const std::filesystem::path& out_dir, report::Format format, std::ostream& out,
              std::ostream& err);

struct ServeOptions {
  std::filesystem::path fixture;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t page_size = 100;
  std::string faults;
};

/// Blocks until `stop` becomes true. `on_ready` receives the base URL.
int serve_fixture(const ServeOptions& options, const std::atomic<bool>& stop, std::ostream& out,
                  std::ostream& err, const std::function<void(const std::string&)>& on_ready = {});

/// Full command line, argv[0] included.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::atomic<bool>& stop);

}  // namespace dcqual::cli
