#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "dcqual/corpus_store.hpp"
#include "dcqual/errors.hpp"
#include "dcqual/mock_provider.hpp"
#include "dcqual/normalization.hpp"
#include "dcqual/quality_metrics.hpp"
#include "dcqual/text.hpp"

namespace dcqual::cli {

namespace fs = std::filesystem;
using report::Format;
using report::Table;

namespace {

oai::Client make_client(const NetworkOptions& net) {
  return oai::Client(net.policy, net.transport ? net.transport() : nullptr, net.contact);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << content;
  if (!f.flush()) throw IoError("cannot write " + path.string());
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

std::vector<oai::VerificationResult> verify_all(const std::vector<oai::Endpoint>& endpoints,
                                                const NetworkOptions& net) {
  std::vector<oai::VerificationResult> results;
  for (const auto& ep : endpoints) {
    auto client = make_client(net);
    results.push_back(client.verify_endpoint(ep));
  }
  return results;
}

void print_verification(const std::vector<oai::Endpoint>& endpoints,
                        const std::vector<oai::VerificationResult>& results, std::ostream& out) {
  Table t;
  t.header = {"repository", "base_url", "alive", "oai_dc", "usable", "detail"};
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    const auto& r = results[i];
    t.rows.push_back({endpoints[i].repo_id(), endpoints[i].base_url(), yes_no(r.alive),
                      yes_no(r.supports_oai_dc), yes_no(r.usable()), r.detail});
  }
  out << report::render_table(t, Format::markdown);
}

}  // namespace

std::vector<oai::Endpoint> load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::vector<oai::Endpoint> endpoints;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto cols = text::split(trimmed, '\t');
    if (cols.size() != 2) {
      throw FileFormatError(path.string(), line_no, "expected <repo_id>TAB<base_url>");
    }
    try {
      endpoints.emplace_back(std::string(text::trim(cols[0])), std::string(text::trim(cols[1])));
    } catch (const IllegalArgument& e) {
      throw FileFormatError(path.string(), line_no, e.what());
    }
    for (std::size_t i = 0; i + 1 < endpoints.size(); ++i) {
      if (endpoints[i].repo_id() == endpoints.back().repo_id()) {
        throw FileFormatError(path.string(), line_no, "duplicate repo_id " + endpoints.back().repo_id());
      }
    }
  }
  return endpoints;
}

int verify(const fs::path& config, const NetworkOptions& net, std::ostream& out, std::ostream& err) {
  std::vector<oai::Endpoint> endpoints;
  try {
    endpoints = load_config(config);
  } catch (const Error& e) {
    err << "dcqual verify: " << e.what() << '\n';
    return kExitUsage;
  }
  if (endpoints.empty()) {
    err << "dcqual verify: no endpoints in " << config.string() << '\n';
    return kExitUsage;
  }
  const auto results = verify_all(endpoints, net);
  print_verification(endpoints, results, out);
  const auto usable = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.usable(); });
  out << usable << " of " << endpoints.size() << " endpoints usable\n";
  return usable > 0 ? kExitOk : kExitDegraded;
}

int harvest(const HarvestOptions& options, std::ostream& out, std::ostream& err) {
  std::vector<oai::Endpoint> endpoints;
  try {
    endpoints = load_config(options.config);
  } catch (const Error& e) {
    err << "dcqual harvest: " << e.what() << '\n';
    return kExitUsage;
  }
  if (endpoints.empty()) {
    err << "dcqual harvest: no endpoints in " << options.config.string() << '\n';
    return kExitUsage;
  }
  if (options.concurrency < 1) {
    err << "dcqual harvest: concurrency must be >= 1\n";
    return kExitUsage;
  }

  std::unique_ptr<CorpusWriter> writer;
  try {
    writer = std::make_unique<CorpusWriter>(options.store);
  } catch (const Error& e) {
    err << "dcqual harvest: " << e.what() << '\n';
    return kExitUsage;
  }

  const auto checks = verify_all(endpoints, options.net);
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    if (checks[i].usable()) {
      usable.push_back(i);
    } else {
      err << "skipping " << endpoints[i].repo_id() << ": " << checks[i].detail << '\n';
    }
  }

  std::vector<oai::HarvestSummary> summaries(endpoints.size());
  std::vector<std::string> failures(endpoints.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < usable.size(); k = next++) {
      const auto& ep = endpoints[usable[k]];
      auto& summary = summaries[usable[k]];
      std::vector<HarvestedRecord> page;
      try {
        auto client = make_client(options.net);
        const auto flush = [&] {
          if (page.empty()) return;
          writer->append_page(ep.repo_id(), page);
          page.clear();
        };
        summary = client.harvest_list_records(
            ep, "oai_dc",
            [&](oai::OaiRecord&& r) {
              page.push_back({ep.repo_id(), std::move(r.header), std::move(r.metadata), utc_timestamp_now()});
            },
            options.filter, flush);
        flush();
        writer->record_harvest(ep.repo_id(), summary);
      } catch (const Error& e) {
        failures[usable[k]] = e.what();
        summary.complete = false;
      }
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(options.concurrency),
                                               std::max<std::size_t>(usable.size(), 1));
  std::vector<std::thread> threads;
  for (std::size_t i = 1; i < n_threads; ++i) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  Table t;
  t.header = {"repository", "status", "pages", "records", "deleted", "duplicates", "restarts", "errors"};
  bool degraded = usable.empty();
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    const bool attempted = std::find(usable.begin(), usable.end(), i) != usable.end();
    const auto& s = summaries[i];
    auto errors = s.errors;
    if (!failures[i].empty()) errors.push_back(failures[i]);
    std::string status = "skipped";
    if (attempted) {
      status = s.complete && failures[i].empty() ? "complete" : "partial";
      if (status == "partial") degraded = true;
    }
    t.rows.push_back({endpoints[i].repo_id(), status, std::to_string(s.pages), std::to_string(s.records),
                      std::to_string(s.deleted), std::to_string(s.duplicates), std::to_string(s.restarts),
                      text::join(errors, "; ")});
  }
  out << report::render_table(t, Format::markdown);
  return degraded ? kExitDegraded : kExitOk;
}

int analyze(const fs::path& store, const fs::path& out_dir, Format format, std::ostream& out,
            std::ostream& err) {
  Corpus corpus;
  try {
    corpus = load_corpus(store);
  } catch (const Error& e) {
    err << "dcqual analyze: " << e.what() << '\n';
    return kExitUsage;
  }
  if (corpus.empty()) {
    err << "dcqual analyze: empty corpus\n";
    return kExitDegraded;
  }

  try {
    prepare_dir(out_dir);
    const auto bundle = dcqual::analyze(corpus);
    const std::string ext(report::format_extension(format));
    const auto emit = [&](const std::string& name, const std::vector<Table>& tables) {
      std::string doc;
      for (const auto& t : tables) {
        if (!doc.empty()) doc += '\n';
        if (format == Format::markdown) doc += "## " + t.caption + "\n\n";
        doc += report::render_table(t, format);
      }
      write_file(out_dir / (name + "." + ext), doc);
    };

    write_file(out_dir / ("report." + ext), report::render_full_report(bundle, format));
    emit("repo_sizes", {report::repo_size_table(bundle.repo_sizes)});
    emit("completeness_relative",
         {report::completeness_table(bundle.completeness, report::CompletenessStyle::relative_grid)});
    emit("completeness_absolute",
         {report::completeness_table(bundle.completeness, report::CompletenessStyle::absolute_list)});
    emit("length_title", {report::length_bucket_table(bundle.title_lengths),
                          report::top_length_table(bundle.title_lengths)});
    emit("length_description", {report::length_bucket_table(bundle.description_lengths),
                                report::top_length_table(bundle.description_lengths)});
    emit("variants_language", {report::variant_table_rows(bundle.language)});
    emit("variants_type", {report::variant_table_rows(bundle.type)});
    emit("variants_format", {report::variant_table_rows(bundle.format)});
    emit("pattern_counts", {report::pattern_table(bundle.patterns), report::pattern_per_repo_table(bundle.patterns)});
    emit("descriptors", {report::descriptor_summary_table(bundle.descriptors),
                         report::descriptor_per_count_table(bundle.descriptors),
                         report::top_descriptor_table(bundle.descriptors)});
    emit("authors", {report::author_bucket_table(bundle.authors), report::author_summary_table(bundle.authors)});

    std::ostringstream diag;
    const auto& d = corpus.diagnostics;
    diag << "records: " << corpus.size() << '\n'
         << "repositories: " << corpus.repos().size() << '\n'
         << "lines read: " << d.lines_read << '\n'
         << "duplicates dropped: " << d.duplicates_dropped << '\n'
         << "corrupt lines: " << d.corrupt.size() << '\n';
    for (const auto& c : d.corrupt) diag << c.file << ':' << c.line << ": " << c.message << '\n';
    diag << "note: lengths and pattern counts use the \";\"-joined value of each field\n";
    write_file(out_dir / "diagnostics.txt", diag.str());

    if (!d.corrupt.empty()) err << "dcqual analyze: skipped " << d.corrupt.size() << " corrupt line(s), see diagnostics.txt\n";
    out << "analyzed " << corpus.size() << " records from " << corpus.repos().size() << " repositories into "
        << out_dir.string() << '\n';
  } catch (const Error& e) {
    err << "dcqual analyze: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

int normalize(const fs::path& store, const fs::path& rules_dir, const fs::path& out_dir, Format format,
              std::ostream& out, std::ostream& err) {
  std::vector<MappingRuleSet> rules;
  try {
    if (rules_dir.empty()) {
      rules = {default_language_rules(), default_type_rules(), default_format_rules()};
    } else {
      if (!fs::is_directory(rules_dir)) throw IoError("rules directory not found: " + rules_dir.string());
      for (auto [name, field] : {std::pair{"language.tsv", DcElement::language},
                                 std::pair{"type.tsv", DcElement::type},
                                 std::pair{"format.tsv", DcElement::format}}) {
        const auto path = rules_dir / name;
        rules.push_back(fs::exists(path) ? load_rules(path, field) : MappingRuleSet(field, {}));
      }
    }
  } catch (const Error& e) {
    err << "dcqual normalize: " << e.what() << '\n';
    return kExitUsage;
  }

  Corpus corpus;
  try {
    corpus = load_corpus(store);
  } catch (const Error& e) {
    err << "dcqual normalize: " << e.what() << '\n';
    return kExitUsage;
  }
  if (corpus.empty()) {
    err << "dcqual normalize: empty corpus\n";
    return kExitDegraded;
  }

  try {
    prepare_dir(out_dir);
    const auto result = apply_normalization(corpus, rules);
    const std::string ext(report::format_extension(format));
    write_file(out_dir / ("normalization_summary." + ext),
               report::render_table(report::normalization_summary_table(result.reports), format));
    for (const auto& r : result.reports) {
      const std::string label(metric_label(r.field));
      write_file(out_dir / (label + "_canonical." + ext),
                 report::render_table(report::canonical_distribution_table(r), format));
      write_file(out_dir / (label + "_unresolved." + ext),
                 report::render_table(report::unresolved_table(r), format));
    }

    std::ofstream view(out_dir / "normalized.ndjson", std::ios::binary | std::ios::trunc);
    if (!view) throw IoError("cannot write " + (out_dir / "normalized.ndjson").string());
    for (const auto& nr : result.records) {
      nlohmann::json line = {{"repo_id", nr.record->repo_id}, {"identifier", nr.record->header.identifier}};
      for (const auto& f : nr.fields) {
        nlohmann::json entry = {{"raw", nr.record->metadata.values(f.field)},
                                {"canonical", f.canonical},
                                {"unresolved", f.unresolved}};
        if (f.field == DcElement::format) entry["residue"] = f.residue;
        line[std::string(metric_label(f.field))] = std::move(entry);
      }
      view << line.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    }
    if (!view.flush()) throw IoError("cannot write normalized.ndjson");

    out << report::render_table(report::normalization_summary_table(result.reports), Format::markdown);
  } catch (const Error& e) {
    err << "dcqual normalize: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

int serve_fixture(const ServeOptions& options, const std::atomic<bool>& stop, std::ostream& out,
                  std::ostream& err, const std::function<void(const std::string&)>& on_ready) {
  std::unique_ptr<mock::MockServer> server;
  try {
    auto fixture = mock::load_fixture(options.fixture);
    mock::MockOptions mo;
    mo.page_size = options.page_size;
    mo.faults = mock::parse_fault_script(options.faults);
    auto provider = std::make_shared<mock::MockProvider>(std::move(fixture), std::move(mo));
    server = std::make_unique<mock::MockServer>(provider, options.host, options.port);
  } catch (const Error& e) {
    err << "dcqual serve-fixture: " << e.what() << '\n';
    return kExitUsage;
  }
  out << "serving " << server->provider().fixture().repository_name << " at " << server->base_url()
      << std::endl;
  if (on_ready) on_ready(server->base_url());
  while (!stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server->stop();
  return kExitOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::atomic<bool>& stop) {
  CLI::App app{"Harvest OAI-PMH repositories and assess Dublin Core metadata quality", "dcqual"};
  app.set_version_flag("--version", std::string("dcqual ") + DCQUAL_VERSION);
  app.require_subcommand(1);

  std::string config, store, out_dir, rules_dir, fixture, faults, format_name = "csv";
  std::string from, until, set;
  int concurrency = 4, max_retries = 3, port = 8080;
  double timeout_s = 30;
  long long polite_ms = 0, backoff_ms = 500;
  std::size_t page_size = 100;

  const auto add_network = [&](CLI::App* sub) {
    sub->add_option("--max-retries", max_retries, "Retries per request")->check(CLI::NonNegativeNumber);
    sub->add_option("--timeout", timeout_s, "Request timeout in seconds")->check(CLI::PositiveNumber);
    sub->add_option("--polite-delay", polite_ms, "Pause between page requests (ms)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--backoff", backoff_ms, "Base retry backoff (ms)")->check(CLI::NonNegativeNumber);
  };
  const auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", format_name, "Output format")->check(CLI::IsMember({"csv", "md"}));
  };

  auto* verify_cmd = app.add_subcommand("verify", "Check that each configured endpoint answers OAI-PMH with oai_dc");
  verify_cmd->add_option("--config", config, "Endpoint list")->required();
  add_network(verify_cmd);

  auto* harvest_cmd = app.add_subcommand("harvest", "Harvest every usable endpoint into a store");
  harvest_cmd->add_option("--config", config, "Endpoint list")->required();
  harvest_cmd->add_option("--store", store, "Store directory")->required();
  harvest_cmd->add_option("--concurrency", concurrency, "Parallel endpoint harvests")->check(CLI::PositiveNumber);
  harvest_cmd->add_option("--from", from, "Selective harvest lower datestamp");
  harvest_cmd->add_option("--until", until, "Selective harvest upper datestamp");
  harvest_cmd->add_option("--set", set, "Selective harvest setSpec");
  add_network(harvest_cmd);

  auto* analyze_cmd = app.add_subcommand("analyze", "Compute the quality metrics and write reports");
  analyze_cmd->add_option("--store", store, "Store directory")->required();
  analyze_cmd->add_option("--out", out_dir, "Output directory")->required();
  add_format(analyze_cmd);

  auto* normalize_cmd = app.add_subcommand("normalize", "Apply normalization rules and report coverage");
  normalize_cmd->add_option("--store", store, "Store directory")->required();
  normalize_cmd->add_option("--out", out_dir, "Output directory")->required();
  normalize_cmd->add_option("--rules", rules_dir, "Directory with language.tsv, type.tsv, format.tsv");
  add_format(normalize_cmd);

  auto* serve_cmd = app.add_subcommand("serve-fixture", "Serve a JSON fixture as an OAI-PMH endpoint");
  serve_cmd->add_option("fixture", fixture, "Fixture JSON file")->required();
  serve_cmd->add_option("--port", port, "TCP port (0 picks one)")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--page-size", page_size, "Records per list page")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--faults", faults, "Fault script, e.g. 503@2,expire@3");

  std::vector<std::string> argv_tail(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(argv_tail.begin(), argv_tail.end());
  try {
    app.parse(argv_tail);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  NetworkOptions net;
  net.policy.max_retries = max_retries;
  net.policy.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000));
  net.policy.polite_delay = std::chrono::milliseconds(polite_ms);
  net.policy.base_backoff = std::chrono::milliseconds(backoff_ms);
  if (const char* contact = std::getenv("DCQUAL_CONTACT")) net.contact = contact;
  const auto format = format_name == "md" ? Format::markdown : Format::csv;

  if (*verify_cmd) return verify(config, net, out, err);
  if (*harvest_cmd) {
    HarvestOptions o;
    o.config = config;
    o.store = store;
    o.concurrency = concurrency;
    o.net = net;
    if (!from.empty()) o.filter.from = from;
    if (!until.empty()) o.filter.until = until;
    if (!set.empty()) o.filter.set = set;
    return harvest(o, out, err);
  }
  if (*analyze_cmd) return analyze(store, out_dir, format, out, err);
  if (*normalize_cmd) return normalize(store, rules_dir, out_dir, format, out, err);
  if (*serve_cmd) {
    ServeOptions o;
    o.fixture = fixture;
    o.port = port;
    o.page_size = page_size;
    o.faults = faults;
    return serve_fixture(o, stop, out, err);
  }
  return kExitUsage;
}

}  // namespace dcqual::cli
