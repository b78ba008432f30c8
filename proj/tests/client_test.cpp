#include <gtest/gtest.h>

#include <set>

#include "dcqual/errors.hpp"
#include "dcqual/mock_provider.hpp"
#include "dcqual/oai_protocol.hpp"
#include "support.hpp"

using namespace dcqual;
using namespace dcqual::oai;
using testing_support::InProcessTransport;

namespace {

const Endpoint kMock{"mock", "http://127.0.0.1/oai"};

struct Harness {
  std::shared_ptr<mock::MockProvider> provider;
  std::unique_ptr<Client> client;
  std::vector<std::chrono::milliseconds> sleeps;

  Harness(mock::Fixture fixture, std::size_t page_size = 100, const std::string& faults = "",
          int max_retries = 3) {
    mock::MockOptions o;
    o.page_size = page_size;
    o.faults = mock::parse_fault_script(faults);
    provider = std::make_shared<mock::MockProvider>(std::move(fixture), o);
    FetchPolicy policy;
    policy.max_retries = max_retries;
    policy.base_backoff = std::chrono::milliseconds(100);
    client = std::make_unique<Client>(policy, std::make_unique<InProcessTransport>(provider));
    client->set_sleeper([this](std::chrono::milliseconds d) { sleeps.push_back(d); });
  }

  std::pair<HarvestSummary, std::vector<std::string>> harvest() {
    std::vector<std::string> ids;
    auto s = client->harvest_list_records(kMock, "oai_dc", [&](OaiRecord&& r) { ids.push_back(r.header.identifier); });
    return {s, ids};
  }
};

mock::Fixture sized(std::size_t n, std::size_t deleted = 0) {
  std::mt19937_64 rng(n * 31 + deleted);
  return testing_support::random_fixture(n, deleted, rng);
}

/// Always fails to connect.
class DeadTransport : public HttpTransport {
 public:
  HttpResponse get(const std::string&, const RequestOptions&) override {
    throw TransportFailure(TransportFailure::Kind::connection, "connection refused");
  }
};

class CannedTransport : public HttpTransport {
 public:
  explicit CannedTransport(HttpResponse r) : r_(std::move(r)) {}
  HttpResponse get(const std::string&, const RequestOptions&) override { return r_; }

 private:
  HttpResponse r_;
};

}  // namespace

TEST(Client, IdentifyEchoesFixtureName) {
  mock::Fixture f;
  f.repository_name = "Fixture Repo";
  Harness h(f);
  EXPECT_EQ(h.client->identify(kMock).repository_name, "Fixture Repo");
}

TEST(Client, IdentifyOverHtmlIsNotOaiPmh) {
  Client c({}, std::make_unique<CannedTransport>(HttpResponse{200, "<html><body>hi</body></html>", {}}));
  EXPECT_THROW(c.identify(kMock), NotOaiPmh);
}

TEST(Client, IdentifyRetriesTwo503ThenSucceeds) {
  Harness h(mock::Fixture{}, 100, "503:0*2@Identify", 3);
  EXPECT_NO_THROW(h.client->identify(kMock));
  EXPECT_EQ(h.provider->faults_fired(), 2u);
}

TEST(Client, IdentifyGivesUpAfterRetries) {
  Harness h(mock::Fixture{}, 100, "503:0*5@Identify", 3);
  EXPECT_THROW(h.client->identify(kMock), NetworkError);
  EXPECT_EQ(h.provider->requests(), 4u);
}

TEST(Client, UnsupportedVersion) {
  mock::Fixture f;
  f.protocol_version = "1.1";
  Harness h(f);
  EXPECT_THROW(h.client->identify(kMock), UnsupportedVersion);
}

TEST(Client, RetryAfterOverridesBackoff) {
  Harness h(mock::Fixture{}, 100, "503:7@Identify");
  h.client->identify(kMock);
  ASSERT_EQ(h.sleeps.size(), 1u);
  EXPECT_EQ(h.sleeps[0], std::chrono::seconds(7));
}

TEST(Client, ExponentialBackoffWithoutRetryAfter) {
  Harness h(sized(3), 100, "malformed*3@Identify", 3);
  h.client->identify(kMock);
  ASSERT_EQ(h.sleeps.size(), 3u);
  EXPECT_EQ(h.sleeps[0].count(), 100);
  EXPECT_EQ(h.sleeps[1].count(), 200);
  EXPECT_EQ(h.sleeps[2].count(), 400);
}

TEST(Client, HttpErrorWithoutOaiBody) {
  Client c({}, std::make_unique<CannedTransport>(HttpResponse{404, "not found", {}}));
  EXPECT_THROW(c.identify(kMock), NetworkError);
}

TEST(Verify, HealthyMock) {
  Harness h(sized(2));
  const auto r = h.client->verify_endpoint(kMock);
  EXPECT_TRUE(r.alive);
  EXPECT_TRUE(r.supports_oai_dc);
}

TEST(Verify, ConnectionRefused) {
  FetchPolicy p;
  p.max_retries = 1;
  Client c(p, std::make_unique<DeadTransport>());
  c.set_sleeper([](auto) {});
  const auto r = c.verify_endpoint(kMock);
  EXPECT_FALSE(r.alive);
  EXPECT_FALSE(r.supports_oai_dc);
}

TEST(Verify, ConnectionRefusedOverRealSocket) {
  // Grab a free port, then close the server so nothing listens there.
  std::string url;
  {
    mock::MockServer s(std::make_shared<mock::MockProvider>(mock::Fixture{}));
    url = s.base_url();
  }
  FetchPolicy p;
  p.max_retries = 0;
  p.timeout = std::chrono::milliseconds(2000);
  const auto r = verify_endpoint(Endpoint("dead", url), p);
  EXPECT_FALSE(r.alive);
  EXPECT_FALSE(r.supports_oai_dc);
}

TEST(Verify, OnlyMarcxml) {
  mock::Fixture f;
  f.formats = {{"marcxml", "", ""}};
  Harness h(f);
  const auto r = h.client->verify_endpoint(kMock);
  EXPECT_TRUE(r.alive);
  EXPECT_FALSE(r.supports_oai_dc);
}

TEST(Harvest, ThirteenPagesFor1234Records) {
  Harness h(sized(1234), 100);
  auto [s, ids] = h.harvest();
  EXPECT_EQ(s.pages, 13u);
  EXPECT_EQ(s.records, 1234u);
  EXPECT_TRUE(s.complete);
  EXPECT_EQ(std::set<std::string>(ids.begin(), ids.end()).size(), 1234u);
}

TEST(Harvest, EmptyProviderIsEmptyCompleteHarvest) {
  Harness h(sized(0));
  auto [s, ids] = h.harvest();
  EXPECT_EQ(s.records, 0u);
  EXPECT_TRUE(s.complete);
  EXPECT_TRUE(s.errors.empty());
}

TEST(Harvest, DeletedRecordsCountedNotDelivered) {
  Harness h(sized(8, 2), 3);
  auto [s, ids] = h.harvest();
  EXPECT_EQ(s.records, 8u);
  EXPECT_EQ(s.deleted, 2u);
  EXPECT_EQ(ids.size(), 8u);
}

TEST(Harvest, DeliversInArrivalOrder) {
  auto f = sized(25);
  std::vector<std::string> expected;
  for (const auto& r : f.records) expected.push_back(r.header.identifier);
  Harness h(f, 4);
  EXPECT_EQ(h.harvest().second, expected);
}

TEST(Harvest, PoliteDelayBetweenPages) {
  auto f = sized(10);
  mock::MockOptions o;
  o.page_size = 3;
  auto provider = std::make_shared<mock::MockProvider>(f, o);
  FetchPolicy p;
  p.polite_delay = std::chrono::milliseconds(250);
  Client c(p, std::make_unique<InProcessTransport>(provider));
  std::vector<std::chrono::milliseconds> sleeps;
  c.set_sleeper([&](auto d) { sleeps.push_back(d); });
  const auto s = c.harvest_list_records(kMock, "oai_dc", [](OaiRecord&&) {});
  EXPECT_EQ(s.pages, 4u);
  ASSERT_EQ(sleeps.size(), 3u);
  for (auto d : sleeps) EXPECT_EQ(d.count(), 250);
}

TEST(Harvest, ExpiredTokenRestartsOnce) {
  Harness h(sized(50), 10, "expire@3");
  auto [s, ids] = h.harvest();
  EXPECT_TRUE(s.complete);
  EXPECT_EQ(s.restarts, 1u);
  EXPECT_EQ(s.records, 50u);
  EXPECT_EQ(ids.size(), 50u);
  EXPECT_EQ(s.duplicates, 20u);
}

TEST(Harvest, SecondExpiryFails) {
  Harness h(sized(50), 10, "expire*2@3");
  auto [s, ids] = h.harvest();
  EXPECT_FALSE(s.complete);
  EXPECT_EQ(s.restarts, 1u);
  ASSERT_EQ(s.errors.size(), 1u);
  EXPECT_NE(s.errors[0].find("badResumptionToken"), std::string::npos);
}

TEST(Harvest, NetworkFailureMidListReportsPartialProgress) {
  Harness h(sized(30), 10, "503:0*9@3", 2);
  auto [s, ids] = h.harvest();
  EXPECT_FALSE(s.complete);
  EXPECT_EQ(s.records, 20u);
  EXPECT_EQ(s.pages, 2u);
  ASSERT_EQ(s.errors.size(), 1u);
}

TEST(Harvest, MalformedPageIsRetried) {
  Harness h(sized(30), 10, "malformed@2");
  auto [s, ids] = h.harvest();
  EXPECT_TRUE(s.complete);
  EXPECT_EQ(s.records, 30u);
}

TEST(Harvest, SelectiveFiltersTravelInTokens) {
  auto f = sized(40);
  f.sets = {{"col_1", "Uno"}};
  std::size_t expected = 0;
  for (const auto& r : f.records) {
    if (r.header.set_specs[0] == "col_1" && r.header.datestamp >= "2017-03") ++expected;
  }
  Harness h(f, 3);
  HarvestFilter filter;
  filter.set = "col_1";
  filter.from = "2017-03";
  std::size_t n = 0;
  const auto s = h.client->harvest_list_records(kMock, "oai_dc", [&](OaiRecord&& r) {
    EXPECT_EQ(r.header.set_specs[0], "col_1");
    ++n;
  }, filter);
  EXPECT_TRUE(s.complete);
  EXPECT_EQ(n, expected);
}

TEST(Harvest, OverRealHttp) {
  auto provider = std::make_shared<mock::MockProvider>(sized(57, 3), mock::MockOptions{7, {}, ""});
  mock::MockServer server(provider);
  std::size_t n = 0;
  const auto s = harvest_list_records(Endpoint("live", server.base_url()), "oai_dc", FetchPolicy{},
                                      [&](OaiRecord&&) { ++n; });
  EXPECT_TRUE(s.complete);
  EXPECT_EQ(n, 57u);
  EXPECT_EQ(s.deleted, 3u);
  EXPECT_EQ(s.pages, 9u);
}
