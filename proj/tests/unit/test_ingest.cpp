#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "repute/common/error.hpp"
#include "repute/ingest/etherscan_client.hpp"
#include "repute/ingest/fixture.hpp"
#include "repute/ingest/records.hpp"

using namespace repute;
using namespace repute::ingest;
namespace fs = std::filesystem;

namespace {

const std::string kAddr = "0x00000000000000000000000000000000000000aa";

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("repute_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

nlohmann::json tx_json(long long block, long long ts) {
  return {{"blockNumber", std::to_string(block)}, {"timeStamp", std::to_string(ts)},
          {"from", "0xAB"},                       {"to", kAddr},
          {"value", "1000000000000000000000"},   {"gasUsed", "21000"},
          {"gasPrice", "30000000000"},           {"isError", "0"}};
}

}  // namespace

TEST(Records, WeiParsesBeyond64Bits) {
  const auto w = Wei::parse("340282366920938463463374607431768211455");
  EXPECT_EQ(w.to_string(), "340282366920938463463374607431768211455");
  EXPECT_THROW(Wei::parse("340282366920938463463374607431768211456"), ParseError);
  EXPECT_THROW(Wei::parse("12a"), ParseError);
  EXPECT_THROW(Wei::parse(""), ParseError);
  EXPECT_EQ(Wei::parse("0").to_string(), "0");
}

TEST(Records, LabelsAndAddresses) {
  EXPECT_EQ(parse_label("Illicit"), Label::Illicit);
  EXPECT_EQ(parse_label("1"), Label::Illicit);
  EXPECT_EQ(parse_label("reputable"), Label::Reputable);
  EXPECT_THROW(parse_label("maybe"), ParseError);
  EXPECT_EQ(normalize_address("0xABCDEF0000000000000000000000000000000001"),
            "0xabcdef0000000000000000000000000000000001");
  EXPECT_THROW(normalize_address("0x1234"), ParseError);
}

TEST(Records, TxJsonAcceptsStringsAndNumbers) {
  auto j = tx_json(5, 1'600'000'123);
  j["gasUsed"] = 21000;
  const auto tx = tx_from_json(j, false);
  EXPECT_EQ(tx.block_number, 5);
  EXPECT_EQ(tx.timestamp, 1'600'000'123);
  EXPECT_EQ(tx.from_addr, "0xab");
  EXPECT_EQ(tx.gas_used, 21000);
  EXPECT_EQ(tx.value.to_string(), "1000000000000000000000");
  auto bad = tx_json(5, 1);
  bad.erase("timeStamp");
  EXPECT_THROW(tx_from_json(bad, false), ParseError);
}

TEST(Records, ContractJsonRoundTrip) {
  ContractRecord c;
  c.address = kAddr;
  c.bytecode = evm::Bytecode::from_hex("0x6001");
  c.transactions.push_back(tx_from_json(tx_json(2, 1'600'000'000), false));
  c.internal_transactions.push_back(tx_from_json(tx_json(1, 1'600'000'000), true));
  const auto back = contract_from_json(nlohmann::json::parse(contract_to_json(c).dump()));
  EXPECT_EQ(back.address, c.address);
  EXPECT_EQ(back.bytecode, c.bytecode);
  EXPECT_EQ(back.transactions, c.transactions);
  EXPECT_EQ(back.internal_transactions.size(), 1u);
  const auto merged = merge_transactions(c);
  ASSERT_EQ(merged.size(), 2u);
  EXPECT_TRUE(merged[0].is_internal);  // same timestamp, lower block first
}

TEST(Fixture, DirectoryRoundTripAndLabels) {
  const auto dir = temp_dir("fixture");
  ContractRecord a;
  a.address = "0x00000000000000000000000000000000000000b2";
  a.label = Label::Illicit;
  ContractRecord b;
  b.address = "0x00000000000000000000000000000000000000a1";
  b.label = Label::Reputable;
  write_fixture_dir(dir, {a, b});
  const auto loaded = load_fixture_dir(dir);
  ASSERT_EQ(loaded.size(), 2u);
  EXPECT_EQ(loaded[0].address, b.address);
  EXPECT_EQ(loaded[0].label, Label::Reputable);
  EXPECT_EQ(loaded[1].label, Label::Illicit);

  std::ofstream(dir / "dup.json") << contract_to_json(a).dump();
  EXPECT_THROW(load_fixture_dir(dir), Error);
  fs::remove_all(dir);
}

class EtherscanServer : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Get("/api", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      if (fail_first_ > 0) {
        --fail_first_;
        res.status = 502;
        return;
      }
      const auto action = req.get_param_value("action");
      nlohmann::json body;
      if (action == "eth_getCode") {
        body = {{"jsonrpc", "2.0"}, {"result", "0x6001600201"}};
      } else if (action == "txlist") {
        const int page = std::stoi(req.get_param_value("page"));
        const int offset = std::stoi(req.get_param_value("offset"));
        const int total = 5;
        auto result = nlohmann::json::array();
        for (int i = (page - 1) * offset; i < std::min(total, page * offset); ++i) {
          result.push_back(tx_json(100 + i, 1'600'000'000 + 60 * i));
        }
        if (result.empty()) {
          body = {{"status", "0"}, {"message", "No transactions found"}, {"result", nlohmann::json::array()}};
        } else {
          body = {{"status", "1"}, {"message", "OK"}, {"result", result}};
        }
      } else if (action == "txlistinternal") {
        if (api_error_) {
          body = {{"status", "0"}, {"message", "NOTOK"}, {"result", "Invalid API Key"}};
        } else {
          body = {{"status", "0"}, {"message", "No transactions found"}, {"result", nlohmann::json::array()}};
        }
      }
      res.set_content(body.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  EtherscanConfig config() const {
    EtherscanConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/api";
    c.requests_per_second = 1000;
    c.page_size = 2;
    c.initial_backoff = std::chrono::milliseconds(1);
    c.timeout = std::chrono::seconds(5);
    return c;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  std::atomic<int> fail_first_{0};
  std::atomic<bool> api_error_{false};
};

TEST_F(EtherscanServer, FetchesBytecodeAndPaginates) {
  EtherscanClient client(config());
  const auto rec = client.fetch_contract(kAddr);
  EXPECT_EQ(rec.bytecode.to_hex(), "0x6001600201");
  ASSERT_EQ(rec.transactions.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(rec.transactions[i].block_number, 100 + static_cast<long long>(i));
  EXPECT_TRUE(rec.internal_transactions.empty());
}

TEST_F(EtherscanServer, RetriesTransientFailures) {
  fail_first_ = 2;
  EtherscanClient client(config());
  EXPECT_EQ(client.fetch_bytecode(kAddr).to_hex(), "0x6001600201");
  EXPECT_EQ(requests_.load(), 3);
}

TEST_F(EtherscanServer, ExhaustedRetriesNameTheEndpoint) {
  fail_first_ = 10;
  EtherscanClient client(config());
  try {
    client.fetch_bytecode(kAddr);
    FAIL() << "expected TransportError";
  } catch (const TransportError& e) {
    EXPECT_EQ(e.endpoint(), "proxy/eth_getCode");
  }
  EXPECT_EQ(requests_.load(), 3);
}

TEST_F(EtherscanServer, ApiErrorIsTransportError) {
  api_error_ = true;
  auto cfg = config();
  cfg.max_attempts = 1;
  EtherscanClient client(cfg);
  EXPECT_THROW(client.fetch_tx_pages(kAddr, true), TransportError);
}

TEST_F(EtherscanServer, FetchManyKeepsOrder) {
  EtherscanClient client(config());
  const std::vector<std::string> addrs = {kAddr, "0x00000000000000000000000000000000000000bb"};
  const auto recs = client.fetch_many(addrs, 2);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].address, addrs[0]);
  EXPECT_EQ(recs[1].address, addrs[1]);
}

TEST(RateLimiter, SpacesCalls) {
  RateLimiter limiter(100.0);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 6; ++i) limiter.acquire();
  EXPECT_GE(std::chrono::steady_clock::now() - start, std::chrono::milliseconds(45));
}
