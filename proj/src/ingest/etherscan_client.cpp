#include "repute/ingest/etherscan_client.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "repute/common/error.hpp"
#include "repute/common/log.hpp"

namespace repute::ingest {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool is_empty_result(const nlohmann::json& body) {
  const auto status = body.value("status", std::string{});
  const auto message = body.value("message", std::string{});
  return status == "0" && message.rfind("No transactions found", 0) == 0;
}

}  // namespace

RateLimiter::RateLimiter(double requests_per_second)
    : interval_(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(requests_per_second > 0 ? 1.0 / requests_per_second : 0.0))),
      next_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

std::string api_key_from_env() {
  const char* key = std::getenv("ETHERSCAN_API_KEY");
  return key ? std::string(key) : std::string{};
}

EtherscanClient::EtherscanClient(EtherscanConfig cfg)
    : cfg_(std::move(cfg)), limiter_(cfg_.requests_per_second) {}

nlohmann::json EtherscanClient::get_json(const std::string& query, const std::string& endpoint_name) {
  const auto url = split_url(cfg_.base_url);
  std::string full = url.path + "?" + query;
  if (!cfg_.api_key.empty()) full += "&apikey=" + cfg_.api_key;

  std::string last_error = "no attempt made";
  auto backoff = cfg_.initial_backoff;
  for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    limiter_.acquire();
    httplib::Client client(url.origin);
    client.set_connection_timeout(cfg_.timeout);
    client.set_read_timeout(cfg_.timeout);
    auto res = client.Get(full);
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
    } else if (res->status != 200) {
      last_error = "HTTP status " + std::to_string(res->status);
    } else {
      try {
        auto body = nlohmann::json::parse(res->body);
        if (body.contains("status") && body["status"] == "0" && !is_empty_result(body)) {
          last_error = "API error: " + body.value("message", std::string{}) + " " +
                       (body.contains("result") ? body["result"].dump() : std::string{});
        } else {
          return body;
        }
      } catch (const nlohmann::json::parse_error& e) {
        last_error = std::string("malformed JSON body: ") + e.what();
      }
    }
    logger()->warn("{} attempt {}/{} failed: {}", endpoint_name, attempt, cfg_.max_attempts, last_error);
  }
  throw TransportError(endpoint_name, last_error);
}

evm::Bytecode EtherscanClient::fetch_bytecode(const std::string& address) {
  const auto body = get_json("module=proxy&action=eth_getCode&address=" + address + "&tag=latest", "proxy/eth_getCode");
  if (!body.contains("result") || !body["result"].is_string()) {
    throw TransportError("proxy/eth_getCode", "response has no string result");
  }
  return evm::Bytecode::from_hex(body["result"].get<std::string>());
}

std::vector<TxRecord> EtherscanClient::fetch_tx_pages(const std::string& address, bool internal) {
  const std::string action = internal ? "txlistinternal" : "txlist";
  const std::string endpoint = "account/" + action;
  // Etherscan caps page * offset at 10000; past that the window restarts from the last block seen.
  constexpr long long kWindowCap = 10000;
  std::vector<TxRecord> out;
  long long start_block = 0;
  for (;;) {
    long long last_block = start_block;
    bool window_exhausted = false;
    for (int page = 1;; ++page) {
      const std::string query = "module=account&action=" + action + "&address=" + address +
                                "&startblock=" + std::to_string(start_block) + "&endblock=99999999&page=" +
                                std::to_string(page) + "&offset=" + std::to_string(cfg_.page_size) + "&sort=asc";
      const auto body = get_json(query, endpoint);
      if (is_empty_result(body)) break;
      const auto& result = body.at("result");
      if (!result.is_array()) throw TransportError(endpoint, "result is not an array");
      for (const auto& entry : result) {
        out.push_back(tx_from_json(entry, internal));
        last_block = out.back().block_number;
      }
      if (static_cast<long long>(result.size()) < cfg_.page_size) break;
      if (static_cast<long long>(page + 1) * cfg_.page_size > kWindowCap) {
        window_exhausted = true;
        break;
      }
    }
    if (!window_exhausted) break;
    if (last_block == start_block) {
      logger()->warn("{}: block {} alone exceeds the pagination window; stopping", endpoint, last_block);
      break;
    }
    // The last block may be partially read; drop it and refetch from its start.
    std::erase_if(out, [&](const TxRecord& t) { return t.block_number == last_block; });
    start_block = last_block;
  }
  return out;
}

ContractRecord EtherscanClient::fetch_contract(const std::string& address) {
  ContractRecord rec;
  rec.address = normalize_address(address);
  rec.bytecode = fetch_bytecode(rec.address);
  rec.transactions = fetch_tx_pages(rec.address, false);
  rec.internal_transactions = fetch_tx_pages(rec.address, true);
  return rec;
}

std::vector<ContractRecord> EtherscanClient::fetch_many(const std::vector<std::string>& addresses, int workers) {
  std::vector<ContractRecord> out(addresses.size());
  std::vector<std::exception_ptr> errors(addresses.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < addresses.size(); i = next++) {
      try {
        out[i] = fetch_contract(addresses[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(addresses.size())));
  for (int t = 0; t < n; ++t) pool.emplace_back(work);
  pool.clear();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace repute::ingest
