#pragma once

#include <chrono>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "repute/ingest/records.hpp"

namespace repute::ingest {

/// Spaces calls at least 1/rate apart; shared by concurrent fetches.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second);
  void acquire();

 private:
  std::mutex mu_;
  std::chrono::steady_clock::duration interval_;
  std::chrono::steady_clock::time_point next_;
};

struct EtherscanConfig {
  /// Scheme + host (+ port) + path, e.g. "https://api.etherscan.io/api".
  std::string base_url = "https://api.etherscan.io/api";
  std::string api_key;
  double requests_per_second = 5.0;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  int page_size = 10000;
  std::chrono::seconds timeout{30};
};

/// Reads ETHERSCAN_API_KEY; empty when unset.
std::string api_key_from_env();

class EtherscanClient {
 public:
  explicit EtherscanClient(EtherscanConfig cfg);

  /// Bytecode plus fully paginated txlist and txlistinternal.
  ContractRecord fetch_contract(const std::string& address);

  /// Concurrent fetch over addresses (up to `workers` threads) sharing one limiter.
  std::vector<ContractRecord> fetch_many(const std::vector<std::string>& addresses, int workers = 4);

  std::vector<TxRecord> fetch_tx_pages(const std::string& address, bool internal);
  evm::Bytecode fetch_bytecode(const std::string& address);

 private:
  /// GET with rate limiting and retry. Returns the parsed JSON body.
  nlohmann::json get_json(const std::string& query, const std::string& endpoint_name);

  EtherscanConfig cfg_;
  RateLimiter limiter_;
};

}  // namespace repute::ingest
