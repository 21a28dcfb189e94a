#pragma once

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "itws/net.hpp"

namespace itws {

// A simulated backend: parser, dispatch and hash-table behavior are
// parameterized so individual vulnerability classes can be switched on and
// off per service.
struct MockServiceProfile {
  std::string id;

  enum class Parser { EagerTree, Streaming };
  enum class Dispatch { HeaderTrusting, BodyBased };
  enum class Hash { WeakHash, RandomizedHash };
  enum class Fault { None, Crash, ByzantineWrongAnswer, Slow };

  Parser parser_model = Parser::Streaming;
  Dispatch dispatch_model = Dispatch::BodyBased;
  Hash hash_model = Hash::RandomizedHash;

  std::chrono::milliseconds base_latency{10};
  std::chrono::microseconds per_element_cost{20};  // EagerTree: cost per parsed element
  int depth_limit = 1000;                          // Streaming: fast-reject threshold
  std::chrono::nanoseconds hash_probe_cost{100};   // cost per collision-chain comparison

  Fault fault_mode = Fault::None;
  std::chrono::milliseconds slow_delay{2000};

  uint16_t port = 0;               // 0: assigned from the fleet base port
  double sla_failure_rate = 0.0;   // carried into the registry when imported

  std::string framework_label() const;
  void validate() const;  // throws InvalidParameter
};

struct FleetStats {
  uint64_t requests_served = 0;
  uint64_t executions_completed = 0;
  uint64_t executions_cancelled = 0;
  std::map<std::string, uint64_t> operations_executed;
};

class MockService {
 public:
  explicit MockService(MockServiceProfile profile);
  ~MockService();

  uint16_t start(const std::string& host, uint16_t port);
  void stop();

  std::string endpoint_url() const;
  FleetStats stats() const;
  void set_fault_mode(MockServiceProfile::Fault mode);
  const MockServiceProfile& profile() const { return profile_; }

 private:
  net::HttpResponse handle(net::HttpRequest& req);
  net::HttpResponse run_service_request(net::HttpRequest& req);

  MockServiceProfile profile_;
  net::HttpServer server_;
  std::string host_;

  std::atomic<uint64_t> requests_served_{0};
  std::atomic<uint64_t> executions_completed_{0};
  std::atomic<uint64_t> executions_cancelled_{0};
  mutable std::mutex ops_mu_;
  std::map<std::string, uint64_t> operations_executed_;
};

// Owns a set of mock services. Services keep running until stop_all() or
// destruction.
class MockFleet {
 public:
  MockFleet() = default;
  ~MockFleet();

  // Starts one HTTP endpoint per profile. Profiles with port 0 get
  // base_port, base_port+1, ... (or ephemeral ports when base_port is 0).
  // Returns (id, endpoint url) pairs. Throws SpawnError naming the offending
  // profile on bind failure.
  std::vector<std::pair<std::string, std::string>> spawn(
      const std::vector<MockServiceProfile>& profiles, const std::string& host,
      uint16_t base_port);

  FleetStats stats(const std::string& id) const;  // throws NotFound
  MockService& service(const std::string& id);    // throws NotFound
  std::vector<std::string> ids() const;
  void stop_all();

 private:
  std::vector<std::unique_ptr<MockService>> services_;
};

// The five-service fleet used by the replay experiment: two eager-tree
// header-trusting weak-hash services and three hardened streaming services.
std::vector<MockServiceProfile> default_experiment_fleet();

// Deterministic quote table shared by every mock.
double quote_price(std::string_view symbol);

}  // namespace itws
