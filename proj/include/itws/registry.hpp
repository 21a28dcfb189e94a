#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "itws/attack_model.hpp"

namespace itws {

enum class Verdict { Vulnerable, NotVulnerable, Untested };
std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view name);

// One candidate backend service with its SLA prior, invocation counters and
// per-vector vulnerability verdicts.
struct ServiceRecord {
  std::string id;
  std::string endpoint;
  std::string functionality = "stock-quote";
  std::string framework_label;  // informational only
  double sla_failure_rate = 0.0;
  uint64_t invocations = 0;
  uint64_t failures = 0;
  std::map<AttackVector, Verdict> vulnerabilities;  // absent vector = Untested

  Verdict verdict_for(AttackVector v) const {
    auto it = vulnerabilities.find(v);
    return it == vulnerabilities.end() ? Verdict::Untested : it->second;
  }
};

// Pseudo-count blend of the SLA prior with observed outcomes:
//   (failures + sla * w) / (invocations + w)
// Starts at the SLA value and converges to the empirical rate.
double effective_failure_rate(const ServiceRecord& record, double prior_weight);

enum class InvocationOutcome { Success, Failure };

struct VulnLogEntry {
  std::string service_id;
  AttackVector vector{};
  Verdict verdict = Verdict::Untested;
  std::string note;  // e.g. "not-probeable", "probe-aborted"
};

struct SelectionPolicy {
  int f = 1;  // tolerated faulty replicas; 3f+1 are selected
  // Permutation of all six vectors; index 0 is most important to avoid.
  std::array<AttackVector, 6> vulnerability_priority = kAllVectors;
  double sla_prior_weight = 10.0;
  bool untested_is_clean = true;

  void validate() const;  // throws InvalidParameter
  // Rank in the priority order; 0 = most important to avoid.
  int priority_index(AttackVector v) const;
};

// Thread-safe service store: concurrent readers, serialized writers.
class Registry {
 public:
  explicit Registry(double sla_prior_weight = 10.0) : prior_weight_(sla_prior_weight) {}

  void register_service(ServiceRecord record);  // throws Conflict / InvalidParameter

  // Returns the updated effective failure rate. Throws NotFound.
  double record_invocation(const std::string& id, InvocationOutcome outcome);

  struct RejectedEntry {
    VulnLogEntry entry;
    std::string reason;
  };
  // Applies probe verdicts; Untested entries leave prior verdicts intact.
  // Entries naming unknown services are returned, the rest are applied.
  std::vector<RejectedEntry> apply_probe_results(const std::vector<VulnLogEntry>& entries);

  std::vector<ServiceRecord> snapshot() const;
  std::vector<ServiceRecord> snapshot_for(const std::string& functionality) const;
  std::optional<ServiceRecord> find(const std::string& id) const;
  size_t size() const;
  double prior_weight() const { return prior_weight_; }

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, ServiceRecord> services_;
  double prior_weight_;
};

}  // namespace itws
