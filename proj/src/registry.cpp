#include "itws/registry.hpp"

#include <algorithm>

namespace itws {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Vulnerable: return "Vulnerable";
    case Verdict::NotVulnerable: return "NotVulnerable";
    case Verdict::Untested: return "Untested";
  }
  return "?";
}

Verdict verdict_from_string(std::string_view name) {
  if (name == "Vulnerable") return Verdict::Vulnerable;
  if (name == "NotVulnerable") return Verdict::NotVulnerable;
  if (name == "Untested") return Verdict::Untested;
  throw Error(ErrorCode::InvalidParameter, "unknown verdict: " + std::string(name));
}

double effective_failure_rate(const ServiceRecord& record, double prior_weight) {
  double denom = static_cast<double>(record.invocations) + prior_weight;
  if (denom <= 0.0) return record.sla_failure_rate;
  return (static_cast<double>(record.failures) + record.sla_failure_rate * prior_weight) /
         denom;
}

void SelectionPolicy::validate() const {
  if (f < 0) throw Error(ErrorCode::InvalidParameter, "f must be >= 0");
  if (sla_prior_weight < 0)
    throw Error(ErrorCode::InvalidParameter, "sla_prior_weight must be >= 0");
  auto sorted = vulnerability_priority;
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] != kAllVectors[i])
      throw Error(ErrorCode::InvalidParameter,
                  "vulnerability_priority must be a permutation of all vectors");
  }
}

int SelectionPolicy::priority_index(AttackVector v) const {
  for (size_t i = 0; i < vulnerability_priority.size(); ++i)
    if (vulnerability_priority[i] == v) return static_cast<int>(i);
  return static_cast<int>(vulnerability_priority.size());
}

void Registry::register_service(ServiceRecord record) {
  if (record.id.empty())
    throw Error(ErrorCode::InvalidParameter, "service id must be non-empty");
  if (record.endpoint.empty())
    throw Error(ErrorCode::InvalidParameter, "service endpoint must be non-empty");
  if (record.sla_failure_rate < 0.0 || record.sla_failure_rate > 1.0)
    throw Error(ErrorCode::InvalidParameter, "sla_failure_rate must be in [0,1]");
  std::unique_lock lock(mu_);
  auto [it, inserted] = services_.emplace(record.id, std::move(record));
  if (!inserted)
    throw Error(ErrorCode::Conflict, "service already registered: " + it->first);
}

double Registry::record_invocation(const std::string& id, InvocationOutcome outcome) {
  std::unique_lock lock(mu_);
  auto it = services_.find(id);
  if (it == services_.end())
    throw Error(ErrorCode::NotFound, "service not registered: " + id);
  it->second.invocations += 1;
  if (outcome == InvocationOutcome::Failure) it->second.failures += 1;
  return effective_failure_rate(it->second, prior_weight_);
}

std::vector<Registry::RejectedEntry> Registry::apply_probe_results(
    const std::vector<VulnLogEntry>& entries) {
  std::vector<RejectedEntry> rejected;
  std::unique_lock lock(mu_);
  for (const auto& e : entries) {
    auto it = services_.find(e.service_id);
    if (it == services_.end()) {
      rejected.push_back({e, "unknown service id"});
      continue;
    }
    if (e.verdict == Verdict::Untested) continue;  // keeps whatever was known
    it->second.vulnerabilities[e.vector] = e.verdict;
  }
  return rejected;
}

std::vector<ServiceRecord> Registry::snapshot() const {
  std::shared_lock lock(mu_);
  std::vector<ServiceRecord> out;
  out.reserve(services_.size());
  for (const auto& [id, rec] : services_) out.push_back(rec);
  return out;
}

std::vector<ServiceRecord> Registry::snapshot_for(const std::string& functionality) const {
  std::shared_lock lock(mu_);
  std::vector<ServiceRecord> out;
  for (const auto& [id, rec] : services_)
    if (rec.functionality == functionality) out.push_back(rec);
  return out;
}

std::optional<ServiceRecord> Registry::find(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto it = services_.find(id);
  if (it == services_.end()) return std::nullopt;
  return it->second;
}

size_t Registry::size() const {
  std::shared_lock lock(mu_);
  return services_.size();
}

}  // namespace itws
