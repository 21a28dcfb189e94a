#include "itws/selector.hpp"

#include <algorithm>
#include <cmath>

namespace itws {

std::vector<AttackVector> offending_vectors(const ServiceRecord& candidate,
                                            const ThreatProfile& threat,
                                            const SelectionPolicy& policy) {
  std::vector<AttackVector> out;
  for (AttackVector v : kAllVectors) {
    if (!threat.flagged(v)) continue;
    Verdict verdict = candidate.verdict_for(v);
    if (verdict == Verdict::Vulnerable) out.push_back(v);
    else if (verdict == Verdict::Untested && !policy.untested_is_clean) out.push_back(v);
  }
  return out;
}

namespace {

struct RankedCandidate {
  const ServiceRecord* record;
  std::vector<AttackVector> offending;
  double rate;
  // Severity of the worst offense: lower priority_index = more important to
  // avoid. Clean candidates use a sentinel larger than any real index.
  int worst_priority_index;

  bool clean() const { return offending.empty(); }
};

}  // namespace

SelectionResult select(const std::vector<ServiceRecord>& candidates,
                       const ThreatProfile& threat, const SelectionPolicy& policy) {
  policy.validate();
  const size_t want = 3 * static_cast<size_t>(policy.f) + 1;
  if (candidates.size() < want)
    throw Error(ErrorCode::InsufficientDiversity,
                "need " + std::to_string(want) + " candidates, have " +
                    std::to_string(candidates.size()) + " (short by " +
                    std::to_string(want - candidates.size()) + ")");

  std::vector<RankedCandidate> ranked;
  ranked.reserve(candidates.size());
  for (const ServiceRecord& rec : candidates) {
    RankedCandidate rc;
    rc.record = &rec;
    rc.offending = offending_vectors(rec, threat, policy);
    rc.rate = effective_failure_rate(rec, policy.sla_prior_weight);
    rc.worst_priority_index = static_cast<int>(kAllVectors.size());
    for (AttackVector v : rc.offending)
      rc.worst_priority_index = std::min(rc.worst_priority_index, policy.priority_index(v));
    ranked.push_back(std::move(rc));
  }

  // Total order: clean before offending; clean ties by (rate, id); offending
  // by least-severe worst offense first, then (rate, id). The id tie-break
  // makes the whole selection deterministic.
  std::sort(ranked.begin(), ranked.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.clean() != b.clean()) return a.clean();
    if (!a.clean()) {
      if (a.worst_priority_index != b.worst_priority_index)
        return a.worst_priority_index > b.worst_priority_index;  // lower severity first
    }
    if (a.rate != b.rate) return a.rate < b.rate;
    return a.record->id < b.record->id;
  });

  SelectionResult result;
  for (size_t i = 0; i < want; ++i) {
    const RankedCandidate& rc = ranked[i];
    result.chosen.push_back(rc.record->id);
    if (rc.clean()) {
      ++result.clean_count;
    } else {
      result.backfilled.emplace_back(rc.record->id, rc.offending);
    }
  }
  return result;
}

}  // namespace itws
