#pragma once

#include <string>
#include <utility>
#include <vector>

#include "itws/registry.hpp"
#include "itws/scanner.hpp"

namespace itws {

struct SelectionResult {
  std::vector<std::string> chosen;  // exactly 3f+1 ids, in selection order
  int clean_count = 0;              // chosen services with no offending verdict
  // Chosen despite offending verdicts, with the vectors they offend on.
  std::vector<std::pair<std::string, std::vector<AttackVector>>> backfilled;
};

// Vectors from the threat the candidate is (or may be) exploitable on.
std::vector<AttackVector> offending_vectors(const ServiceRecord& candidate,
                                            const ThreatProfile& threat,
                                            const SelectionPolicy& policy);

// Picks exactly 3f+1 services: clean candidates with the lowest effective
// failure rates first; when clean ones run out, backfills by least-severe
// offending vector, then failure rate, then id. Fully deterministic.
// Throws InsufficientDiversity when fewer than 3f+1 candidates exist.
SelectionResult select(const std::vector<ServiceRecord>& candidates,
                       const ThreatProfile& threat, const SelectionPolicy& policy);

}  // namespace itws
