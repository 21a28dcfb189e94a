#pragma once

#include <chrono>
#include <set>
#include <string>
#include <vector>

#include "itws/attack_model.hpp"
#include "itws/net.hpp"

namespace itws {

struct ClientRequest {
  std::string envelope;
  net::Headers transport_headers;
  std::chrono::system_clock::time_point received_at{};
};

struct ScanFeature {
  std::string name;    // e.g. "nesting-depth"
  std::string detail;  // e.g. "75000 > 16"
};

// The set of attack vectors a request could exploit if it carried malicious
// content, with one supporting feature per flagged vector.
struct ThreatProfile {
  std::set<AttackVector> vectors;
  std::vector<ScanFeature> features;
  size_t peak_state_bytes = 0;  // scanner working-state high-water mark

  bool flagged(AttackVector v) const { return vectors.count(v) > 0; }
};

struct ScannerThresholds {
  int depth_flag = 16;
  size_t size_flag = 1024 * 1024;
  int attr_fanout_flag = 64;
  int element_count_flag = 10000;

  void validate() const;
};

// Single streaming pass over the request bytes: work and memory are O(size),
// memory independent of nesting depth (the scanner must not be a coercive-
// parsing victim itself). Malformed input is scanned best-effort and tagged
// with a malformed-input feature; this never throws on envelope content.
ThreatProfile scan(const ClientRequest& request, const ScannerThresholds& thresholds = {});

}  // namespace itws
