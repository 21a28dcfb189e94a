#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "itws/attack_model.hpp"
#include "itws/net.hpp"
#include "itws/registry.hpp"

namespace itws {

// Probe schedule parameters. The defaults are the standard attack settings:
// 2 parallel attack streams x 4 requests, 500 ms between test probes, 750 ms
// between attack requests, 4 s recovery, 5 s tail, 75,000 nested elements,
// medians over the last 10 samples of each kind.
struct ProbeSettings {
  int parallel_attack_streams = 2;
  int requests_per_stream = 4;
  std::chrono::milliseconds test_probe_interval{500};
  std::chrono::milliseconds attack_request_interval{750};
  std::chrono::milliseconds server_recovery_time{4000};
  std::chrono::milliseconds stop_after_last_tampered{5000};
  int coercive_depth = 75000;
  size_t oversize_bytes = 2 * 1024 * 1024;
  size_t collision_key_count = 1000;
  int median_window = 10;

  // A tampered/untampered median ratio outside [lower, upper] is a DoS hit.
  double band_lower = 0.5;
  double band_upper = 2.0;
  std::chrono::milliseconds request_timeout{30000};

  void validate() const;  // throws InvalidParameter
  // Divides every duration (not counts or sizes) by `factor`, keeping a 1 ms
  // floor. factor >= 1; factor 1 reproduces the faithful schedule.
  ProbeSettings scaled(double factor) const;
  uint64_t settings_hash() const;
};

struct TimingSample {
  enum class Kind { Tampered, Untampered };
  enum class Outcome { Responded, TimedOut, ConnectionError };

  Kind kind{};
  Outcome outcome{};
  // Last request byte handed off -> first response byte back. Present iff
  // the request got a response.
  std::optional<std::chrono::microseconds> response_time;
  std::chrono::steady_clock::time_point sent_at{};
  std::chrono::steady_clock::time_point completed_at{};
};

struct ProbeOutcome {
  AttackVector vector{};
  Verdict verdict = Verdict::Untested;
  double ratio = 0.0;                // DoS vectors: median_tampered / median_untampered
  double median_tampered_ms = 0.0;   // timed-out samples censored at the request timeout
  double median_untampered_ms = 0.0;
  int tampered_samples = 0;    // window sizes actually used
  int untampered_samples = 0;
  int tampered_timeouts = 0;
  int untampered_timeouts = 0;
  std::string detail;

  int percentage() const { return verdict == Verdict::Vulnerable ? 100 : 1; }
};

// Median with the even case averaged; used for the probe statistics and
// exposed so tests can check it against an independent oracle.
double median_of(std::vector<double> values);

// Black-box DoS probe: a continuous benign test-probe stream overlapped with
// parallel attack streams, preceded by a recovery quiet period and followed
// by a tail of test probes. Vulnerable when the median ratio leaves the
// neutrality band or any request in the attack window times out.
// Throws ProbeAborted when the warm-up fails, ProbeInvalid when no
// untampered data exists.
ProbeOutcome run_dos_probe(const net::Endpoint& endpoint, AttackVector vector,
                           const ProbeSettings& settings);

inline const std::vector<std::string> kDefaultOperations = {
    std::string(kOpGetQuote), std::string(kOpPurchaseStock)};

// Marker-based probe for the semantic vectors (spoofing, injection).
ProbeOutcome run_semantic_probe(const net::Endpoint& endpoint, AttackVector vector,
                                const ProbeSettings& settings,
                                std::span<const std::string> operations = kDefaultOperations);

struct ProbeReportEntry {
  VulnLogEntry entry;
  std::optional<ProbeOutcome> outcome;  // absent for untested / not-probeable
};

// Probes every registered service for every requested vector, sequentially
// per service with recovery gaps in between. Individual aborted probes become
// Untested entries instead of failing the run. Obfuscation has no probe
// protocol of its own and is recorded as Untested with a not-probeable note.
// Never touches the registry's failure-rate counters.
std::vector<ProbeReportEntry> pentest_all(const Registry& registry,
                                          const ProbeSettings& settings,
                                          std::span<const AttackVector> vectors);

std::vector<VulnLogEntry> to_log_entries(const std::vector<ProbeReportEntry>& report);

}  // namespace itws
