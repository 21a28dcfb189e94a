#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "itws/error.hpp"

namespace itws {

// The closed set of attack vectors, in canonical iteration order.
enum class AttackVector {
  CoerciveParsing,
  OversizePayload,
  XmlInjection,
  SoapActionSpoofing,
  HashCollision,
  AttackObfuscation,
};

inline constexpr std::array<AttackVector, 6> kAllVectors = {
    AttackVector::CoerciveParsing,   AttackVector::OversizePayload,
    AttackVector::XmlInjection,      AttackVector::SoapActionSpoofing,
    AttackVector::HashCollision,     AttackVector::AttackObfuscation,
};

std::string_view to_string(AttackVector v);
AttackVector vector_from_string(std::string_view name);  // throws InvalidParameter
bool is_dos_vector(AttackVector v);  // timing-probed vectors

using HeaderList = std::vector<std::pair<std::string, std::string>>;

struct AttackPayload {
  AttackVector vector{};
  std::string envelope;          // complete XML request envelope
  HeaderList transport_headers;  // e.g. the SOAPAction operation identifier
  std::optional<std::string> expected_marker;  // response token proving attack success
};

// --- canonical wire format ---------------------------------------------------
// All generators build on one fixed envelope skeleton so outputs are
// byte-reproducible. See docs/wire-format.md for the exact bytes.

inline constexpr std::string_view kSoapActionHeader = "SOAPAction";
inline constexpr std::string_view kServiceNamespace = "urn:stockquote";
inline constexpr std::string_view kOpaqueRegionElement = "EncryptedRegion";
inline constexpr std::string_view kExecutedOpElement = "executedOperation";
inline constexpr std::string_view kOpGetQuote = "GetQuote";
inline constexpr std::string_view kOpPurchaseStock = "PurchaseStock";
inline constexpr std::string_view kInjectionMarker = "XINJPROBE1MARK";
inline constexpr std::string_view kInjectedElementName = "injected";

std::string wrap_soap_body(std::string_view body_content);
std::string benign_quote_request(std::string_view symbol);
std::string benign_purchase_request(std::string_view symbol, int quantity);
std::string soap_action_value(std::string_view operation);

// --- generators ---------------------------------------------------------------

// Chain of `depth` nested elements directly under the body; the innermost is
// empty, every other element has exactly one child.
AttackPayload generate_coercive_payload(int depth);

// Envelope padded with flat sibling elements to a total length within
// [size_bytes, size_bytes + 64]. Nesting stays shallow.
AttackPayload generate_oversize_payload(size_t size_bytes);
size_t min_oversize_envelope_size();

// Rewrites the named text field so the field closes early and a sibling
// element carrying the marker is injected; the field's remaining text keeps
// an escaped copy of the probe. Output is still well-formed.
AttackPayload generate_xml_injection(std::string_view benign_template,
                                     std::string_view field_name);

// Body names one operation, the SOAPAction transport header names another.
AttackPayload generate_spoofed_action(std::string_view body_operation,
                                      std::string_view header_operation);

// Distinct keys that all hash identically under the reference weak hash
// below (equal full 32-bit value, hence equal bucket).
std::vector<std::string> generate_hash_collision_keys(size_t count);

// Embeds keys as attributes of a single element in an otherwise benign
// request envelope.
AttackPayload wrap_attack_envelope(const std::vector<std::string>& keys);

// Simulated encrypted region: the original envelope is carried as base64
// text under an opaque marker element, so scanners cannot inspect it.
AttackPayload wrap_obfuscated(const AttackPayload& payload);
std::string unwrap_obfuscated(const AttackPayload& wrapped);

// --- reference weak hash -------------------------------------------------------
// Multiply-add string hash: h <- h * 33 + byte (mod 2^32), bucket = h mod 1024.
// Published so collision payloads are constructible and checkable.

inline constexpr uint32_t kWeakHashMultiplier = 33;
inline constexpr uint32_t kWeakHashBuckets = 1024;

inline uint32_t weak_hash(std::string_view key) {
  uint32_t h = 0;
  for (unsigned char c : key) h = h * kWeakHashMultiplier + c;
  return h;
}

inline uint32_t weak_hash_bucket(std::string_view key) {
  return weak_hash(key) % kWeakHashBuckets;
}

}  // namespace itws
