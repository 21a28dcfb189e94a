#include "itws/attack_model.hpp"

#include <cmath>

#include "itws/xml.hpp"

namespace itws {

namespace {

constexpr std::string_view kEnvelopePrefix =
    "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    "<env:Envelope xmlns:env=\"http://www.w3.org/2003/05/soap-envelope\">"
    "<env:Header/><env:Body>";
constexpr std::string_view kEnvelopeSuffix = "</env:Body></env:Envelope>";

constexpr std::string_view kBase64Alphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(std::string_view in) {
  std::string out;
  out.reserve((in.size() + 2) / 3 * 4);
  size_t i = 0;
  while (i + 3 <= in.size()) {
    uint32_t v = (static_cast<unsigned char>(in[i]) << 16) |
                 (static_cast<unsigned char>(in[i + 1]) << 8) |
                 static_cast<unsigned char>(in[i + 2]);
    out.push_back(kBase64Alphabet[(v >> 18) & 63]);
    out.push_back(kBase64Alphabet[(v >> 12) & 63]);
    out.push_back(kBase64Alphabet[(v >> 6) & 63]);
    out.push_back(kBase64Alphabet[v & 63]);
    i += 3;
  }
  size_t rem = in.size() - i;
  if (rem == 1) {
    uint32_t v = static_cast<unsigned char>(in[i]) << 16;
    out.push_back(kBase64Alphabet[(v >> 18) & 63]);
    out.push_back(kBase64Alphabet[(v >> 12) & 63]);
    out.append("==");
  } else if (rem == 2) {
    uint32_t v = (static_cast<unsigned char>(in[i]) << 16) |
                 (static_cast<unsigned char>(in[i + 1]) << 8);
    out.push_back(kBase64Alphabet[(v >> 18) & 63]);
    out.push_back(kBase64Alphabet[(v >> 12) & 63]);
    out.push_back(kBase64Alphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

std::string base64_decode(std::string_view in) {
  std::array<int8_t, 256> rev{};
  rev.fill(-1);
  for (int i = 0; i < 64; ++i) rev[static_cast<unsigned char>(kBase64Alphabet[i])] = static_cast<int8_t>(i);
  std::string out;
  out.reserve(in.size() / 4 * 3);
  uint32_t acc = 0;
  int bits = 0;
  for (char c : in) {
    if (c == '=' || c == '\n' || c == '\r' || c == ' ') continue;
    int8_t v = rev[static_cast<unsigned char>(c)];
    if (v < 0) throw Error(ErrorCode::InvalidParameter, "not base64 content");
    acc = (acc << 6) | static_cast<uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<char>((acc >> bits) & 0xFF));
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(AttackVector v) {
  switch (v) {
    case AttackVector::CoerciveParsing: return "CoerciveParsing";
    case AttackVector::OversizePayload: return "OversizePayload";
    case AttackVector::XmlInjection: return "XmlInjection";
    case AttackVector::SoapActionSpoofing: return "SoapActionSpoofing";
    case AttackVector::HashCollision: return "HashCollision";
    case AttackVector::AttackObfuscation: return "AttackObfuscation";
  }
  return "?";
}

AttackVector vector_from_string(std::string_view name) {
  for (AttackVector v : kAllVectors)
    if (to_string(v) == name) return v;
  throw Error(ErrorCode::InvalidParameter, "unknown attack vector: " + std::string(name));
}

bool is_dos_vector(AttackVector v) {
  return v == AttackVector::CoerciveParsing || v == AttackVector::OversizePayload ||
         v == AttackVector::HashCollision;
}

std::string wrap_soap_body(std::string_view body_content) {
  std::string out;
  out.reserve(kEnvelopePrefix.size() + body_content.size() + kEnvelopeSuffix.size());
  out.append(kEnvelopePrefix);
  out.append(body_content);
  out.append(kEnvelopeSuffix);
  return out;
}

std::string benign_quote_request(std::string_view symbol) {
  std::string body = "<GetQuote xmlns=\"urn:stockquote\"><symbol>";
  body += xml::escape_text(symbol);
  body += "</symbol></GetQuote>";
  return wrap_soap_body(body);
}

std::string benign_purchase_request(std::string_view symbol, int quantity) {
  std::string body = "<PurchaseStock xmlns=\"urn:stockquote\"><symbol>";
  body += xml::escape_text(symbol);
  body += "</symbol><quantity>";
  body += std::to_string(quantity);
  body += "</quantity></PurchaseStock>";
  return wrap_soap_body(body);
}

std::string soap_action_value(std::string_view operation) {
  return "\"urn:stockquote/" + std::string(operation) + "\"";
}

AttackPayload generate_coercive_payload(int depth) {
  if (depth < 1)
    throw Error(ErrorCode::InvalidParameter, "coercive depth must be >= 1");
  std::string body;
  body.reserve(static_cast<size_t>(depth) * 7);
  for (int i = 0; i < depth - 1; ++i) body += "<c>";
  body += "<c/>";
  for (int i = 0; i < depth - 1; ++i) body += "</c>";
  AttackPayload p;
  p.vector = AttackVector::CoerciveParsing;
  p.envelope = wrap_soap_body(body);
  return p;
}

size_t min_oversize_envelope_size() { return benign_quote_request("ACME").size(); }

AttackPayload generate_oversize_payload(size_t size_bytes) {
  const std::string base = benign_quote_request("ACME");
  if (size_bytes < base.size())
    throw Error(ErrorCode::InvalidParameter,
                "size " + std::to_string(size_bytes) + " below minimal envelope (" +
                    std::to_string(base.size()) + ")");

  // Pad with flat <pad>...</pad> siblings inside the operation element.
  constexpr std::string_view kOpen = "<pad>";
  constexpr std::string_view kClose = "</pad>";
  constexpr size_t kPadOverhead = kOpen.size() + kClose.size();  // 11
  constexpr size_t kChunk = 64 * 1024;

  const std::string_view insert_before = "</GetQuote>";
  size_t cut = base.rfind(insert_before);
  std::string envelope = base.substr(0, cut);
  size_t need = size_bytes - base.size();
  while (need > 0) {
    size_t payload = need >= kPadOverhead ? std::min(need - kPadOverhead, kChunk) : 0;
    envelope.append(kOpen);
    envelope.append(payload, 'A');
    envelope.append(kClose);
    size_t emitted = kPadOverhead + payload;
    need = need > emitted ? need - emitted : 0;
  }
  envelope.append(base.substr(cut));

  AttackPayload p;
  p.vector = AttackVector::OversizePayload;
  p.envelope = std::move(envelope);
  return p;
}

AttackPayload generate_xml_injection(std::string_view benign_template,
                                     std::string_view field_name) {
  std::string open = "<" + std::string(field_name) + ">";
  std::string close = "</" + std::string(field_name) + ">";
  size_t os = benign_template.find(open);
  if (os == std::string_view::npos)
    throw Error(ErrorCode::InvalidParameter,
                "template has no field " + std::string(field_name));
  size_t cs = benign_template.find(close, os + open.size());
  if (cs == std::string_view::npos)
    throw Error(ErrorCode::InvalidParameter,
                "field " + std::string(field_name) + " never closes");

  std::string_view original_text =
      benign_template.substr(os + open.size(), cs - os - open.size());

  std::string envelope(benign_template.substr(0, os + open.size()));
  envelope.append(original_text);
  // Escaped copy of the probe stays behind as field text.
  envelope += "&lt;" + std::string(kInjectedElementName) + "&gt;";
  envelope.append(close);
  envelope += "<" + std::string(kInjectedElementName) + ">" +
              std::string(kInjectionMarker) + "</" + std::string(kInjectedElementName) + ">";
  envelope.append(benign_template.substr(cs + close.size()));

  AttackPayload p;
  p.vector = AttackVector::XmlInjection;
  p.envelope = std::move(envelope);
  p.expected_marker = std::string(kInjectionMarker);
  return p;
}

AttackPayload generate_spoofed_action(std::string_view body_operation,
                                      std::string_view header_operation) {
  if (body_operation == header_operation)
    throw Error(ErrorCode::InvalidParameter,
                "body and header operations must differ for spoofing");
  std::string body = "<" + std::string(body_operation) +
                     " xmlns=\"urn:stockquote\"><symbol>ACME</symbol></" +
                     std::string(body_operation) + ">";
  AttackPayload p;
  p.vector = AttackVector::SoapActionSpoofing;
  p.envelope = wrap_soap_body(body);
  p.transport_headers.emplace_back(std::string(kSoapActionHeader),
                                   soap_action_value(header_operation));
  p.expected_marker = "<" + std::string(kExecutedOpElement) + ">" +
                      std::string(header_operation) + "</" +
                      std::string(kExecutedOpElement) + ">";
  return p;
}

std::vector<std::string> generate_hash_collision_keys(size_t count) {
  if (count < 2)
    throw Error(ErrorCode::InvalidParameter, "need at least 2 collision keys");

  // Two 2-char blocks with equal weak-hash contribution: 33*'a'+'z' == 33*'b'+'Y'.
  // Any concatenation of k such blocks yields 2^k distinct strings with an
  // identical full hash value.
  constexpr std::string_view kBlockA = "az";
  constexpr std::string_view kBlockB = "bY";
  size_t blocks = 1;
  while ((size_t{1} << blocks) < count) ++blocks;

  std::vector<std::string> keys;
  keys.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    std::string key;
    key.reserve(blocks * 2);
    for (size_t b = 0; b < blocks; ++b)
      key += ((i >> (blocks - 1 - b)) & 1) ? kBlockB : kBlockA;
    keys.push_back(std::move(key));
  }
  return keys;
}

AttackPayload wrap_attack_envelope(const std::vector<std::string>& keys) {
  std::string body = "<GetQuote xmlns=\"urn:stockquote\"";
  for (const auto& k : keys) {
    body += " ";
    body += k;
    body += "=\"x\"";
  }
  body += "><symbol>ACME</symbol></GetQuote>";
  AttackPayload p;
  p.vector = AttackVector::HashCollision;
  p.envelope = wrap_soap_body(body);
  return p;
}

AttackPayload wrap_obfuscated(const AttackPayload& payload) {
  std::string body = "<" + std::string(kOpaqueRegionElement) +
                     " xmlns=\"urn:sim-wssec\" alg=\"sim/base64\">" +
                     base64_encode(payload.envelope) + "</" +
                     std::string(kOpaqueRegionElement) + ">";
  AttackPayload p;
  p.vector = AttackVector::AttackObfuscation;
  p.envelope = wrap_soap_body(body);
  p.transport_headers = payload.transport_headers;
  return p;
}

std::string unwrap_obfuscated(const AttackPayload& wrapped) {
  xml::Document doc = xml::parse_tree(wrapped.envelope);
  size_t region = doc.find_descendant(0, kOpaqueRegionElement);
  if (region == xml::kNoNode)
    throw Error(ErrorCode::InvalidParameter, "no opaque region present");
  return base64_decode(doc.nodes[region].text);
}

}  // namespace itws
