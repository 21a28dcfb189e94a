#include "itws/scanner.hpp"

#include <algorithm>

#include "itws/xml.hpp"

namespace itws {

namespace {

// Escape sequences in character data that decode to markup: an attacker who
// can smuggle these through a naive re-serialization changes document
// structure downstream.
bool text_has_markup_escapes(std::string_view text, std::string& which) {
  static constexpr std::string_view kSuspicious[] = {"&lt;", "&gt;", "&#"};
  for (std::string_view s : kSuspicious) {
    if (text.find(s) != std::string_view::npos) {
      which = std::string(s);
      return true;
    }
  }
  // Raw markup characters inside text only occur in malformed documents, but
  // the stream reader surfaces them as text when resyncing.
  size_t raw = text.find_first_of("<>");
  if (raw != std::string_view::npos) {
    which = std::string(1, text[raw]);
    return true;
  }
  return false;
}

bool is_opaque_region_name(std::string_view name) {
  std::string_view local = xml::local_name(name);
  return local == kOpaqueRegionElement || local == "EncryptedData";
}

}  // namespace

void ScannerThresholds::validate() const {
  if (depth_flag < 1 || size_flag < 1 || attr_fanout_flag < 1 || element_count_flag < 1)
    throw Error(ErrorCode::InvalidParameter, "scanner thresholds must be >= 1");
}

ThreatProfile scan(const ClientRequest& request, const ScannerThresholds& thresholds) {
  thresholds.validate();
  ThreatProfile profile;

  // Transport-level feature: an operation-identifier header means a backend
  // that dispatches on it could be steered independently of the body.
  if (const std::string* action =
          net::find_header(request.transport_headers, kSoapActionHeader)) {
    profile.vectors.insert(AttackVector::SoapActionSpoofing);
    profile.features.push_back({"operation-header", std::string(kSoapActionHeader) + "=" + *action});
  }

  if (request.envelope.size() > thresholds.size_flag) {
    profile.vectors.insert(AttackVector::OversizePayload);
    profile.features.push_back(
        {"byte-size", std::to_string(request.envelope.size()) + " > " +
                          std::to_string(thresholds.size_flag)});
  }

  // One streaming pass. State: counters plus the current event; nothing
  // grows with nesting depth.
  int depth = 0;
  int max_depth = 0;
  long element_count = 0;
  int max_attr_fanout = 0;
  bool saw_opaque = false;
  bool saw_text_escape = false;
  bool saw_cdata = false;
  bool malformed = false;
  std::string escape_sample;
  std::string opaque_name;

  xml::StreamReader reader(request.envelope);
  xml::Event ev;
  while (reader.next(ev)) {
    switch (ev.kind) {
      case xml::EventKind::StartElement: {
        ++element_count;
        if (!ev.self_closing) {
          ++depth;
          max_depth = std::max(max_depth, depth);
        } else {
          max_depth = std::max(max_depth, depth + 1);
        }
        int fanout = xml::count_attrs(ev.raw_attrs);
        max_attr_fanout = std::max(max_attr_fanout, fanout);
        if (!saw_opaque && is_opaque_region_name(ev.name)) {
          saw_opaque = true;
          opaque_name = std::string(ev.name);
        }
        break;
      }
      case xml::EventKind::EndElement:
        if (depth == 0) malformed = true;  // stray end tag
        else --depth;
        break;
      case xml::EventKind::Text:
        if (!saw_text_escape && depth > 0 &&
            text_has_markup_escapes(ev.text, escape_sample))
          saw_text_escape = true;
        break;
      case xml::EventKind::CData:
        saw_cdata = true;
        break;
      case xml::EventKind::BadSyntax:
        malformed = true;
        break;
      case xml::EventKind::Comment:
      case xml::EventKind::ProcInstr:
      case xml::EventKind::Doctype:
        break;
    }
  }
  if (depth != 0) malformed = true;  // unclosed elements

  if (max_depth > thresholds.depth_flag) {
    profile.vectors.insert(AttackVector::CoerciveParsing);
    profile.features.push_back({"nesting-depth", std::to_string(max_depth) + " > " +
                                                     std::to_string(thresholds.depth_flag)});
  }
  if (element_count > thresholds.element_count_flag) {
    profile.vectors.insert(AttackVector::CoerciveParsing);
    profile.features.push_back(
        {"element-count", std::to_string(element_count) + " > " +
                              std::to_string(thresholds.element_count_flag)});
  }
  if (saw_text_escape || saw_cdata) {
    profile.vectors.insert(AttackVector::XmlInjection);
    profile.features.push_back(
        {"markup-in-text", saw_cdata && !saw_text_escape ? "CDATA section" : escape_sample});
  }
  if (max_attr_fanout > thresholds.attr_fanout_flag) {
    profile.vectors.insert(AttackVector::HashCollision);
    profile.features.push_back(
        {"attribute-fanout", std::to_string(max_attr_fanout) + " > " +
                                 std::to_string(thresholds.attr_fanout_flag)});
  }
  if (saw_opaque) {
    profile.vectors.insert(AttackVector::AttackObfuscation);
    profile.features.push_back({"opaque-region", opaque_name});
  }
  if (malformed) {
    profile.features.push_back({"malformed-input", "structure incomplete; scanned best-effort"});
  }

  // Honest accounting of our own working set: fixed-size locals plus the two
  // small sample strings. The reader itself holds a cursor into the input.
  profile.peak_state_bytes = sizeof(xml::StreamReader) + sizeof(xml::Event) +
                             sizeof(int) * 4 + sizeof(long) + sizeof(bool) * 4 +
                             escape_sample.capacity() + opaque_name.capacity() + 64;
  return profile;
}

}  // namespace itws
