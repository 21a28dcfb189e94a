#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "itws/error.hpp"

namespace itws::xml {

// ---------------------------------------------------------------------------
// Streaming pull reader.
//
// Single forward pass over the raw bytes; state is a cursor plus the current
// event, so memory use is constant regardless of document depth or size.
// Malformed input never throws: syntax problems surface as BadSyntax events
// and the reader resyncs at the next '<'.
// ---------------------------------------------------------------------------

enum class EventKind {
  StartElement,  // <name ...> or <name .../>
  EndElement,    // </name>
  Text,          // character data between tags (raw, entities not decoded)
  CData,         // <![CDATA[...]]>
  Comment,       // <!--...-->
  ProcInstr,     // <?...?>
  Doctype,       // <!DOCTYPE...> (content ignored, no DTD processing)
  BadSyntax,     // unparseable construct; reader resynced past it
};

struct Event {
  EventKind kind{};
  std::string_view name;  // StartElement / EndElement
  std::string_view text;  // Text / CData content, raw
  std::string_view raw_attrs;  // StartElement: span between name and '>'
  bool self_closing = false;   // StartElement only
};

class StreamReader {
 public:
  explicit StreamReader(std::string_view doc) : doc_(doc) {}

  // Advances to the next event. Returns false at end of input.
  bool next(Event& ev);

  size_t offset() const { return pos_; }

 private:
  std::string_view doc_;
  size_t pos_ = 0;
};

// Iterates the name="value" pairs inside a StartElement's raw_attrs span.
// Values are raw (entities not decoded); use decode_entities() when needed.
// Tolerates sloppy input; unparseable trailing garbage is skipped.
void for_each_attr(std::string_view raw_attrs,
                   const std::function<void(std::string_view, std::string_view)>& fn);

// Counts attributes without materializing them.
int count_attrs(std::string_view raw_attrs);

// Decodes the five predefined entities plus decimal/hex character references.
// Unknown entities are kept verbatim.
std::string decode_entities(std::string_view raw);

// Escapes text for use as element content or attribute value.
std::string escape_text(std::string_view raw);

// Strips a namespace prefix: "env:Body" -> "Body".
std::string_view local_name(std::string_view name);

// ---------------------------------------------------------------------------
// Tree parser.
//
// Builds the whole element tree in memory (the eager model). Iterative, so
// deeply nested documents are limited by heap, not stack. Throws ParseError
// on malformed input or when a configured limit is exceeded.
// ---------------------------------------------------------------------------

constexpr size_t kNoNode = static_cast<size_t>(-1);

struct TreeNode {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attrs;  // decoded values
  std::string text;  // concatenated decoded direct text (incl. CDATA)
  std::vector<size_t> children;
  size_t parent = kNoNode;
};

struct TreeLimits {
  size_t max_depth = 0;  // 0 = unlimited
  size_t max_nodes = 0;  // 0 = unlimited
};

struct Document {
  std::vector<TreeNode> nodes;  // nodes[0] is the root when non-empty
  size_t max_depth = 0;         // depth of root = 1

  const TreeNode& root() const { return nodes.at(0); }
  size_t element_count() const { return nodes.size(); }

  // First direct child of `parent` whose local name matches.
  size_t find_child(size_t parent, std::string_view local) const;
  // Depth-first search for the first element with a matching local name.
  size_t find_descendant(size_t from, std::string_view local) const;
};

Document parse_tree(std::string_view doc, const TreeLimits& limits = {});

// Structural canonical form: attributes sorted by name, text whitespace
// normalized, whitespace-only text dropped, comments/PIs ignored. Two
// documents that differ only in formatting canonicalize identically.
std::string canonicalize(const Document& doc);

// parse + canonicalize; bytes that do not parse get a byte-identity class.
std::string canonical_form(std::string_view bytes);

}  // namespace itws::xml
