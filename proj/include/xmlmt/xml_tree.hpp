#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace xmlmt {

/// Element-tree view of a whole XML file, ElementTree style: text is the run
/// before the first child, each child carries the run that follows it (tail).
/// Entities in text are kept literal; attribute values are stored unescaped
/// only in the sense that no entity decoding is applied anywhere.
struct XmlElement {
  std::string tag;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::string text;
  std::vector<XmlElement> children;
  std::string tail;
};

/// Parses one document: optional XML declaration, DOCTYPE and comments are
/// skipped, then exactly one root element. Self-closing elements are
/// accepted. CDATA and processing instructions inside the body are rejected.
/// Throws ParseError with a byte offset on malformed input.
XmlElement parse_document(std::string_view xml);

}  // namespace xmlmt
