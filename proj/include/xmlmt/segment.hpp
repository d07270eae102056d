#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace xmlmt {

/// Atomic unit of a markup-bearing segment. Tags and the three escape
/// entities are single tokens; everything else is plain text.
enum class TokenKind { Text, OpenTag, CloseTag, Entity };

struct Token {
  TokenKind kind = TokenKind::Text;
  /// Tag name for OpenTag/CloseTag ("b", not "<b>"), the literal spelling
  /// for Entity ("&amp;"), or the surface form for Text.
  std::string value;

  bool operator==(const Token&) const = default;
};

Token text_token(std::string value);
Token open_tag(std::string name);
Token close_tag(std::string name);
Token entity_token(std::string spelling);

bool is_tag(const Token& t);

/// The entity spellings that are kept as atomic tokens.
inline constexpr const char* kEntities[] = {"&amp;", "&lt;", "&gt;"};

/// A tokenized sentence or document fragment with inline markup.
struct XmlSegment {
  std::vector<Token> tokens;

  bool operator==(const XmlSegment&) const = default;
  bool empty() const { return tokens.empty(); }
  size_t size() const { return tokens.size(); }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, size_t offset)
      : std::runtime_error(msg + " (byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  /// Byte offset of the offending input position.
  size_t offset() const { return offset_; }

 private:
  size_t offset_;
};

/// Splits a raw text run (no tags, no entities) into surface tokens.
/// The default splits on ASCII whitespace.
using TextTokenizer = std::function<std::vector<std::string>(std::string_view)>;

struct ParseOptions {
  /// Strict mode rejects attributes and self-closing tags with a ParseError.
  /// Lenient mode strips attributes and expands <x/> to <x></x>, recording a
  /// warning for each repair.
  bool lenient = false;
  std::vector<std::string>* warnings = nullptr;
  TextTokenizer tokenizer;  // empty = whitespace splitting
};

/// Tokenizes segment text. Tags and entities always force token boundaries;
/// text between them goes through the tokenizer.
XmlSegment parse_segment(std::string_view text, const ParseOptions& opts = {});

/// parse_segment plus the raw attribute string of each tag token (empty for
/// non-tag tokens and attribute-free tags). Only meaningful in lenient mode,
/// where stripped attributes are retained here for later recovery.
struct ParsedSegment {
  XmlSegment segment;
  std::vector<std::string> tag_attributes;
};
ParsedSegment parse_segment_ex(std::string_view text, const ParseOptions& opts = {});

/// Renders tokens back to text. A single space separates two consecutive
/// tokens unless the first is an open tag or the second is a close tag, so
/// "<b>x</b> y" round-trips exactly. parse_segment(serialize_segment(s)) == s
/// for every segment that parse_segment can produce.
std::string serialize_segment(const XmlSegment& seg);

/// True when tag tokens nest like balanced brackets. Text and entity tokens
/// are ignored; a tag-free segment is vacuously valid.
bool validate_xml(const XmlSegment& seg);

/// Ordered tree of tag names, text dropped. Only defined for valid segments.
struct TagSkeleton {
  struct Node {
    std::string name;
    std::vector<Node> children;
    bool operator==(const Node&) const = default;
  };
  std::vector<Node> roots;

  bool operator==(const TagSkeleton&) const = default;
};

/// Throws std::invalid_argument when validate_xml(seg) is false.
TagSkeleton tag_skeleton(const XmlSegment& seg);

/// Skeleton equality up to reordering of siblings at every level.
bool skeleton_equal_unordered(const TagSkeleton& a, const TagSkeleton& b);

/// Multiset of tag-pair names opened in the segment, as sorted (name, count).
std::vector<std::pair<std::string, size_t>> tag_multiset(const XmlSegment& seg);

}  // namespace xmlmt
