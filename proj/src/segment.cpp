#include "xmlmt/segment.hpp"

#include <algorithm>
#include <cstring>
#include <map>

namespace xmlmt {

Token text_token(std::string value) { return {TokenKind::Text, std::move(value)}; }
Token open_tag(std::string name) { return {TokenKind::OpenTag, std::move(name)}; }
Token close_tag(std::string name) { return {TokenKind::CloseTag, std::move(name)}; }
Token entity_token(std::string spelling) { return {TokenKind::Entity, std::move(spelling)}; }

bool is_tag(const Token& t) {
  return t.kind == TokenKind::OpenTag || t.kind == TokenKind::CloseTag;
}

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

/// Byte length of the entity spelling starting at `pos`, 0 when none does.
size_t entity_at(std::string_view text, size_t pos) {
  for (const char* e : kEntities) {
    size_t n = std::strlen(e);
    if (text.compare(pos, n, e) == 0) return n;
  }
  return 0;
}

std::vector<std::string> whitespace_split(std::string_view run) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < run.size()) {
    while (i < run.size() && is_space(run[i])) ++i;
    size_t start = i;
    while (i < run.size() && !is_space(run[i])) ++i;
    if (i > start) out.emplace_back(run.substr(start, i - start));
  }
  return out;
}

bool valid_tag_name(std::string_view name) {
  if (name.empty()) return false;
  for (char c : name)
    if (is_space(c) || c == '<' || c == '>' || c == '&' || c == '/') return false;
  return true;
}

void warn(const ParseOptions& opts, std::string msg) {
  if (opts.warnings) opts.warnings->push_back(std::move(msg));
}

struct TagInfo {
  bool closing = false;
  bool self_closing = false;
  std::string name;
  std::string attributes;
  size_t end = 0;  // offset just past '>'
};

TagInfo parse_tag(std::string_view text, size_t pos, const ParseOptions& opts) {
  size_t gt = text.find('>', pos);
  if (gt == std::string_view::npos) throw ParseError("unterminated tag", pos);
  std::string_view inner = text.substr(pos + 1, gt - pos - 1);

  TagInfo info;
  info.end = gt + 1;
  if (!inner.empty() && inner.front() == '/') {
    info.closing = true;
    inner.remove_prefix(1);
  } else if (!inner.empty() && inner.back() == '/') {
    info.self_closing = true;
    inner.remove_suffix(1);
  }
  if (inner.find('<') != std::string_view::npos)
    throw ParseError("nested '<' in tag", pos);

  size_t name_end = 0;
  while (name_end < inner.size() && !is_space(inner[name_end])) ++name_end;
  info.name = std::string(inner.substr(0, name_end));
  std::string_view rest = inner.substr(name_end);
  while (!rest.empty() && is_space(rest.front())) rest.remove_prefix(1);
  while (!rest.empty() && is_space(rest.back())) rest.remove_suffix(1);
  info.attributes = std::string(rest);

  if (!valid_tag_name(info.name)) throw ParseError("empty or malformed tag name", pos);
  if (!info.attributes.empty()) {
    if (!opts.lenient || info.closing)
      throw ParseError("attributes are not allowed in segment tags", pos);
    warn(opts, "stripped attributes from <" + info.name + ">");
  }
  if (info.self_closing && !opts.lenient)
    throw ParseError("self-closing tags are not allowed in segments", pos);
  return info;
}

}  // namespace

ParsedSegment parse_segment_ex(std::string_view text, const ParseOptions& opts) {
  ParsedSegment out;
  auto emit = [&](Token tok, std::string attrs = {}) {
    out.segment.tokens.push_back(std::move(tok));
    out.tag_attributes.push_back(std::move(attrs));
  };
  auto flush_run = [&](std::string_view run) {
    if (run.empty()) return;
    std::vector<std::string> pieces =
        opts.tokenizer ? opts.tokenizer(run) : whitespace_split(run);
    for (auto& p : pieces)
      if (!p.empty()) emit(text_token(std::move(p)));
  };

  size_t i = 0;
  size_t run_start = 0;
  while (i < text.size()) {
    if (text[i] == '<') {
      flush_run(text.substr(run_start, i - run_start));
      TagInfo tag = parse_tag(text, i, opts);
      if (tag.closing) {
        emit(close_tag(tag.name));
      } else if (tag.self_closing) {
        warn(opts, "expanded self-closing <" + tag.name + "/>");
        emit(open_tag(tag.name), tag.attributes);
        emit(close_tag(tag.name));
      } else {
        emit(open_tag(tag.name), tag.attributes);
      }
      i = run_start = tag.end;
    } else if (size_t n = entity_at(text, i); n > 0) {
      flush_run(text.substr(run_start, i - run_start));
      emit(entity_token(std::string(text.substr(i, n))));
      i = run_start = i + n;
    } else {
      ++i;
    }
  }
  flush_run(text.substr(run_start));
  return out;
}

XmlSegment parse_segment(std::string_view text, const ParseOptions& opts) {
  return parse_segment_ex(text, opts).segment;
}

std::string serialize_segment(const XmlSegment& seg) {
  std::string out;
  for (size_t i = 0; i < seg.tokens.size(); ++i) {
    const Token& tok = seg.tokens[i];
    if (i > 0) {
      const Token& prev = seg.tokens[i - 1];
      // No space right after an open tag or right before a close tag.
      if (prev.kind != TokenKind::OpenTag && tok.kind != TokenKind::CloseTag)
        out += ' ';
    }
    switch (tok.kind) {
      case TokenKind::Text:
      case TokenKind::Entity:
        out += tok.value;
        break;
      case TokenKind::OpenTag:
        out += '<';
        out += tok.value;
        out += '>';
        break;
      case TokenKind::CloseTag:
        out += "</";
        out += tok.value;
        out += '>';
        break;
    }
  }
  return out;
}

bool validate_xml(const XmlSegment& seg) {
  std::vector<const std::string*> stack;
  for (const Token& tok : seg.tokens) {
    if (tok.kind == TokenKind::OpenTag) {
      stack.push_back(&tok.value);
    } else if (tok.kind == TokenKind::CloseTag) {
      if (stack.empty() || *stack.back() != tok.value) return false;
      stack.pop_back();
    }
  }
  return stack.empty();
}

TagSkeleton tag_skeleton(const XmlSegment& seg) {
  if (!validate_xml(seg)) throw std::invalid_argument("tag_skeleton: segment is not valid XML");
  TagSkeleton skel;
  std::vector<TagSkeleton::Node*> stack;
  for (const Token& tok : seg.tokens) {
    if (tok.kind == TokenKind::OpenTag) {
      auto& siblings = stack.empty() ? skel.roots : stack.back()->children;
      siblings.push_back({tok.value, {}});
      stack.push_back(&siblings.back());
    } else if (tok.kind == TokenKind::CloseTag) {
      stack.pop_back();
    }
  }
  return skel;
}

namespace {

bool node_less(const TagSkeleton::Node& a, const TagSkeleton::Node& b) {
  if (a.name != b.name) return a.name < b.name;
  return std::lexicographical_compare(a.children.begin(), a.children.end(), b.children.begin(),
                                      b.children.end(), node_less);
}

void canonicalize(TagSkeleton::Node& node) {
  for (auto& c : node.children) canonicalize(c);
  std::sort(node.children.begin(), node.children.end(), node_less);
}

}  // namespace

bool skeleton_equal_unordered(const TagSkeleton& a, const TagSkeleton& b) {
  TagSkeleton ca = a, cb = b;
  for (auto& n : ca.roots) canonicalize(n);
  for (auto& n : cb.roots) canonicalize(n);
  std::sort(ca.roots.begin(), ca.roots.end(), node_less);
  std::sort(cb.roots.begin(), cb.roots.end(), node_less);
  return ca == cb;
}

std::vector<std::pair<std::string, size_t>> tag_multiset(const XmlSegment& seg) {
  std::map<std::string, size_t> counts;
  for (const Token& tok : seg.tokens)
    if (tok.kind == TokenKind::OpenTag) ++counts[tok.value];
  return {counts.begin(), counts.end()};
}

}  // namespace xmlmt
