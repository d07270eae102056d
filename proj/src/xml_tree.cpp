#include "xmlmt/xml_tree.hpp"

#include "xmlmt/segment.hpp"

namespace xmlmt {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

class DocParser {
 public:
  explicit DocParser(std::string_view xml) : xml_(xml) {}

  XmlElement parse() {
    skip_bom();
    skip_misc();
    if (pos_ >= xml_.size() || xml_[pos_] != '<')
      throw ParseError("expected root element", pos_);
    XmlElement root = parse_element();
    skip_misc();
    if (pos_ < xml_.size()) throw ParseError("trailing content after root element", pos_);
    return root;
  }

 private:
  void skip_bom() {
    if (xml_.compare(0, 3, "\xEF\xBB\xBF") == 0) pos_ = 3;
  }

  bool starts_with(std::string_view prefix) const {
    return xml_.compare(pos_, prefix.size(), prefix) == 0;
  }

  /// Whitespace, comments, <?...?> declarations and <!DOCTYPE ...> before or
  /// after the root element.
  void skip_misc() {
    for (;;) {
      while (pos_ < xml_.size() && is_space(xml_[pos_])) ++pos_;
      if (starts_with("<?")) {
        size_t end = xml_.find("?>", pos_ + 2);
        if (end == std::string_view::npos) throw ParseError("unterminated declaration", pos_);
        pos_ = end + 2;
      } else if (starts_with("<!--")) {
        skip_comment();
      } else if (starts_with("<!")) {
        skip_doctype();
      } else {
        return;
      }
    }
  }

  void skip_comment() {
    size_t end = xml_.find("-->", pos_ + 4);
    if (end == std::string_view::npos) throw ParseError("unterminated comment", pos_);
    pos_ = end + 3;
  }

  void skip_doctype() {
    size_t i = pos_ + 2;
    int brackets = 0;
    while (i < xml_.size()) {
      char c = xml_[i];
      if (c == '[') ++brackets;
      else if (c == ']') --brackets;
      else if (c == '>' && brackets == 0) { pos_ = i + 1; return; }
      ++i;
    }
    throw ParseError("unterminated <!...> declaration", pos_);
  }

  XmlElement parse_element() {
    size_t start = pos_;
    ++pos_;  // '<'
    XmlElement el;
    el.tag = read_name(start);
    read_attributes(el);
    if (starts_with("/>")) {
      pos_ += 2;
      return el;
    }
    if (pos_ >= xml_.size() || xml_[pos_] != '>')
      throw ParseError("malformed start tag", start);
    ++pos_;
    parse_content(el);
    return el;
  }

  std::string read_name(size_t tag_start) {
    size_t start = pos_;
    while (pos_ < xml_.size() && !is_space(xml_[pos_]) && xml_[pos_] != '>' &&
           xml_[pos_] != '/')
      ++pos_;
    if (pos_ == start) throw ParseError("empty tag name", tag_start);
    return std::string(xml_.substr(start, pos_ - start));
  }

  void read_attributes(XmlElement& el) {
    for (;;) {
      while (pos_ < xml_.size() && is_space(xml_[pos_])) ++pos_;
      if (pos_ >= xml_.size()) throw ParseError("unterminated start tag", pos_);
      char c = xml_[pos_];
      if (c == '>' || c == '/') return;
      size_t name_start = pos_;
      while (pos_ < xml_.size() && xml_[pos_] != '=' && !is_space(xml_[pos_]) &&
             xml_[pos_] != '>')
        ++pos_;
      std::string name(xml_.substr(name_start, pos_ - name_start));
      while (pos_ < xml_.size() && is_space(xml_[pos_])) ++pos_;
      if (pos_ >= xml_.size() || xml_[pos_] != '=')
        throw ParseError("attribute without value", name_start);
      ++pos_;
      while (pos_ < xml_.size() && is_space(xml_[pos_])) ++pos_;
      if (pos_ >= xml_.size() || (xml_[pos_] != '"' && xml_[pos_] != '\''))
        throw ParseError("unquoted attribute value", pos_);
      char quote = xml_[pos_++];
      size_t val_start = pos_;
      size_t end = xml_.find(quote, pos_);
      if (end == std::string_view::npos)
        throw ParseError("unterminated attribute value", val_start);
      el.attributes.emplace_back(name, std::string(xml_.substr(val_start, end - val_start)));
      pos_ = end + 1;
    }
  }

  void parse_content(XmlElement& el) {
    std::string* sink = &el.text;
    for (;;) {
      size_t lt = xml_.find('<', pos_);
      if (lt == std::string_view::npos)
        throw ParseError("unterminated element <" + el.tag + ">", pos_);
      sink->append(xml_.substr(pos_, lt - pos_));
      pos_ = lt;
      if (starts_with("<!--")) {
        skip_comment();
      } else if (starts_with("</")) {
        size_t gt = xml_.find('>', pos_);
        if (gt == std::string_view::npos) throw ParseError("unterminated close tag", pos_);
        std::string_view name = xml_.substr(pos_ + 2, gt - pos_ - 2);
        while (!name.empty() && is_space(name.back())) name.remove_suffix(1);
        if (name != el.tag)
          throw ParseError("mismatched close tag </" + std::string(name) + "> for <" +
                               el.tag + ">",
                           pos_);
        pos_ = gt + 1;
        return;
      } else if (starts_with("<![") || starts_with("<?")) {
        throw ParseError("unsupported construct inside element", pos_);
      } else {
        el.children.push_back(parse_element());
        sink = &el.children.back().tail;
      }
    }
  }

  std::string_view xml_;
  size_t pos_ = 0;
};

}  // namespace

XmlElement parse_document(std::string_view xml) { return DocParser(xml).parse(); }

}  // namespace xmlmt
