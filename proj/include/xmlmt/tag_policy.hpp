#pragma once

#include <filesystem>
#include <set>
#include <string>

namespace xmlmt {

/// Per-tag handling during corpus extraction.
///
///  - translatable: the element holds standalone text and becomes its own
///    segment pair.
///  - transparent: the element is kept inline inside the surrounding text.
///  - untranslatable: the element and everything inside it is removed (its
///    tail text stays).
///
/// Tags absent from all three lists are treated as plain containers: they are
/// never emitted as units and are kept inline when found inside a segment.
class TagPolicy {
 public:
  enum class Category { Translatable, Transparent, Untranslatable, Unlisted };

  TagPolicy() = default;
  TagPolicy(std::set<std::string> translatable, std::set<std::string> transparent,
            std::set<std::string> untranslatable);

  /// Built-in defaults covering the DITA-style documentation tag set.
  static TagPolicy defaults();

  /// Loads a plain-text config with [translatable] / [transparent] /
  /// [untranslatable] sections, one tag name per line, '#' comments.
  /// Throws std::runtime_error on syntax errors or overlapping lists.
  static TagPolicy load(const std::filesystem::path& path);

  Category category(const std::string& tag) const;
  bool is_translatable(const std::string& tag) const;

  const std::set<std::string>& translatable() const { return translatable_; }
  const std::set<std::string>& transparent() const { return transparent_; }
  const std::set<std::string>& untranslatable() const { return untranslatable_; }

 private:
  void check_disjoint() const;

  std::set<std::string> translatable_;
  std::set<std::string> transparent_;
  std::set<std::string> untranslatable_;
};

}  // namespace xmlmt
