#include "xmlmt/tag_policy.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace xmlmt {

TagPolicy::TagPolicy(std::set<std::string> translatable, std::set<std::string> transparent,
                     std::set<std::string> untranslatable)
    : translatable_(std::move(translatable)),
      transparent_(std::move(transparent)),
      untranslatable_(std::move(untranslatable)) {
  check_disjoint();
}

void TagPolicy::check_disjoint() const {
  for (const auto& t : translatable_)
    if (transparent_.count(t) || untranslatable_.count(t))
      throw std::runtime_error("tag policy lists overlap on '" + t + "'");
  for (const auto& t : transparent_)
    if (untranslatable_.count(t))
      throw std::runtime_error("tag policy lists overlap on '" + t + "'");
}

TagPolicy TagPolicy::defaults() {
  return TagPolicy(
      {"title",      "p",          "li",          "shortdesc",  "indexterm",
       "note",       "section",    "entry",       "dt",         "dd",
       "fn",         "cmd",        "xref",        "info",       "stepresult",
       "stepxmp",    "example",    "context",     "term",       "choice",
       "stentry",    "result",     "navtitle",    "linktext",   "postreq",
       "prereq",     "cite",       "chentry",     "sli",        "choption",
       "chdesc",     "choptionhd", "chdeschd",    "sectiondiv", "pd",
       "pt",         "stepsection", "index-see",  "conbody",    "fig",
       "body",       "ul"},
      {"ph", "uicontrol", "b", "parmname", "i", "u", "menucascade", "image",
       "userinput", "codeph", "systemoutput", "filepath", "varname", "apiname"},
      {"sup", "codeblock", "prodname"});
}

TagPolicy TagPolicy::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open tag policy file: " + path.string());

  std::set<std::string> lists[3];
  int section = -1;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string word;
    if (!(ss >> word)) continue;
    std::string extra;
    if (ss >> extra)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": one tag name per line");
    if (word == "[translatable]") {
      section = 0;
    } else if (word == "[transparent]") {
      section = 1;
    } else if (word == "[untranslatable]") {
      section = 2;
    } else if (word.front() == '[') {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": unknown section " + word);
    } else if (section < 0) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": tag name before any section header");
    } else {
      lists[section].insert(word);
    }
  }
  return TagPolicy(std::move(lists[0]), std::move(lists[1]), std::move(lists[2]));
}

TagPolicy::Category TagPolicy::category(const std::string& tag) const {
  if (translatable_.count(tag)) return Category::Translatable;
  if (transparent_.count(tag)) return Category::Transparent;
  if (untranslatable_.count(tag)) return Category::Untranslatable;
  return Category::Unlisted;
}

bool TagPolicy::is_translatable(const std::string& tag) const {
  return translatable_.count(tag) > 0;
}

}  // namespace xmlmt
