#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xmlmt/segment.hpp"

namespace xmlmt {

/// One hypothesis/reference pair. hypothesis_parsed is false when the raw
/// hypothesis line was not even tokenizable as markup; such a hypothesis
/// counts as structurally invalid but still carries its text tokens.
struct EvalPair {
  XmlSegment hypothesis;
  XmlSegment reference;
  bool hypothesis_parsed = true;
};

/// Removes tag tokens and replaces entity tokens with their characters
/// (&amp; -> &, &lt; -> <, &gt; -> >). Idempotent.
XmlSegment strip_xml(const XmlSegment& seg);

/// Plain text token values of a segment after strip_xml.
std::vector<std::string> stripped_tokens(const XmlSegment& seg);

/// Corpus-level BLEU-4 in [0, 100]: geometric mean of the four modified
/// n-gram precisions aggregated over the corpus, times the brevity penalty.
/// No smoothing; if any order has zero matches (or zero n-grams at all) the
/// score is 0. Throws std::invalid_argument on length mismatch or an empty
/// corpus.
double corpus_bleu(const std::vector<std::vector<std::string>>& hyps,
                   const std::vector<std::vector<std::string>>& refs);

enum class ExtractMode { Numbers, NamedEntities };

/// Verbatim extraction patterns. extract_ne_num implements exactly these as
/// maximal non-overlapping matches over the byte string.
inline constexpr std::string_view kNumberPattern = R"([0-9.,'/:]*[0-9]+[0-9.,'/:]*)";
inline constexpr std::string_view kNamedEntityPattern = R"([.,'/:a-zA-Z$]*[A-Z]+[.,'/:a-zA-Z$]*)";

/// All matches of the mode's pattern in order of appearance (a multiset:
/// repeated hits appear repeatedly). Run on XML-stripped text.
std::vector<std::string> extract_ne_num(std::string_view text, ExtractMode mode);

/// Corpus-level precision/recall of extracted items, matched per pair by
/// multiset intersection. An empty denominator yields 1.0.
std::pair<double, double> ne_num_precision_recall(const std::vector<EvalPair>& pairs,
                                                  ExtractMode mode);

/// Fraction of hypotheses whose tags nest correctly.
/// Throws std::invalid_argument on an empty list.
double xml_accuracy(const std::vector<XmlSegment>& hyps);
double xml_accuracy(const std::vector<EvalPair>& pairs);

/// Fraction of pairs where both sides are valid and the tag skeletons are
/// equal; `ordered` false compares skeletons up to sibling order.
double xml_match(const std::vector<EvalPair>& pairs, bool ordered = true);

/// Text chunks of a segment split at tag tokens: k tag tokens yield k+1
/// chunks (possibly empty), entities already replaced by their characters.
std::vector<std::vector<std::string>> tag_chunks(const XmlSegment& seg);

/// BLEU over tag-delimited chunks. Structure-matching pairs contribute their
/// positionally aligned chunk pairs; for any other pair every reference chunk
/// is paired with an empty hypothesis.
double xml_bleu(const std::vector<EvalPair>& pairs, bool ordered = true);

struct EvalReport {
  double bleu_no_xml = 0.0;
  double ne_num_precision = 1.0;
  double ne_num_recall = 1.0;
  double xml_accuracy = 0.0;
  double xml_match = 0.0;
  double xml_bleu = 0.0;
};

/// Full report over a pair list. NE extraction is added to the number
/// extraction only when `non_alphabetic_target` is set.
EvalReport evaluate_pairs(const std::vector<EvalPair>& pairs, bool non_alphabetic_target,
                          bool ordered_match = true);

}  // namespace xmlmt
