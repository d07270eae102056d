#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xmlmt/segment.hpp"
#include "xmlmt/tag_policy.hpp"
#include "xmlmt/xml_tree.hpp"

namespace xmlmt {

/// One aligned bilingual segment with its provenance.
struct SegmentPair {
  XmlSegment source;
  XmlSegment target;
  std::string file_id;
  size_t element_ordinal = 0;

  bool operator==(const SegmentPair&) const = default;
};

struct AlignedElementPair {
  size_t source_index;
  size_t target_index;

  bool operator==(const AlignedElementPair&) const = default;
};

/// Pre-order list of every translatable element in the document, nested ones
/// included. Subtrees rooted at untranslatable tags are not entered.
/// Pointers index into `doc`; they stay valid while `doc` is alive.
std::vector<const XmlElement*> linearize(const XmlElement& doc, const TagPolicy& policy);

/// Monotone alignment of two element sequences maximizing the number of
/// name-equal pairs; pairing differing names is not allowed and gaps cost
/// nothing. Among maximal alignments the lexicographically smallest index
/// sequence wins, so matches land as early as possible on both sides.
std::vector<AlignedElementPair> align_elements(const std::vector<const XmlElement*>& src,
                                               const std::vector<const XmlElement*>& tgt);

/// Flattens element content into a segment: the element's own tag is dropped,
/// attributes are never emitted, untranslatable children are removed (tails
/// kept), translatable children are removed when their tail has no text and
/// kept inline otherwise, all other children are kept inline.
XmlSegment element_to_segment(const XmlElement& el, const TagPolicy& policy);

/// Applies element_to_segment to both sides of every aligned pair.
std::vector<SegmentPair> extract_pairs(const std::vector<AlignedElementPair>& alignment,
                                       const std::vector<const XmlElement*>& src,
                                       const std::vector<const XmlElement*>& tgt,
                                       const TagPolicy& policy, const std::string& file_id);

struct UrlNormalizeOptions {
  /// Detection pattern (ECMAScript). Trailing sentence punctuation .,;:!? is
  /// trimmed from each hit before replacement so "x.com/." keeps its period.
  std::string pattern = R"((https?|ftp)://[^\s<>"]+)";
  size_t max_urls = 9;
};

/// Replaces URLs with #URL1#..#URL9#, numbered by first appearance on the
/// source side (target-only URLs continue the numbering); the same URL maps
/// to the same placeholder on both sides. Returns nullopt when the pair has
/// more distinct URLs than placeholders and must be dropped. Idempotent.
std::optional<SegmentPair> normalize_urls(const SegmentPair& pair,
                                          const UrlNormalizeOptions& opts = {});

/// Drops pairs whose source and target tag multisets differ (nesting order is
/// free), then removes exact duplicates of (source text, target text),
/// keeping the first occurrence. Input order is otherwise preserved.
std::vector<SegmentPair> filter_and_dedupe(const std::vector<SegmentPair>& pairs);

struct DatasetSplit {
  std::vector<SegmentPair> train;
  std::vector<SegmentPair> dev;
  std::vector<SegmentPair> test;
};

struct IndexSplit {
  std::vector<size_t> train;
  std::vector<size_t> dev;
  std::vector<size_t> test;
};

/// Seeded Fisher-Yates shuffle of [0, n), then dev = first 2000, test = next
/// 2000, train = rest. Corpora of at most 4000 items fall back to a
/// proportional 80/10/10 split (dev = test = n/10 rounded down).
/// Reproducible across platforms for a fixed seed.
IndexSplit split_indices(size_t n, uint64_t seed);

/// split_indices applied to the pairs themselves.
DatasetSplit split_dataset(std::vector<SegmentPair> pairs, uint64_t seed);

struct CorpusStats {
  std::map<size_t, size_t> length_histogram;     // source token count -> pairs
  std::map<size_t, size_t> tag_count_histogram;  // source tag tokens -> pairs
  double fraction_with_tags = 0.0;
};

CorpusStats corpus_stats(const std::vector<SegmentPair>& pairs);

}  // namespace xmlmt
