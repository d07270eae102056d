#include "xmlmt/extraction.hpp"

#include <limits>
#include <random>
#include <regex>
#include <unordered_set>

namespace xmlmt {

namespace {

void collect_translatable(const XmlElement& el, const TagPolicy& policy,
                          std::vector<const XmlElement*>& out) {
  if (policy.category(el.tag) == TagPolicy::Category::Untranslatable) return;
  if (policy.is_translatable(el.tag)) out.push_back(&el);
  for (const XmlElement& child : el.children) collect_translatable(child, policy, out);
}

bool has_text(const std::string& s) {
  for (char c : s)
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r' && c != '\f' && c != '\v') return true;
  return false;
}

/// Document text runs never contain '<', so the segment tokenizer applies
/// directly and takes care of whitespace and entity spellings.
void append_text_tokens(const std::string& run, std::vector<Token>& out) {
  if (run.empty()) return;
  XmlSegment parsed = parse_segment(run);
  out.insert(out.end(), parsed.tokens.begin(), parsed.tokens.end());
}

void flatten_content(const XmlElement& el, const TagPolicy& policy, std::vector<Token>& out) {
  append_text_tokens(el.text, out);
  for (const XmlElement& child : el.children) {
    TagPolicy::Category cat = policy.category(child.tag);
    bool keep_inline;
    if (cat == TagPolicy::Category::Untranslatable) {
      keep_inline = false;  // drop the whole element, tail survives below
    } else if (cat == TagPolicy::Category::Translatable) {
      keep_inline = has_text(child.tail);  // tail-less units live as own pairs
    } else {
      keep_inline = true;
    }
    if (keep_inline) {
      out.push_back(open_tag(child.tag));
      flatten_content(child, policy, out);
      out.push_back(close_tag(child.tag));
    }
    append_text_tokens(child.tail, out);
  }
}

}  // namespace

std::vector<const XmlElement*> linearize(const XmlElement& doc, const TagPolicy& policy) {
  std::vector<const XmlElement*> out;
  collect_translatable(doc, policy, out);
  return out;
}

std::vector<AlignedElementPair> align_elements(const std::vector<const XmlElement*>& src,
                                               const std::vector<const XmlElement*>& tgt) {
  const size_t n = src.size(), m = tgt.size();
  // dp[i][j] = maximum matches aligning src[i..n) with tgt[j..m).
  std::vector<std::vector<size_t>> dp(n + 1, std::vector<size_t>(m + 1, 0));
  for (size_t i = n; i-- > 0;) {
    for (size_t j = m; j-- > 0;) {
      size_t best = std::max(dp[i + 1][j], dp[i][j + 1]);
      if (src[i]->tag == tgt[j]->tag) best = std::max(best, dp[i + 1][j + 1] + 1);
      dp[i][j] = best;
    }
  }
  // Forward greedy walk: repeatedly emit the lexicographically smallest
  // (source, target) match that still allows a maximum-size alignment.
  // dp[s][j] and dp[s+1][t+1] are non-increasing in s and t, so both scans
  // can stop as soon as the remaining budget becomes unreachable.
  std::vector<AlignedElementPair> out;
  size_t i = 0, j = 0;
  while (dp[i][j] > 0) {
    const size_t budget = dp[i][j];
    bool emitted = false;
    for (size_t s = i; !emitted && s < n && dp[s][j] == budget; ++s) {
      for (size_t t = j; !emitted && t < m && dp[s + 1][t + 1] + 1 >= budget; ++t) {
        if (src[s]->tag == tgt[t]->tag && dp[s + 1][t + 1] + 1 == budget) {
          out.push_back({s, t});
          i = s + 1;
          j = t + 1;
          emitted = true;
        }
      }
    }
  }
  return out;
}

XmlSegment element_to_segment(const XmlElement& el, const TagPolicy& policy) {
  XmlSegment seg;
  flatten_content(el, policy, seg.tokens);
  return seg;
}

std::vector<SegmentPair> extract_pairs(const std::vector<AlignedElementPair>& alignment,
                                       const std::vector<const XmlElement*>& src,
                                       const std::vector<const XmlElement*>& tgt,
                                       const TagPolicy& policy, const std::string& file_id) {
  std::vector<SegmentPair> pairs;
  pairs.reserve(alignment.size());
  for (size_t k = 0; k < alignment.size(); ++k) {
    const AlignedElementPair& a = alignment[k];
    pairs.push_back({element_to_segment(*src.at(a.source_index), policy),
                     element_to_segment(*tgt.at(a.target_index), policy), file_id, k});
  }
  return pairs;
}

namespace {

bool is_trim_char(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?';
}

struct UrlHit {
  size_t begin, end;  // byte span within the token value
  std::string url;
};

std::vector<UrlHit> find_urls(const std::string& value, const std::regex& re) {
  std::vector<UrlHit> hits;
  for (auto it = std::sregex_iterator(value.begin(), value.end(), re);
       it != std::sregex_iterator(); ++it) {
    size_t b = static_cast<size_t>(it->position(0));
    size_t e = b + static_cast<size_t>(it->length(0));
    // Sentence punctuation glued to the end of a URL is not part of it.
    while (e > b && is_trim_char(value[e - 1])) --e;
    if (e > b) hits.push_back({b, e, value.substr(b, e - b)});
  }
  return hits;
}

void assign_numbers(const XmlSegment& seg, const std::regex& re,
                    std::map<std::string, size_t>& numbers) {
  for (const Token& tok : seg.tokens) {
    if (tok.kind != TokenKind::Text) continue;
    for (const UrlHit& hit : find_urls(tok.value, re))
      numbers.emplace(hit.url, numbers.size() + 1);
  }
}

void replace_urls(XmlSegment& seg, const std::regex& re,
                  const std::map<std::string, size_t>& numbers) {
  for (Token& tok : seg.tokens) {
    if (tok.kind != TokenKind::Text) continue;
    std::vector<UrlHit> hits = find_urls(tok.value, re);
    for (auto it = hits.rbegin(); it != hits.rend(); ++it)
      tok.value.replace(it->begin, it->end - it->begin,
                        "#URL" + std::to_string(numbers.at(it->url)) + "#");
  }
}

}  // namespace

std::optional<SegmentPair> normalize_urls(const SegmentPair& pair,
                                          const UrlNormalizeOptions& opts) {
  std::regex re(opts.pattern);
  std::map<std::string, size_t> numbers;
  assign_numbers(pair.source, re, numbers);  // source side numbers first
  assign_numbers(pair.target, re, numbers);
  if (numbers.empty()) return pair;
  if (numbers.size() > opts.max_urls) return std::nullopt;

  SegmentPair out = pair;
  replace_urls(out.source, re, numbers);
  replace_urls(out.target, re, numbers);
  return out;
}

std::vector<SegmentPair> filter_and_dedupe(const std::vector<SegmentPair>& pairs) {
  std::vector<SegmentPair> out;
  std::unordered_set<std::string> seen;
  for (const SegmentPair& p : pairs) {
    if (tag_multiset(p.source) != tag_multiset(p.target)) continue;
    std::string key = serialize_segment(p.source) + '\x1f' + serialize_segment(p.target);
    if (seen.insert(std::move(key)).second) out.push_back(p);
  }
  return out;
}

namespace {

/// Unbiased bounded draw; keeps the shuffle identical on every platform.
uint64_t bounded_rand(std::mt19937_64& rng, uint64_t n) {
  if (n <= 1) return 0;
  uint64_t threshold = (0 - n) % n;
  for (;;) {
    uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

}  // namespace

IndexSplit split_indices(size_t n, uint64_t seed) {
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (size_t i = n; i > 1; --i)
    std::swap(order[i - 1], order[bounded_rand(rng, i)]);

  size_t dev_n, test_n;
  if (n > 4000) {
    dev_n = test_n = 2000;
  } else {
    dev_n = test_n = n / 10;  // proportional fallback for small corpora
  }
  IndexSplit split;
  split.dev.assign(order.begin(), order.begin() + dev_n);
  split.test.assign(order.begin() + dev_n, order.begin() + dev_n + test_n);
  split.train.assign(order.begin() + dev_n + test_n, order.end());
  return split;
}

DatasetSplit split_dataset(std::vector<SegmentPair> pairs, uint64_t seed) {
  IndexSplit idx = split_indices(pairs.size(), seed);
  DatasetSplit split;
  auto take = [&](const std::vector<size_t>& ids, std::vector<SegmentPair>& out) {
    out.reserve(ids.size());
    for (size_t i : ids) out.push_back(pairs[i]);
  };
  take(idx.train, split.train);
  take(idx.dev, split.dev);
  take(idx.test, split.test);
  return split;
}

CorpusStats corpus_stats(const std::vector<SegmentPair>& pairs) {
  CorpusStats stats;
  size_t with_tags = 0;
  for (const SegmentPair& p : pairs) {
    size_t tags = 0;
    for (const Token& tok : p.source.tokens)
      if (is_tag(tok)) ++tags;
    ++stats.length_histogram[p.source.size()];
    ++stats.tag_count_histogram[tags];
    if (tags > 0) ++with_tags;
  }
  stats.fraction_with_tags =
      pairs.empty() ? 0.0 : static_cast<double>(with_tags) / static_cast<double>(pairs.size());
  return stats;
}

}  // namespace xmlmt
