#include "xmlmt/metrics.hpp"

#include <cmath>
#include <map>
#include <unordered_map>

namespace xmlmt {

XmlSegment strip_xml(const XmlSegment& seg) {
  XmlSegment out;
  for (const Token& tok : seg.tokens) {
    switch (tok.kind) {
      case TokenKind::OpenTag:
      case TokenKind::CloseTag:
        break;
      case TokenKind::Entity:
        if (tok.value == "&amp;") out.tokens.push_back(text_token("&"));
        else if (tok.value == "&lt;") out.tokens.push_back(text_token("<"));
        else out.tokens.push_back(text_token(">"));
        break;
      case TokenKind::Text:
        out.tokens.push_back(tok);
        break;
    }
  }
  return out;
}

std::vector<std::string> stripped_tokens(const XmlSegment& seg) {
  std::vector<std::string> out;
  for (const Token& tok : strip_xml(seg).tokens) out.push_back(tok.value);
  return out;
}

namespace {

constexpr int kMaxOrder = 4;

std::string ngram_key(const std::vector<std::string>& toks, size_t start, int n) {
  std::string key;
  for (int k = 0; k < n; ++k) {
    if (k) key += '\x1f';
    key += toks[start + k];
  }
  return key;
}

}  // namespace

double corpus_bleu(const std::vector<std::vector<std::string>>& hyps,
                   const std::vector<std::vector<std::string>>& refs) {
  if (hyps.size() != refs.size())
    throw std::invalid_argument("corpus_bleu: hypothesis/reference count mismatch");
  if (hyps.empty()) throw std::invalid_argument("corpus_bleu: empty corpus");

  size_t correct[kMaxOrder] = {0, 0, 0, 0};
  size_t total[kMaxOrder] = {0, 0, 0, 0};
  size_t hyp_len = 0, ref_len = 0;

  for (size_t p = 0; p < hyps.size(); ++p) {
    const auto& hyp = hyps[p];
    const auto& ref = refs[p];
    hyp_len += hyp.size();
    ref_len += ref.size();
    for (int n = 1; n <= kMaxOrder; ++n) {
      if (hyp.size() + 1 <= static_cast<size_t>(n)) continue;
      size_t count = hyp.size() - n + 1;
      total[n - 1] += count;
      std::unordered_map<std::string, size_t> ref_grams;
      if (ref.size() + 1 > static_cast<size_t>(n))
        for (size_t s = 0; s + n <= ref.size(); ++s) ++ref_grams[ngram_key(ref, s, n)];
      for (size_t s = 0; s + n <= hyp.size(); ++s) {
        auto it = ref_grams.find(ngram_key(hyp, s, n));
        if (it != ref_grams.end() && it->second > 0) {
          ++correct[n - 1];
          --it->second;
        }
      }
    }
  }

  if (hyp_len == 0) return 0.0;
  double log_precision = 0.0;
  for (int n = 0; n < kMaxOrder; ++n) {
    if (correct[n] == 0) return 0.0;  // covers total[n] == 0 as well
    log_precision += std::log(static_cast<double>(correct[n]) / static_cast<double>(total[n]));
  }
  double bp = hyp_len > ref_len
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return 100.0 * bp * std::exp(log_precision / kMaxOrder);
}

namespace {

bool num_class(unsigned char c) {
  return (c >= '0' && c <= '9') || c == '.' || c == ',' || c == '\'' || c == '/' || c == ':';
}
bool num_core(unsigned char c) { return c >= '0' && c <= '9'; }

bool ne_class(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '.' || c == ',' ||
         c == '\'' || c == '/' || c == ':' || c == '$';
}
bool ne_core(unsigned char c) { return c >= 'A' && c <= 'Z'; }

}  // namespace

std::vector<std::string> extract_ne_num(std::string_view text, ExtractMode mode) {
  // Equivalent to repeated leftmost matching of the published patterns:
  // a maximal run of class characters matches iff it contains a core
  // character, and then the whole run is the match.
  auto in_class = mode == ExtractMode::Numbers ? num_class : ne_class;
  auto is_core = mode == ExtractMode::Numbers ? num_core : ne_core;

  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    if (!in_class(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    size_t start = i;
    bool core = false;
    while (i < text.size() && in_class(static_cast<unsigned char>(text[i]))) {
      core = core || is_core(static_cast<unsigned char>(text[i]));
      ++i;
    }
    if (core) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

namespace {

std::string stripped_text(const XmlSegment& seg) { return serialize_segment(strip_xml(seg)); }

struct PrCounts {
  size_t matched = 0;
  size_t hyp_total = 0;
  size_t ref_total = 0;

  void add(const EvalPair& pair, ExtractMode mode) {
    std::map<std::string, size_t> hyp_items, ref_items;
    for (auto& s : extract_ne_num(stripped_text(pair.hypothesis), mode)) ++hyp_items[s];
    for (auto& s : extract_ne_num(stripped_text(pair.reference), mode)) ++ref_items[s];
    for (const auto& [item, count] : hyp_items) {
      hyp_total += count;
      auto it = ref_items.find(item);
      if (it != ref_items.end()) matched += std::min(count, it->second);
    }
    for (const auto& [item, count] : ref_items) ref_total += count;
  }

  std::pair<double, double> rates() const {
    double precision =
        hyp_total == 0 ? 1.0 : static_cast<double>(matched) / static_cast<double>(hyp_total);
    double recall =
        ref_total == 0 ? 1.0 : static_cast<double>(matched) / static_cast<double>(ref_total);
    return {precision, recall};
  }
};

bool pair_valid(const EvalPair& p) { return p.hypothesis_parsed && validate_xml(p.hypothesis); }

bool pair_matches(const EvalPair& p, bool ordered) {
  if (!pair_valid(p) || !validate_xml(p.reference)) return false;
  TagSkeleton h = tag_skeleton(p.hypothesis);
  TagSkeleton r = tag_skeleton(p.reference);
  return ordered ? h == r : skeleton_equal_unordered(h, r);
}

}  // namespace

std::pair<double, double> ne_num_precision_recall(const std::vector<EvalPair>& pairs,
                                                  ExtractMode mode) {
  PrCounts counts;
  for (const EvalPair& p : pairs) counts.add(p, mode);
  return counts.rates();
}

double xml_accuracy(const std::vector<XmlSegment>& hyps) {
  if (hyps.empty()) throw std::invalid_argument("xml_accuracy: empty hypothesis list");
  size_t valid = 0;
  for (const XmlSegment& h : hyps)
    if (validate_xml(h)) ++valid;
  return static_cast<double>(valid) / static_cast<double>(hyps.size());
}

double xml_accuracy(const std::vector<EvalPair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("xml_accuracy: empty hypothesis list");
  size_t valid = 0;
  for (const EvalPair& p : pairs)
    if (pair_valid(p)) ++valid;
  return static_cast<double>(valid) / static_cast<double>(pairs.size());
}

double xml_match(const std::vector<EvalPair>& pairs, bool ordered) {
  if (pairs.empty()) throw std::invalid_argument("xml_match: empty pair list");
  size_t matched = 0;
  for (const EvalPair& p : pairs)
    if (pair_matches(p, ordered)) ++matched;
  return static_cast<double>(matched) / static_cast<double>(pairs.size());
}

std::vector<std::vector<std::string>> tag_chunks(const XmlSegment& seg) {
  std::vector<std::vector<std::string>> chunks(1);
  for (const Token& tok : seg.tokens) {
    if (is_tag(tok)) {
      chunks.emplace_back();
    } else if (tok.kind == TokenKind::Entity) {
      XmlSegment one;
      one.tokens.push_back(tok);
      chunks.back().push_back(stripped_tokens(one).front());
    } else {
      chunks.back().push_back(tok.value);
    }
  }
  return chunks;
}

double xml_bleu(const std::vector<EvalPair>& pairs, bool ordered) {
  if (pairs.empty()) throw std::invalid_argument("xml_bleu: empty pair list");
  std::vector<std::vector<std::string>> hyp_chunks, ref_chunks;
  for (const EvalPair& p : pairs) {
    std::vector<std::vector<std::string>> refs = tag_chunks(p.reference);
    if (pair_matches(p, ordered)) {
      std::vector<std::vector<std::string>> hyps = tag_chunks(p.hypothesis);
      for (size_t i = 0; i < refs.size(); ++i) {
        hyp_chunks.push_back(std::move(hyps[i]));
        ref_chunks.push_back(std::move(refs[i]));
      }
    } else {
      // Structure mismatch: the reference text must still be produced, so
      // every reference chunk counts against an empty hypothesis.
      for (auto& r : refs) {
        hyp_chunks.emplace_back();
        ref_chunks.push_back(std::move(r));
      }
    }
  }
  return corpus_bleu(hyp_chunks, ref_chunks);
}

EvalReport evaluate_pairs(const std::vector<EvalPair>& pairs, bool non_alphabetic_target,
                          bool ordered_match) {
  EvalReport report;
  std::vector<std::vector<std::string>> hyp_toks, ref_toks;
  for (const EvalPair& p : pairs) {
    hyp_toks.push_back(stripped_tokens(p.hypothesis));
    ref_toks.push_back(stripped_tokens(p.reference));
  }
  report.bleu_no_xml = corpus_bleu(hyp_toks, ref_toks);

  PrCounts counts;
  for (const EvalPair& p : pairs) {
    counts.add(p, ExtractMode::Numbers);
    if (non_alphabetic_target) counts.add(p, ExtractMode::NamedEntities);
  }
  std::tie(report.ne_num_precision, report.ne_num_recall) = counts.rates();

  report.xml_accuracy = xml_accuracy(pairs);
  report.xml_match = xml_match(pairs, ordered_match);
  report.xml_bleu = xml_bleu(pairs, ordered_match);
  return report;
}

}  // namespace xmlmt
