#pragma once

// Test-side reference implementations and generators. Everything here is
// written independently of the library internals it checks: different
// algorithms, different data structures, same contracts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "xmlmt/scorer.hpp"
#include "xmlmt/segment.hpp"

namespace testsup {

inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// ---------------------------------------------------------------------------
// Reference corpus BLEU: n-gram vectors as map keys, no string joining.

inline double reference_bleu(const std::vector<std::vector<std::string>>& hyps,
                             const std::vector<std::vector<std::string>>& refs) {
  using Gram = std::vector<std::string>;
  double log_sum = 0.0;
  size_t hyp_len = 0, ref_len = 0;
  for (size_t i = 0; i < hyps.size(); ++i) {
    hyp_len += hyps[i].size();
    ref_len += refs[i].size();
  }
  for (size_t n = 1; n <= 4; ++n) {
    size_t matched = 0, total = 0;
    for (size_t i = 0; i < hyps.size(); ++i) {
      std::map<Gram, size_t> ref_counts;
      if (refs[i].size() >= n)
        for (size_t k = 0; k + n <= refs[i].size(); ++k)
          ++ref_counts[Gram(refs[i].begin() + k, refs[i].begin() + k + n)];
      std::map<Gram, size_t> hyp_counts;
      if (hyps[i].size() >= n)
        for (size_t k = 0; k + n <= hyps[i].size(); ++k)
          ++hyp_counts[Gram(hyps[i].begin() + k, hyps[i].begin() + k + n)];
      for (const auto& [gram, count] : hyp_counts) {
        total += count;
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matched += std::min(count, it->second);
      }
    }
    if (matched == 0) return 0.0;
    log_sum += 0.25 * std::log(static_cast<double>(matched) / static_cast<double>(total));
  }
  double bp = hyp_len > ref_len
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return 100.0 * bp * std::exp(log_sum);
}

// ---------------------------------------------------------------------------
// Reference token extractor: repeated leftmost std::regex search.

inline std::vector<std::string> regex_extract(const std::string& text, bool numbers) {
  static const std::regex num_re(R"([0-9.,'/:]*[0-9]+[0-9.,'/:]*)");
  static const std::regex ne_re(R"([.,'/:a-zA-Z$]*[A-Z]+[.,'/:a-zA-Z$]*)");
  const std::regex& re = numbers ? num_re : ne_re;
  std::vector<std::string> out;
  auto begin = std::sregex_iterator(text.begin(), text.end(), re);
  for (auto it = begin; it != std::sregex_iterator(); ++it) out.push_back(it->str());
  return out;
}

// ---------------------------------------------------------------------------
// Validity by reduction: drop non-tag tokens, then repeatedly delete adjacent
// matching <t></t> pairs; valid iff nothing remains.

inline bool reduction_valid(const xmlmt::XmlSegment& seg) {
  std::vector<xmlmt::Token> tags;
  for (const auto& t : seg.tokens)
    if (xmlmt::is_tag(t)) tags.push_back(t);
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i + 1 < tags.size(); ++i) {
      if (tags[i].kind == xmlmt::TokenKind::OpenTag &&
          tags[i + 1].kind == xmlmt::TokenKind::CloseTag && tags[i].value == tags[i + 1].value) {
        tags.erase(tags.begin() + i, tags.begin() + i + 2);
        changed = true;
        break;
      }
    }
  }
  return tags.empty();
}

// ---------------------------------------------------------------------------
// Brute-force alignment: enumerate every monotone name-equal matching,
// keep the maximum-cardinality ones, return the lexicographically smallest
// (pairs compared in order). Exponential; keep sides small.

inline void enumerate_alignments(const std::vector<std::string>& a,
                                 const std::vector<std::string>& b, size_t i, size_t j,
                                 std::vector<std::pair<size_t, size_t>>& cur,
                                 std::set<std::vector<std::pair<size_t, size_t>>>& out) {
  if (i == a.size() || j == b.size()) {
    out.insert(cur);
    return;
  }
  if (a[i] == b[j]) {
    cur.emplace_back(i, j);
    enumerate_alignments(a, b, i + 1, j + 1, cur, out);
    cur.pop_back();
  }
  enumerate_alignments(a, b, i + 1, j, cur, out);
  enumerate_alignments(a, b, i, j + 1, cur, out);
}

inline std::vector<std::pair<size_t, size_t>> brute_force_alignment(
    const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::set<std::vector<std::pair<size_t, size_t>>> all;
  std::vector<std::pair<size_t, size_t>> cur;
  enumerate_alignments(a, b, 0, 0, cur, all);
  size_t best = 0;
  for (const auto& al : all) best = std::max(best, al.size());
  std::vector<std::pair<size_t, size_t>> winner;
  bool first = true;
  for (const auto& al : all) {
    if (al.size() != best) continue;
    if (first || al < winner) {
      winner = al;
      first = false;
    }
  }
  return winner;
}

// ---------------------------------------------------------------------------
// Deterministic pseudo-random scorer: logits drawn from a normal distribution
// seeded by (seed, prefix), so every call with the same prefix agrees.

class NoiseScorer : public xmlmt::Scorer {
 public:
  NoiseScorer(xmlmt::Vocabulary vocab, uint64_t seed)
      : vocab_(std::move(vocab)), seed_(seed) {}

  const xmlmt::Vocabulary& vocab() const override { return vocab_; }

  xmlmt::StepDistribution step(std::span<const std::string> /*source*/,
                               std::span<const std::string> prefix,
                               const std::vector<std::string>* /*retrieved*/) const override {
    std::string key;
    for (const auto& t : prefix) {
      key += t;
      key += '\x1f';
    }
    std::mt19937_64 rng(seed_ ^ fnv1a(key));
    std::normal_distribution<double> normal(0.0, 2.0);
    std::vector<double> logits(vocab_.size());
    for (double& x : logits) x = normal(rng);
    double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double x : logits) sum += std::exp(x - mx);
    double log_z = mx + std::log(sum);
    xmlmt::StepDistribution dist;
    dist.gen_logprobs.resize(logits.size());
    for (size_t i = 0; i < logits.size(); ++i) dist.gen_logprobs[i] = logits[i] - log_z;
    return dist;
  }

 private:
  xmlmt::Vocabulary vocab_;
  uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Random tagged segments over a tiny vocabulary.

struct SegmentGen {
  std::mt19937_64 rng;
  std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "epsilon",
                                    "zeta",  "eta",  "theta", "iota",  "kappa"};
  std::vector<std::string> tags = {"b", "i", "u", "ph"};

  explicit SegmentGen(uint64_t seed) : rng(seed) {}

  size_t pick(size_t n) { return std::uniform_int_distribution<size_t>(0, n - 1)(rng); }

  /// Valid segment with `pairs` nested/sequential tag pairs and some text.
  xmlmt::XmlSegment valid_segment(size_t pairs) {
    xmlmt::XmlSegment seg;
    build_valid(seg, pairs, 0);
    if (seg.tokens.empty()) seg.tokens.push_back(xmlmt::text_token(words[pick(words.size())]));
    return seg;
  }

 private:
  void build_valid(xmlmt::XmlSegment& seg, size_t pairs, int depth) {
    size_t words_before = pick(3);
    for (size_t i = 0; i < words_before; ++i)
      seg.tokens.push_back(xmlmt::text_token(words[pick(words.size())]));
    while (pairs > 0) {
      size_t inside = pick(pairs) + 1;  // 1..pairs
      pairs -= inside;
      const std::string& tag = tags[pick(tags.size())];
      seg.tokens.push_back(xmlmt::open_tag(tag));
      build_valid(seg, inside - 1, depth + 1);
      seg.tokens.push_back(xmlmt::close_tag(tag));
      size_t words_after = pick(3);
      for (size_t i = 0; i < words_after; ++i)
        seg.tokens.push_back(xmlmt::text_token(words[pick(words.size())]));
    }
  }
};

}  // namespace testsup
