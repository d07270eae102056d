#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "xmlmt/extraction.hpp"
#include "xmlmt/scorer.hpp"
#include "xmlmt/segment.hpp"

namespace xmlmt {

/// Which copy channel produced a token, per the discrete gate cascade:
/// output = (1-ds)*p_src + ds*(dr*p_gen + (1-dr)*p_ret) with ds/dr in {0,1}.
enum class TokenOrigin { Generated, SourceCopy, RetrievalCopy };

struct CombineResult {
  std::vector<double> probs;  // over the vocabulary, sums to 1
  bool copied_source = false;
  bool copied_retrieval = false;
};

/// Applies the gate cascade to one step. A channel's gate opens (copying
/// happens) only when some non-null attention slot strictly exceeds slot 0;
/// ties and missing channels mean no copy. Copy distributions aggregate
/// attention mass per token over the non-null slots and renormalize.
/// Throws std::invalid_argument on attention/token-list size mismatch or
/// out-of-vocabulary tokens.
CombineResult combine_distributions(const StepDistribution& dist,
                                    std::span<const std::string> source_tokens,
                                    const std::vector<std::string>* retrieved_tokens,
                                    const Vocabulary& vocab);

/// Fuzzy-match store over segment pairs with an inverted token index.
class TranslationMemory {
 public:
  explicit TranslationMemory(std::vector<SegmentPair> pairs);

  const std::vector<SegmentPair>& pairs() const { return pairs_; }
  bool empty() const { return pairs_.empty(); }

  /// Smoothed inverse document frequency of a source token.
  double idf(const std::string& token) const;

  const std::unordered_map<std::string, std::vector<size_t>>& postings() const {
    return postings_;
  }

 private:
  std::vector<SegmentPair> pairs_;
  std::unordered_map<std::string, std::vector<size_t>> postings_;
};

/// Index of the memory pair maximizing IDF-weighted Jaccard similarity
/// between source token sets; ties go to the lowest index, an empty memory
/// yields nullopt. A query sharing no token with any entry scores 0
/// everywhere and therefore returns index 0.
std::optional<size_t> retrieve_tm_index(std::span<const std::string> source_tokens,
                                        const TranslationMemory& memory);

/// Convenience wrapper returning the retrieved pair itself.
const SegmentPair* retrieve_tm(const XmlSegment& source, const TranslationMemory& memory);

/// IDF-weighted Jaccard over token sets, exposed for diagnostics.
double tm_similarity(std::span<const std::string> query_tokens, const SegmentPair& entry,
                     const TranslationMemory& memory);

struct BeamConfig {
  size_t beam_size = 4;    // B >= 1
  size_t max_length = 200; // generated tokens, >= 2
  double length_penalty = 0.0;  // additive per-step score bonus
  bool constrained = true;
  /// Re-checks the tag bookkeeping of every candidate after each step and
  /// throws std::logic_error on violation. For tests.
  bool check_invariants = false;
};

struct DecodeResult {
  XmlSegment output;                 // emitted tokens, BOS/EOS removed
  std::vector<TokenOrigin> origins;  // one label per emitted token
  /// Source position a source-copied token was attributed to (the dominant
  /// attention slot among slots holding that token), nullopt otherwise.
  std::vector<std::optional<size_t>> source_positions;
  bool truncated = false;
};

/// Beam search over the scorer's vocabulary. In constrained mode three masks
/// keep the output's tag structure equal to the source's: an open tag is only
/// allowed while its pair count remains, a close tag only for the innermost
/// open tag, and EOS only once every pair is closed. Finished candidates are
/// carried with frozen scores and become unselectable for the rest of the
/// step once taken. The search stops when the top candidate is finished or
/// the length budget is exhausted; hitting the budget sets `truncated`.
/// Deterministic: ties resolve to the lower beam index, then the lower
/// vocabulary index.
DecodeResult constrained_beam_search(const Scorer& scorer, const XmlSegment& source,
                                     const TranslationMemory* memory, const BeamConfig& cfg);

/// Same search with the three masks off.
DecodeResult unconstrained_beam_search(const Scorer& scorer, const XmlSegment& source,
                                       const TranslationMemory* memory, BeamConfig cfg);

/// Vocabulary string forms of a segment's tokens ("<b>" for open tags).
std::vector<std::string> segment_token_strings(const XmlSegment& seg);

/// Rebuilds a segment from vocabulary string forms.
XmlSegment segment_from_token_strings(const std::vector<std::string>& tokens);

/// Re-renders a decode result with source attributes restored: an open tag
/// copied from a source position whose original tag carried attributes is
/// emitted with those attributes; everything else is rendered as-is.
std::string recover_attributes(const DecodeResult& result, const ParsedSegment& raw_source);

}  // namespace xmlmt
