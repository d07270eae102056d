#include "xmlmt/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace xmlmt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// A channel copies only when some non-null slot strictly beats slot 0.
bool null_dominates(const std::vector<double>& attention) {
  for (size_t i = 1; i < attention.size(); ++i)
    if (attention[i] > attention[0]) return false;
  return true;
}

std::vector<double> copy_distribution(const std::vector<double>& attention,
                                      std::span<const std::string> tokens,
                                      const Vocabulary& vocab) {
  std::vector<double> dist(vocab.size(), 0.0);
  double mass = 0.0;
  for (size_t i = 0; i < tokens.size(); ++i) {
    auto idx = vocab.index(tokens[i]);
    if (!idx) throw std::invalid_argument("copy token not in vocabulary: " + tokens[i]);
    dist[*idx] += attention[i + 1];
    mass += attention[i + 1];
  }
  // Some non-null slot dominates slot 0, so mass > 0 for valid attention.
  for (double& p : dist) p /= mass;
  return dist;
}

}  // namespace

CombineResult combine_distributions(const StepDistribution& dist,
                                    std::span<const std::string> source_tokens,
                                    const std::vector<std::string>* retrieved_tokens,
                                    const Vocabulary& vocab) {
  if (dist.gen_logprobs.size() != vocab.size())
    throw std::invalid_argument("generation distribution size does not match vocabulary");
  if (dist.source_attention && dist.source_attention->size() != source_tokens.size() + 1)
    throw std::invalid_argument("source attention length does not match source tokens");
  if (dist.retrieval_attention) {
    if (!retrieved_tokens)
      throw std::invalid_argument("retrieval attention given without retrieved tokens");
    if (dist.retrieval_attention->size() != retrieved_tokens->size() + 1)
      throw std::invalid_argument("retrieval attention length does not match retrieved tokens");
  }

  CombineResult result;
  bool no_source_copy = !dist.source_attention || null_dominates(*dist.source_attention);
  bool no_retrieval_copy = !dist.retrieval_attention || null_dominates(*dist.retrieval_attention);

  if (!no_source_copy) {
    result.probs = copy_distribution(*dist.source_attention, source_tokens, vocab);
    result.copied_source = true;
  } else if (!no_retrieval_copy) {
    result.probs = copy_distribution(*dist.retrieval_attention, *retrieved_tokens, vocab);
    result.copied_retrieval = true;
  } else {
    result.probs.resize(vocab.size());
    for (size_t i = 0; i < vocab.size(); ++i) result.probs[i] = std::exp(dist.gen_logprobs[i]);
  }
  return result;
}

TranslationMemory::TranslationMemory(std::vector<SegmentPair> pairs)
    : pairs_(std::move(pairs)) {
  for (size_t i = 0; i < pairs_.size(); ++i) {
    std::set<std::string> seen;
    for (const std::string& tok : segment_token_strings(pairs_[i].source))
      if (seen.insert(tok).second) postings_[tok].push_back(i);
  }
}

double TranslationMemory::idf(const std::string& token) const {
  auto it = postings_.find(token);
  size_t df = it == postings_.end() ? 0 : it->second.size();
  return std::log((1.0 + static_cast<double>(pairs_.size())) / (1.0 + static_cast<double>(df))) +
         1.0;
}

double tm_similarity(std::span<const std::string> query_tokens, const SegmentPair& entry,
                     const TranslationMemory& memory) {
  std::set<std::string> query(query_tokens.begin(), query_tokens.end());
  std::vector<std::string> entry_tokens = segment_token_strings(entry.source);
  std::set<std::string> doc(entry_tokens.begin(), entry_tokens.end());

  double inter = 0.0, uni = 0.0;
  for (const std::string& t : query) {
    double w = memory.idf(t);
    uni += w;
    if (doc.count(t)) inter += w;
  }
  for (const std::string& t : doc)
    if (!query.count(t)) uni += memory.idf(t);
  return uni == 0.0 ? 0.0 : inter / uni;
}

std::optional<size_t> retrieve_tm_index(std::span<const std::string> source_tokens,
                                        const TranslationMemory& memory) {
  if (memory.empty()) return std::nullopt;

  std::set<std::string> query(source_tokens.begin(), source_tokens.end());
  std::set<size_t> candidates;
  for (const std::string& t : query) {
    auto it = memory.postings().find(t);
    if (it != memory.postings().end())
      candidates.insert(it->second.begin(), it->second.end());
  }
  // No shared token anywhere: every similarity is zero and the tie rule
  // settles on the first pair.
  if (candidates.empty()) return 0;

  size_t best = *candidates.begin();
  double best_sim = -1.0;
  for (size_t i : candidates) {
    double sim = tm_similarity(source_tokens, memory.pairs()[i], memory);
    if (sim > best_sim) {
      best_sim = sim;
      best = i;
    }
  }
  return best;
}

const SegmentPair* retrieve_tm(const XmlSegment& source, const TranslationMemory& memory) {
  auto idx = retrieve_tm_index(segment_token_strings(source), memory);
  return idx ? &memory.pairs()[*idx] : nullptr;
}

std::vector<std::string> segment_token_strings(const XmlSegment& seg) {
  std::vector<std::string> out;
  out.reserve(seg.size());
  for (const Token& tok : seg.tokens) {
    switch (tok.kind) {
      case TokenKind::OpenTag: out.push_back("<" + tok.value + ">"); break;
      case TokenKind::CloseTag: out.push_back("</" + tok.value + ">"); break;
      default: out.push_back(tok.value); break;
    }
  }
  return out;
}

XmlSegment segment_from_token_strings(const std::vector<std::string>& tokens) {
  XmlSegment seg;
  seg.tokens.reserve(tokens.size());
  for (const std::string& t : tokens) {
    std::string name;
    switch (Vocabulary::classify(t, &name)) {
      case VocabClass::OpenTag: seg.tokens.push_back(open_tag(name)); break;
      case VocabClass::CloseTag: seg.tokens.push_back(close_tag(name)); break;
      case VocabClass::Entity: seg.tokens.push_back(entity_token(t)); break;
      default: seg.tokens.push_back(text_token(t)); break;
    }
  }
  return seg;
}

namespace {

struct Candidate {
  std::vector<size_t> tokens;  // vocabulary indices, starts with BOS
  double score = 0.0;
  std::map<std::string, size_t> remaining;  // tag pairs still to open
  std::vector<std::string> open_stack;      // currently open tags, innermost last
  bool finished = false;
  std::vector<TokenOrigin> origins;
  std::vector<std::optional<size_t>> source_positions;
};

struct Expansion {
  std::vector<double> row;  // selection scores over the vocabulary
  StepDistribution step;
  bool copied_source = false;
  bool copied_retrieval = false;
};

/// Dominant attention slot among the non-null slots that hold `token`.
std::optional<size_t> attribute_position(const StepDistribution& step,
                                         const std::vector<size_t>& source_ids, size_t token) {
  if (!step.source_attention) return std::nullopt;
  std::optional<size_t> best;
  for (size_t i = 0; i < source_ids.size(); ++i) {
    if (source_ids[i] != token) continue;
    if (!best || (*step.source_attention)[i + 1] > (*step.source_attention)[*best + 1])
      best = i;
  }
  return best;
}

void check_candidate(const Candidate& cand, const std::map<std::string, size_t>& source_tags,
                     size_t pair_count) {
  std::map<std::string, size_t> open_counts;
  for (const std::string& name : cand.open_stack) ++open_counts[name];
  size_t remaining_total = 0;
  for (const auto& [name, count] : cand.remaining) {
    remaining_total += count;
    auto it = source_tags.find(name);
    size_t limit = it == source_tags.end() ? 0 : it->second;
    if (count + open_counts[name] > limit)
      throw std::logic_error("beam invariant violated: tag budget exceeded for <" + name + ">");
  }
  if (remaining_total + cand.open_stack.size() > pair_count)
    throw std::logic_error("beam invariant violated: open + remaining exceeds source pairs");
}

}  // namespace

DecodeResult constrained_beam_search(const Scorer& scorer, const XmlSegment& source,
                                     const TranslationMemory* memory, const BeamConfig& cfg) {
  if (cfg.beam_size < 1) throw std::invalid_argument("beam_size must be at least 1");
  if (cfg.max_length < 2) throw std::invalid_argument("max_length must be at least 2");
  if (cfg.constrained && !validate_xml(source))
    throw std::invalid_argument("constrained decoding requires a well-formed source");

  const Vocabulary& vocab = scorer.vocab();
  const size_t B = cfg.beam_size;

  std::vector<std::string> source_tokens = segment_token_strings(source);
  for (const std::string& t : source_tokens)
    if (!vocab.index(t)) throw std::invalid_argument("source token not in vocabulary: " + t);
  std::vector<size_t> source_ids;
  for (const std::string& t : source_tokens) source_ids.push_back(*vocab.index(t));

  std::map<std::string, size_t> source_tags;
  size_t pair_count = 0;
  for (const Token& tok : source.tokens)
    if (tok.kind == TokenKind::OpenTag) {
      ++source_tags[tok.value];
      ++pair_count;
    }

  const std::vector<std::string>* retrieved_tokens = nullptr;
  std::vector<std::string> retrieved_storage;
  if (memory) {
    if (const SegmentPair* hit = retrieve_tm(source, *memory)) {
      retrieved_storage = segment_token_strings(hit->target);
      retrieved_tokens = &retrieved_storage;
    }
  }

  Candidate initial;
  initial.tokens.push_back(vocab.bos());
  initial.remaining = source_tags;
  std::vector<Candidate> beam(B, initial);

  auto generated_length = [&]() {
    size_t len = 0;
    for (const Candidate& c : beam) len = std::max(len, c.tokens.size() - 1);
    return len;
  };

  std::vector<Expansion> expansions;
  std::vector<double> finished_scores;
  std::vector<std::string> prefix_buffer;

  for (size_t step_index = 0; !beam[0].finished && generated_length() < cfg.max_length;
       ++step_index) {
    expansions.resize(beam.size());
    finished_scores.resize(beam.size());
    for (size_t b = 0; b < beam.size(); ++b) {
      Candidate& cand = beam[b];
      if (cand.finished) {
        // Finished candidates compete with their frozen score alone.
        finished_scores[b] = cand.score;
        expansions[b].row.clear();
        continue;
      }
      prefix_buffer.clear();
      for (size_t id : cand.tokens) prefix_buffer.push_back(vocab.token(id));
      Expansion& exp = expansions[b];
      exp.step = scorer.step(source_tokens, prefix_buffer, retrieved_tokens);
      CombineResult combined =
          combine_distributions(exp.step, source_tokens, retrieved_tokens, vocab);
      exp.copied_source = combined.copied_source;
      exp.copied_retrieval = combined.copied_retrieval;

      exp.row.resize(vocab.size());
      for (size_t w = 0; w < vocab.size(); ++w)
        exp.row[w] = std::log(combined.probs[w]) + cand.score + cfg.length_penalty;

      for (size_t w = 0; w < vocab.size(); ++w) {
        switch (vocab.token_class(w)) {
          case VocabClass::Bos:
            exp.row[w] = kNegInf;  // BOS is never a continuation
            break;
          case VocabClass::OpenTag:
            if (cfg.constrained) {
              auto it = cand.remaining.find(vocab.tag_name(w));
              if (it == cand.remaining.end() || it->second == 0) exp.row[w] = kNegInf;
            }
            break;
          case VocabClass::CloseTag:
            if (cfg.constrained &&
                (cand.open_stack.empty() || cand.open_stack.back() != vocab.tag_name(w)))
              exp.row[w] = kNegInf;
            break;
          case VocabClass::Eos:
            if (cfg.constrained && (!cand.open_stack.empty() ||
                                    std::any_of(cand.remaining.begin(), cand.remaining.end(),
                                                [](const auto& kv) { return kv.second > 0; })))
              exp.row[w] = kNegInf;
            break;
          default:
            break;
        }
      }
    }

    // B global argmax selections; ties go to the lower beam index, then the
    // lower vocabulary index, which the scan order guarantees.
    std::vector<Candidate> next;
    next.reserve(B);
    for (size_t pick = 0; pick < B; ++pick) {
      double best_score = kNegInf;
      size_t best_b = 0, best_w = 0;
      bool best_finished = false, found = false;
      for (size_t b = 0; b < beam.size(); ++b) {
        if (beam[b].finished) {
          if (finished_scores[b] > best_score) {
            best_score = finished_scores[b];
            best_b = b;
            best_finished = true;
            found = true;
          }
          continue;
        }
        const std::vector<double>& row = expansions[b].row;
        for (size_t w = 0; w < row.size(); ++w) {
          if (row[w] > best_score) {
            best_score = row[w];
            best_b = b;
            best_w = w;
            best_finished = false;
            found = true;
          }
        }
      }
      if (!found) break;  // every continuation is impossible

      if (best_finished) {
        next.push_back(beam[best_b]);
        finished_scores[best_b] = kNegInf;  // unselectable for the rest of the step
        continue;
      }

      Candidate cand = beam[best_b];  // copy, then extend
      const Expansion& exp = expansions[best_b];
      cand.tokens.push_back(best_w);
      cand.score = best_score;
      switch (vocab.token_class(best_w)) {
        case VocabClass::OpenTag: {
          auto it = cand.remaining.find(vocab.tag_name(best_w));
          if (it != cand.remaining.end() && it->second > 0) --it->second;
          cand.open_stack.push_back(vocab.tag_name(best_w));
          break;
        }
        case VocabClass::CloseTag:
          if (!cand.open_stack.empty() && cand.open_stack.back() == vocab.tag_name(best_w))
            cand.open_stack.pop_back();
          break;
        case VocabClass::Eos:
          cand.finished = true;
          break;
        default:
          break;
      }
      TokenOrigin origin = TokenOrigin::Generated;
      std::optional<size_t> src_pos;
      if (exp.copied_source) {
        origin = TokenOrigin::SourceCopy;
        src_pos = attribute_position(exp.step, source_ids, best_w);
      } else if (exp.copied_retrieval) {
        origin = TokenOrigin::RetrievalCopy;
      }
      cand.origins.push_back(origin);
      cand.source_positions.push_back(src_pos);
      next.push_back(std::move(cand));

      if (step_index == 0) {
        // All rows are identical on the first step; masking the token
        // everywhere forces distinct beam entries.
        for (size_t b = 0; b < beam.size(); ++b)
          if (!beam[b].finished && !expansions[b].row.empty()) expansions[b].row[best_w] = kNegInf;
      } else {
        expansions[best_b].row[best_w] = kNegInf;
      }
    }

    if (next.empty()) break;  // nothing selectable; keep the current beam
    beam = std::move(next);

    if (cfg.check_invariants)
      for (const Candidate& cand : beam) check_candidate(cand, source_tags, pair_count);
  }

  const Candidate& top = beam[0];
  DecodeResult result;
  result.truncated = !top.finished;
  std::vector<std::string> out_tokens;
  for (size_t i = 1; i < top.tokens.size(); ++i) {
    if (top.tokens[i] == vocab.eos() && i + 1 == top.tokens.size()) break;
    out_tokens.push_back(vocab.token(top.tokens[i]));
    result.origins.push_back(top.origins[i - 1]);
    result.source_positions.push_back(top.source_positions[i - 1]);
  }
  result.output = segment_from_token_strings(out_tokens);
  return result;
}

DecodeResult unconstrained_beam_search(const Scorer& scorer, const XmlSegment& source,
                                       const TranslationMemory* memory, BeamConfig cfg) {
  cfg.constrained = false;
  return constrained_beam_search(scorer, source, memory, cfg);
}

namespace {

bool needs_space(const Token& prev, const Token& next) {
  return prev.kind != TokenKind::OpenTag && next.kind != TokenKind::CloseTag;
}

}  // namespace

std::string recover_attributes(const DecodeResult& result, const ParsedSegment& raw_source) {
  const auto& src_tokens = raw_source.segment.tokens;
  std::string out;
  for (size_t i = 0; i < result.output.tokens.size(); ++i) {
    const Token& tok = result.output.tokens[i];
    if (i > 0 && needs_space(result.output.tokens[i - 1], tok)) out += ' ';
    std::string attrs;
    if (tok.kind == TokenKind::OpenTag && result.origins[i] == TokenOrigin::SourceCopy &&
        result.source_positions[i]) {
      size_t pos = *result.source_positions[i];
      if (pos < src_tokens.size() && src_tokens[pos].kind == TokenKind::OpenTag &&
          src_tokens[pos].value == tok.value)
        attrs = raw_source.tag_attributes[pos];
    }
    switch (tok.kind) {
      case TokenKind::Text:
      case TokenKind::Entity:
        out += tok.value;
        break;
      case TokenKind::OpenTag:
        out += '<';
        out += tok.value;
        if (!attrs.empty()) {
          out += ' ';
          out += attrs;
        }
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

}  // namespace xmlmt
