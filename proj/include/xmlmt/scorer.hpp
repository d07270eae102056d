#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "xmlmt/tag_policy.hpp"

namespace xmlmt {

/// Reserved sequence-boundary token spellings. They never appear in decoder
/// output and must not be used as ordinary text tokens.
inline constexpr std::string_view kBosToken = "BOS";
inline constexpr std::string_view kEosToken = "EOS";

enum class VocabClass { Bos, Eos, OpenTag, CloseTag, Entity, Text };

/// Ordered token inventory with a string<->index bijection. Tag tokens use
/// their surface forms "<b>" / "</b>"; entities are literal spellings.
class Vocabulary {
 public:
  /// Tokens must be unique and contain BOS and EOS. Throws otherwise.
  explicit Vocabulary(std::vector<std::string> tokens);

  /// Deterministic inventory: BOS, EOS, the escape entities, open/close
  /// tokens for every policy tag (sorted), then any further tokens sorted.
  static Vocabulary build(const TagPolicy& policy, const std::vector<std::string>& extra);

  size_t size() const { return tokens_.size(); }
  const std::string& token(size_t i) const { return tokens_[i]; }
  std::optional<size_t> index(std::string_view token) const;

  size_t bos() const { return bos_; }
  size_t eos() const { return eos_; }

  VocabClass token_class(size_t i) const { return classes_[i]; }
  /// Tag name for OpenTag/CloseTag entries, empty otherwise.
  const std::string& tag_name(size_t i) const { return tag_names_[i]; }

  static VocabClass classify(std::string_view token, std::string* tag_name = nullptr);

 private:
  std::vector<std::string> tokens_;
  std::vector<VocabClass> classes_;
  std::vector<std::string> tag_names_;
  std::map<std::string, size_t, std::less<>> index_;
  size_t bos_ = 0, eos_ = 0;
};

/// One decoding step's output. gen_logprobs is a log distribution over the
/// vocabulary (exp sums to 1). The optional attention vectors have one slot
/// more than their token lists; slot 0 is the null slot whose dominance turns
/// copying off for that channel.
struct StepDistribution {
  std::vector<double> gen_logprobs;
  std::optional<std::vector<double>> source_attention;     // size N+1
  std::optional<std::vector<double>> retrieval_attention;  // size M+1
};

/// Next-token distribution provider. Implementations must be deterministic:
/// the same (source, prefix, retrieved) always yields the same distribution.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual const Vocabulary& vocab() const = 0;

  /// `prefix` starts with BOS. `retrieved` is null when no memory pair is in
  /// play. Throws std::invalid_argument when an input token is out of
  /// vocabulary.
  virtual StepDistribution step(std::span<const std::string> source,
                                std::span<const std::string> prefix,
                                const std::vector<std::string>* retrieved) const = 0;

  /// True when step() may be called concurrently from several threads.
  virtual bool thread_safe() const { return true; }
};

/// log(1/|V|) everywhere; no attention channels.
class UniformScorer : public Scorer {
 public:
  explicit UniformScorer(Vocabulary vocab);

  const Vocabulary& vocab() const override { return vocab_; }
  StepDistribution step(std::span<const std::string> source,
                        std::span<const std::string> prefix,
                        const std::vector<std::string>* retrieved) const override;

 private:
  Vocabulary vocab_;
  StepDistribution uniform_;
};

/// Replays a fixed table mapping space-joined prefixes (BOS included, e.g.
/// "BOS a b") to next-token weights. Weights are normalized at load time;
/// unlisted tokens get probability zero. Prefixes missing from the table fall
/// back to the uniform distribution so the scorer stays total under
/// constraint-driven detours.
class ScriptedScorer : public Scorer {
 public:
  ScriptedScorer(Vocabulary vocab, std::map<std::string, std::map<std::string, double>> table);

  /// JSON object {"vocab": [...optional...], "steps": {prefix: {token: weight}}}.
  static ScriptedScorer from_json(const nlohmann::json& spec, const TagPolicy& policy,
                                  const std::vector<std::string>& extra_tokens);
  static ScriptedScorer from_file(const std::filesystem::path& path, const TagPolicy& policy,
                                  const std::vector<std::string>& extra_tokens);

  /// Tokens mentioned anywhere in a table, for vocabulary assembly.
  static std::vector<std::string> tokens_in_spec(const nlohmann::json& spec);

  const Vocabulary& vocab() const override { return vocab_; }
  StepDistribution step(std::span<const std::string> source,
                        std::span<const std::string> prefix,
                        const std::vector<std::string>* retrieved) const override;

 private:
  Vocabulary vocab_;
  std::map<std::string, std::vector<double>> rows_;  // prefix -> logprobs
  std::vector<double> fallback_;
};

/// Maximum-likelihood bigram model over training sequences (each implicitly
/// wrapped in BOS ... EOS). Unseen histories fall back to uniform; tokens
/// never seen after a known history get probability zero.
class BigramScorer : public Scorer {
 public:
  BigramScorer(Vocabulary vocab, const std::vector<std::vector<std::string>>& sequences);

  const Vocabulary& vocab() const override { return vocab_; }
  StepDistribution step(std::span<const std::string> source,
                        std::span<const std::string> prefix,
                        const std::vector<std::string>* retrieved) const override;

 private:
  Vocabulary vocab_;
  std::vector<std::vector<double>> rows_;  // history index -> logprobs
  std::vector<double> fallback_;
};

}  // namespace xmlmt
