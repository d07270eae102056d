#include "xmlmt/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "xmlmt/segment.hpp"

namespace xmlmt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  classes_.reserve(tokens_.size());
  tag_names_.reserve(tokens_.size());
  for (size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second)
      throw std::invalid_argument("duplicate vocabulary token: " + tokens_[i]);
    std::string name;
    classes_.push_back(classify(tokens_[i], &name));
    tag_names_.push_back(std::move(name));
  }
  auto bos = index_.find(kBosToken);
  auto eos = index_.find(kEosToken);
  if (bos == index_.end() || eos == index_.end())
    throw std::invalid_argument("vocabulary must contain BOS and EOS");
  bos_ = bos->second;
  eos_ = eos->second;
}

Vocabulary Vocabulary::build(const TagPolicy& policy, const std::vector<std::string>& extra) {
  std::vector<std::string> tokens{std::string(kBosToken), std::string(kEosToken)};
  for (const char* e : kEntities) tokens.emplace_back(e);

  std::set<std::string> tags;
  tags.insert(policy.translatable().begin(), policy.translatable().end());
  tags.insert(policy.transparent().begin(), policy.transparent().end());
  tags.insert(policy.untranslatable().begin(), policy.untranslatable().end());
  for (const std::string& t : tags) {
    tokens.push_back("<" + t + ">");
    tokens.push_back("</" + t + ">");
  }

  std::set<std::string> seen(tokens.begin(), tokens.end());
  std::set<std::string> rest;
  for (const std::string& t : extra)
    if (!t.empty() && !seen.count(t)) rest.insert(t);
  tokens.insert(tokens.end(), rest.begin(), rest.end());
  return Vocabulary(std::move(tokens));
}

std::optional<size_t> Vocabulary::index(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

VocabClass Vocabulary::classify(std::string_view token, std::string* tag_name) {
  if (tag_name) tag_name->clear();
  if (token == kBosToken) return VocabClass::Bos;
  if (token == kEosToken) return VocabClass::Eos;
  for (const char* e : kEntities)
    if (token == e) return VocabClass::Entity;
  if (token.size() >= 3 && token.front() == '<' && token.back() == '>') {
    bool closing = token[1] == '/';
    std::string_view name = token.substr(closing ? 2 : 1, token.size() - (closing ? 3 : 2));
    if (name.empty()) return VocabClass::Text;
    for (char c : name)
      if (c == '<' || c == '>' || c == '&' || c == '/' || c == ' ' || c == '\t')
        return VocabClass::Text;
    if (tag_name) *tag_name = std::string(name);
    return closing ? VocabClass::CloseTag : VocabClass::OpenTag;
  }
  return VocabClass::Text;
}

namespace {

void require_known(const Vocabulary& vocab, std::span<const std::string> tokens,
                   const char* what) {
  for (const std::string& t : tokens)
    if (!vocab.index(t))
      throw std::invalid_argument(std::string(what) + " token not in vocabulary: " + t);
}

std::vector<double> uniform_logprobs(size_t n) {
  return std::vector<double>(n, -std::log(static_cast<double>(n)));
}

}  // namespace

UniformScorer::UniformScorer(Vocabulary vocab) : vocab_(std::move(vocab)) {
  uniform_.gen_logprobs = uniform_logprobs(vocab_.size());
}

StepDistribution UniformScorer::step(std::span<const std::string> source,
                                     std::span<const std::string> prefix,
                                     const std::vector<std::string>* retrieved) const {
  require_known(vocab_, source, "source");
  require_known(vocab_, prefix, "prefix");
  if (retrieved) require_known(vocab_, *retrieved, "retrieved");
  return uniform_;
}

ScriptedScorer::ScriptedScorer(Vocabulary vocab,
                               std::map<std::string, std::map<std::string, double>> table)
    : vocab_(std::move(vocab)) {
  fallback_ = uniform_logprobs(vocab_.size());
  for (auto& [prefix, weights] : table) {
    double sum = 0.0;
    for (auto& [token, w] : weights) {
      if (w < 0.0)
        throw std::runtime_error("scripted scorer: negative weight for '" + token + "'");
      if (!vocab_.index(token))
        throw std::runtime_error("scripted scorer: token not in vocabulary: " + token);
      sum += w;
    }
    if (sum <= 0.0)
      throw std::runtime_error("scripted scorer: zero-mass row for prefix '" + prefix + "'");
    std::vector<double> row(vocab_.size(), kNegInf);
    for (auto& [token, w] : weights)
      if (w > 0.0) row[*vocab_.index(token)] = std::log(w / sum);
    rows_.emplace(prefix, std::move(row));
  }
}

ScriptedScorer ScriptedScorer::from_json(const nlohmann::json& spec, const TagPolicy& policy,
                                         const std::vector<std::string>& extra_tokens) {
  if (!spec.is_object() || !spec.contains("steps") || !spec["steps"].is_object())
    throw std::runtime_error("scripted scorer: expected {\"steps\": {prefix: {token: weight}}}");

  std::vector<std::string> extra = extra_tokens;
  for (const std::string& t : tokens_in_spec(spec)) extra.push_back(t);

  std::map<std::string, std::map<std::string, double>> table;
  for (const auto& [prefix, row] : spec["steps"].items()) {
    if (!row.is_object()) throw std::runtime_error("scripted scorer: row must be an object");
    for (const auto& [token, w] : row.items()) {
      if (!w.is_number()) throw std::runtime_error("scripted scorer: weight must be a number");
      table[prefix][token] = w.get<double>();
    }
  }
  return ScriptedScorer(Vocabulary::build(policy, extra), std::move(table));
}

ScriptedScorer ScriptedScorer::from_file(const std::filesystem::path& path,
                                         const TagPolicy& policy,
                                         const std::vector<std::string>& extra_tokens) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scorer file: " + path.string());
  nlohmann::json spec;
  try {
    in >> spec;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("cannot parse scorer file " + path.string() + ": " + e.what());
  }
  return from_json(spec, policy, extra_tokens);
}

std::vector<std::string> ScriptedScorer::tokens_in_spec(const nlohmann::json& spec) {
  std::vector<std::string> out;
  if (spec.contains("vocab") && spec["vocab"].is_array())
    for (const auto& t : spec["vocab"])
      if (t.is_string()) out.push_back(t.get<std::string>());
  if (spec.contains("steps") && spec["steps"].is_object()) {
    for (const auto& [prefix, row] : spec["steps"].items()) {
      std::istringstream ss(prefix);
      std::string tok;
      while (ss >> tok) out.push_back(tok);
      if (row.is_object())
        for (const auto& [token, w] : row.items()) out.push_back(token);
    }
  }
  return out;
}

StepDistribution ScriptedScorer::step(std::span<const std::string> source,
                                      std::span<const std::string> prefix,
                                      const std::vector<std::string>* retrieved) const {
  require_known(vocab_, source, "source");
  require_known(vocab_, prefix, "prefix");
  if (retrieved) require_known(vocab_, *retrieved, "retrieved");
  StepDistribution dist;
  auto it = rows_.find(join_tokens(prefix));
  dist.gen_logprobs = it != rows_.end() ? it->second : fallback_;
  return dist;
}

BigramScorer::BigramScorer(Vocabulary vocab,
                           const std::vector<std::vector<std::string>>& sequences)
    : vocab_(std::move(vocab)) {
  fallback_ = uniform_logprobs(vocab_.size());
  std::vector<std::vector<size_t>> counts(vocab_.size());
  std::vector<size_t> totals(vocab_.size(), 0);
  auto bump = [&](size_t prev, size_t next) {
    if (counts[prev].empty()) counts[prev].assign(vocab_.size(), 0);
    ++counts[prev][next];
    ++totals[prev];
  };
  for (const auto& seq : sequences) {
    size_t prev = vocab_.bos();
    for (const std::string& tok : seq) {
      auto idx = vocab_.index(tok);
      if (!idx)
        throw std::invalid_argument("bigram training token not in vocabulary: " + tok);
      bump(prev, *idx);
      prev = *idx;
    }
    bump(prev, vocab_.eos());
  }
  rows_.resize(vocab_.size());
  for (size_t prev = 0; prev < vocab_.size(); ++prev) {
    if (totals[prev] == 0) continue;  // unseen history, uniform fallback
    rows_[prev].assign(vocab_.size(), kNegInf);
    for (size_t next = 0; next < vocab_.size(); ++next)
      if (counts[prev][next] > 0)
        rows_[prev][next] = std::log(static_cast<double>(counts[prev][next]) /
                                     static_cast<double>(totals[prev]));
  }
}

StepDistribution BigramScorer::step(std::span<const std::string> source,
                                    std::span<const std::string> prefix,
                                    const std::vector<std::string>* retrieved) const {
  require_known(vocab_, source, "source");
  require_known(vocab_, prefix, "prefix");
  if (retrieved) require_known(vocab_, *retrieved, "retrieved");
  if (prefix.empty()) throw std::invalid_argument("bigram scorer: empty prefix");
  StepDistribution dist;
  size_t prev = *vocab_.index(prefix.back());
  dist.gen_logprobs = rows_[prev].empty() ? fallback_ : rows_[prev];
  return dist;
}

}  // namespace xmlmt
