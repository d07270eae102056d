#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace xmlmt {

/// Stable exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputContract = 2;  // bad or inconsistent input data
inline constexpr int kExitStrictData = 3;     // data error escalated by --strict
inline constexpr int kExitPlugin = 4;         // scorer could not be loaded

struct ExtractConfig {
  std::filesystem::path corpus_dir;
  std::string src_lang;
  std::string tgt_lang;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> tag_policy;
  uint64_t seed = 0;
  unsigned jobs = 1;
  bool strict = false;
  std::string url_pattern;  // empty = default
};

struct StatsConfig {
  std::filesystem::path corpus;
  std::filesystem::path out;
};

struct EvaluateConfig {
  std::filesystem::path hyp;
  std::filesystem::path ref;
  std::filesystem::path out;
  std::string mode = "all";  // all | bleu | ne_num | xml
  bool non_alphabetic_target = false;
  bool unordered_match = false;
  bool explain = false;
  int verbosity = 0;
};

struct DecodeConfig {
  std::filesystem::path input;
  std::filesystem::path out;
  std::string scorer = "uniform";  // uniform | scripted:<path> | bigram:<path>
  std::optional<std::filesystem::path> memory;
  std::optional<std::filesystem::path> attr_src;
  std::optional<std::filesystem::path> tag_policy;
  size_t beam = 4;
  size_t max_length = 200;
  double alpha = 0.0;
  bool constrained = true;
  uint64_t seed = 0;
  unsigned jobs = 1;
};

/// Subcommand drivers. They validate inputs up front, log progress to `log`,
/// and return an exit code instead of throwing.
int run_extract(const ExtractConfig& cfg, std::ostream& log);
int run_stats(const StatsConfig& cfg, std::ostream& log);
int run_evaluate(const EvaluateConfig& cfg, std::ostream& log);
int run_decode(const DecodeConfig& cfg, std::ostream& log);

}  // namespace xmlmt
