#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "xmlmt/cli.hpp"

namespace {

// CLI11 binds through concrete members; optional paths are applied afterwards.
struct PathOpt {
  std::string value;
  std::optional<std::filesystem::path> get() const {
    if (value.empty()) return std::nullopt;
    return std::filesystem::path(value);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"markup-aware machine translation toolkit"};
  app.require_subcommand(1);

  xmlmt::ExtractConfig extract_cfg;
  PathOpt extract_policy;
  std::string extract_corpus, extract_out;
  CLI::App* extract = app.add_subcommand("extract", "build a parallel corpus from paired files");
  extract->add_option("--corpus", extract_corpus, "corpus root directory")->required();
  extract->add_option("--src-lang", extract_cfg.src_lang, "source language subdirectory")
      ->required();
  extract->add_option("--tgt-lang", extract_cfg.tgt_lang, "target language subdirectory")
      ->required();
  extract->add_option("--out", extract_out, "output directory")->required();
  extract->add_option("--tag-policy", extract_policy.value, "tag policy config file");
  extract->add_option("--seed", extract_cfg.seed, "shuffle seed for the split");
  extract->add_option("--jobs", extract_cfg.jobs, "worker threads");
  extract->add_flag("--strict", extract_cfg.strict, "fail on malformed files instead of skipping");
  extract->add_option("--url-pattern", extract_cfg.url_pattern, "override the URL regex");

  xmlmt::StatsConfig stats_cfg;
  std::string stats_corpus, stats_out;
  CLI::App* stats = app.add_subcommand("stats", "summarize a corpus file");
  stats->add_option("--corpus", stats_corpus, "corpus JSONL file")->required();
  stats->add_option("--out", stats_out, "output JSON file")->required();

  xmlmt::EvaluateConfig eval_cfg;
  std::string eval_hyp, eval_ref, eval_out;
  CLI::App* evaluate = app.add_subcommand("evaluate", "score hypotheses against references");
  evaluate->add_option("--hyp", eval_hyp, "hypothesis JSONL file")->required();
  evaluate->add_option("--ref", eval_ref, "reference JSONL file")->required();
  evaluate->add_option("--out", eval_out, "output JSON report")->required();
  evaluate->add_option("--mode", eval_cfg.mode, "all | bleu | ne_num | xml");
  evaluate->add_flag("--non-alphabetic-target", eval_cfg.non_alphabetic_target,
                     "also count named entities (for non-alphabetic targets)");
  evaluate->add_flag("--unordered-match", eval_cfg.unordered_match,
                     "compare tag structure without sibling order");
  evaluate->add_flag("--explain", eval_cfg.explain, "include extraction patterns in the report");
  evaluate->add_flag("-v,--verbose", eval_cfg.verbosity, "add per-pair details to the report");

  xmlmt::DecodeConfig decode_cfg;
  PathOpt decode_memory, decode_attr, decode_policy;
  std::string decode_in, decode_out;
  CLI::App* decode = app.add_subcommand("decode", "translate segments with beam search");
  decode->add_option("--input", decode_in, "input JSONL file ({id, src})")->required();
  decode->add_option("--out", decode_out, "output JSONL file")->required();
  decode->add_option("--scorer", decode_cfg.scorer, "uniform | scripted:<path> | bigram:<path>");
  decode->add_option("--memory", decode_memory.value, "translation memory JSONL file");
  decode->add_option("--attr-src", decode_attr.value,
                     "raw sources with attributes for recovery ({id, src})");
  decode->add_option("--tag-policy", decode_policy.value, "tag policy config file");
  decode->add_option("--beam", decode_cfg.beam, "beam size");
  decode->add_option("--max-len", decode_cfg.max_length, "maximum generated length");
  decode->add_option("--alpha", decode_cfg.alpha, "per-step length reward");
  decode->add_flag("--constrained,!--no-constrained", decode_cfg.constrained,
                   "enforce well-formed markup (default on)");
  decode->add_option("--seed", decode_cfg.seed, "reserved for tie-breaking experiments");
  decode->add_option("--jobs", decode_cfg.jobs, "worker threads (thread-safe scorers only)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return xmlmt::kExitInputContract;
  }

  if (extract->parsed()) {
    extract_cfg.corpus_dir = extract_corpus;
    extract_cfg.out_dir = extract_out;
    extract_cfg.tag_policy = extract_policy.get();
    return xmlmt::run_extract(extract_cfg, std::cerr);
  }
  if (stats->parsed()) {
    stats_cfg.corpus = stats_corpus;
    stats_cfg.out = stats_out;
    return xmlmt::run_stats(stats_cfg, std::cerr);
  }
  if (evaluate->parsed()) {
    eval_cfg.hyp = eval_hyp;
    eval_cfg.ref = eval_ref;
    eval_cfg.out = eval_out;
    return xmlmt::run_evaluate(eval_cfg, std::cerr);
  }
  if (decode->parsed()) {
    decode_cfg.input = decode_in;
    decode_cfg.out = decode_out;
    decode_cfg.memory = decode_memory.get();
    decode_cfg.attr_src = decode_attr.get();
    decode_cfg.tag_policy = decode_policy.get();
    return xmlmt::run_decode(decode_cfg, std::cerr);
  }
  return xmlmt::kExitInputContract;
}
