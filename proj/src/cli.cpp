#include "xmlmt/cli.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "xmlmt/decoding.hpp"
#include "xmlmt/extraction.hpp"
#include "xmlmt/jsonl.hpp"
#include "xmlmt/metrics.hpp"

namespace xmlmt {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

/// Runs fn(0..n-1) on `jobs` threads. Results must be written to
/// index-addressed slots so assembly stays input-ordered.
template <typename Fn>
void parallel_for(size_t n, unsigned jobs, Fn&& fn) {
  size_t workers = std::min<size_t>(std::max(1u, jobs), n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  for (size_t t = 0; t < workers; ++t) threads.emplace_back(worker);
  for (auto& th : threads) th.join();
  if (error) std::rethrow_exception(error);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ordered_json histogram_json(const std::map<size_t, size_t>& hist) {
  ordered_json out = ordered_json::object();
  for (const auto& [key, count] : hist) out[std::to_string(key)] = count;
  return out;
}

TagPolicy load_policy(const std::optional<fs::path>& path) {
  return path ? TagPolicy::load(*path) : TagPolicy::defaults();
}

std::vector<std::string> list_xml_files(const fs::path& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".xml")
      files.push_back(fs::relative(entry.path(), dir).generic_string());
  std::sort(files.begin(), files.end());
  return files;
}

void write_json_file(const fs::path& path, const ordered_json& value) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << value.dump(2) << '\n';
}

}  // namespace

int run_extract(const ExtractConfig& cfg, std::ostream& log) {
  fs::path src_dir = cfg.corpus_dir / cfg.src_lang;
  fs::path tgt_dir = cfg.corpus_dir / cfg.tgt_lang;
  if (!fs::is_directory(src_dir) || !fs::is_directory(tgt_dir)) {
    log << "error: missing language directory " << (fs::is_directory(src_dir) ? tgt_dir : src_dir)
        << "\n";
    return kExitInputContract;
  }

  TagPolicy policy;
  try {
    policy = load_policy(cfg.tag_policy);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitInputContract;
  }

  std::vector<std::string> src_files = list_xml_files(src_dir);
  std::vector<std::string> tgt_files = list_xml_files(tgt_dir);
  std::vector<std::string> paired, src_only, tgt_only;
  std::set_intersection(src_files.begin(), src_files.end(), tgt_files.begin(), tgt_files.end(),
                        std::back_inserter(paired));
  std::set_difference(src_files.begin(), src_files.end(), tgt_files.begin(), tgt_files.end(),
                      std::back_inserter(src_only));
  std::set_difference(tgt_files.begin(), tgt_files.end(), src_files.begin(), src_files.end(),
                      std::back_inserter(tgt_only));
  for (const std::string& f : src_only)
    log << "warning: skipping " << cfg.src_lang << "/" << f << " (no counterpart)\n";
  for (const std::string& f : tgt_only)
    log << "warning: skipping " << cfg.tgt_lang << "/" << f << " (no counterpart)\n";
  if (paired.empty()) {
    log << "error: no paired files under " << cfg.corpus_dir << "\n";
    return kExitInputContract;
  }

  UrlNormalizeOptions url_opts;
  if (!cfg.url_pattern.empty()) url_opts.pattern = cfg.url_pattern;

  std::vector<std::vector<SegmentPair>> per_file(paired.size());
  std::vector<std::string> file_errors(paired.size());
  std::vector<size_t> dropped_urls(paired.size(), 0);

  auto process_file = [&](size_t i) {
    const std::string& file_id = paired[i];
    try {
      XmlElement src_doc = parse_document(read_file(src_dir / file_id));
      XmlElement tgt_doc = parse_document(read_file(tgt_dir / file_id));
      std::vector<const XmlElement*> src_units = linearize(src_doc, policy);
      std::vector<const XmlElement*> tgt_units = linearize(tgt_doc, policy);
      std::vector<AlignedElementPair> alignment = align_elements(src_units, tgt_units);
      for (SegmentPair& pair : extract_pairs(alignment, src_units, tgt_units, policy, file_id)) {
        if (std::optional<SegmentPair> norm = normalize_urls(pair, url_opts))
          per_file[i].push_back(std::move(*norm));
        else
          ++dropped_urls[i];
      }
    } catch (const std::exception& e) {
      file_errors[i] = e.what();
    }
  };

  try {
    parallel_for(paired.size(), cfg.jobs, process_file);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitInputContract;
  }

  std::vector<std::string> malformed;
  std::vector<SegmentPair> pairs;
  size_t url_dropped_total = 0;
  for (size_t i = 0; i < paired.size(); ++i) {
    if (!file_errors[i].empty()) {
      malformed.push_back(paired[i]);
      if (cfg.strict) {
        log << "error: " << paired[i] << ": " << file_errors[i] << "\n";
        return kExitStrictData;
      }
      log << "warning: skipping " << paired[i] << ": " << file_errors[i] << "\n";
      continue;
    }
    url_dropped_total += dropped_urls[i];
    pairs.insert(pairs.end(), per_file[i].begin(), per_file[i].end());
  }

  std::vector<SegmentPair> kept = filter_and_dedupe(pairs);

  std::vector<CorpusRecord> records(kept.size());
  for (size_t i = 0; i < kept.size(); ++i)
    records[i] = {std::to_string(i), kept[i].file_id, serialize_segment(kept[i].source),
                  serialize_segment(kept[i].target)};

  IndexSplit split = split_indices(kept.size(), cfg.seed);
  auto select = [&](const std::vector<size_t>& ids) {
    std::vector<CorpusRecord> out;
    out.reserve(ids.size());
    for (size_t i : ids) out.push_back(records[i]);
    return out;
  };

  CorpusStats stats = corpus_stats(kept);
  ordered_json stats_json{
      {"total_pairs", kept.size()},
      {"fraction_with_tags", stats.fraction_with_tags},
      {"length_histogram", histogram_json(stats.length_histogram)},
      {"tag_count_histogram", histogram_json(stats.tag_count_histogram)},
      {"extracted_pairs", pairs.size()},
      {"pairs_dropped_by_url_limit", url_dropped_total},
      {"files",
       ordered_json{{"paired", paired.size()},
                    {"source_only", src_only},
                    {"target_only", tgt_only},
                    {"skipped_malformed", malformed}}},
      {"split",
       ordered_json{{"train", split.train.size()},
                    {"dev", split.dev.size()},
                    {"test", split.test.size()}}},
      {"seed", cfg.seed}};

  try {
    fs::create_directories(cfg.out_dir);
    write_corpus_jsonl(cfg.out_dir / "train.jsonl", select(split.train));
    write_corpus_jsonl(cfg.out_dir / "dev.jsonl", select(split.dev));
    write_corpus_jsonl(cfg.out_dir / "test.jsonl", select(split.test));
    write_json_file(cfg.out_dir / "stats.json", stats_json);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitInputContract;
  }

  log << "extracted " << kept.size() << " pairs from " << paired.size() << " file pairs\n";
  return kExitOk;
}

int run_stats(const StatsConfig& cfg, std::ostream& log) {
  std::vector<SegmentPair> pairs;
  try {
    for (const CorpusRecord& rec : read_corpus_jsonl(cfg.corpus, {"src", "tgt"}))
      pairs.push_back({parse_segment(rec.src), parse_segment(rec.tgt), rec.file, 0});
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitInputContract;
  }

  CorpusStats stats = corpus_stats(pairs);
  ordered_json out{{"total_pairs", pairs.size()},
                   {"fraction_with_tags", stats.fraction_with_tags},
                   {"length_histogram", histogram_json(stats.length_histogram)},
                   {"tag_count_histogram", histogram_json(stats.tag_count_histogram)}};
  try {
    write_json_file(cfg.out, out);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitInputContract;
  }
  return kExitOk;
}

namespace {

/// id -> text with duplicate detection; `fields` are tried in order.
std::map<std::string, std::string> index_rows(const std::vector<ordered_json>& rows,
                                              const std::vector<std::string>& fields,
                                              std::vector<std::string>& order,
                                              const std::string& what) {
  std::map<std::string, std::string> out;
  for (const auto& row : rows) {
    if (!row.contains("id") || !row["id"].is_string())
      throw std::runtime_error(what + " record lacks string field 'id'");
    std::string id = row["id"].get<std::string>();
    const std::string* text = nullptr;
    std::string value;
    for (const std::string& f : fields)
      if (row.contains(f) && row[f].is_string()) {
        value = row[f].get<std::string>();
        text = &value;
        break;
      }
    if (!text)
      throw std::runtime_error(what + " record '" + id + "' has no text field");
    if (!out.emplace(id, value).second)
      throw std::runtime_error(what + " file repeats id '" + id + "'");
    order.push_back(id);
  }
  return out;
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  size_t shown = std::min<size_t>(ids.size(), 10);
  for (size_t i = 0; i < shown; ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  if (ids.size() > shown) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out;
}

}  // namespace

int run_evaluate(const EvaluateConfig& cfg, std::ostream& log) {
  if (cfg.mode != "all" && cfg.mode != "bleu" && cfg.mode != "ne_num" && cfg.mode != "xml") {
    log << "error: unknown mode '" << cfg.mode << "'\n";
    return kExitInputContract;
  }

  std::vector<std::string> hyp_order, ref_order;
  std::map<std::string, std::string> hyp_by_id, ref_by_id;
  try {
    hyp_by_id = index_rows(read_jsonl(cfg.hyp), {"hyp", "tgt", "text"}, hyp_order, "hypothesis");
    ref_by_id = index_rows(read_jsonl(cfg.ref), {"tgt", "ref", "text"}, ref_order, "reference");
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitInputContract;
  }

  std::vector<std::string> missing_hyp, missing_ref;
  for (const std::string& id : ref_order)
    if (!hyp_by_id.count(id)) missing_hyp.push_back(id);
  for (const std::string& id : hyp_order)
    if (!ref_by_id.count(id)) missing_ref.push_back(id);
  if (!missing_hyp.empty() || !missing_ref.empty()) {
    if (!missing_hyp.empty())
      log << "error: ids without hypothesis: " << join_ids(missing_hyp) << "\n";
    if (!missing_ref.empty())
      log << "error: ids without reference: " << join_ids(missing_ref) << "\n";
    return kExitInputContract;
  }
  if (ref_order.empty()) {
    log << "error: empty evaluation corpus\n";
    return kExitInputContract;
  }

  std::vector<EvalPair> pairs;
  std::vector<ordered_json> details;
  ParseOptions lenient;
  lenient.lenient = true;
  for (const std::string& id : ref_order) {
    EvalPair pair;
    try {
      pair.reference = parse_segment(ref_by_id[id]);
    } catch (const ParseError& e) {
      log << "error: reference '" << id << "': " << e.what() << "\n";
      return kExitInputContract;
    }
    const std::string& raw = hyp_by_id[id];
    try {
      pair.hypothesis = parse_segment(raw, lenient);
    } catch (const ParseError&) {
      // Not even tokenizable as markup: keep the raw words so text metrics
      // still apply, and count the structure as invalid.
      pair.hypothesis_parsed = false;
      std::istringstream ss(raw);
      std::string word;
      while (ss >> word) pair.hypothesis.tokens.push_back(text_token(word));
    }
    pairs.push_back(std::move(pair));
  }

  bool ordered = !cfg.unordered_match;
  ordered_json report = ordered_json::object();
  report["pairs"] = pairs.size();
  report["mode"] = cfg.mode;
  report["non_alphabetic_target"] = cfg.non_alphabetic_target;
  report["ordered_match"] = ordered;

  if (cfg.mode == "all" || cfg.mode == "bleu") {
    std::vector<std::vector<std::string>> hyp_toks, ref_toks;
    for (const EvalPair& p : pairs) {
      hyp_toks.push_back(stripped_tokens(p.hypothesis));
      ref_toks.push_back(stripped_tokens(p.reference));
    }
    report["bleu_no_xml"] = corpus_bleu(hyp_toks, ref_toks);
  }
  if (cfg.mode == "all" || cfg.mode == "ne_num") {
    EvalReport full = evaluate_pairs(pairs, cfg.non_alphabetic_target, ordered);
    report["ne_num_precision"] = full.ne_num_precision;
    report["ne_num_recall"] = full.ne_num_recall;
  }
  if (cfg.mode == "all" || cfg.mode == "xml") {
    report["xml_accuracy"] = xml_accuracy(pairs);
    report["xml_match"] = xml_match(pairs, ordered);
    report["xml_bleu"] = xml_bleu(pairs, ordered);
  }
  if (cfg.explain) {
    report["patterns"] = ordered_json{{"numbers", std::string(kNumberPattern)},
                                      {"named_entities", std::string(kNamedEntityPattern)}};
    log << "number pattern: " << kNumberPattern << "\n";
    log << "named entity pattern: " << kNamedEntityPattern << "\n";
  }
  if (cfg.verbosity > 0) {
    for (size_t i = 0; i < pairs.size(); ++i) {
      const EvalPair& p = pairs[i];
      bool valid = p.hypothesis_parsed && validate_xml(p.hypothesis);
      details.push_back(ordered_json{{"id", ref_order[i]},
                                     {"hyp_parsed", p.hypothesis_parsed},
                                     {"xml_valid", valid},
                                     {"xml_match", xml_match({p}, ordered) == 1.0}});
    }
    report["details"] = details;
  }

  try {
    write_json_file(cfg.out, report);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitInputContract;
  }
  return kExitOk;
}

namespace {

const char* origin_name(TokenOrigin origin) {
  switch (origin) {
    case TokenOrigin::SourceCopy: return "source";
    case TokenOrigin::RetrievalCopy: return "retrieval";
    default: return "generated";
  }
}

}  // namespace

int run_decode(const DecodeConfig& cfg, std::ostream& log) {
  TagPolicy policy;
  try {
    policy = load_policy(cfg.tag_policy);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitInputContract;
  }

  struct Input {
    std::string id;
    std::string raw;
    XmlSegment source;
  };
  std::vector<Input> inputs;
  std::vector<std::string> extra_tokens;
  try {
    for (const auto& row : read_jsonl(cfg.input)) {
      if (!row.contains("id") || !row["id"].is_string() || !row.contains("src") ||
          !row["src"].is_string())
        throw std::runtime_error("decode input records need string fields 'id' and 'src'");
      Input in;
      in.id = row["id"].get<std::string>();
      in.raw = row["src"].get<std::string>();
      in.source = parse_segment(in.raw);
      for (std::string& t : segment_token_strings(in.source)) extra_tokens.push_back(std::move(t));
      inputs.push_back(std::move(in));
    }
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitInputContract;
  }

  std::optional<TranslationMemory> memory;
  std::vector<std::vector<std::string>> memory_targets;
  try {
    if (cfg.memory) {
      std::vector<SegmentPair> entries;
      for (const CorpusRecord& rec : read_corpus_jsonl(*cfg.memory, {"src", "tgt"})) {
        SegmentPair pair{parse_segment(rec.src), parse_segment(rec.tgt), rec.file, 0};
        for (std::string& t : segment_token_strings(pair.source))
          extra_tokens.push_back(std::move(t));
        for (std::string& t : segment_token_strings(pair.target))
          extra_tokens.push_back(std::move(t));
        memory_targets.push_back(segment_token_strings(pair.target));
        entries.push_back(std::move(pair));
      }
      memory.emplace(std::move(entries));
    }
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitInputContract;
  }

  std::unique_ptr<Scorer> scorer;
  try {
    if (cfg.scorer == "uniform") {
      scorer = std::make_unique<UniformScorer>(Vocabulary::build(policy, extra_tokens));
    } else if (cfg.scorer.rfind("scripted:", 0) == 0) {
      scorer = std::make_unique<ScriptedScorer>(
          ScriptedScorer::from_file(cfg.scorer.substr(9), policy, extra_tokens));
    } else if (cfg.scorer.rfind("bigram:", 0) == 0) {
      std::vector<std::vector<std::string>> sequences;
      std::vector<std::string> with_training = extra_tokens;
      for (const CorpusRecord& rec : read_corpus_jsonl(cfg.scorer.substr(7), {"tgt"})) {
        sequences.push_back(segment_token_strings(parse_segment(rec.tgt)));
        for (const std::string& t : sequences.back()) with_training.push_back(t);
      }
      scorer = std::make_unique<BigramScorer>(Vocabulary::build(policy, with_training),
                                              sequences);
    } else {
      throw std::runtime_error("unknown scorer '" + cfg.scorer + "'");
    }
  } catch (const std::exception& e) {
    log << "error: scorer: " << e.what() << "\n";
    return kExitPlugin;
  }

  std::map<std::string, ParsedSegment> attr_sources;
  try {
    if (cfg.attr_src) {
      ParseOptions lenient;
      lenient.lenient = true;
      for (const auto& row : read_jsonl(*cfg.attr_src)) {
        if (!row.contains("id") || !row["id"].is_string() || !row.contains("src") ||
            !row["src"].is_string())
          throw std::runtime_error("attribute source records need 'id' and 'src'");
        attr_sources.emplace(row["id"].get<std::string>(),
                             parse_segment_ex(row["src"].get<std::string>(), lenient));
      }
    }
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitInputContract;
  }

  BeamConfig beam_cfg;
  beam_cfg.beam_size = cfg.beam;
  beam_cfg.max_length = cfg.max_length;
  beam_cfg.length_penalty = cfg.alpha;
  beam_cfg.constrained = cfg.constrained;

  const TranslationMemory* mem = memory ? &*memory : nullptr;
  std::vector<ordered_json> rows(inputs.size());
  auto decode_one = [&](size_t i) {
    DecodeResult result = constrained_beam_search(*scorer, inputs[i].source, mem, beam_cfg);
    ordered_json trace = ordered_json::array();
    std::vector<std::string> tokens = segment_token_strings(result.output);
    for (size_t t = 0; t < tokens.size(); ++t) {
      ordered_json item{{"token", tokens[t]}, {"origin", origin_name(result.origins[t])}};
      if (result.origins[t] == TokenOrigin::SourceCopy && result.source_positions[t])
        item["src_pos"] = *result.source_positions[t];
      trace.push_back(std::move(item));
    }
    ordered_json row{{"id", inputs[i].id},
                     {"hyp", serialize_segment(result.output)},
                     {"truncated", result.truncated},
                     {"copy_trace", std::move(trace)}};
    auto attr = attr_sources.find(inputs[i].id);
    if (attr != attr_sources.end())
      row["hyp_attrs"] = recover_attributes(result, attr->second);
    rows[i] = std::move(row);
  };

  unsigned jobs = scorer->thread_safe() ? cfg.jobs : 1;
  try {
    parallel_for(inputs.size(), jobs, decode_one);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitInputContract;
  }

  try {
    write_jsonl(cfg.out, rows);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitInputContract;
  }
  log << "decoded " << inputs.size() << " segments\n";
  return kExitOk;
}

}  // namespace xmlmt
