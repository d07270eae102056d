#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "xmlmt/extraction.hpp"

namespace xmlmt {

/// One bilingual corpus line: {"id": ..., "file": ..., "src": ..., "tgt": ...}.
struct CorpusRecord {
  std::string id;
  std::string file;
  std::string src;
  std::string tgt;
};

/// Reads JSON-lines records. Lines must be JSON objects; `field_errors`
/// lists which of the four fields are required (missing optional fields
/// default to ""). Throws std::runtime_error with the line number on
/// malformed input.
std::vector<CorpusRecord> read_corpus_jsonl(const std::filesystem::path& path,
                                            const std::vector<std::string>& required_fields);

void write_corpus_jsonl(const std::filesystem::path& path,
                        const std::vector<CorpusRecord>& records);

/// Parses one JSON-lines file into raw objects (for decode input/output and
/// other schemas). Throws std::runtime_error with the line number.
std::vector<nlohmann::ordered_json> read_jsonl(const std::filesystem::path& path);

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<nlohmann::ordered_json>& rows);

}  // namespace xmlmt
