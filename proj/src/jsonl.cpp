#include "xmlmt/jsonl.hpp"

#include <fstream>

namespace xmlmt {

namespace {

nlohmann::ordered_json parse_line(const std::string& line, const std::filesystem::path& path,
                                  size_t lineno) {
  try {
    nlohmann::ordered_json row = nlohmann::ordered_json::parse(line);
    if (!row.is_object())
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected a JSON object");
    return row;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
  }
}

}  // namespace

std::vector<nlohmann::ordered_json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::vector<nlohmann::ordered_json> rows;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(parse_line(line, path, lineno));
  }
  return rows;
}

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<nlohmann::ordered_json>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  for (const auto& row : rows) out << row.dump() << '\n';
}

std::vector<CorpusRecord> read_corpus_jsonl(const std::filesystem::path& path,
                                            const std::vector<std::string>& required_fields) {
  std::vector<CorpusRecord> records;
  size_t lineno = 0;
  for (const auto& row : read_jsonl(path)) {
    ++lineno;
    for (const std::string& field : required_fields)
      if (!row.contains(field) || !row[field].is_string())
        throw std::runtime_error(path.string() + ": record " + std::to_string(lineno) +
                                 " lacks string field '" + field + "'");
    CorpusRecord rec;
    auto get = [&](const char* field) {
      return row.contains(field) && row[field].is_string() ? row[field].get<std::string>()
                                                           : std::string();
    };
    rec.id = get("id");
    rec.file = get("file");
    rec.src = get("src");
    rec.tgt = get("tgt");
    records.push_back(std::move(rec));
  }
  return records;
}

void write_corpus_jsonl(const std::filesystem::path& path,
                        const std::vector<CorpusRecord>& records) {
  std::vector<nlohmann::ordered_json> rows;
  rows.reserve(records.size());
  for (const CorpusRecord& rec : records)
    rows.push_back({{"id", rec.id}, {"file", rec.file}, {"src", rec.src}, {"tgt", rec.tgt}});
  write_jsonl(path, rows);
}

}  // namespace xmlmt
