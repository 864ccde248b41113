#include "tokenswap/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tokenswap/error.hpp"
#include "tokenswap/unicode.hpp"

namespace tokenswap {

namespace {

std::string line_id(std::size_t line_no) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "line-%04zu", line_no);
  return buf;
}

std::string string_field(const nlohmann::json& row, const char* key, std::size_t line_no) {
  const auto& v = row[key];
  if (!v.is_string()) {
    throw Error(ErrorKind::Schema, "line " + std::to_string(line_no) + ": '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

}  // namespace

DatasetFormat infer_dataset_format(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".jsonl" || ext == ".json" ? DatasetFormat::Jsonl : DatasetFormat::Txt;
}

std::vector<DatasetRecord> parse_dataset(std::string_view content, DatasetFormat format) {
  std::vector<DatasetRecord> out;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (unicode::trim(line).empty()) continue;

    if (format == DatasetFormat::Txt) {
      out.push_back({line_id(line_no), line, Split::Eval});
      continue;
    }

    const auto row = nlohmann::json::parse(line, nullptr, false);
    const std::string where = "line " + std::to_string(line_no);
    if (row.is_discarded() || !row.is_object()) throw Error(ErrorKind::Schema, where + ": not a JSON object");
    DatasetRecord rec;
    rec.id = row.contains("id") ? string_field(row, "id", line_no) : line_id(line_no);
    const bool has_text = row.contains("text");
    const bool has_prefix = row.contains("prefix");
    const bool has_suffix = row.contains("suffix");
    if (has_text && (has_prefix || has_suffix)) {
      throw Error(ErrorKind::Schema, where + ": both text and prefix/suffix present");
    }
    if (has_text) {
      rec.content = string_field(row, "text", line_no);
    } else if (has_prefix && has_suffix) {
      PairedText p{string_field(row, "prefix", line_no), string_field(row, "suffix", line_no)};
      if (p.prefix.empty() || p.suffix.empty()) throw Error(ErrorKind::Schema, where + ": empty prefix or suffix");
      rec.content = std::move(p);
    } else {
      throw Error(ErrorKind::Schema, where + ": needs text or prefix and suffix");
    }
    if (row.contains("split")) {
      const std::string split = string_field(row, "split", line_no);
      if (split == "train") {
        rec.split = Split::Train;
      } else if (split == "eval") {
        rec.split = Split::Eval;
      } else {
        throw Error(ErrorKind::Schema, where + ": unknown split '" + split + "'");
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<DatasetRecord> ingest(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot open dataset " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_dataset(buf.str(), format);
}

std::vector<std::string> texts_of(std::span<const DatasetRecord> records) {
  std::vector<std::string> out;
  for (const auto& r : records) {
    if (const auto* t = std::get_if<std::string>(&r.content)) out.push_back(*t);
  }
  return out;
}

TaskSplit split_tasks(std::span<const DatasetRecord> records, int prefix_tokens, int gen_tokens,
                      const Tokenizer& tokenizer, Normalization normalization) {
  if (prefix_tokens < 1 || gen_tokens < 1) {
    throw Error(ErrorKind::InvalidArgument, "prefix_tokens and gen_tokens must be >= 1");
  }
  TaskSplit out;
  for (const auto& rec : records) {
    if (const auto* paired = std::get_if<PairedText>(&rec.content)) {
      out.tasks.push_back({rec.id, paired->prefix, paired->suffix, normalization});
      continue;
    }
    const auto ids = tokenizer.encode(std::get<std::string>(rec.content));
    const auto p = static_cast<std::size_t>(prefix_tokens);
    if (ids.size() <= p) {
      out.too_short.push_back(rec.id);
      continue;
    }
    const std::span<const TokenId> all(ids);
    const std::size_t ref_len = std::min(all.size() - p, static_cast<std::size_t>(gen_tokens));
    out.tasks.push_back({rec.id, tokenizer.decode(all.first(p)), tokenizer.decode(all.subspan(p, ref_len)),
                         normalization});
  }
  return out;
}

}  // namespace tokenswap
