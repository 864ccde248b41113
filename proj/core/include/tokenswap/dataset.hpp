#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tokenswap/metrics.hpp"
#include "tokenswap/tokenizer.hpp"

namespace tokenswap {

enum class Split { Train, Eval };

struct PairedText {
  std::string prefix;
  std::string suffix;

  friend bool operator==(const PairedText&, const PairedText&) = default;
};

struct DatasetRecord {
  std::string id;
  std::variant<std::string, PairedText> content;  // full text or (prefix, suffix)
  Split split = Split::Eval;

  bool is_paired() const noexcept { return std::holds_alternative<PairedText>(content); }
  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

enum class DatasetFormat { Jsonl, Txt };

// Picks Jsonl for .jsonl/.json, Txt otherwise.
DatasetFormat infer_dataset_format(const std::filesystem::path& path);

// jsonl: one object per non-blank line with "id" plus either "text" or
// "prefix" and "suffix"; optional "split" ("train" | "eval"). Missing ids
// become line-NNNN. txt: each non-blank line is a text with id line-NNNN
// (1-based line number). Throws Io, or Schema naming the line.
std::vector<DatasetRecord> ingest(const std::filesystem::path& path, DatasetFormat format);
std::vector<DatasetRecord> parse_dataset(std::string_view content, DatasetFormat format);

// Full texts of the unpaired records, in order.
std::vector<std::string> texts_of(std::span<const DatasetRecord> records);

struct TaskSplit {
  std::vector<ExtractionTask> tasks;
  std::vector<std::string> too_short;  // ids of text records with <= prefix_tokens tokens
};

// Text records: the first prefix_tokens tokens become the prefix and the next
// (at most gen_tokens) the reference, both decoded with tokenizer. Paired
// records pass through unchanged.
TaskSplit split_tasks(std::span<const DatasetRecord> records, int prefix_tokens, int gen_tokens,
                      const Tokenizer& tokenizer, Normalization normalization = Normalization::None);

}  // namespace tokenswap
