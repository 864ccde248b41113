#include "tokenswap/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tokenswap/error.hpp"

namespace tokenswap {

namespace {

using Json = nlohmann::ordered_json;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_quote(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

template <class T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json metadata_json(const RunMetadata& m) {
  Json j;
  j["main_spec"] = m.main_spec;
  j["aux_spec"] = m.aux_spec;
  j["grammar_provenance"] = m.grammar_provenance;
  j["grammar_size"] = m.grammar_size;
  j["bound_grammar_size"] = m.bound_grammar_size;
  j["dropped_grammar_words"] = m.dropped_grammar_words;
  j["gamma"] = optional_json(m.gamma);
  j["prefix_tokens"] = m.prefix_tokens;
  j["gen_tokens"] = m.gen_tokens;
  j["temperature"] = m.temperature;
  j["seed"] = m.seed;
  j["rouge_threshold"] = m.rouge_threshold;
  j["normalization"] = std::string(to_string(m.normalization));
  j["memfree_n"] = m.memfree_n;
  j["low_coverage_steps"] = m.low_coverage_steps;
  j["memfree_flagged_steps"] = m.memfree_flagged_steps;
  j["timestamp"] = optional_json(m.timestamp);
  return j;
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorKind::Schema, std::string("missing field '") + key + "'");
  return j.at(key);
}

template <class T>
T get(const Json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
std::optional<T> get_optional(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (v.is_null()) return std::nullopt;
  return get<T>(j, key);
}

DecodeMode get_mode(const Json& j) {
  try {
    return parse_decode_mode(get<std::string>(j, "mode"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Schema) throw;
    throw Error(ErrorKind::Schema, e.detail());
  }
}

std::string row_fields(const SequenceRow& r) {
  const auto& s = r.scores;
  return csv_quote(r.task_id) + "," + std::string(to_string(r.mode)) + "," + std::to_string(s.ml_tokens) + "," +
         std::to_string(s.ml_chars) + "," + (s.exact_match ? "1" : "0") + "," + num(s.rouge_l) + "," +
         num(s.norm_levenshtein) + "," + csv_quote(r.generated_text);
}

constexpr const char* kRowHeader = "task_id,mode,ml_tokens,ml_chars,exact_match,rouge_l,norm_levenshtein,generated_text";

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  throw Error(ErrorKind::Usage, "unknown report format '" + std::string(name) + "'");
}

std::string report_to_json(const MemorizationReport& report) {
  Json j;
  j["schema_version"] = report.schema_version;
  j["metadata"] = metadata_json(report.metadata);
  Json rows = Json::array();
  for (const auto& r : report.per_sequence) {
    Json row;
    row["task_id"] = r.task_id;
    row["mode"] = std::string(to_string(r.mode));
    row["ml_tokens"] = r.scores.ml_tokens;
    row["ml_chars"] = r.scores.ml_chars;
    row["exact_match"] = r.scores.exact_match;
    row["rouge_l"] = r.scores.rouge_l;
    row["norm_levenshtein"] = r.scores.norm_levenshtein;
    row["generated_text"] = r.generated_text;
    rows.push_back(std::move(row));
  }
  j["per_sequence"] = std::move(rows);
  Json aggs = Json::array();
  for (const auto& a : report.aggregates) {
    Json agg;
    agg["mode"] = std::string(to_string(a.mode));
    agg["count"] = a.count;
    agg["mean_ml_tokens"] = a.mean_ml_tokens;
    agg["mean_ml_chars"] = a.mean_ml_chars;
    agg["emr_percent"] = a.emr_percent;
    agg["mean_rouge_l"] = a.mean_rouge_l;
    agg["mean_norm_levenshtein"] = a.mean_norm_levenshtein;
    agg["rouge_l_above_threshold_percent"] = a.rouge_l_above_threshold_percent;
    aggs.push_back(std::move(agg));
  }
  j["aggregates"] = std::move(aggs);
  j["ce_loss"] = optional_json(report.ce_loss);
  j["skipped"] = report.skipped;
  Json errors = Json::array();
  for (const auto& e : report.errors) errors.push_back({{"task_id", e.task_id}, {"mode", e.mode}, {"message", e.message}});
  j["errors"] = std::move(errors);
  return j.dump(2) + "\n";
}

MemorizationReport report_from_json(std::string_view text) {
  const Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::Schema, "report is not valid JSON");
  MemorizationReport r;
  r.schema_version = get<int>(j, "schema_version");
  if (r.schema_version != MemorizationReport::kSchemaVersion) {
    throw Error(ErrorKind::Schema, "unsupported schema_version " + std::to_string(r.schema_version));
  }
  const Json& m = field(j, "metadata");
  auto& md = r.metadata;
  md.main_spec = get<std::string>(m, "main_spec");
  md.aux_spec = get<std::string>(m, "aux_spec");
  md.grammar_provenance = get<std::string>(m, "grammar_provenance");
  md.grammar_size = get<std::size_t>(m, "grammar_size");
  md.bound_grammar_size = get<std::size_t>(m, "bound_grammar_size");
  md.dropped_grammar_words = get<std::vector<std::string>>(m, "dropped_grammar_words");
  md.gamma = get_optional<double>(m, "gamma");
  md.prefix_tokens = get<int>(m, "prefix_tokens");
  md.gen_tokens = get<int>(m, "gen_tokens");
  md.temperature = get<double>(m, "temperature");
  md.seed = get<std::uint64_t>(m, "seed");
  md.rouge_threshold = get<double>(m, "rouge_threshold");
  try {
    md.normalization = parse_normalization(get<std::string>(m, "normalization"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Schema) throw;
    throw Error(ErrorKind::Schema, e.detail());
  }
  md.memfree_n = get<int>(m, "memfree_n");
  md.low_coverage_steps = get<std::size_t>(m, "low_coverage_steps");
  md.memfree_flagged_steps = get<std::size_t>(m, "memfree_flagged_steps");
  md.timestamp = get_optional<std::string>(m, "timestamp");

  for (const auto& row : field(j, "per_sequence")) {
    SequenceRow s;
    s.task_id = get<std::string>(row, "task_id");
    s.mode = get_mode(row);
    s.scores.ml_tokens = get<std::size_t>(row, "ml_tokens");
    s.scores.ml_chars = get<std::size_t>(row, "ml_chars");
    s.scores.exact_match = get<bool>(row, "exact_match");
    s.scores.rouge_l = get<double>(row, "rouge_l");
    s.scores.norm_levenshtein = get<double>(row, "norm_levenshtein");
    s.generated_text = get<std::string>(row, "generated_text");
    r.per_sequence.push_back(std::move(s));
  }
  for (const auto& agg : field(j, "aggregates")) {
    ModeAggregate a;
    a.mode = get_mode(agg);
    a.count = get<std::size_t>(agg, "count");
    a.mean_ml_tokens = get<double>(agg, "mean_ml_tokens");
    a.mean_ml_chars = get<double>(agg, "mean_ml_chars");
    a.emr_percent = get<double>(agg, "emr_percent");
    a.mean_rouge_l = get<double>(agg, "mean_rouge_l");
    a.mean_norm_levenshtein = get<double>(agg, "mean_norm_levenshtein");
    a.rouge_l_above_threshold_percent = get<double>(agg, "rouge_l_above_threshold_percent");
    r.aggregates.push_back(a);
  }
  r.ce_loss = get_optional<double>(j, "ce_loss");
  r.skipped = get<std::vector<std::string>>(j, "skipped");
  for (const auto& e : field(j, "errors")) {
    r.errors.push_back({get<std::string>(e, "task_id"), get<std::string>(e, "mode"), get<std::string>(e, "message")});
  }
  return r;
}

std::string report_to_csv(const MemorizationReport& report) {
  std::string out = std::string(kRowHeader) + "\n";
  for (const auto& r : report.per_sequence) out += row_fields(r) + "\n";
  return out;
}

std::string aggregates_to_csv(const MemorizationReport& report) {
  std::string out =
      "mode,count,mean_ml_tokens,mean_ml_chars,emr_percent,mean_rouge_l,mean_norm_levenshtein,"
      "rouge_l_above_threshold_percent\n";
  for (const auto& a : report.aggregates) {
    out += std::string(to_string(a.mode)) + "," + std::to_string(a.count) + "," + num(a.mean_ml_tokens) + "," +
           num(a.mean_ml_chars) + "," + num(a.emr_percent) + "," + num(a.mean_rouge_l) + "," +
           num(a.mean_norm_levenshtein) + "," + num(a.rouge_l_above_threshold_percent) + "\n";
  }
  return out;
}

std::string ablation_to_csv(std::span<const MemorizationReport> reports, std::span<const std::size_t> sizes) {
  if (reports.size() != sizes.size()) throw Error(ErrorKind::InvalidArgument, "reports and sizes differ in length");
  std::string out = "grammar_size," + std::string(kRowHeader) + "\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    for (const auto& r : reports[i].per_sequence) out += std::to_string(sizes[i]) + "," + row_fields(r) + "\n";
  }
  return out;
}

std::string gamma_to_json(const GammaReport& gamma) {
  Json j;
  j["gamma"] = gamma.gamma;
  j["token_count"] = gamma.token_count;
  j["grammar_token_count"] = gamma.grammar_token_count;
  j["corpus_label"] = gamma.corpus_label;
  return j.dump(2) + "\n";
}

std::string generation_to_json(const GenerationRecord& record) {
  Json j;
  j["mode"] = std::string(to_string(record.mode));
  j["generated_text"] = record.generated_text;
  j["prompt_tokens"] = record.prompt_tokens;
  j["generated_tokens"] = record.generated_tokens;
  j["stopped_on_eos"] = record.stopped_on_eos;
  j["max_tokens"] = record.params.max_tokens;
  j["temperature"] = record.params.temperature;
  j["seed"] = record.params.seed;
  j["flagged_steps"] = record.flagged_steps;
  j["low_coverage_steps"] = record.low_coverage_steps;
  Json traces = Json::array();
  for (const auto& t : record.traces) {
    Json row;
    row["step"] = t.step_index;
    row["alpha"] = t.alpha;
    row["main_grammar_mass"] = t.main_grammar_mass;
    row["aux_grammar_mass"] = t.aux_grammar_mass;
    row["chosen"] = t.chosen;
    row["swapped"] = t.swapped;
    row["fallback"] = t.fallback;
    row["aux_grammar_coverage"] = t.aux_grammar_coverage;
    traces.push_back(std::move(row));
  }
  j["traces"] = std::move(traces);
  return j.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

void emit_report(const MemorizationReport& report, const std::filesystem::path& path, ReportFormat format) {
  write_text_file(path, format == ReportFormat::Json ? report_to_json(report) : report_to_csv(report));
}

MemorizationReport read_report(const std::filesystem::path& path) { return report_from_json(read_text_file(path)); }

}  // namespace tokenswap
