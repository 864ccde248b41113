#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "tokenswap/grammar.hpp"
#include "tokenswap/metrics.hpp"
#include "tokenswap/swap.hpp"

namespace tokenswap {

enum class ReportFormat { Json, Csv };

// Throws Usage on anything other than "json" or "csv".
ReportFormat parse_report_format(std::string_view name);

std::string report_to_json(const MemorizationReport& report);
// Throws Schema on a malformed document or an unsupported schema_version.
MemorizationReport report_from_json(std::string_view json);

// One row per (task, mode).
std::string report_to_csv(const MemorizationReport& report);
// One row per mode.
std::string aggregates_to_csv(const MemorizationReport& report);

// Per-sequence rows of several reports with a leading grammar_size column.
// sizes and reports are parallel.
std::string ablation_to_csv(std::span<const MemorizationReport> reports, std::span<const std::size_t> sizes);

std::string gamma_to_json(const GammaReport& gamma);
std::string generation_to_json(const GenerationRecord& record);

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

void emit_report(const MemorizationReport& report, const std::filesystem::path& path, ReportFormat format);
MemorizationReport read_report(const std::filesystem::path& path);

}  // namespace tokenswap
