#pragma once

#include "hjlab/experiment.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hjlab {

enum class ReportFormat { Csv, Json };

ReportFormat report_format_from_string(std::string_view s);

/// printf "%.17g": enough digits to round-trip every double.
std::string format_number(double v);

/// Header line and one line per row, numbers via format_number.
std::string table_to_csv(const Table& table);

nlohmann::json bundle_to_json(const ResultBundle& bundle);
/// Inverse of bundle_to_json; null table cells read back as NaN. Throws
/// DomainError on a missing field or a foreign schema tag.
ResultBundle bundle_from_json(const nlohmann::json& j);

/// Writes the bundle into dir (created if needed) and returns the files written.
///   csv:  <table>.csv per table, summary.csv (one row per check) and
///         bundle.json holding schema, config echo and resolution echo.
///   json: bundle.json with everything.
/// Output is byte-stable for identical bundles. Throws std::runtime_error on
/// I/O failure.
std::vector<std::filesystem::path> emit_report(const ResultBundle& bundle,
                                               const std::filesystem::path& dir, ReportFormat format);

}  // namespace hjlab
