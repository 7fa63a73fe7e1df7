#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace fairaudit {

using Json = nlohmann::json;

/// Flat key -> scalar record; one row of a result table.
using Record = Json;

/// Number field; non-finite values become null (the report never carries NaN/inf).
Json finite(double v);

struct AnalysisResult {
  std::string analysis;
  std::map<std::string, std::vector<Record>> tables;
};

struct AuditReport {
  std::string tool = "fairaudit";
  std::string version;
  Json config = Json::object();
  std::vector<AnalysisResult> results;
  std::vector<std::string> warnings;  // each message once, in first-seen order
  std::vector<std::string> errors;

  void warn(const std::string& message);
  void warn_all(const std::vector<std::string>& messages);
  Json to_json() const;
  static AuditReport from_json(const Json& j);
};

enum class ReportFormat { Json, Csv };

ReportFormat parse_report_format(std::string_view text);

/// Pretty-printed JSON body with a trailing newline.
std::string render_json(const AuditReport& report);
AuditReport parse_report(std::string_view text);

/// CSV for a list of flat records; columns are the sorted union of keys.
std::string table_csv(const std::vector<Record>& records);

/// Writes report.json, or one <analysis>_<table>.csv per table plus
/// config.csv and messages.csv. Returns the files written.
std::vector<std::filesystem::path> emit_report(const AuditReport& report,
                                               const std::filesystem::path& out_dir,
                                               ReportFormat format);

void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace fairaudit
