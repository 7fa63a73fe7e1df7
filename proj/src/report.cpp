#include "fairaudit/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "fairaudit/common.hpp"
#include "fairaudit/dataset.hpp"

namespace fairaudit {

Json finite(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

void AuditReport::warn(const std::string& message) {
  if (std::find(warnings.begin(), warnings.end(), message) == warnings.end())
    warnings.push_back(message);
}

void AuditReport::warn_all(const std::vector<std::string>& messages) {
  for (const auto& m : messages) warn(m);
}

Json AuditReport::to_json() const {
  Json j;
  j["tool"] = tool;
  j["version"] = version;
  j["config"] = config;
  j["results"] = Json::array();
  for (const auto& r : results) {
    Json block;
    block["analysis"] = r.analysis;
    block["tables"] = Json::object();
    for (const auto& [name, rows] : r.tables) block["tables"][name] = rows;
    j["results"].push_back(std::move(block));
  }
  j["warnings"] = warnings;
  j["errors"] = errors;
  return j;
}

AuditReport AuditReport::from_json(const Json& j) {
  try {
    AuditReport r;
    r.tool = j.at("tool").get<std::string>();
    r.version = j.at("version").get<std::string>();
    r.config = j.at("config");
    for (const auto& block : j.at("results")) {
      AnalysisResult a;
      a.analysis = block.at("analysis").get<std::string>();
      for (const auto& [name, rows] : block.at("tables").items())
        a.tables[name] = rows.get<std::vector<Record>>();
      r.results.push_back(std::move(a));
    }
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    r.errors = j.at("errors").get<std::vector<std::string>>();
    return r;
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "json" || text == "structured") return ReportFormat::Json;
  if (text == "csv" || text == "tabular") return ReportFormat::Csv;
  throw ConfigError("unknown output format '" + std::string(text) + "' (expected json|csv)");
}

std::string render_json(const AuditReport& report) { return report.to_json().dump(2) + "\n"; }

AuditReport parse_report(std::string_view text) {
  Json j = Json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded()) throw DataError("report is not valid JSON");
  return AuditReport::from_json(j);
}

namespace {

std::string cell_text(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return csv_escape(v.get<std::string>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

}  // namespace

std::string table_csv(const std::vector<Record>& records) {
  std::set<std::string> keys;
  for (const auto& r : records)
    for (const auto& [k, v] : r.items()) keys.insert(k);
  std::string out;
  bool first = true;
  for (const auto& k : keys) {
    if (!first) out += ',';
    out += csv_escape(k);
    first = false;
  }
  out += '\n';
  for (const auto& r : records) {
    first = true;
    for (const auto& k : keys) {
      if (!first) out += ',';
      if (r.contains(k)) out += cell_text(r.at(k));
      first = false;
    }
    out += '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw ConfigError("failed writing '" + path.string() + "'");
}

std::vector<std::filesystem::path> emit_report(const AuditReport& report,
                                               const std::filesystem::path& out_dir,
                                               ReportFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    throw ConfigError("cannot create output directory '" + out_dir.string() + "'");
  std::vector<std::filesystem::path> written;
  if (format == ReportFormat::Json) {
    written.push_back(out_dir / "report.json");
    write_text_file(written.back(), render_json(report));
    return written;
  }
  std::vector<Record> config_rows;
  config_rows.push_back({{"key", "tool"}, {"value", report.tool}});
  config_rows.push_back({{"key", "version"}, {"value", report.version}});
  for (const auto& [k, v] : report.config.items())
    config_rows.push_back({{"key", k}, {"value", v.is_string() ? v.get<std::string>() : v.dump()}});
  written.push_back(out_dir / "config.csv");
  write_text_file(written.back(), table_csv(config_rows));
  std::vector<Record> messages;
  for (const auto& w : report.warnings) messages.push_back({{"kind", "warning"}, {"message", w}});
  for (const auto& e : report.errors) messages.push_back({{"kind", "error"}, {"message", e}});
  written.push_back(out_dir / "messages.csv");
  write_text_file(written.back(), table_csv(messages));
  for (const auto& r : report.results)
    for (const auto& [name, rows] : r.tables) {
      written.push_back(out_dir / (r.analysis + "_" + name + ".csv"));
      write_text_file(written.back(), table_csv(rows));
    }
  return written;
}

}  // namespace fairaudit
