#pragma once

// Scenario documents (YAML), bundled reference scenarios and CSV output.

#include <filesystem>
#include <string>
#include <vector>

#include "dcdyn/engine.hpp"

namespace dcdyn {

/// Parses a scenario document. `source` names the document in error messages,
/// which carry line and column of the offending key.
Scenario parse_scenario_text(const std::string& text, const std::string& source = "<scenario>");

/// Reads and parses a file. Throws IoError when the file cannot be read.
Scenario parse_scenario_file(const std::filesystem::path& path);

/// Resolves a bundled scenario name first, then a file path.
Scenario load_scenario(const std::string& name_or_path);

/// Writes a document that parses back to an identical scenario.
std::string serialize_scenario(const Scenario& scenario);

std::vector<std::string> builtin_names();
/// Source text of a bundled scenario; throws ConfigError for unknown names.
const std::string& builtin_text(const std::string& name);
bool is_builtin(const std::string& name);

std::string timeseries_csv(const SimLog& log);
std::string events_csv(const SimLog& log);

/// Writes timeseries.csv and events.csv into `out_dir` (created if missing).
/// Throws IoError when the directory or files cannot be written.
void emit_csv(const SimLog& log, const std::filesystem::path& out_dir);

}  // namespace dcdyn
