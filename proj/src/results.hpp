#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace sdc {

// One experiment result row. Ordered so emission is stable and every record
// echoes the configuration needed to reproduce it.
using Record = nlohmann::ordered_json;

std::string records_to_json(const std::vector<Record>& records);

// RFC 4180: comma separated, CRLF line endings, quotes doubled inside quoted
// fields. Header row comes from the first record; all records must share its
// key set and order.
std::string records_to_csv(const std::vector<Record>& records);

// format is "json" or "csv".
void emit_results(const std::vector<Record>& records, const std::string& format, const std::string& path);

}  // namespace sdc
