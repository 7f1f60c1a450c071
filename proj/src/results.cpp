#include "results.hpp"

#include <fstream>

#include "error.hpp"

namespace sdc {
namespace {

std::string csv_field(const Record& value) {
    std::string raw;
    if (value.is_string())
        raw = value.get<std::string>();
    else if (value.is_null())
        raw = "";
    else
        raw = value.dump();
    const bool needs_quotes = raw.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) return raw;
    std::string quoted = "\"";
    for (char c : raw) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

}  // namespace

std::string records_to_json(const std::vector<Record>& records) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const Record& r : records) arr.push_back(r);
    return arr.dump(2) + "\n";
}

std::string records_to_csv(const std::vector<Record>& records) {
    if (records.empty()) throw_data("no records to emit");
    std::vector<std::string> keys;
    for (auto it = records.front().begin(); it != records.front().end(); ++it) keys.push_back(it.key());

    std::string out;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (i) out += ',';
        out += csv_field(Record(keys[i]));
    }
    out += "\r\n";
    for (const Record& r : records) {
        std::size_t i = 0;
        for (auto it = r.begin(); it != r.end(); ++it, ++i) {
            if (i >= keys.size() || it.key() != keys[i])
                throw_data("record key set differs from the header (\"" + it.key() + "\")");
            if (i) out += ',';
            out += csv_field(it.value());
        }
        if (i != keys.size()) throw_data("record is missing columns");
        out += "\r\n";
    }
    return out;
}

void emit_results(const std::vector<Record>& records, const std::string& format, const std::string& path) {
    if (records.empty()) throw_data("no records to emit");
    std::string text;
    if (format == "json")
        text = records_to_json(records);
    else if (format == "csv")
        text = records_to_csv(records);
    else
        throw_config("unknown results format \"" + format + "\" (want json or csv)");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot open " + path + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw_io("write to " + path + " failed");
}

}  // namespace sdc
