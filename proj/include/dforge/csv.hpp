#pragma once
// Minimal reader/writer for the project's fixed CSV dialect: UTF-8,
// comma separator, \n or \r\n line endings, no quoting, first row is the
// header, empty cell = missing. Every file starts with a required version
// comment line `# dilemma-forge v1 <schema-id>`.

#include <string>
#include <vector>

namespace dforge::csv {

inline constexpr const char* kVersionPrefix = "# dilemma-forge v1 ";

struct Table {
    std::string schema_id;                       // from the version line
    std::vector<std::string> header;             // column names
    std::vector<std::vector<std::string>> rows;  // cell strings, row-major
};

// Parses a file. Throws std::runtime_error on a missing/mismatched version
// line, on a row whose cell count differs from the header, or on I/O failure.
// `expected_schema` empty means accept any schema id.
Table read_file(const std::string& path, const std::string& expected_schema = "");

// Same, from an in-memory document (used by tests and embedded data).
Table read_string(const std::string& text, const std::string& expected_schema = "");

// Serializes a table. Cells must not contain commas or newlines (checked).
std::string to_string(const Table& table);

// Writes atomically: temp file in the same directory, then rename.
void write_file(const std::string& path, const Table& table);

// Atomic write of arbitrary text (JSON reports etc.).
void write_text_file(const std::string& path, const std::string& text);

}  // namespace dforge::csv
