#include "dforge/csv.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dforge::csv {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace

Table read_string(const std::string& text, const std::string& expected_schema) {
    std::istringstream in(text);
    Table table;
    std::string line;
    bool version_seen = false;
    bool header_seen = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (!version_seen) {
            if (line.rfind(kVersionPrefix, 0) != 0) {
                throw std::runtime_error(
                    "missing version line; expected '" + std::string(kVersionPrefix) + "<schema>'");
            }
            table.schema_id = line.substr(std::string(kVersionPrefix).size());
            if (!expected_schema.empty() && table.schema_id != expected_schema) {
                throw std::runtime_error("schema mismatch: file is '" + table.schema_id +
                                         "', expected '" + expected_schema + "'");
            }
            version_seen = true;
            continue;
        }
        if (!line.empty() && line[0] == '#') continue;
        if (line.empty()) continue;
        if (!header_seen) {
            table.header = split_line(line);
            header_seen = true;
            continue;
        }
        auto cells = split_line(line);
        if (cells.size() != table.header.size()) {
            throw std::runtime_error("line " + std::to_string(lineno) + ": expected " +
                                     std::to_string(table.header.size()) + " cells, got " +
                                     std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    if (!version_seen) throw std::runtime_error("empty file: missing version line");
    if (!header_seen) throw std::runtime_error("missing header row");
    return table;
}

Table read_file(const std::string& path, const std::string& expected_schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return read_string(buf.str(), expected_schema);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

std::string to_string(const Table& table) {
    std::ostringstream out;
    out << kVersionPrefix << table.schema_id << '\n';
    auto emit_row = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const std::string& c = cells[i];
            if (c.find(',') != std::string::npos || c.find('\n') != std::string::npos) {
                throw std::runtime_error("cell contains a separator: '" + c + "'");
            }
            if (i) out << ',';
            out << c;
        }
        out << '\n';
    };
    emit_row(table.header);
    for (const auto& row : table.rows) emit_row(row);
    return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << text;
        if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

void write_file(const std::string& path, const Table& table) {
    write_text_file(path, to_string(table));
}

}  // namespace dforge::csv
