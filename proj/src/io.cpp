#include "stochgeom/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "stochgeom/errors.hpp"

namespace stochgeom {

namespace {

std::mutex& warning_mutex() {
    static std::mutex m;
    return m;
}

WarningHandler& warning_handler() {
    static WarningHandler handler = [](std::string_view msg) {
        std::cerr << "warning: " << msg << '\n';
    };
    return handler;
}

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
    std::lock_guard<std::mutex> lock(warning_mutex());
    WarningHandler previous = std::move(warning_handler());
    warning_handler() = std::move(handler);
    return previous;
}

void warn(std::string_view message) {
    std::lock_guard<std::mutex> lock(warning_mutex());
    if (warning_handler()) {
        warning_handler()(message);
    }
}

namespace io {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "' for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    out << content;
    if (!out) {
        throw std::runtime_error("failed writing '" + path + "'");
    }
}

std::string sidecar_path(const std::string& output_path) {
    std::filesystem::path p(output_path);
    p.replace_extension(".run.json");
    return p.string();
}

void write_sidecar(const std::string& output_path, const nlohmann::json& config) {
    write_file(sidecar_path(output_path), dump_json(config));
}

std::string dump_json(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

CsvTable::CsvTable(std::vector<std::string> columns) : width_(columns.size()) {
    for (const auto& c : columns) append(c);
    end_row();
    rows_ = 0;
}

void CsvTable::append(const std::string& cell) {
    if (cells_ > 0) text_ += ',';
    const bool quote = cell.find_first_of(",\"\n") != std::string::npos;
    if (quote) {
        text_ += '"';
        for (char ch : cell) {
            if (ch == '"') text_ += '"';
            text_ += ch;
        }
        text_ += '"';
    } else {
        text_ += cell;
    }
    ++cells_;
}

CsvTable& CsvTable::operator<<(double x) {
    append(format_double(x));
    return *this;
}

CsvTable& CsvTable::operator<<(int x) {
    append(std::to_string(x));
    return *this;
}

CsvTable& CsvTable::operator<<(long x) {
    append(std::to_string(x));
    return *this;
}

CsvTable& CsvTable::operator<<(const std::string& s) {
    append(s);
    return *this;
}

void CsvTable::end_row() {
    if (cells_ != width_) {
        throw std::logic_error("CsvTable: row has " + std::to_string(cells_) + " cells, expected " +
                               std::to_string(width_));
    }
    text_ += '\n';
    cells_ = 0;
    ++rows_;
}

}  // namespace io

}  // namespace stochgeom
