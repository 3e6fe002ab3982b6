#pragma once

// File and text helpers shared by the exporters.

#include <string>
#include <vector>

#include <json.hpp>

namespace stochgeom::io {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double x);

std::string read_file(const std::string& path);
/// Throws std::runtime_error naming the path on failure.
void write_file(const std::string& path, const std::string& content);

/// "out/run.csv" -> "out/run.run.json".
std::string sidecar_path(const std::string& output_path);
/// Writes the resolved configuration of a run next to its output. The
/// document holds no timestamps, so reruns are byte-identical.
void write_sidecar(const std::string& output_path, const nlohmann::json& config);

/// Pretty-printed JSON with a trailing newline.
std::string dump_json(const nlohmann::json& doc);

/// Row-by-row CSV construction with a fixed header.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns);

    CsvTable& operator<<(double x);
    CsvTable& operator<<(int x);
    CsvTable& operator<<(long x);
    CsvTable& operator<<(const std::string& s);
    CsvTable& operator<<(const char* s) { return *this << std::string(s); }

    /// Throws std::logic_error if the row does not match the header width.
    void end_row();

    const std::string& str() const { return text_; }
    std::size_t rows() const { return rows_; }

private:
    void append(const std::string& cell);

    std::size_t width_;
    std::size_t cells_ = 0;
    std::size_t rows_ = 0;
    std::string text_;
};

}  // namespace stochgeom::io
