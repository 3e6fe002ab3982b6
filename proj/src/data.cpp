#include "stochgeom/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "stochgeom/errors.hpp"
#include "stochgeom/io.hpp"
#include "stochgeom/randmat.hpp"

namespace stochgeom::data {

namespace {

constexpr double kTwistRate = 0.3;
constexpr double kRadialMean = 1.0;
constexpr double kRadialSd = 0.25;

std::optional<double> parse_number(std::string_view cell) {
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
    if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') {
        cell = cell.substr(1, cell.size() - 2);
    }
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    if (cell.empty()) return std::nullopt;
    double x = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), x);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) return std::nullopt;
    return x;
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            cells.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    cells.push_back(std::move(cur));
    return cells;
}

}  // namespace

void Dataset::validate() const {
    if (points.rows() < 2) {
        throw DomainError("dataset '" + name + "' needs at least 2 points");
    }
    if (!points.allFinite()) {
        throw DomainError("dataset '" + name + "' has non-finite entries");
    }
    if (labels && static_cast<Eigen::Index>(labels->size()) != points.rows()) {
        throw DomainError("dataset '" + name + "' has a label count that differs from the point count");
    }
}

Eigen::Vector3d inverse_stereographic(double x, double y) {
    const double r2 = x * x + y * y;
    return Eigen::Vector3d(2.0 * x, 2.0 * y, r2 - 1.0) / (r2 + 1.0);
}

Dataset gen_pinwheel_sphere(int n, int arms, double noise, std::uint64_t seed) {
    if (arms < 1 || n < arms) {
        throw DomainError("gen_pinwheel_sphere: need n >= arms >= 1");
    }
    if (!(noise >= 0.0)) {
        throw DomainError("gen_pinwheel_sphere: noise must be non-negative");
    }
    randmat::Rng rng(seed);
    std::normal_distribution<double> radial(kRadialMean, kRadialSd);
    std::normal_distribution<double> normal;
    Dataset ds;
    ds.name = "pinwheel";
    ds.points.resize(n, 3);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int arm = i % arms;
        const double r = std::abs(radial(rng));
        const double t = noise * normal(rng);
        const double angle = 2.0 * std::numbers::pi * arm / arms + kTwistRate * r;
        const double ca = std::cos(angle), sa = std::sin(angle);
        // Radial offset r along the arm, tangential noise t across it.
        const double x = r * ca - t * sa;
        const double y = r * sa + t * ca;
        ds.points.row(i) = inverse_stereographic(x, y).transpose();
        labels[static_cast<std::size_t>(i)] = arm;
    }
    ds.labels = std::move(labels);
    ds.provenance = {{"generator", "pinwheel"}, {"n", n}, {"arms", arms}, {"noise", noise}, {"seed", seed}};
    return ds;
}

Dataset gen_circles_sphere(int n, const std::vector<double>& radii, double noise, std::uint64_t seed) {
    if (radii.empty() || n < static_cast<int>(radii.size())) {
        throw DomainError("gen_circles_sphere: need n >= number of radii >= 1");
    }
    for (double r : radii) {
        if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("gen_circles_sphere: radii must be positive");
    }
    if (!(noise >= 0.0)) {
        throw DomainError("gen_circles_sphere: noise must be non-negative");
    }
    randmat::Rng rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> normal;
    const int k = static_cast<int>(radii.size());
    Dataset ds;
    ds.name = "circles";
    ds.points.resize(n, 3);
    std::vector<int> labels;
    labels.reserve(static_cast<std::size_t>(n));
    int row = 0;
    for (int c = 0; c < k; ++c) {
        const int count = n / k + (c < n % k ? 1 : 0);
        for (int j = 0; j < count; ++j, ++row) {
            const double angle = uniform(rng);
            const double r = radii[static_cast<std::size_t>(c)] + noise * normal(rng);
            ds.points.row(row) = inverse_stereographic(r * std::cos(angle), r * std::sin(angle)).transpose();
            labels.push_back(c);
        }
    }
    ds.labels = std::move(labels);
    ds.provenance = {{"generator", "circles"}, {"n", n}, {"radii", radii}, {"noise", noise}, {"seed", seed}};
    return ds;
}

Dataset parse_csv(const std::string& text, bool has_labels, const std::string& name) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::size_t width = 0;
    int line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto cells = split_row(line);
        if (first) {
            first = false;
            bool any_number = false;
            for (const auto& c : cells) any_number = any_number || parse_number(c).has_value();
            if (!any_number) {
                width = cells.size();
                continue;
            }
        }
        if (width == 0) width = cells.size();
        if (cells.size() != width) {
            throw ParseError(name + ": row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                             " columns, expected " + std::to_string(width));
        }
        std::vector<double> values;
        values.reserve(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j) {
            const auto x = parse_number(cells[j]);
            if (!x || !std::isfinite(*x)) {
                throw ParseError(name + ": row " + std::to_string(line_no) + ", column " + std::to_string(j + 1) +
                                 ": '" + cells[j] + "' is not a finite number");
            }
            values.push_back(*x);
        }
        if (has_labels) {
            const double lab = values.back();
            if (lab != std::floor(lab)) {
                throw ParseError(name + ": row " + std::to_string(line_no) + ", column " +
                                 std::to_string(cells.size()) + ": label is not an integer");
            }
            labels.push_back(static_cast<int>(lab));
            values.pop_back();
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) {
        throw ParseError(name + ": no data rows");
    }
    const std::size_t d = rows.front().size();
    if (d == 0) {
        throw ParseError(name + ": no data columns");
    }
    Dataset ds;
    ds.name = name;
    ds.points.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            ds.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    if (has_labels) ds.labels = std::move(labels);
    ds.provenance = {{"source", name}, {"fnv1a64", fnv1a64(text)}};
    ds.validate();
    return ds;
}

Dataset load_csv(const std::string& path, bool has_labels) {
    return parse_csv(io::read_file(path), has_labels, path);
}

std::string to_csv(const Dataset& ds) {
    std::vector<std::string> cols;
    for (int j = 0; j < ds.dim(); ++j) cols.push_back("x" + std::to_string(j + 1));
    if (ds.labels) cols.emplace_back("label");
    io::CsvTable table(std::move(cols));
    for (int i = 0; i < ds.size(); ++i) {
        for (int j = 0; j < ds.dim(); ++j) table << ds.points(i, j);
        if (ds.labels) table << (*ds.labels)[static_cast<std::size_t>(i)];
        table.end_row();
    }
    return table.str();
}

void save_csv(const Dataset& ds, const std::string& path) { io::write_file(path, to_csv(ds)); }

std::string fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace stochgeom::data
