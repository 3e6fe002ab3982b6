#pragma once

// Synthetic datasets on the unit sphere and CSV ingestion.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace stochgeom::data {

struct Dataset {
    std::string name;
    Eigen::MatrixXd points;                 // N×D
    std::optional<std::vector<int>> labels;
    /// Generator configuration, or {"source", "fnv1a64"} for loaded files.
    nlohmann::json provenance;

    int size() const { return static_cast<int>(points.rows()); }
    int dim() const { return static_cast<int>(points.cols()); }

    /// Throws DomainError for N < 2, non-finite entries or mismatched labels.
    void validate() const;
};

/// Inverse stereographic projection (x, y) -> (2x, 2y, x²+y²−1)/(x²+y²+1).
Eigen::Vector3d inverse_stereographic(double x, double y);

/// Planar pinwheel mapped to the sphere. Each arm holds points at radius
/// |N(1, 0.25)|, rotated by 0.3 rad per unit radius, with Gaussian noise of
/// standard deviation `noise` in the tangential direction.
Dataset gen_pinwheel_sphere(int n, int arms, double noise, std::uint64_t seed);

/// Concentric circles with the given radii, mapped to the sphere. Points are
/// split evenly across circles (remainder to the first ones) and labelled by
/// circle index; radial noise has standard deviation `noise`.
Dataset gen_circles_sphere(int n, const std::vector<double>& radii, double noise, std::uint64_t seed);

/// Rectangular numeric CSV. A header row is skipped when none of its cells is
/// a number. With `has_labels` the last column holds integer labels.
/// Throws ParseError naming the row and column of the first bad cell.
Dataset load_csv(const std::string& path, bool has_labels);
Dataset parse_csv(const std::string& text, bool has_labels, const std::string& name = "inline");

/// Header x1..xD (and label); values at round-trip precision.
std::string to_csv(const Dataset& ds);
void save_csv(const Dataset& ds, const std::string& path);

/// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string fnv1a64(const std::string& bytes);

}  // namespace stochgeom::data
