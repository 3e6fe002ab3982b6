#pragma once

// Indicatrices {v : ‖v‖ = 1} and Busemann-Hausdorff volume densities
// π / area({‖v‖ < 1}) in 2-D latent spaces.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stochgeom/field.hpp"
#include "stochgeom/metric.hpp"

namespace stochgeom::measure {

using metric::NormKind;

inline constexpr int kIndicatrixSamples = 64;
inline constexpr int kVolumeSamples = 256;

struct Indicatrix {
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    NormKind kind = NormKind::Finsler;
    std::vector<double> angles;  // θ_k = 2πk/K
    std::vector<double> radii;   // r_k = 1/‖e(θ_k)‖
};

/// Throws UnsupportedError for q != 2, DomainError for K < 16 or when the norm
/// vanishes along a sampled direction.
Indicatrix indicatrix(const metric::MetricPoint& p, int K, NormKind kind,
                      const Eigen::Vector2d& center = Eigen::Vector2d::Zero());

/// Polygon {r_k e(θ_k)} turns consistently, up to `slack` in the cross products.
bool is_convex(const Indicatrix& ind, double slack = 1e-8);

/// Σ_k ½ r_k r_{k+1} sin(2π/K).
double polygon_area(const Indicatrix& ind);

/// π / polygon_area of the indicatrix with K samples; 0 when the norm vanishes
/// along a sampled direction.
double bh_volume(const metric::MetricPoint& p, int K, NormKind kind);

/// Pointwise cap on (V_R − V_F)/V_R: 1 − (1 − b)^q with b the largest relative
/// norm bound over the K sampled directions.
double volume_ratio_bound(const metric::MetricPoint& p, int K);

struct VolumeField {
    int grid = 0;
    int samples = 0;
    std::vector<Eigen::Vector2d> points;  // row-major over the lattice, z2 outer
    std::vector<double> v_riemann;
    std::vector<double> v_finsler;
    std::vector<double> v_alpha_sigma;
    std::vector<double> ratio;            // (V_R − V_F)/V_R
    std::vector<double> ratio_bound;
    std::vector<double> variance;         // posterior variance of f
};

/// Volumes on a grid × grid lattice over `box` (default: the field's bounds).
VolumeField volume_field(const LatentField& field, int grid = 32, int K = kVolumeSamples,
                         std::optional<Box> box = std::nullopt);

/// Columns z1, z2, v_riemann, v_finsler, v_alpha_sigma, ratio, log10 variants,
/// ratio_bound, variance.
std::string volume_field_csv(const VolumeField& vf);

/// Columns cx, cy, kind, theta, r.
std::string indicatrix_csv(const std::vector<Indicatrix>& inds);

}  // namespace stochgeom::measure
