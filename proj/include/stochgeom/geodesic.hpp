#pragma once

// Piecewise-linear curves on a uniform parameter grid over [0, 1] and their
// discretised length and energy functionals. With N points the step is
// Δt = 1/(N−1), velocities are (p_{i+1} − p_i)/Δt and each segment's metric is
// taken at its midpoint, so that a constant-speed straight line has E = L².

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stochgeom/field.hpp"
#include "stochgeom/metric.hpp"

namespace stochgeom::geodesic {

using metric::NormKind;

class DiscreteCurve {
public:
    /// Rows are points. Throws DomainError for fewer than 3 points or non-finite entries.
    explicit DiscreteCurve(Eigen::MatrixXd points);

    static DiscreteCurve straight_line(const Eigen::VectorXd& start, const Eigen::VectorXd& end,
                                       int n_points);

    const Eigen::MatrixXd& points() const { return points_; }
    int size() const { return static_cast<int>(points_.rows()); }
    int dim() const { return static_cast<int>(points_.cols()); }
    int segments() const { return size() - 1; }
    double dt() const { return 1.0 / static_cast<double>(segments()); }

    Eigen::VectorXd point(int i) const { return points_.row(i).transpose(); }
    Eigen::VectorXd velocity(int segment) const;
    Eigen::VectorXd midpoint(int segment) const;

    /// Moves interior points by `delta` (rows for the endpoints are ignored).
    DiscreteCurve displaced(const Eigen::MatrixXd& delta) const;

    /// Resamples the polyline to `n_points` points equally spaced in Euclidean arc length.
    DiscreteCurve resampled(int n_points) const;

private:
    Eigen::MatrixXd points_;
};

/// Per-segment norms of the velocities.
std::vector<double> segment_speeds(const LatentField& field, const DiscreteCurve& c, NormKind kind);

/// Σ_i ‖γ̇_i‖² Δt.
double energy(const LatentField& field, const DiscreteCurve& c, NormKind kind);
/// Σ_i ‖γ̇_i‖ Δt.
double curve_length(const LatentField& field, const DiscreteCurve& c, NormKind kind);

inline double energy_riemannian(const LatentField& field, const DiscreteCurve& c) {
    return energy(field, c, NormKind::Riemannian);
}
inline double energy_finsler(const LatentField& field, const DiscreteCurve& c) {
    return energy(field, c, NormKind::Finsler);
}

/// Σ_i ‖f(p_{i+1}) − f(p_i)‖ with f the decoder mean.
double ambient_length(const LatentField& field, const DiscreteCurve& c);
/// Mean posterior variance over the curve points.
double mean_variance(const LatentField& field, const DiscreteCurve& c);

enum class GradientMode {
    /// Velocity derivatives in closed form, midpoint derivatives by central differences.
    Mixed,
    /// Central differences for everything; used to check Mixed.
    FiniteDifference,
};

/// Step of the central differences taken with respect to latent positions.
inline constexpr double kFiniteDifferenceStep = 1e-5;

/// ∂E/∂p with zero rows at the endpoints.
Eigen::MatrixXd energy_gradient(const LatentField& field, const DiscreteCurve& c, NormKind kind,
                                GradientMode mode = GradientMode::Mixed);

struct GridOptions {
    int grid = 10;
    int n_points = 64;
    /// Grown by `margin` of its extent. Defaults to the field's bounds, or to
    /// the box spanned by the endpoints.
    std::optional<Box> box;
    double margin = 0.1;
};

/// Dijkstra on the 8-connected grid with edge weights equal to the norm of
/// the edge displacement at its midpoint. Requires q = 2.
DiscreteCurve grid_initialize(const LatentField& field, const Eigen::VectorXd& start,
                              const Eigen::VectorXd& end, NormKind kind, const GridOptions& options = {});

struct MinimizeOptions {
    int max_iter = 500;
    double tol = 1e-8;
    /// Convergence window: relative energy change below tol over this many iterations.
    int window = 10;
    GradientMode gradient = GradientMode::Mixed;
};

struct GeodesicResult {
    DiscreteCurve curve;
    double energy;
    double length;
    NormKind kind;
    int iterations;
    bool converged;
    /// Energy after each accepted step, starting with the initial curve.
    std::vector<double> energy_trace;
};

/// Gradient descent on the interior points, preconditioned by the inverse
/// discrete Laplacian, with Armijo backtracking (c = 1e-4, shrink 0.5).
GeodesicResult minimize_energy(const LatentField& field, const DiscreteCurve& init, NormKind kind,
                               const MinimizeOptions& options = {});

/// CSV with columns t, z_1..z_q and, if `decoded`, f_1..f_D.
std::string curve_csv(const LatentField& field, const DiscreteCurve& c, bool decoded = true);

}  // namespace stochgeom::geodesic
