#pragma once

// Verification sweeps: dimension truncation, inequality checks over random
// specs, the energy-gap variance identity and geodesic comparisons.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "stochgeom/field.hpp"
#include "stochgeom/geodesic.hpp"
#include "stochgeom/randmat.hpp"

namespace stochgeom::experiments {

using metric::NormKind;

struct RandomCase {
    randmat::WishartSpec spec;
    Eigen::VectorXd v;
};

/// D uniform on [d_min, d_max], q uniform on [q_min, q_max], E[J] and Σ with
/// log-uniform scales over three decades. About one case in ten is central
/// (E[J] = 0) and one in ten has a rank-deficient Σ.
RandomCase random_case(randmat::Rng& rng, int d_min = 1, int d_max = 100, int q_min = 1, int q_max = 5);

/// E[J] entries uniform on [−1, 1], Σ = (AᵀA + 0.1 I) with A standard normal.
std::vector<randmat::WishartSpec> bounded_ensemble(int n_specs, int d_max, int q, std::uint64_t seed);

/// GP fitted to n noisy samples of a deterministic RandomField(data_dim, 2,
/// seed) at latent points uniform on [−1, 1]². `noise` is the standard
/// deviation of the output noise.
gp::GpModel synthetic_model(int data_dim, int n, std::uint64_t seed, double noise = 0.01, int fit_steps = 100);

/// "2:1024:dyadic" (powers of two), "lo:hi" (every integer) or "2,4,8".
std::vector<int> parse_dims(const std::string& text);

struct ConvergenceRow {
    int D;
    double gap_norm;    // mean (‖v‖_R − ‖v‖_F)/‖v‖_R
    double gap_volume;  // mean (V_R − V_F)/V_R; NaN unless q = 2
    double bound;       // mean 1/(D+ω) + ω/(D+ω)²
    double gap_times_D;
};

struct TruncationResult {
    std::vector<ConvergenceRow> rows;
    /// max ω/D over every truncation and tangent vector, so that ω ≤ M·D.
    double M = 0.0;

    /// D·gap at or below 1 + M on every row.
    bool bounded() const;
    /// D·gap does not increase across rows with D > d_from.
    bool non_increasing_after(int d_from) const;
};

/// Truncates each spec to its first D Jacobian rows and averages the gaps over
/// the ensemble and `v_samples` random unit tangent vectors per spec.
TruncationResult truncation_sweep(const std::vector<randmat::WishartSpec>& ensemble, const std::vector<int>& dims,
                                  int v_samples, std::uint64_t seed);

/// Columns D, gap_norm, gap_volume, bound, gap_times_D, one_plus_M.
std::string convergence_csv(const TruncationResult& result);

struct BoundSweepOptions {
    int n_specs = 10000;
    int n_curves = 1000;
    int n_points = 200;
    int curve_points = 12;
    std::uint64_t seed = 0;
    /// Multiplies every Finsler value before checking; 1 in normal use.
    double finsler_scale = 1.0;
};

struct ViolationReport {
    long specs = 0;
    long curves = 0;
    long points = 0;
    long norm_lower = 0;         // ‖v‖_αΣ ≤ ‖v‖_F
    long norm_upper = 0;         // ‖v‖_F ≤ ‖v‖_R
    long gap_negative = 0;       // 0 ≤ gap
    long gap_bound = 0;          // gap ≤ 1/(D+ω) + ω/(D+ω)²
    long length_order = 0;       // L_αΣ ≤ L_F ≤ L_R
    long energy_order = 0;       // E_αΣ ≤ E_F ≤ E_R
    long volume_order = 0;       // V_αΣ ≤ V_F ≤ V_R
    long volume_ratio_bound = 0; // (V_R − V_F)/V_R ≤ 1 − (1 − b)^q

    long total() const;
    nlohmann::json to_json() const;
};

inline constexpr double kViolationSlack = 1e-9;

/// Throws DomainError for fewer than 100 specs.
ViolationReport bound_sweep(const BoundSweepOptions& options);

struct EnergyGap {
    double e_riemann;
    double e_finsler;
    double gap;          // e_riemann − e_finsler
    double mc_variance;  // Σ_i Var[‖γ̇_i‖_G] Δt by Monte Carlo
    double mc_se;
};

EnergyGap energy_gap_identity(const LatentField& field, const geodesic::DiscreteCurve& c, long samples_per_segment,
                              std::uint64_t seed);

struct EndpointPair {
    Eigen::VectorXd start;
    Eigen::VectorXd end;
};

struct ComparisonOptions {
    std::vector<NormKind> kinds{NormKind::Riemannian, NormKind::Finsler, NormKind::Euclidean};
    /// Dijkstra initialisation for 2-D fields; straight lines otherwise.
    bool grid_init = true;
    geodesic::GridOptions grid;
    geodesic::MinimizeOptions minimize;
};

struct ComparisonRow {
    int pair;
    NormKind kind;
    double length_riemann;
    double length_finsler;
    double energy;
    double ambient_length;
    double mean_variance;
    int iterations;
    bool converged;
    geodesic::DiscreteCurve curve;
};

std::vector<ComparisonRow> geodesic_comparison(const LatentField& field, const std::vector<EndpointPair>& pairs,
                                               const ComparisonOptions& options = {});

/// Columns pair, metric, length_riemann, length_finsler, relative_gap, energy,
/// ambient_length, mean_variance, iterations, converged.
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

}  // namespace stochgeom::experiments
