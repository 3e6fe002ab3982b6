#pragma once

// Monte-Carlo ground truth for the stochastic pullback metric G = JᵀJ, where
// the D rows of J are independent N(E[J]_i, Σ). vᵀGv is a scalar non-central
// Wishart variable W₁(D, σ = vᵀΣv, ω), and √(vᵀGv) is non-central Nakagami.

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace stochgeom::randmat {

/// Generator used by every sampler in the library.
using Rng = std::mt19937_64;

/// Seed for batch `index` of a run seeded with `seed`: splitmix64 of
/// seed + (index + 1)·0x9E3779B97F4A7C15. Used for reproducible parallel batches.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Regularisation added to a singular Jacobian covariance.
inline constexpr double kDegenerateJitter = 1e-12;

struct WishartSpec {
    int dof = 1;                    // D, number of Jacobian rows
    Eigen::MatrixXd scale;          // Σ, q×q
    Eigen::MatrixXd mean_jacobian;  // E[J], D×q

    int latent_dim() const { return static_cast<int>(scale.rows()); }

    /// Throws DomainError when shapes disagree, Σ is not symmetric or has a
    /// negative eigenvalue, or dof < 1.
    void validate() const;
};

struct ScalarWishart {
    int dof = 1;
    double sigma = 1.0;  // vᵀΣv
    double omega = 0.0;  // (vᵀΣv)⁻¹ vᵀE[J]ᵀE[J]v
};

struct ScalarMoments {
    double mean;
    double second_moment;
};

/// Draws one D×q Jacobian. Σ is factored directly and falls back to
/// Σ + kDegenerateJitter·I when singular. Throws NotPositiveDefiniteError if
/// that fails too.
Eigen::MatrixXd sample_jacobian(const WishartSpec& spec, std::uint64_t seed);
Eigen::MatrixXd sample_jacobian(const WishartSpec& spec, Rng& rng);

/// E[z] = σ(D+ω), E[z²] = σ²(2ω + 2(D+ω) + (D+ω)²) for z ~ W₁(D, σ, ω).
ScalarMoments wishart_scalar_moments(const ScalarWishart& s);

/// Scalar reduction of a Wishart spec along direction v.
ScalarWishart project(const WishartSpec& spec, const Eigen::VectorXd& v);

struct McEstimate {
    double estimate;
    double standard_error;
};

/// Sample statistics of the stochastic norm s = √(vᵀGv) along v.
struct NormSampleStats {
    long samples = 0;
    double mean_norm = 0.0;         // E[s]
    double se_mean_norm = 0.0;
    double var_norm = 0.0;          // Var[s] (unbiased)
    double se_var_norm = 0.0;
    double mean_sq = 0.0;           // E[s²] = E[vᵀGv]
    double se_mean_sq = 0.0;
    double var_sq = 0.0;            // Var[s²] (unbiased)
    double se_var_sq = 0.0;
};

/// Samples Jv row by row (row i is E[J]_iᵀv + √(vᵀΣv)·N(0,1), which is the
/// exact law of the i-th entry of Jv) in fixed batches seeded via derive_seed.
/// Throws DomainError for v = 0 or n_samples < 100.
NormSampleStats sample_norm_stats(const WishartSpec& spec, const Eigen::VectorXd& v,
                                  long n_samples, std::uint64_t seed);

/// Monte-Carlo E[√(vᵀJᵀJv)] with its standard error.
McEstimate expected_norm_mc(const WishartSpec& spec, const Eigen::VectorXd& v,
                            long n_samples, std::uint64_t seed);

}  // namespace stochgeom::randmat
