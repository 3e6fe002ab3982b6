#pragma once

// Norms on the tangent space of a latent point whose Jacobian is Gaussian:
//   stochastic  ‖v‖_G = √(vᵀJᵀJv)            (one draw of J)
//   Riemannian  ‖v‖_R = √(vᵀE[G]v),  E[G] = E[J]ᵀE[J] + DΣ
//   Finsler     ‖v‖_F = E[‖v‖_G] = √2 √(vᵀΣv) Γ(D/2+½)/Γ(D/2) 1F1(−½; D/2; −ω/2)
//   αΣ          ‖v‖_αΣ = √(α vᵀΣv),  α = 2 (Γ(D/2+½)/Γ(D/2))²
// with ω = vᵀE[J]ᵀE[J]v / vᵀΣv. For every v: ‖v‖_αΣ ≤ ‖v‖_F ≤ ‖v‖_R.

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "stochgeom/gp.hpp"
#include "stochgeom/randmat.hpp"

namespace stochgeom::metric {

using gp::JacobianPosterior;

enum class NormKind { Euclidean, Riemannian, Finsler, AlphaSigma };

/// "euclid", "riemann", "finsler", "alpha_sigma".
std::string to_string(NormKind kind);
NormKind norm_kind_from_string(const std::string& name);

/// Below this value of vᵀΣv the Finsler norm falls back to the deterministic
/// limit √(vᵀE[J]ᵀE[J]v) and ω is reported as +∞.
inline constexpr double kDeterministicThreshold = 1e-14;

/// Slack used when checking the norm inequalities.
inline constexpr double kBoundSlack = 1e-9;

/// A latent point described by its Jacobian posterior, with the derived
/// matrices cached.
class MetricPoint {
public:
    explicit MetricPoint(JacobianPosterior jac);

    const JacobianPosterior& jacobian() const { return jac_; }
    int data_dim() const { return jac_.dim_data; }
    int latent_dim() const { return static_cast<int>(jac_.cov.rows()); }
    const Eigen::MatrixXd& cov() const { return jac_.cov; }
    /// E[J]ᵀE[J].
    const Eigen::MatrixXd& signal() const { return signal_; }
    /// E[G] = E[J]ᵀE[J] + DΣ.
    const Eigen::MatrixXd& expected_metric() const { return expected_; }
    /// Γ(D/2 + ½) / Γ(D/2).
    double gamma_ratio() const { return gamma_ratio_; }
    double alpha() const { return 2.0 * gamma_ratio_ * gamma_ratio_; }

    randmat::WishartSpec wishart() const;

private:
    JacobianPosterior jac_;
    Eigen::MatrixXd signal_;
    Eigen::MatrixXd expected_;
    double gamma_ratio_;
};

/// α = 2 (Γ(D/2+½)/Γ(D/2))², which lies in (0, D].
double alpha_coefficient(int D);

double riemannian_norm(const MetricPoint& p, const Eigen::VectorXd& v);
double finsler_norm(const MetricPoint& p, const Eigen::VectorXd& v);
double alpha_sigma_norm(const MetricPoint& p, const Eigen::VectorXd& v);
double norm(const MetricPoint& p, const Eigen::VectorXd& v, NormKind kind);

/// ∇_v of the squared norm. The Finsler branch differentiates the closed form
/// through 1F1' = (a/b) 1F1(a+1; b+1; ·).
Eigen::VectorXd norm_squared_gradient(const MetricPoint& p, const Eigen::VectorXd& v, NormKind kind);

/// Metric tensor of the Riemannian kinds (Euclidean: I, Riemannian: E[G],
/// AlphaSigma: αΣ). Throws DomainError for the Finsler kind.
Eigen::MatrixXd metric_tensor(const MetricPoint& p, NormKind kind);

/// Non-centrality ω along v; +∞ when vᵀΣv < kDeterministicThreshold.
double omega(const MetricPoint& p, const Eigen::VectorXd& v);

/// ‖v‖_G for a single Jacobian drawn with `seed`.
double stochastic_norm_sample(const MetricPoint& p, const Eigen::VectorXd& v, std::uint64_t seed);

struct BoundReport {
    Eigen::VectorXd v;
    double lower;    // ‖v‖_αΣ
    double finsler;  // ‖v‖_F
    double upper;    // ‖v‖_R
    double alpha;
    double omega;
    bool violated;   // lower > finsler + slack or finsler > upper + slack
};

BoundReport bound_report(const MetricPoint& p, const Eigen::VectorXd& v);

/// 1/(D+ω) + ω/(D+ω)²; zero for ω = +∞.
double relative_bound(int D, double omega);

struct RelativeGap {
    double gap;            // (‖v‖_R − ‖v‖_F)/‖v‖_R
    double wishart_bound;  // relative_bound(D, ω)
    double jensen_bound;   // Var[vᵀGv] / (2 E[vᵀGv]²) from the scalar Wishart moments
};

RelativeGap relative_gap(const MetricPoint& p, const Eigen::VectorXd& v);

/// ½ Hess_v(F²) by central differences of the closed-form F², step 1e-5‖v‖.
/// Throws DomainError for v = 0.
Eigen::MatrixXd fundamental_form(const MetricPoint& p, const Eigen::VectorXd& v);

}  // namespace stochgeom::metric
