#pragma once

// Gaussian-process regression from latent coordinates to data space, with
// posterior predictions of values and of the Jacobian.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace stochgeom::gp {

enum class KernelFamily { SquaredExponential, Matern52 };

/// "rbf" / "matern52".
std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

struct Kernel {
    KernelFamily family = KernelFamily::SquaredExponential;
    double lengthscale = 1.0;
    double variance = 1.0;

    /// Throws DomainError unless both hyperparameters are positive.
    void validate() const;
};

double kernel_eval(const Kernel& k, const Eigen::VectorXd& z1, const Eigen::VectorXd& z2);

/// ∂k(z1, z2)/∂z1.
Eigen::VectorXd kernel_gradient(const Kernel& k, const Eigen::VectorXd& z1,
                                const Eigen::VectorXd& z2);

/// ∂²k(z1, z2)/∂z1∂z2ᵀ; at z1 = z2 this is the prior covariance of ∇f.
Eigen::MatrixXd kernel_cross_hessian(const Kernel& k, const Eigen::VectorXd& z1,
                                     const Eigen::VectorXd& z2);

/// ∂k/∂(log lengthscale).
double kernel_dlog_lengthscale(const Kernel& k, const Eigen::VectorXd& z1,
                               const Eigen::VectorXd& z2);

/// Gaussian posterior of the D×q Jacobian at a latent point. Rows are
/// independent with a shared q×q covariance.
struct JacobianPosterior {
    Eigen::MatrixXd mean;  // E[J], D×q
    Eigen::MatrixXd cov;   // Σ, q×q, symmetric PSD
    int dim_data = 0;      // D
};

/// Symmetrises Σ and clamps negative eigenvalues to zero.
Eigen::MatrixXd clamp_psd(const Eigen::MatrixXd& cov);

struct Prediction {
    Eigen::VectorXd mean;
    double var;
};

struct JointPrediction {
    Eigen::MatrixXd mean;  // m×D
    Eigen::MatrixXd cov;   // m×m, shared across outputs
};

/// Jitter policy for the kernel Cholesky factor: first attempt without jitter,
/// then kInitialJitter·variance multiplied by 10 up to kMaxJitterEscalations times.
inline constexpr double kInitialJitter = 1e-8;
inline constexpr int kMaxJitterEscalations = 5;

/// Fitted GP with one shared noise level and kernel across the D outputs.
/// Immutable after construction; all queries are const and thread-safe.
class GpModel {
public:
    /// Output means default to the empirical column means of Y.
    GpModel(Kernel kernel, double noise, Eigen::MatrixXd latent_inputs, Eigen::MatrixXd outputs,
            std::optional<Eigen::VectorXd> output_means = std::nullopt);

    const Kernel& kernel() const { return kernel_; }
    double noise() const { return noise_; }
    double jitter() const { return jitter_; }
    const Eigen::MatrixXd& latent_inputs() const { return x_; }
    const Eigen::MatrixXd& outputs() const { return y_; }
    const Eigen::VectorXd& output_means() const { return y_mean_; }
    const Eigen::MatrixXd& chol() const { return chol_; }
    int num_points() const { return static_cast<int>(x_.rows()); }
    int latent_dim() const { return static_cast<int>(x_.cols()); }
    int data_dim() const { return static_cast<int>(y_.cols()); }

    double log_marginal_likelihood() const { return lml_; }

    Prediction posterior_mean_var(const Eigen::VectorXd& z) const;
    JointPrediction posterior_joint(const std::vector<Eigen::VectorXd>& zs) const;

    JacobianPosterior jacobian_posterior_closed_form(const Eigen::VectorXd& z) const;

    /// Central differences along each latent axis, f(z + h/2 e_a) − f(z − h/2 e_a),
    /// divided by h. The covariance uses the joint posterior of all 2q evaluation
    /// points. Throws DomainError for h <= 0; warns when h > lengthscale/10.
    JacobianPosterior jacobian_posterior_discretized(const Eigen::VectorXd& z, double h) const;

    /// Axis-aligned bounding box of the latent inputs grown by `margin` of its extent.
    std::pair<Eigen::VectorXd, Eigen::VectorXd> latent_bounds(double margin = 0.1) const;

    nlohmann::json to_json() const;
    static GpModel from_json(const nlohmann::json& doc);
    void save(const std::string& path) const;
    static GpModel load(const std::string& path);

private:
    Eigen::VectorXd cross_kernel(const Eigen::VectorXd& z) const;

    Kernel kernel_;
    double noise_;
    double jitter_ = 0.0;
    Eigen::MatrixXd x_;
    Eigen::MatrixXd y_;
    Eigen::VectorXd y_mean_;
    Eigen::MatrixXd chol_;   // lower factor of K + (noise + jitter)·I
    Eigen::MatrixXd alpha_;  // K⁻¹(Y − 1·meanᵀ), N×D
    double lml_ = 0.0;
};

/// Kernel matrix K(X, X) without noise.
Eigen::MatrixXd kernel_matrix(const Kernel& k, const Eigen::MatrixXd& x);

/// Principal-component latent coordinates of Y (N×q), uniformly scaled so the
/// leading coordinate has unit standard deviation. Signs are fixed so the
/// largest-magnitude loading of each component is positive.
Eigen::MatrixXd pca_latents(const Eigen::MatrixXd& y, int q);

struct FitOptions {
    bool fit_noise = true;
    double min_noise = 1e-6;
    /// Joint MAP optimisation of the latent inputs under a N(0, I) prior.
    bool optimize_latents = false;
};

struct FitResult {
    GpModel model;
    double initial_lml;
    double final_lml;
    int steps;
};

/// Maximises the log marginal likelihood over log-parameterised hyperparameters
/// with Adam, returning the best iterate seen (never worse than the start).
FitResult fit_hyperparameters(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                              const Kernel& k0, double noise0, int steps, double lr,
                              const FitOptions& options = {});

}  // namespace stochgeom::gp
