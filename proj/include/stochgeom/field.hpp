#pragma once

// Decoders f: latent space -> data space seen through their Jacobian
// posteriors. Geodesic and volume code works against this interface so that
// fitted GPs, analytic surfaces and synthetic fields are interchangeable.

#include <cstdint>
#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "stochgeom/gp.hpp"
#include "stochgeom/metric.hpp"

namespace stochgeom {

using Box = std::pair<Eigen::VectorXd, Eigen::VectorXd>;

class LatentField {
public:
    virtual ~LatentField() = default;

    virtual int latent_dim() const = 0;
    virtual int data_dim() const = 0;
    virtual gp::JacobianPosterior jacobian(const Eigen::VectorXd& z) const = 0;
    /// Mean of f(z).
    virtual Eigen::VectorXd decode(const Eigen::VectorXd& z) const = 0;
    /// Per-output posterior variance of f(z); zero for deterministic fields.
    virtual double variance(const Eigen::VectorXd& z) const = 0;
    /// Region where the field is trustworthy, if it has one.
    virtual std::optional<Box> bounds() const { return std::nullopt; }

    metric::MetricPoint metric_at(const Eigen::VectorXd& z) const {
        return metric::MetricPoint(jacobian(z));
    }
};

/// Closed-form Jacobian posterior of a fitted GP. The model must outlive the field.
class GpField final : public LatentField {
public:
    explicit GpField(const gp::GpModel& model, double margin = 0.1) : model_(model), margin_(margin) {}

    int latent_dim() const override { return model_.latent_dim(); }
    int data_dim() const override { return model_.data_dim(); }
    gp::JacobianPosterior jacobian(const Eigen::VectorXd& z) const override {
        return model_.jacobian_posterior_closed_form(z);
    }
    Eigen::VectorXd decode(const Eigen::VectorXd& z) const override {
        return model_.posterior_mean_var(z).mean;
    }
    double variance(const Eigen::VectorXd& z) const override {
        return model_.posterior_mean_var(z).var;
    }
    std::optional<Box> bounds() const override { return model_.latent_bounds(margin_); }

    const gp::GpModel& model() const { return model_; }

private:
    const gp::GpModel& model_;
    double margin_;
};

/// Identity map of R^q: E[J] = I, Σ = 0.
class EuclideanField final : public LatentField {
public:
    explicit EuclideanField(int dim = 2) : dim_(dim) {}

    int latent_dim() const override { return dim_; }
    int data_dim() const override { return dim_; }
    gp::JacobianPosterior jacobian(const Eigen::VectorXd& z) const override;
    Eigen::VectorXd decode(const Eigen::VectorXd& z) const override { return z; }
    double variance(const Eigen::VectorXd&) const override { return 0.0; }

private:
    int dim_;
};

/// Unit sphere f(θ, φ) = (cosθ sinφ, sinθ sinφ, cosφ) with a deterministic Jacobian.
class SphereField final : public LatentField {
public:
    int latent_dim() const override { return 2; }
    int data_dim() const override { return 3; }
    gp::JacobianPosterior jacobian(const Eigen::VectorXd& z) const override;
    Eigen::VectorXd decode(const Eigen::VectorXd& z) const override;
    double variance(const Eigen::VectorXd&) const override { return 0.0; }
};

/// Random smooth decoder f(z) = B z + Σ_k c_k sin(w_kᵀz + b_k) with Jacobian
/// covariance Σ(z) = (s0 + ‖z‖²) Σ0. Used for property sweeps.
class RandomField final : public LatentField {
public:
    /// `noise_scale` multiplies Σ0; zero gives a deterministic field.
    RandomField(int data_dim, int latent_dim, std::uint64_t seed, double noise_scale = 1.0);

    int latent_dim() const override { return static_cast<int>(linear_.cols()); }
    int data_dim() const override { return static_cast<int>(linear_.rows()); }
    gp::JacobianPosterior jacobian(const Eigen::VectorXd& z) const override;
    Eigen::VectorXd decode(const Eigen::VectorXd& z) const override;
    double variance(const Eigen::VectorXd& z) const override;

private:
    double noise_level(const Eigen::VectorXd& z) const;

    Eigen::MatrixXd linear_;     // D×q
    Eigen::MatrixXd amplitude_;  // D×K
    Eigen::MatrixXd freq_;       // K×q
    Eigen::VectorXd phase_;      // K
    Eigen::MatrixXd sigma0_;     // q×q
    double base_ = 0.1;
};

}  // namespace stochgeom
