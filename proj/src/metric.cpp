#include "stochgeom/metric.hpp"

#include <cmath>
#include <limits>

#include "stochgeom/errors.hpp"
#include "stochgeom/specfun.hpp"

namespace stochgeom::metric {

namespace {

void check_vector(const MetricPoint& p, const Eigen::VectorXd& v) {
    if (v.size() != p.latent_dim()) {
        throw DomainError("tangent vector has the wrong dimension");
    }
}

double half_dim(const MetricPoint& p) { return 0.5 * static_cast<double>(p.data_dim()); }

}  // namespace

std::string to_string(NormKind kind) {
    switch (kind) {
        case NormKind::Euclidean: return "euclid";
        case NormKind::Riemannian: return "riemann";
        case NormKind::Finsler: return "finsler";
        case NormKind::AlphaSigma: return "alpha_sigma";
    }
    return "unknown";
}

NormKind norm_kind_from_string(const std::string& name) {
    if (name == "euclid" || name == "euclidean") return NormKind::Euclidean;
    if (name == "riemann" || name == "riemannian") return NormKind::Riemannian;
    if (name == "finsler") return NormKind::Finsler;
    if (name == "alpha_sigma") return NormKind::AlphaSigma;
    throw DomainError("unknown metric kind '" + name + "'");
}

MetricPoint::MetricPoint(JacobianPosterior jac) : jac_(std::move(jac)) {
    if (jac_.dim_data < 1 || jac_.mean.rows() != jac_.dim_data ||
        jac_.mean.cols() != jac_.cov.rows() || jac_.cov.rows() != jac_.cov.cols()) {
        throw DomainError("MetricPoint: inconsistent Jacobian posterior shapes");
    }
    signal_ = jac_.mean.transpose() * jac_.mean;
    expected_ = signal_ + static_cast<double>(jac_.dim_data) * jac_.cov;
    const double b = 0.5 * static_cast<double>(jac_.dim_data);
    gamma_ratio_ = std::exp(specfun::log_gamma_ratio(b + 0.5, b));
}

randmat::WishartSpec MetricPoint::wishart() const {
    return {jac_.dim_data, jac_.cov, jac_.mean};
}

double alpha_coefficient(int D) {
    if (D < 1) {
        throw DomainError("alpha_coefficient: D must be >= 1");
    }
    const double b = 0.5 * static_cast<double>(D);
    return 2.0 * std::exp(2.0 * specfun::log_gamma_ratio(b + 0.5, b));
}

double riemannian_norm(const MetricPoint& p, const Eigen::VectorXd& v) {
    check_vector(p, v);
    return std::sqrt(std::max(v.dot(p.expected_metric() * v), 0.0));
}

double alpha_sigma_norm(const MetricPoint& p, const Eigen::VectorXd& v) {
    check_vector(p, v);
    return std::sqrt(std::max(p.alpha() * v.dot(p.cov() * v), 0.0));
}

double finsler_norm(const MetricPoint& p, const Eigen::VectorXd& v) {
    check_vector(p, v);
    const double sigma = v.dot(p.cov() * v);
    const double signal = std::max(v.dot(p.signal() * v), 0.0);
    if (sigma < kDeterministicThreshold) {
        return std::sqrt(signal);
    }
    const double w = signal / sigma;
    return std::sqrt(2.0 * sigma) * p.gamma_ratio() * specfun::kummer_1f1(-0.5, half_dim(p), -0.5 * w);
}

double norm(const MetricPoint& p, const Eigen::VectorXd& v, NormKind kind) {
    switch (kind) {
        case NormKind::Euclidean: check_vector(p, v); return v.norm();
        case NormKind::Riemannian: return riemannian_norm(p, v);
        case NormKind::Finsler: return finsler_norm(p, v);
        case NormKind::AlphaSigma: return alpha_sigma_norm(p, v);
    }
    throw DomainError("unknown norm kind");
}

Eigen::MatrixXd metric_tensor(const MetricPoint& p, NormKind kind) {
    switch (kind) {
        case NormKind::Euclidean: return Eigen::MatrixXd::Identity(p.latent_dim(), p.latent_dim());
        case NormKind::Riemannian: return p.expected_metric();
        case NormKind::AlphaSigma: return p.alpha() * p.cov();
        case NormKind::Finsler: break;
    }
    throw DomainError("metric_tensor: the Finsler norm has no metric tensor");
}

Eigen::VectorXd norm_squared_gradient(const MetricPoint& p, const Eigen::VectorXd& v, NormKind kind) {
    check_vector(p, v);
    if (kind != NormKind::Finsler) {
        return 2.0 * metric_tensor(p, kind) * v;
    }
    const Eigen::VectorXd sigma_v = p.cov() * v;
    const Eigen::VectorXd signal_v = p.signal() * v;
    const double sigma = v.dot(sigma_v);
    if (sigma < kDeterministicThreshold) {
        return 2.0 * signal_v;
    }
    // F² = 2ρ²σM(ω)², M(ω) = 1F1(−½; b; −ω/2), ∂ω/∂v = 2(E[J]ᵀE[J]v − ωΣv)/σ.
    const double b = half_dim(p);
    const double w = std::max(v.dot(signal_v), 0.0) / sigma;
    const double m = specfun::kummer_1f1(-0.5, b, -0.5 * w);
    const double dm = -0.5 * specfun::kummer_1f1_derivative(-0.5, b, -0.5 * w);
    const double rho2 = p.gamma_ratio() * p.gamma_ratio();
    return 4.0 * rho2 * (m * m * sigma_v + 2.0 * m * dm * (signal_v - w * sigma_v));
}

double omega(const MetricPoint& p, const Eigen::VectorXd& v) {
    check_vector(p, v);
    const double sigma = v.dot(p.cov() * v);
    if (sigma < kDeterministicThreshold) {
        return std::numeric_limits<double>::infinity();
    }
    return std::max(v.dot(p.signal() * v), 0.0) / sigma;
}

double stochastic_norm_sample(const MetricPoint& p, const Eigen::VectorXd& v, std::uint64_t seed) {
    check_vector(p, v);
    const Eigen::MatrixXd jac = randmat::sample_jacobian(p.wishart(), seed);
    return (jac * v).norm();
}

BoundReport bound_report(const MetricPoint& p, const Eigen::VectorXd& v) {
    BoundReport out;
    out.v = v;
    out.lower = alpha_sigma_norm(p, v);
    out.finsler = finsler_norm(p, v);
    out.upper = riemannian_norm(p, v);
    out.alpha = p.alpha();
    out.omega = omega(p, v);
    out.violated = out.lower > out.finsler + kBoundSlack || out.finsler > out.upper + kBoundSlack;
    return out;
}

double relative_bound(int D, double w) {
    if (std::isinf(w)) {
        return 0.0;
    }
    const double s = static_cast<double>(D) + w;
    return 1.0 / s + w / (s * s);
}

RelativeGap relative_gap(const MetricPoint& p, const Eigen::VectorXd& v) {
    const double r = riemannian_norm(p, v);
    const double f = finsler_norm(p, v);
    const double w = omega(p, v);
    RelativeGap out;
    out.gap = r > 0.0 ? (r - f) / r : 0.0;
    out.wishart_bound = relative_bound(p.data_dim(), w);
    if (std::isinf(w)) {
        out.jensen_bound = 0.0;
    } else {
        const auto moments = randmat::wishart_scalar_moments({p.data_dim(), v.dot(p.cov() * v), w});
        const double var = moments.second_moment - moments.mean * moments.mean;
        out.jensen_bound = var / (2.0 * moments.mean * moments.mean);
    }
    return out;
}

Eigen::MatrixXd fundamental_form(const MetricPoint& p, const Eigen::VectorXd& v) {
    check_vector(p, v);
    const double scale = v.norm();
    if (scale == 0.0) {
        throw DomainError("fundamental_form: zero tangent vector");
    }
    const double h = 1e-5 * scale;
    const auto q = v.size();
    const auto f2 = [&](const Eigen::VectorXd& u) {
        const double f = finsler_norm(p, u);
        return f * f;
    };
    Eigen::MatrixXd hess(q, q);
    for (Eigen::Index a = 0; a < q; ++a) {
        for (Eigen::Index b = a; b < q; ++b) {
            Eigen::VectorXd ea = Eigen::VectorXd::Zero(q);
            Eigen::VectorXd eb = Eigen::VectorXd::Zero(q);
            ea(a) = h;
            eb(b) = h;
            const double value =
                (f2(v + ea + eb) - f2(v + ea - eb) - f2(v - ea + eb) + f2(v - ea - eb)) / (4.0 * h * h);
            hess(a, b) = hess(b, a) = value;
        }
    }
    return 0.5 * hess;
}

}  // namespace stochgeom::metric
