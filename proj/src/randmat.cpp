#include "stochgeom/randmat.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "stochgeom/errors.hpp"

namespace stochgeom::randmat {

namespace {

constexpr long kBatchSize = 1L << 16;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& scale) {
    Eigen::LLT<Eigen::MatrixXd> llt(scale);
    if (llt.info() == Eigen::Success) {
        return llt.matrixL();
    }
    const auto q = scale.rows();
    llt.compute(scale + kDegenerateJitter * Eigen::MatrixXd::Identity(q, q));
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefiniteError("sample_jacobian: covariance is not positive semi-definite");
    }
    return llt.matrixL();
}

struct Moments {
    double mean;
    double variance;  // unbiased
    double m4;        // fourth central moment
};

Moments central_moments(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / n;
    double m2 = 0.0;
    double m4 = 0.0;
    for (double x : xs) {
        const double d = x - mean;
        const double d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    return {mean, m2 / (n - 1.0), m4 / n};
}

// Standard error of the unbiased sample variance.
double variance_standard_error(const Moments& m, double n) {
    const double v = m.m4 - m.variance * m.variance * (n - 3.0) / (n - 1.0);
    return std::sqrt(std::max(v, 0.0) / n);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

void WishartSpec::validate() const {
    if (dof < 1) {
        throw DomainError("WishartSpec: dof must be >= 1");
    }
    if (scale.rows() != scale.cols() || scale.rows() < 1) {
        throw DomainError("WishartSpec: scale must be square");
    }
    if (mean_jacobian.rows() != dof || mean_jacobian.cols() != scale.rows()) {
        throw DomainError("WishartSpec: mean_jacobian must be dof × q");
    }
    const double norm = std::max(scale.cwiseAbs().maxCoeff(), 1.0);
    if ((scale - scale.transpose()).cwiseAbs().maxCoeff() > 1e-12 * norm) {
        throw DomainError("WishartSpec: scale must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scale, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-10 * norm) {
        throw DomainError("WishartSpec: scale has a negative eigenvalue");
    }
}

Eigen::MatrixXd sample_jacobian(const WishartSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    return sample_jacobian(spec, rng);
}

Eigen::MatrixXd sample_jacobian(const WishartSpec& spec, Rng& rng) {
    spec.validate();
    const Eigen::MatrixXd factor = covariance_factor(spec.scale);
    const int q = spec.latent_dim();
    std::normal_distribution<double> normal;
    Eigen::MatrixXd jac(spec.dof, q);
    Eigen::VectorXd z(q);
    for (int i = 0; i < spec.dof; ++i) {
        for (int a = 0; a < q; ++a) z(a) = normal(rng);
        jac.row(i) = spec.mean_jacobian.row(i) + (factor * z).transpose();
    }
    return jac;
}

ScalarMoments wishart_scalar_moments(const ScalarWishart& s) {
    const double d = static_cast<double>(s.dof);
    const double shifted = d + s.omega;
    return {s.sigma * shifted,
            s.sigma * s.sigma * (2.0 * s.omega + 2.0 * shifted + shifted * shifted)};
}

ScalarWishart project(const WishartSpec& spec, const Eigen::VectorXd& v) {
    const double sigma = v.dot(spec.scale * v);
    const double signal = (spec.mean_jacobian * v).squaredNorm();
    return {spec.dof, sigma, sigma > 0.0 ? signal / sigma : 0.0};
}

NormSampleStats sample_norm_stats(const WishartSpec& spec, const Eigen::VectorXd& v,
                                  long n_samples, std::uint64_t seed) {
    spec.validate();
    if (v.size() != spec.latent_dim()) {
        throw DomainError("sample_norm_stats: tangent vector has the wrong dimension");
    }
    if (v.squaredNorm() == 0.0) {
        throw DomainError("sample_norm_stats: zero tangent vector");
    }
    if (n_samples < 100) {
        throw DomainError("sample_norm_stats: need at least 100 samples");
    }
    const Eigen::VectorXd mean_row = spec.mean_jacobian * v;
    const double sd = std::sqrt(std::max(v.dot(spec.scale * v), 0.0));

    std::vector<double> norms(static_cast<std::size_t>(n_samples));
    std::vector<double> squares(static_cast<std::size_t>(n_samples));
    const long batches = (n_samples + kBatchSize - 1) / kBatchSize;
    for (long b = 0; b < batches; ++b) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
        std::normal_distribution<double> normal;
        const long end = std::min(n_samples, (b + 1) * kBatchSize);
        for (long k = b * kBatchSize; k < end; ++k) {
            double sq = 0.0;
            for (Eigen::Index i = 0; i < mean_row.size(); ++i) {
                const double x = mean_row(i) + sd * normal(rng);
                sq += x * x;
            }
            squares[static_cast<std::size_t>(k)] = sq;
            norms[static_cast<std::size_t>(k)] = std::sqrt(sq);
        }
    }

    const double n = static_cast<double>(n_samples);
    const Moments s = central_moments(norms);
    const Moments s2 = central_moments(squares);
    NormSampleStats out;
    out.samples = n_samples;
    out.mean_norm = s.mean;
    out.se_mean_norm = std::sqrt(s.variance / n);
    out.var_norm = s.variance;
    out.se_var_norm = variance_standard_error(s, n);
    out.mean_sq = s2.mean;
    out.se_mean_sq = std::sqrt(s2.variance / n);
    out.var_sq = s2.variance;
    out.se_var_sq = variance_standard_error(s2, n);
    return out;
}

McEstimate expected_norm_mc(const WishartSpec& spec, const Eigen::VectorXd& v,
                            long n_samples, std::uint64_t seed) {
    const NormSampleStats stats = sample_norm_stats(spec, v, n_samples, seed);
    return {stats.mean_norm, stats.se_mean_norm};
}

}  // namespace stochgeom::randmat
