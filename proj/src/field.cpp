#include "stochgeom/field.hpp"

#include <cmath>
#include <random>

#include "stochgeom/errors.hpp"
#include "stochgeom/randmat.hpp"

namespace stochgeom {

namespace {

constexpr int kRandomFeatures = 4;

void check_dim(const Eigen::VectorXd& z, int q) {
    if (z.size() != q) {
        throw DomainError("latent point has the wrong dimension");
    }
}

}  // namespace

gp::JacobianPosterior EuclideanField::jacobian(const Eigen::VectorXd& z) const {
    check_dim(z, dim_);
    return {Eigen::MatrixXd::Identity(dim_, dim_), Eigen::MatrixXd::Zero(dim_, dim_), dim_};
}

gp::JacobianPosterior SphereField::jacobian(const Eigen::VectorXd& z) const {
    check_dim(z, 2);
    const double ct = std::cos(z(0)), st = std::sin(z(0));
    const double cp = std::cos(z(1)), sp = std::sin(z(1));
    Eigen::MatrixXd jac(3, 2);
    jac << -st * sp, ct * cp,
            ct * sp, st * cp,
            0.0, -sp;
    return {jac, Eigen::MatrixXd::Zero(2, 2), 3};
}

Eigen::VectorXd SphereField::decode(const Eigen::VectorXd& z) const {
    check_dim(z, 2);
    Eigen::VectorXd out(3);
    out << std::cos(z(0)) * std::sin(z(1)), std::sin(z(0)) * std::sin(z(1)), std::cos(z(1));
    return out;
}

RandomField::RandomField(int data_dim, int latent_dim, std::uint64_t seed, double noise_scale) {
    if (data_dim < 1 || latent_dim < 1 || noise_scale < 0.0) {
        throw DomainError("RandomField: invalid dimensions or noise scale");
    }
    randmat::Rng rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    const auto draw = [&](Eigen::Index r, Eigen::Index c, auto& dist) {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index j = 0; j < c; ++j)
            for (Eigen::Index i = 0; i < r; ++i) m(i, j) = dist(rng);
        return m;
    };
    linear_ = draw(data_dim, latent_dim, uniform);
    amplitude_ = 0.5 * draw(data_dim, kRandomFeatures, uniform);
    freq_ = draw(kRandomFeatures, latent_dim, normal);
    phase_ = 3.0 * draw(kRandomFeatures, 1, uniform);
    const Eigen::MatrixXd a = draw(latent_dim, latent_dim, normal);
    sigma0_ = noise_scale * (a.transpose() * a + 0.1 * Eigen::MatrixXd::Identity(latent_dim, latent_dim)) /
              static_cast<double>(latent_dim);
}

double RandomField::noise_level(const Eigen::VectorXd& z) const {
    return base_ + z.squaredNorm();
}

gp::JacobianPosterior RandomField::jacobian(const Eigen::VectorXd& z) const {
    check_dim(z, latent_dim());
    const Eigen::VectorXd arg = freq_ * z + phase_;
    const Eigen::VectorXd c = arg.array().cos().matrix();
    gp::JacobianPosterior out;
    out.mean = linear_ + amplitude_ * c.asDiagonal() * freq_;
    out.cov = noise_level(z) * sigma0_;
    out.dim_data = data_dim();
    return out;
}

Eigen::VectorXd RandomField::decode(const Eigen::VectorXd& z) const {
    check_dim(z, latent_dim());
    const Eigen::VectorXd arg = freq_ * z + phase_;
    return linear_ * z + amplitude_ * arg.array().sin().matrix();
}

double RandomField::variance(const Eigen::VectorXd& z) const {
    check_dim(z, latent_dim());
    return noise_level(z) * sigma0_.trace();
}

}  // namespace stochgeom
