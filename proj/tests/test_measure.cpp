#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "stochgeom/data.hpp"
#include "stochgeom/errors.hpp"
#include "stochgeom/experiments.hpp"
#include "stochgeom/field.hpp"
#include "stochgeom/gp.hpp"
#include "stochgeom/measure.hpp"

using namespace stochgeom;
using namespace stochgeom::measure;

namespace {

metric::MetricPoint point(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& cov) {
    return metric::MetricPoint(gp::JacobianPosterior{mean, cov, static_cast<int>(mean.rows())});
}

// Random 2-D metric point with a positive definite Σ, so every norm is a norm.
metric::MetricPoint random_point(randmat::Rng& rng) {
    for (;;) {
        const auto c = experiments::random_case(rng, 1, 100, 2, 2);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.spec.scale);
        if (eig.eigenvalues()(0) > 1e-8 * eig.eigenvalues()(1)) return point(c.spec.mean_jacobian, c.spec.scale);
    }
}

}  // namespace

TEST_CASE("Euclidean indicatrix is the unit circle") {
    const auto p = point(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 2));
    const auto ind = indicatrix(p, 64, NormKind::Euclidean);
    CHECK(ind.radii.size() == 64);
    for (double r : ind.radii) CHECK(r == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(ind.angles[16] == doctest::Approx(std::numbers::pi / 2.0));
    CHECK(bh_volume(p, 256, NormKind::Euclidean) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(is_convex(ind));
}

TEST_CASE("Riemannian indicatrix of diag(4, 1)") {
    // E[J] = diag(2, 1) with a vanishing Σ gives E[G] = diag(4, 1).
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(2, 2);
    mean(0, 0) = 2.0;
    mean(1, 1) = 1.0;
    const auto p = point(mean, Eigen::MatrixXd::Zero(2, 2));
    const auto ind = indicatrix(p, 64, NormKind::Riemannian);
    CHECK(ind.radii[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(ind.radii[16] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(bh_volume(p, 256, NormKind::Riemannian) - 2.0) <= 0.005 * 2.0);
}

TEST_CASE("Riemannian indicatrix is the ellipse of E[G]") {
    randmat::Rng rng(1);
    for (int t = 0; t < 20; ++t) {
        const auto p = random_point(rng);
        const auto ind = indicatrix(p, 64, NormKind::Riemannian);
        const Eigen::Matrix2d g = p.expected_metric();
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(g);
        double rmin = 1e300, rmax = 0.0;
        for (std::size_t k = 0; k < ind.radii.size(); ++k) {
            const Eigen::Vector2d e(std::cos(ind.angles[k]), std::sin(ind.angles[k]));
            CHECK(ind.radii[k] == doctest::Approx(1.0 / std::sqrt(e.dot(g * e))).epsilon(1e-12));
            rmin = std::min(rmin, ind.radii[k]);
            rmax = std::max(rmax, ind.radii[k]);
        }
        // Semi-axes 1/√λ bound the sampled radii.
        CHECK(rmin >= 1.0 / std::sqrt(eig.eigenvalues()(1)) * (1 - 1e-12));
        CHECK(rmax <= 1.0 / std::sqrt(eig.eigenvalues()(0)) * (1 + 1e-12));
    }
}

TEST_CASE("indicatrix validation") {
    const auto p2 = point(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2));
    CHECK_THROWS_AS(indicatrix(p2, 8, NormKind::Finsler), DomainError);
    const auto p3 = point(Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(3, 3));
    CHECK_THROWS_AS(indicatrix(p3, 64, NormKind::Finsler), UnsupportedError);
    CHECK_THROWS_AS(bh_volume(p3, 64, NormKind::Finsler), UnsupportedError);
}

TEST_CASE("indicatrix nesting, symmetry and convexity") {
    randmat::Rng rng(2);
    for (int t = 0; t < 200; ++t) {
        const auto p = random_point(rng);
        const auto r = indicatrix(p, 64, NormKind::Riemannian);
        const auto f = indicatrix(p, 64, NormKind::Finsler);
        const auto a = indicatrix(p, 64, NormKind::AlphaSigma);
        for (int k = 0; k < 64; ++k) {
            CHECK(r.radii[k] <= f.radii[k] * (1 + 1e-9));
            CHECK(f.radii[k] <= a.radii[k] * (1 + 1e-9));
            CHECK(f.radii[k] > 0.0);
        }
        for (int k = 0; k < 32; ++k) CHECK(f.radii[k] == f.radii[k + 32]);
        CHECK(is_convex(f));
        CHECK(is_convex(r));
    }
}

TEST_CASE("is_convex rejects a dented polygon") {
    Indicatrix ind;
    for (int k = 0; k < 16; ++k) {
        ind.angles.push_back(2.0 * std::numbers::pi * k / 16);
        ind.radii.push_back(k == 5 ? 0.3 : 1.0);
    }
    CHECK_FALSE(is_convex(ind));
    ind.radii[5] = 1.0;
    CHECK(is_convex(ind));
    CHECK(polygon_area(ind) == doctest::Approx(8.0 * std::sin(2.0 * std::numbers::pi / 16)));
}

TEST_CASE("Busemann-Hausdorff quadrature matches sqrt det for the Riemannian kind") {
    // Uniform angles only resolve moderately eccentric indicatrices; very thin
    // ellipses need more samples than K = 256.
    randmat::Rng rng(3);
    for (int t = 0; t < 200;) {
        const auto p = random_point(rng);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p.expected_metric());
        if (eig.eigenvalues()(1) > 25.0 * eig.eigenvalues()(0)) continue;
        ++t;
        const double want = std::sqrt(p.expected_metric().determinant());
        CHECK(std::abs(bh_volume(p, 256, NormKind::Riemannian) - want) <= 0.005 * want);
    }
    // Latent points of a fitted model.
    const gp::GpModel model = experiments::synthetic_model(8, 100, 3);
    const GpField field(model);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const auto p = field.metric_at(Eigen::Vector2d(u(rng), u(rng)));
        const double want = std::sqrt(p.expected_metric().determinant());
        CHECK(std::abs(bh_volume(p, 256, NormKind::Riemannian) - want) <= 0.005 * want);
    }
}

TEST_CASE("degenerate norms have zero volume") {
    const auto p = point(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 2));
    CHECK(bh_volume(p, 64, NormKind::AlphaSigma) == 0.0);
    CHECK(bh_volume(p, 64, NormKind::Finsler) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK_THROWS_AS(indicatrix(p, 64, NormKind::AlphaSigma), DomainError);
}

TEST_CASE("volume ordering and ratio bound") {
    randmat::Rng rng(4);
    for (int t = 0; t < 200; ++t) {
        const auto p = random_point(rng);
        const double va = bh_volume(p, 256, NormKind::AlphaSigma);
        const double vf = bh_volume(p, 256, NormKind::Finsler);
        const double vr = bh_volume(p, 256, NormKind::Riemannian);
        CHECK(va <= vf * (1 + 1e-9));
        CHECK(vf <= vr * (1 + 1e-9));
        const double ratio = (vr - vf) / vr;
        CHECK(ratio >= -1e-9);
        CHECK(ratio < 1.0);
        CHECK(ratio <= volume_ratio_bound(p, 256) + 1e-9);
    }
}

TEST_CASE("volume_ratio_bound closed form") {
    // Central D = 10: b = 1/10 in every direction, so the bound is 1 − 0.9².
    const auto p = point(Eigen::MatrixXd::Zero(10, 2), Eigen::MatrixXd::Identity(2, 2));
    CHECK(volume_ratio_bound(p, 64) == doctest::Approx(1.0 - 0.81).epsilon(1e-12));
}

TEST_CASE("volume_field on a synthetic GP") {
    const gp::GpModel model = experiments::synthetic_model(16, 150, 7);
    const GpField field(model);
    const auto vf = volume_field(field, 12, 128);
    CHECK(vf.grid == 12);
    CHECK(vf.points.size() == 144);
    const auto [lo, hi] = model.latent_bounds(0.1);
    CHECK(vf.points.front().isApprox(lo));
    CHECK(vf.points.back().isApprox(hi));
    int low_variance = 0;
    for (std::size_t i = 0; i < vf.points.size(); ++i) {
        CHECK(vf.v_riemann[i] > 0.0);
        CHECK(vf.v_finsler[i] > 0.0);
        CHECK(vf.v_alpha_sigma[i] > 0.0);
        CHECK(vf.ratio[i] >= -1e-9);
        CHECK(vf.ratio[i] < 1.0);
        CHECK(vf.ratio[i] <= vf.ratio_bound[i] + 1e-9);
        if (vf.variance[i] < 1e-3 * model.kernel().variance) {
            ++low_variance;
            CHECK(vf.ratio[i] < 1e-2);
        }
    }
    CHECK(low_variance > 0);
}

TEST_CASE("volume_field on the pinwheel respects its bounds") {
    const auto ds = data::gen_pinwheel_sphere(150, 5, 0.05, 3);
    const auto fit = gp::fit_hyperparameters(gp::pca_latents(ds.points, 2), ds.points,
                                             gp::Kernel{gp::KernelFamily::SquaredExponential, 1.0, 1.0}, 0.01, 50, 0.05);
    const GpField field(fit.model);
    const auto vf = volume_field(field, 10, 128);
    for (std::size_t i = 0; i < vf.points.size(); ++i) {
        CHECK(vf.ratio[i] >= -1e-9);
        CHECK(vf.ratio[i] < 1.0);
        CHECK(vf.ratio[i] <= vf.ratio_bound[i] + 1e-9);
    }
}

TEST_CASE("volume_field validation") {
    const EuclideanField flat(2);
    CHECK_THROWS_AS(volume_field(flat, 8), DomainError);
    const auto vf = volume_field(flat, 4, 64, Box{Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)});
    for (double r : vf.ratio) CHECK(std::abs(r) < 1e-12);
    for (double v : vf.v_alpha_sigma) CHECK(v == 0.0);
    const EuclideanField cube(3);
    CHECK_THROWS_AS(volume_field(cube, 4, 64, Box{Eigen::Vector3d::Zero(), Eigen::Vector3d::Ones()}), UnsupportedError);
}

TEST_CASE("CSV exports") {
    const EuclideanField flat(2);
    const auto vf = volume_field(flat, 3, 64, Box{Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)});
    std::istringstream in(volume_field_csv(vf));
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "z1,z2,v_riemann,v_finsler,v_alpha_sigma,ratio,log10_v_riemann,log10_v_finsler,"
          "log10_v_alpha_sigma,log10_ratio,ratio_bound,variance");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 9);

    const auto p = point(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2));
    std::istringstream ind(indicatrix_csv({indicatrix(p, 16, NormKind::Finsler, Eigen::Vector2d(0.5, -0.5))}));
    std::getline(ind, header);
    CHECK(header == "cx,cy,kind,theta,r");
    std::string first;
    std::getline(ind, first);
    CHECK(first.rfind("0.5,-0.5,finsler,0,", 0) == 0);
}
