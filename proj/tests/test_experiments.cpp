#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "stochgeom/data.hpp"
#include "stochgeom/errors.hpp"
#include "stochgeom/experiments.hpp"
#include "stochgeom/field.hpp"
#include "stochgeom/gp.hpp"

using boost::multiprecision::cpp_bin_float_50;
using namespace stochgeom;
using namespace stochgeom::experiments;

namespace {

// 1 − √2·Γ((D+1)/2)/(Γ(D/2)·√D) in 50-digit arithmetic.
double central_gap(int D) {
    const cpp_bin_float_50 d = D;
    const cpp_bin_float_50 ratio = exp(lgamma((d + 1) / 2) - lgamma(d / 2));
    return static_cast<double>(1 - sqrt(cpp_bin_float_50(2)) * ratio / sqrt(d));
}

std::vector<randmat::WishartSpec> central_ensemble(int n, int d_max, int q) {
    auto out = bounded_ensemble(n, d_max, q, 5);
    for (auto& s : out) s.mean_jacobian.setZero();
    return out;
}

gp::GpModel pinwheel_model() {
    const auto ds = data::gen_pinwheel_sphere(300, 5, 0.05, 7);
    return gp::fit_hyperparameters(gp::pca_latents(ds.points, 2), ds.points,
                                   gp::Kernel{gp::KernelFamily::SquaredExponential, 1.0, 1.0}, 0.01, 100, 0.05)
        .model;
}

}  // namespace

TEST_CASE("random_case ranges") {
    randmat::Rng rng(1);
    int central = 0;
    for (int t = 0; t < 2000; ++t) {
        const auto c = random_case(rng);
        CHECK(c.spec.dof >= 1);
        CHECK(c.spec.dof <= 100);
        CHECK(c.spec.latent_dim() >= 1);
        CHECK(c.spec.latent_dim() <= 5);
        CHECK(c.v.size() == c.spec.latent_dim());
        CHECK_NOTHROW(c.spec.validate());
        central += c.spec.mean_jacobian.isZero(0.0);
    }
    CHECK(central > 100);
    CHECK(central < 300);
}

TEST_CASE("bounded_ensemble") {
    const auto e = bounded_ensemble(12, 64, 2, 3);
    CHECK(e.size() == 12);
    for (const auto& s : e) {
        CHECK(s.dof == 64);
        CHECK(s.mean_jacobian.cwiseAbs().maxCoeff() <= 1.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.scale);
        CHECK(eig.eigenvalues().minCoeff() >= 0.1 - 1e-12);
    }
    CHECK(bounded_ensemble(12, 64, 2, 3)[4].mean_jacobian == e[4].mean_jacobian);
    CHECK_THROWS_AS(bounded_ensemble(0, 64, 2, 3), DomainError);
}

TEST_CASE("parse_dims") {
    CHECK(parse_dims("2:1024:dyadic") == std::vector<int>{2, 4, 8, 16, 32, 64, 128, 256, 512, 1024});
    CHECK(parse_dims("3:6") == std::vector<int>{3, 4, 5, 6});
    CHECK(parse_dims("2,5,9") == std::vector<int>{2, 5, 9});
    CHECK_THROWS_AS(parse_dims("9,5"), DomainError);
    CHECK_THROWS_AS(parse_dims("a:b"), DomainError);
    CHECK_THROWS_AS(parse_dims("2:8:cubic"), DomainError);
    CHECK_THROWS_AS(parse_dims("0,2"), DomainError);
}

TEST_CASE("truncation_sweep central case matches the closed form") {
    const auto dims = parse_dims("2:1024:dyadic");
    const auto result = truncation_sweep(central_ensemble(12, 1024, 2), dims, 8, 1);
    CHECK(std::abs(central_gap(2) - (1.0 - std::sqrt(std::numbers::pi / 4.0))) < 1e-15);
    CHECK(std::abs(result.rows[0].gap_norm - (1.0 - std::sqrt(std::numbers::pi / 4.0))) < 1e-6);
    double prev = 1.0;
    for (const auto& row : result.rows) {
        CHECK_MESSAGE(std::abs(row.gap_norm - central_gap(row.D)) < 1e-10, "D=" << row.D);
        CHECK(row.gap_norm < prev);
        prev = row.gap_norm;
        CHECK(row.gap_norm <= row.bound);
        CHECK(row.gap_times_D == doctest::Approx(row.D * row.gap_norm));
        CHECK(std::isfinite(row.gap_volume));
        CHECK(row.gap_volume >= 0.0);
    }
    CHECK(result.M == 0.0);
    CHECK(result.bounded());
}

TEST_CASE("truncation_sweep on the bounded ensemble") {
    const auto dims = parse_dims("2:1024:dyadic");
    const auto ens = bounded_ensemble(12, 1024, 2, 42);
    const auto result = truncation_sweep(ens, dims, 16, 42);
    CHECK(result.rows.size() == dims.size());
    CHECK(result.M > 0.0);
    CHECK(result.bounded());
    double prev = 1.0;
    for (const auto& row : result.rows) {
        CHECK(row.gap_norm >= 0.0);
        CHECK(row.gap_norm <= row.bound);
        CHECK(row.gap_norm < prev);
        prev = row.gap_norm;
    }
    // Same seed, same bytes.
    CHECK(convergence_csv(truncation_sweep(ens, dims, 16, 42)) == convergence_csv(result));
    CHECK(convergence_csv(result).rfind("D,gap_norm,gap_volume,bound,gap_times_D,one_plus_M\n", 0) == 0);
}

TEST_CASE("truncation_sweep validation") {
    const auto ens = bounded_ensemble(2, 16, 2, 1);
    CHECK_THROWS_AS(truncation_sweep(ens, {2, 32}, 4, 1), DomainError);
    CHECK_THROWS_AS(truncation_sweep(ens, {8, 4}, 4, 1), DomainError);
    CHECK_THROWS_AS(truncation_sweep({}, {2}, 4, 1), DomainError);
}

TEST_CASE("non_increasing_after and bounded") {
    TruncationResult r;
    r.M = 1.0;
    for (auto [d, g] : std::vector<std::pair<int, double>>{{2, 0.5}, {4, 0.9}, {8, 0.8}, {16, 0.7}}) {
        r.rows.push_back({d, g / d, 0.0, 1.0, g});
    }
    CHECK(r.non_increasing_after(4));
    CHECK_FALSE(r.non_increasing_after(2));
    CHECK(r.bounded());
    r.rows.push_back({32, 2.5 / 32, 0.0, 1.0, 2.5});
    CHECK_FALSE(r.bounded());
    CHECK_FALSE(r.non_increasing_after(8));
}

TEST_CASE("bound_sweep finds no violations") {
    BoundSweepOptions opts;
    opts.n_specs = 2000;
    opts.n_curves = 100;
    opts.n_points = 50;
    opts.seed = 9;
    const auto rep = bound_sweep(opts);
    CHECK(rep.specs == 2000);
    CHECK(rep.curves == 100);
    CHECK(rep.points == 50);
    CHECK(rep.total() == 0);
    CHECK(bound_sweep(opts).to_json().dump() == rep.to_json().dump());
    CHECK(rep.to_json().at("total") == 0);
}

TEST_CASE("bound_sweep detects an inflated Finsler norm") {
    BoundSweepOptions opts;
    opts.n_specs = 200;
    opts.n_curves = 20;
    opts.n_points = 20;
    opts.finsler_scale = 1.5;
    const auto rep = bound_sweep(opts);
    CHECK(rep.norm_upper > 0);
    CHECK(rep.energy_order > 0);
    CHECK(rep.volume_order > 0);
    opts.n_specs = 50;
    CHECK_THROWS_AS(bound_sweep(opts), DomainError);
}

TEST_CASE("energy_gap_identity") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 5; ++t) {
        const RandomField field(2 + 7 * t, 2, 70 + t);
        const auto c = geodesic::DiscreteCurve::straight_line(Eigen::Vector2d(u(rng), u(rng)),
                                                              Eigen::Vector2d(u(rng), u(rng)), 10);
        const auto g = energy_gap_identity(field, c, 100000, 5 + t);
        CHECK(g.gap >= 0.0);
        CHECK(g.gap == doctest::Approx(g.e_riemann - g.e_finsler));
        CHECK(std::abs(g.gap - g.mc_variance) < 4.0 * g.mc_se);
    }
}

TEST_CASE("geodesic_comparison on a high-dimensional model") {
    const gp::GpModel model = synthetic_model(64, 150, 11);
    const GpField field(model);
    const std::vector<EndpointPair> pairs{{Eigen::Vector2d(-0.8, -0.7), Eigen::Vector2d(0.7, 0.8)},
                                          {Eigen::Vector2d(-0.8, 0.6), Eigen::Vector2d(0.9, -0.5)}};
    ComparisonOptions opts;
    opts.kinds = {NormKind::Riemannian, NormKind::Finsler};
    opts.grid.n_points = 32;
    const auto rows = geodesic_comparison(field, pairs, opts);
    REQUIRE(rows.size() == 4);
    for (std::size_t k = 0; k < rows.size(); k += 2) {
        const double lr = rows[k].length_riemann;
        const double lf = rows[k + 1].length_finsler;
        CHECK(std::abs(lr - lf) / lr < 0.01);
    }
    for (const auto& row : rows) CHECK(row.length_riemann >= row.length_finsler);
    const std::string csv = comparison_csv(rows);
    CHECK(csv == comparison_csv(geodesic_comparison(field, pairs, opts)));
}

TEST_CASE("geodesic_comparison in the deterministic limit") {
    const SphereField sphere;
    const std::vector<EndpointPair> pairs{{Eigen::Vector2d(-0.5, 0.9), Eigen::Vector2d(0.8, 2.0)}};
    ComparisonOptions opts;
    opts.kinds = {NormKind::Riemannian, NormKind::Finsler};
    opts.grid.n_points = 32;
    const auto rows = geodesic_comparison(sphere, pairs, opts);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].converged);
    CHECK(rows[1].converged);
    const Eigen::MatrixXd diff = rows[0].curve.points() - rows[1].curve.points();
    CHECK(diff.rowwise().norm().maxCoeff() < 1e-3);
    CHECK(rows[0].mean_variance == 0.0);
}

TEST_CASE("geodesic_comparison on the pinwheel") {
    const gp::GpModel model = pinwheel_model();
    const GpField field(model);
    // Outermost point of each arm; the straight chord between neighbouring arm
    // tips crosses the empty wedge between them.
    const auto ds = data::gen_pinwheel_sphere(300, 5, 0.05, 7);
    std::vector<Eigen::VectorXd> tips(5);
    std::vector<double> best(5, -1.0);
    for (int i = 0; i < ds.size(); ++i) {
        const int arm = (*ds.labels)[static_cast<std::size_t>(i)];
        const Eigen::VectorXd z = model.latent_inputs().row(i).transpose();
        if (z.norm() > best[static_cast<std::size_t>(arm)]) {
            best[static_cast<std::size_t>(arm)] = z.norm();
            tips[static_cast<std::size_t>(arm)] = z;
        }
    }
    std::vector<EndpointPair> pairs;
    for (int a = 0; a < 3; ++a) pairs.push_back({tips[static_cast<std::size_t>(a)], tips[static_cast<std::size_t>(a + 1)]});
    ComparisonOptions opts;
    opts.grid.n_points = 32;
    const auto rows = geodesic_comparison(field, pairs, opts);
    REQUIRE(rows.size() == 9);
    for (std::size_t k = 0; k < rows.size(); k += 3) {
        const auto& riemann = rows[k];
        const auto& finsler = rows[k + 1];
        const auto& euclid = rows[k + 2];
        CHECK(riemann.kind == NormKind::Riemannian);
        CHECK(euclid.kind == NormKind::Euclidean);
        CHECK_MESSAGE(finsler.mean_variance >= riemann.mean_variance, "pair " << riemann.pair);
        for (const auto* row : {&riemann, &finsler, &euclid}) {
            CHECK((row->length_riemann - row->length_finsler) / row->length_riemann >= 0.0);
        }
    }
}
