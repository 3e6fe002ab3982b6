// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any selected criterion fails. `--only N` runs a single one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stochgeom/experiments.hpp"
#include "stochgeom/field.hpp"
#include "stochgeom/geodesic.hpp"
#include "stochgeom/measure.hpp"
#include "stochgeom/metric.hpp"
#include "stochgeom/randmat.hpp"

using namespace stochgeom;
using metric::NormKind;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Accumulates sub-checks; every failed one is named in the detail line.
class Report {
public:
    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass_ = false;
            failed_.push_back(what);
        }
    }
    void note(const std::string& s) { notes_.push_back(s); }
    Outcome outcome() const {
        std::ostringstream out;
        for (std::size_t i = 0; i < notes_.size(); ++i) out << (i ? "; " : "") << notes_[i];
        if (!failed_.empty()) {
            out << " | failed:";
            for (const auto& f : failed_) out << ' ' << f << ';';
        }
        return {pass_, out.str()};
    }

private:
    bool pass_ = true;
    std::vector<std::string> notes_;
    std::vector<std::string> failed_;
};

std::string fmt(double x, int precision = 4) {
    std::ostringstream s;
    s << std::setprecision(precision) << x;
    return s.str();
}

metric::MetricPoint point(const randmat::WishartSpec& s) {
    return metric::MetricPoint(gp::JacobianPosterior{s.mean_jacobian, s.scale, s.dof});
}

bool nondegenerate(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    return eig.eigenvalues().minCoeff() > 1e-10 * eig.eigenvalues().maxCoeff();
}

Eigen::VectorXd sphere_point(double theta, double phi) {
    return Eigen::Vector3d(std::cos(theta) * std::sin(phi), std::sin(theta) * std::sin(phi), std::cos(phi));
}

Outcome closed_form_vs_monte_carlo() {
    Report r;
    randmat::Rng rng(101);
    int within = 0;
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const auto c = experiments::random_case(rng);
        const double f = metric::finsler_norm(point(c.spec), c.v);
        const auto mc = randmat::expected_norm_mc(c.spec, c.v, 1000000, randmat::derive_seed(101, t));
        const double dev = std::abs(f - mc.estimate);
        // A Σ that vanishes along v makes every sample identical; allow rounding.
        const bool ok = dev <= 4.0 * mc.standard_error + 1e-12 * std::abs(f);
        if (mc.standard_error > 0.0) worst = std::max(worst, dev / mc.standard_error);
        within += ok;
        r.check(ok, "spec " + std::to_string(t) + " (D=" + std::to_string(c.spec.dof) + ") off by " +
                        fmt(dev / mc.standard_error) + " SE");
    }
    r.note(std::to_string(within) + "/50 specs within 4 SE, largest deviation " + fmt(worst, 3) + " SE");
    return r.outcome();
}

Outcome central_case() {
    Report r;
    randmat::WishartSpec s;
    s.dof = 2;
    s.scale = Eigen::MatrixXd::Identity(2, 2);
    s.mean_jacobian = Eigen::MatrixXd::Zero(2, 2);
    const double f = metric::finsler_norm(point(s), Eigen::Vector2d(1.0, 0.0));
    // Mean of a chi variable with two degrees of freedom.
    const double want = std::sqrt(2.0) * std::tgamma(1.5) / std::tgamma(1.0);
    r.note("F = " + fmt(f, 15) + ", chi mean " + fmt(want, 15) + ", |diff| " + fmt(std::abs(f - want), 3));
    r.check(std::abs(f - want) < 1e-10, "differs by more than 1e-10");
    return r.outcome();
}

experiments::ViolationReport spec_sweep() {
    experiments::BoundSweepOptions opts;
    opts.n_specs = 10000;
    opts.n_curves = 0;
    opts.n_points = 0;
    opts.seed = 303;
    return experiments::bound_sweep(opts);
}

Outcome absolute_bounds() {
    Report r;
    const auto rep = spec_sweep();
    const long v = rep.norm_lower + rep.norm_upper;
    r.note(std::to_string(rep.specs) + " specs, " + std::to_string(rep.norm_lower) + " lower and " +
           std::to_string(rep.norm_upper) + " upper violations");
    r.check(rep.specs == 10000, "spec count");
    r.check(v == 0, "violations present");
    return r.outcome();
}

Outcome relative_bound() {
    Report r;
    const auto rep = spec_sweep();
    r.note(std::to_string(rep.specs) + " specs, " + std::to_string(rep.gap_negative) + " negative gaps, " +
           std::to_string(rep.gap_bound) + " gaps above 1/(D+w) + w/(D+w)^2");
    r.check(rep.specs == 10000, "spec count");
    r.check(rep.gap_negative + rep.gap_bound == 0, "violations present");
    return r.outcome();
}

Outcome convergence() {
    Report r;
    const auto dims = experiments::parse_dims("2:1024:dyadic");
    const auto sweep = experiments::truncation_sweep(experiments::bounded_ensemble(12, 1024, 2, 505), dims, 64, 505);
    std::ostringstream rows;
    for (const auto& row : sweep.rows) rows << (row.D == 2 ? "" : " ") << row.D << ':' << fmt(row.gap_times_D, 5);
    r.note("D*gap " + rows.str() + ", 1+M = " + fmt(1.0 + sweep.M, 5));
    r.check(sweep.bounded(), "D*gap exceeds 1+M");
    r.check(sweep.non_increasing_after(8), "D*gap increases beyond D=8");

    randmat::WishartSpec central;
    central.dof = 1024;
    central.scale = Eigen::MatrixXd::Identity(2, 2);
    central.mean_jacobian = Eigen::MatrixXd::Zero(1024, 2);
    const auto c = experiments::truncation_sweep({central}, {2}, 8, 505);
    const double want = 1.0 - std::sqrt(std::numbers::pi / 4.0);
    r.note("central gap at D=2 " + fmt(c.rows[0].gap_norm, 10) + " vs 1-sqrt(pi/4) = " + fmt(want, 10));
    r.check(std::abs(c.rows[0].gap_norm - want) < 1e-6, "central gap off by more than 1e-6");
    return r.outcome();
}

Outcome functional_orderings() {
    Report r;
    experiments::BoundSweepOptions opts;
    opts.n_specs = 100;
    opts.n_curves = 1000;
    opts.n_points = 200;
    opts.seed = 606;
    const auto rep = experiments::bound_sweep(opts);
    r.note(std::to_string(rep.curves) + " curves: " + std::to_string(rep.length_order) + " length and " +
           std::to_string(rep.energy_order) + " energy violations; " + std::to_string(rep.points) + " points: " +
           std::to_string(rep.volume_order) + " volume violations");
    r.check(rep.curves == 1000 && rep.points == 200, "sample counts");
    r.check(rep.length_order == 0, "length ordering");
    r.check(rep.energy_order == 0, "energy ordering");
    r.check(rep.volume_order == 0, "volume ordering");
    return r.outcome();
}

Outcome variance_identity() {
    Report r;
    randmat::Rng rng(707);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> dim(1, 40);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const RandomField field(dim(rng), 2, rng());
        const Eigen::Vector2d a(u(rng), u(rng)), b(u(rng), u(rng)), bump(0.5 * u(rng), 0.5 * u(rng));
        Eigen::MatrixXd pts(12, 2);
        for (int i = 0; i < 12; ++i) {
            const double s = i / 11.0;
            pts.row(i) = ((1 - s) * a + s * b + std::sin(std::numbers::pi * s) * bump).transpose();
        }
        const auto g = experiments::energy_gap_identity(field, geodesic::DiscreteCurve(pts), 100000,
                                                        randmat::derive_seed(707, t));
        const double z = std::abs(g.gap - g.mc_variance) / g.mc_se;
        worst = std::max(worst, z);
        r.check(z < 4.0, "curve " + std::to_string(t) + " off by " + fmt(z) + " SE");
    }
    r.note("20 curves, largest deviation " + fmt(worst, 3) + " SE");
    return r.outcome();
}

Outcome strong_convexity() {
    Report r;
    randmat::Rng rng(808);
    int drawn = 0;
    double min_eig = std::numeric_limits<double>::infinity();
    double worst_euler = 0.0;
    for (int t = 0; t < 200;) {
        const auto c = experiments::random_case(rng);
        ++drawn;
        const auto p = point(c.spec);
        // Singular E[G] makes F a seminorm; those draws are skipped.
        if (!nondegenerate(p.expected_metric())) continue;
        ++t;
        const Eigen::MatrixXd h = metric::fundamental_form(p, c.v);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
        const double lo = eig.eigenvalues().minCoeff() / eig.eigenvalues().maxCoeff();
        min_eig = std::min(min_eig, lo);
        r.check(eig.eigenvalues().minCoeff() > 0.0, "spec " + std::to_string(t) + " not positive definite");
        const double f = metric::finsler_norm(p, c.v);
        const double euler = std::abs(c.v.dot(h * c.v) - f * f) / (f * f);
        worst_euler = std::max(worst_euler, euler);
        r.check(euler < 1e-4, "spec " + std::to_string(t) + " Euler identity off by " + fmt(euler));
    }
    r.note("200 non-degenerate specs (" + std::to_string(drawn) + " drawn), smallest eigenvalue ratio " +
           fmt(min_eig, 3) + ", largest Euler residual " + fmt(worst_euler, 3));
    return r.outcome();
}

Outcome sphere_geodesics() {
    Report r;
    const SphereField sphere;
    randmat::Rng rng(909);
    std::uniform_real_distribution<double> theta(-1.5, 1.5), phi(0.6, 2.5);
    double worst_len = 0.0, worst_spread = 0.0;
    int converged = 0;
    for (int t = 0; t < 10; ++t) {
        const Eigen::Vector2d a(theta(rng), phi(rng)), b(theta(rng), phi(rng));
        const double arc =
            std::acos(std::clamp(sphere_point(a(0), a(1)).dot(sphere_point(b(0), b(1))), -1.0, 1.0));
        const auto init = geodesic::grid_initialize(sphere, a, b, NormKind::Riemannian);
        const auto g = geodesic::minimize_energy(sphere, init, NormKind::Riemannian);
        const double err = std::abs(g.length - arc) / arc;
        worst_len = std::max(worst_len, err);
        r.check(err <= 0.01, "pair " + std::to_string(t) + " length off by " + fmt(100 * err, 3) + "%");
        if (!g.converged) continue;
        ++converged;
        const auto speeds = geodesic::segment_speeds(sphere, g.curve, NormKind::Finsler);
        const auto [lo, hi] = std::minmax_element(speeds.begin(), speeds.end());
        double mean = 0.0;
        for (double s : speeds) mean += s / static_cast<double>(speeds.size());
        const double spread = (*hi - *lo) / mean;
        worst_spread = std::max(worst_spread, spread);
        r.check(spread <= 0.05, "pair " + std::to_string(t) + " speed spread " + fmt(100 * spread, 3) + "%");
    }
    r.note("10 pairs, largest length error " + fmt(100 * worst_len, 3) + "%, " + std::to_string(converged) +
           " converged, largest speed spread " + fmt(100 * worst_spread, 3) + "%");
    return r.outcome();
}

Outcome high_dimensional_agreement() {
    Report r;
    const gp::GpModel model = experiments::synthetic_model(64, 150, 1010);
    const GpField field(model);
    randmat::Rng rng(1010);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    std::vector<experiments::EndpointPair> pairs;
    for (int t = 0; t < 5; ++t) pairs.push_back({Eigen::Vector2d(u(rng), u(rng)), Eigen::Vector2d(u(rng), u(rng))});
    experiments::ComparisonOptions opts;
    opts.kinds = {NormKind::Riemannian, NormKind::Finsler};
    opts.grid.n_points = 32;
    const auto rows = experiments::geodesic_comparison(field, pairs, opts);
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < rows.size(); k += 2) {
        const double lr = rows[k].length_riemann;
        const double lf = rows[k + 1].length_finsler;
        const double d = std::abs(lr - lf) / lr;
        worst = std::max(worst, d);
        r.check(d < 0.01, "pair " + std::to_string(rows[k].pair) + " differs by " + fmt(100 * d, 3) + "%");
    }
    r.note("D=64, 5 pairs, largest relative length difference " + fmt(100 * worst, 3) + "%");
    r.check(rows.size() == 10, "row count");
    return r.outcome();
}

Outcome volume_consistency() {
    Report r;
    const gp::GpModel model = experiments::synthetic_model(16, 150, 1111);
    const GpField field(model);
    randmat::Rng rng(1111);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const auto p = field.metric_at(Eigen::Vector2d(u(rng), u(rng)));
        const double want = std::sqrt(p.expected_metric().determinant());
        const double got = measure::bh_volume(p, 256, NormKind::Riemannian);
        const double err = std::abs(got - want) / want;
        worst = std::max(worst, err);
        r.check(err <= 0.005, "point " + std::to_string(t) + " off by " + fmt(100 * err, 3) + "%");
    }
    const auto vf = measure::volume_field(field, 32, 256);
    double max_ratio = 0.0;
    long outside = 0, above = 0;
    for (std::size_t i = 0; i < vf.ratio.size(); ++i) {
        max_ratio = std::max(max_ratio, vf.ratio[i]);
        outside += !(vf.ratio[i] >= 0.0 && vf.ratio[i] < 1.0);
        above += vf.ratio[i] > vf.ratio_bound[i] + experiments::kViolationSlack;
    }
    r.note("200 points, largest quadrature error " + fmt(100 * worst, 3) + "%; " + std::to_string(vf.ratio.size()) +
           " grid ratios, max " + fmt(max_ratio, 3) + ", " + std::to_string(outside) + " outside [0,1), " +
           std::to_string(above) + " above the pointwise bound");
    r.check(outside == 0, "ratio outside [0,1)");
    r.check(above == 0, "ratio above bound");
    return r.outcome();
}

Outcome indicatrix_nesting() {
    Report r;
    randmat::Rng rng(1212);
    int drawn = 0;
    long violations = 0;
    for (int t = 0; t < 200;) {
        const auto c = experiments::random_case(rng, 1, 100, 2, 2);
        ++drawn;
        // Indicatrices are closed curves only when every norm is positive.
        if (!nondegenerate(c.spec.scale)) continue;
        ++t;
        const auto p = point(c.spec);
        const auto ir = measure::indicatrix(p, 64, NormKind::Riemannian);
        const auto iff = measure::indicatrix(p, 64, NormKind::Finsler);
        const auto ia = measure::indicatrix(p, 64, NormKind::AlphaSigma);
        for (int k = 0; k < 64; ++k) {
            violations += ir.radii[k] > iff.radii[k] * (1 + 1e-9);
            violations += iff.radii[k] > ia.radii[k] * (1 + 1e-9);
        }
    }
    r.note("200 specs (" + std::to_string(drawn) + " drawn) x 64 angles, " + std::to_string(violations) +
           " nesting violations");
    r.check(violations == 0, "nesting violated");
    return r.outcome();
}

struct Criterion {
    int id;
    std::string name;
    double limit_seconds;  // 0 when no runtime limit applies
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    int only = 0;
    app.add_option("--only", only, "Run a single criterion")->check(CLI::Range(1, 12));
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria{
        {1, "Finsler closed form vs Monte Carlo", 120.0, closed_form_vs_monte_carlo},
        {2, "central case exactness", 0.0, central_case},
        {3, "absolute norm bounds", 30.0, absolute_bounds},
        {4, "relative gap bound", 0.0, relative_bound},
        {5, "O(1/D) convergence", 60.0, convergence},
        {6, "functional orderings", 0.0, functional_orderings},
        {7, "energy gap variance identity", 0.0, variance_identity},
        {8, "strong convexity", 0.0, strong_convexity},
        {9, "sphere geodesics", 120.0, sphere_geodesics},
        {10, "high-dimensional Riemannian/Finsler agreement", 0.0, high_dimensional_agreement},
        {11, "volume consistency", 0.0, volume_consistency},
        {12, "indicatrix nesting", 0.0, indicatrix_nesting},
    };

    bool all = true;
    for (const auto& c : criteria) {
        if (only != 0 && c.id != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::string timing = fmt(secs, 3) + " s";
        if (c.limit_seconds > 0.0) {
            timing += " (limit " + fmt(c.limit_seconds, 3) + " s)";
            if (secs >= c.limit_seconds) o.pass = false;
        }
        all = all && o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << std::setw(2) << c.id << "  " << c.name << ": "
                  << o.detail << "  [" << timing << "]" << std::endl;
    }
    return all ? 0 : 1;
}
