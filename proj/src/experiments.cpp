#include "stochgeom/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "stochgeom/errors.hpp"
#include "stochgeom/io.hpp"
#include "stochgeom/measure.hpp"
#include "stochgeom/metric.hpp"

namespace stochgeom::experiments {

namespace {

Eigen::MatrixXd normal_matrix(randmat::Rng& rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal(rng);
    return m;
}

Eigen::VectorXd random_unit(randmat::Rng& rng, int q) {
    Eigen::VectorXd v;
    do {
        v = normal_matrix(rng, q, 1);
    } while (v.norm() < 1e-8);
    return v / v.norm();
}

double log_uniform(randmat::Rng& rng, double lo_exp, double hi_exp) {
    std::uniform_real_distribution<double> u(lo_exp, hi_exp);
    return std::pow(10.0, u(rng));
}

bool ordered(double lo, double mid, double hi) {
    return lo <= mid + kViolationSlack && mid <= hi + kViolationSlack;
}

}  // namespace

RandomCase random_case(randmat::Rng& rng, int d_min, int d_max, int q_min, int q_max) {
    std::uniform_int_distribution<int> dim_d(d_min, d_max);
    std::uniform_int_distribution<int> dim_q(q_min, q_max);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const int D = dim_d(rng);
    const int q = dim_q(rng);
    RandomCase out;
    out.spec.dof = D;
    const double mean_scale = log_uniform(rng, -2.0, 1.0);
    out.spec.mean_jacobian = mean_scale * normal_matrix(rng, D, q);
    if (coin(rng) < 0.1) out.spec.mean_jacobian.setZero();
    Eigen::MatrixXd a = normal_matrix(rng, q, q);
    double ridge = 0.05;
    if (q > 1 && coin(rng) < 0.1) {
        a.col(0).setZero();
        ridge = 0.0;
    }
    const double cov_scale = log_uniform(rng, -2.0, 1.0);
    Eigen::MatrixXd sigma = cov_scale * (a.transpose() * a + ridge * Eigen::MatrixXd::Identity(q, q)) / q;
    out.spec.scale = 0.5 * (sigma + sigma.transpose());
    out.v = normal_matrix(rng, q, 1);
    return out;
}

std::vector<randmat::WishartSpec> bounded_ensemble(int n_specs, int d_max, int q, std::uint64_t seed) {
    if (n_specs < 1 || d_max < 1 || q < 1) {
        throw DomainError("bounded_ensemble: sizes must be positive");
    }
    std::vector<randmat::WishartSpec> out;
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    for (int s = 0; s < n_specs; ++s) {
        randmat::Rng rng(randmat::derive_seed(seed, static_cast<std::uint64_t>(s)));
        randmat::WishartSpec spec;
        spec.dof = d_max;
        spec.mean_jacobian.resize(d_max, q);
        for (int j = 0; j < q; ++j)
            for (int i = 0; i < d_max; ++i) spec.mean_jacobian(i, j) = uniform(rng);
        const Eigen::MatrixXd a = normal_matrix(rng, q, q);
        spec.scale = a.transpose() * a + 0.1 * Eigen::MatrixXd::Identity(q, q);
        out.push_back(std::move(spec));
    }
    return out;
}

gp::GpModel synthetic_model(int data_dim, int n, std::uint64_t seed, double noise, int fit_steps) {
    if (data_dim < 1 || n < 2 || !(noise >= 0.0) || fit_steps < 0) {
        throw DomainError("synthetic_model: invalid sizes or noise");
    }
    const RandomField truth(data_dim, 2, seed, 0.0);
    randmat::Rng rng(randmat::derive_seed(seed, 1));
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(n, 2);
    Eigen::MatrixXd y(n, data_dim);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = uniform(rng);
        x(i, 1) = uniform(rng);
        const Eigen::VectorXd f = truth.decode(x.row(i).transpose());
        for (int j = 0; j < data_dim; ++j) y(i, j) = f(j) + noise * normal(rng);
    }
    const double noise0 = std::max(noise * noise, 1e-4);
    return gp::fit_hyperparameters(x, y, gp::Kernel{gp::KernelFamily::SquaredExponential, 1.0, 1.0}, noise0,
                                   fit_steps, 0.05)
        .model;
}

std::vector<int> parse_dims(const std::string& text) {
    std::vector<int> out;
    const auto to_int = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(s, &used);
            if (used != s.size() || v < 1) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw DomainError("invalid dimension list '" + text + "'");
        }
    };
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() < 2 || parts.size() > 3) throw DomainError("invalid dimension range '" + text + "'");
        const int lo = to_int(parts[0]);
        const int hi = to_int(parts[1]);
        if (hi < lo) throw DomainError("invalid dimension range '" + text + "'");
        if (parts.size() == 3 && parts[2] == "dyadic") {
            for (long d = lo; d <= hi; d *= 2) out.push_back(static_cast<int>(d));
        } else if (parts.size() == 2) {
            for (int d = lo; d <= hi; ++d) out.push_back(d);
        } else {
            throw DomainError("unknown dimension step '" + parts[2] + "'");
        }
    } else {
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ',');) out.push_back(to_int(p));
    }
    if (out.empty() || !std::is_sorted(out.begin(), out.end())) {
        throw DomainError("dimension list must be non-empty and increasing");
    }
    return out;
}

bool TruncationResult::bounded() const {
    return std::all_of(rows.begin(), rows.end(), [&](const ConvergenceRow& r) { return r.gap_times_D <= 1.0 + M; });
}

bool TruncationResult::non_increasing_after(int d_from) const {
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
        if (r.D < d_from) continue;
        if (r.gap_times_D > prev) return false;
        prev = r.gap_times_D;
    }
    return true;
}

TruncationResult truncation_sweep(const std::vector<randmat::WishartSpec>& ensemble, const std::vector<int>& dims,
                                  int v_samples, std::uint64_t seed) {
    if (ensemble.empty() || dims.empty() || v_samples < 1) {
        throw DomainError("truncation_sweep: empty ensemble, dimension list or sample count");
    }
    if (!std::is_sorted(dims.begin(), dims.end())) {
        throw DomainError("truncation_sweep: dims must be increasing");
    }
    for (const auto& spec : ensemble) {
        spec.validate();
        if (dims.back() > spec.dof) {
            throw DomainError("truncation_sweep: dimension exceeds the ensemble's Jacobian rows");
        }
    }
    // Tangent vectors are drawn once per spec and reused at every D.
    std::vector<std::vector<Eigen::VectorXd>> directions;
    for (std::size_t s = 0; s < ensemble.size(); ++s) {
        randmat::Rng rng(randmat::derive_seed(seed, s));
        std::vector<Eigen::VectorXd> vs;
        for (int k = 0; k < v_samples; ++k) vs.push_back(random_unit(rng, ensemble[s].latent_dim()));
        directions.push_back(std::move(vs));
    }

    TruncationResult out;
    for (int D : dims) {
        double gap = 0.0, bound = 0.0, vgap = 0.0;
        int n_volume = 0;
        for (std::size_t s = 0; s < ensemble.size(); ++s) {
            const auto& spec = ensemble[s];
            gp::JacobianPosterior jac{spec.mean_jacobian.topRows(D), spec.scale, D};
            const metric::MetricPoint p(std::move(jac));
            for (const auto& v : directions[s]) {
                const auto rg = metric::relative_gap(p, v);
                gap += rg.gap;
                bound += rg.wishart_bound;
                const double w = metric::omega(p, v);
                if (std::isfinite(w)) out.M = std::max(out.M, w / D);
            }
            if (p.latent_dim() == 2) {
                const double vr = measure::bh_volume(p, measure::kVolumeSamples, NormKind::Riemannian);
                const double vf = measure::bh_volume(p, measure::kVolumeSamples, NormKind::Finsler);
                vgap += (vr - vf) / vr;
                ++n_volume;
            }
        }
        const double n = static_cast<double>(ensemble.size() * static_cast<std::size_t>(v_samples));
        ConvergenceRow row;
        row.D = D;
        row.gap_norm = gap / n;
        row.bound = bound / n;
        row.gap_volume = n_volume > 0 ? vgap / n_volume : std::numeric_limits<double>::quiet_NaN();
        row.gap_times_D = D * row.gap_norm;
        out.rows.push_back(row);
    }
    return out;
}

std::string convergence_csv(const TruncationResult& result) {
    io::CsvTable table({"D", "gap_norm", "gap_volume", "bound", "gap_times_D", "one_plus_M"});
    for (const auto& r : result.rows) {
        table << r.D << r.gap_norm << r.gap_volume << r.bound << r.gap_times_D << 1.0 + result.M;
        table.end_row();
    }
    return table.str();
}

long ViolationReport::total() const {
    return norm_lower + norm_upper + gap_negative + gap_bound + length_order + energy_order + volume_order +
           volume_ratio_bound;
}

nlohmann::json ViolationReport::to_json() const {
    return {{"specs", specs},
            {"curves", curves},
            {"points", points},
            {"violations",
             {{"norm_lower", norm_lower},
              {"norm_upper", norm_upper},
              {"gap_negative", gap_negative},
              {"gap_bound", gap_bound},
              {"length_order", length_order},
              {"energy_order", energy_order},
              {"volume_order", volume_order},
              {"volume_ratio_bound", volume_ratio_bound}}},
            {"total", total()}};
}

ViolationReport bound_sweep(const BoundSweepOptions& options) {
    if (options.n_specs < 100 || options.n_curves < 0 || options.n_points < 0 || options.curve_points < 3) {
        throw DomainError("bound_sweep: need at least 100 specs, non-negative counts and 3 curve points");
    }
    const double fs = options.finsler_scale;
    ViolationReport rep;

    randmat::Rng spec_rng(randmat::derive_seed(options.seed, 0));
    for (int i = 0; i < options.n_specs; ++i) {
        const RandomCase rc = random_case(spec_rng);
        if (rc.v.norm() == 0.0) continue;
        const metric::MetricPoint p(gp::JacobianPosterior{rc.spec.mean_jacobian, rc.spec.scale, rc.spec.dof});
        const double lower = metric::alpha_sigma_norm(p, rc.v);
        const double f = fs * metric::finsler_norm(p, rc.v);
        const double upper = metric::riemannian_norm(p, rc.v);
        ++rep.specs;
        if (lower > f + kViolationSlack) ++rep.norm_lower;
        if (f > upper + kViolationSlack) ++rep.norm_upper;
        const double gap = (upper - f) / upper;
        if (gap < -kViolationSlack) ++rep.gap_negative;
        if (gap > metric::relative_bound(p.data_dim(), metric::omega(p, rc.v)) + kViolationSlack) ++rep.gap_bound;
    }

    randmat::Rng curve_rng(randmat::derive_seed(options.seed, 1));
    std::uniform_int_distribution<int> dim_d(1, 100);
    std::uniform_int_distribution<int> dim_q(1, 5);
    for (int i = 0; i < options.n_curves; ++i) {
        const int D = dim_d(curve_rng);
        const int q = dim_q(curve_rng);
        const RandomField field(D, q, curve_rng(), log_uniform(curve_rng, -3.0, 1.0));
        const geodesic::DiscreteCurve c(normal_matrix(curve_rng, options.curve_points, q));
        ++rep.curves;
        const double la = geodesic::curve_length(field, c, NormKind::AlphaSigma);
        const double lf = fs * geodesic::curve_length(field, c, NormKind::Finsler);
        const double lr = geodesic::curve_length(field, c, NormKind::Riemannian);
        if (!ordered(la, lf, lr)) ++rep.length_order;
        const double ea = geodesic::energy(field, c, NormKind::AlphaSigma);
        const double ef = fs * fs * geodesic::energy(field, c, NormKind::Finsler);
        const double er = geodesic::energy(field, c, NormKind::Riemannian);
        if (!ordered(ea, ef, er)) ++rep.energy_order;
    }

    randmat::Rng point_rng(randmat::derive_seed(options.seed, 2));
    for (int i = 0; i < options.n_points; ++i) {
        RandomCase rc = random_case(point_rng, 1, 100, 2, 2);
        // Volumes need a non-degenerate Σ.
        rc.spec.scale += 1e-3 * rc.spec.scale.trace() * Eigen::MatrixXd::Identity(2, 2);
        const metric::MetricPoint p(gp::JacobianPosterior{rc.spec.mean_jacobian, rc.spec.scale, rc.spec.dof});
        ++rep.points;
        const int K = measure::kVolumeSamples;
        const double va = measure::bh_volume(p, K, NormKind::AlphaSigma);
        // V scales as 1/F², so scaling F scales V_F by fs².
        const double vf = fs * fs * measure::bh_volume(p, K, NormKind::Finsler);
        const double vr = measure::bh_volume(p, K, NormKind::Riemannian);
        if (!ordered(va, vf, vr)) ++rep.volume_order;
        if ((vr - vf) / vr > measure::volume_ratio_bound(p, K) + kViolationSlack) ++rep.volume_ratio_bound;
    }
    return rep;
}

EnergyGap energy_gap_identity(const LatentField& field, const geodesic::DiscreteCurve& c, long samples_per_segment,
                              std::uint64_t seed) {
    EnergyGap out;
    out.e_riemann = geodesic::energy(field, c, NormKind::Riemannian);
    out.e_finsler = geodesic::energy(field, c, NormKind::Finsler);
    out.gap = out.e_riemann - out.e_finsler;
    double var = 0.0, se2 = 0.0;
    const double dt = c.dt();
    for (int i = 0; i < c.segments(); ++i) {
        const Eigen::VectorXd v = c.velocity(i);
        if (v.norm() == 0.0) continue;
        const auto p = field.metric_at(c.midpoint(i));
        const auto stats = randmat::sample_norm_stats(p.wishart(), v, samples_per_segment,
                                                      randmat::derive_seed(seed, static_cast<std::uint64_t>(i)));
        var += stats.var_norm * dt;
        se2 += stats.se_var_norm * stats.se_var_norm * dt * dt;
    }
    out.mc_variance = var;
    out.mc_se = std::sqrt(se2);
    return out;
}

std::vector<ComparisonRow> geodesic_comparison(const LatentField& field, const std::vector<EndpointPair>& pairs,
                                               const ComparisonOptions& options) {
    std::vector<ComparisonRow> rows;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto& pr = pairs[k];
        for (NormKind kind : options.kinds) {
            const geodesic::DiscreteCurve init =
                options.grid_init && field.latent_dim() == 2
                    ? geodesic::grid_initialize(field, pr.start, pr.end, kind, options.grid)
                    : geodesic::DiscreteCurve::straight_line(pr.start, pr.end, options.grid.n_points);
            auto res = geodesic::minimize_energy(field, init, kind, options.minimize);
            if (!res.converged) {
                warn("geodesic_comparison: optimiser did not converge for pair " + std::to_string(k) + " (" +
                     metric::to_string(kind) + ")");
            }
            ComparisonRow row{static_cast<int>(k),
                              kind,
                              geodesic::curve_length(field, res.curve, NormKind::Riemannian),
                              geodesic::curve_length(field, res.curve, NormKind::Finsler),
                              res.energy,
                              geodesic::ambient_length(field, res.curve),
                              geodesic::mean_variance(field, res.curve),
                              res.iterations,
                              res.converged,
                              res.curve};
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
    io::CsvTable table({"pair", "metric", "length_riemann", "length_finsler", "relative_gap", "energy",
                        "ambient_length", "mean_variance", "iterations", "converged"});
    for (const auto& r : rows) {
        const double rel = r.length_riemann > 0.0 ? (r.length_riemann - r.length_finsler) / r.length_riemann : 0.0;
        table << r.pair << metric::to_string(r.kind) << r.length_riemann << r.length_finsler << rel << r.energy
              << r.ambient_length << r.mean_variance << r.iterations << (r.converged ? 1 : 0);
        table.end_row();
    }
    return table.str();
}

}  // namespace stochgeom::experiments
