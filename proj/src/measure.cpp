#include "stochgeom/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "stochgeom/errors.hpp"
#include "stochgeom/io.hpp"

namespace stochgeom::measure {

namespace {

void check_planar(const metric::MetricPoint& p, int K) {
    if (p.latent_dim() != 2) {
        throw UnsupportedError("indicatrices and volumes require a 2-D latent space");
    }
    if (K < 16) {
        throw DomainError("indicatrix: need at least 16 angles");
    }
}

Eigen::VectorXd direction(double theta) {
    Eigen::VectorXd e(2);
    e << std::cos(theta), std::sin(theta);
    return e;
}

// Unit directions at θ_k = 2πk/K. For even K the second half negates the
// first, so reversible norms give r(θ) = r(θ + π) exactly.
std::vector<Eigen::VectorXd> directions(int K) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        if (K % 2 == 0 && k >= K / 2) {
            out.push_back(-out[static_cast<std::size_t>(k - K / 2)]);
        } else {
            out.push_back(direction(2.0 * std::numbers::pi * k / K));
        }
    }
    return out;
}

// Norms along the sampled directions.
std::vector<double> direction_norms(const metric::MetricPoint& p, int K, NormKind kind) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(K));
    for (const auto& e : directions(K)) out.push_back(metric::norm(p, e, kind));
    return out;
}

}  // namespace

Indicatrix indicatrix(const metric::MetricPoint& p, int K, NormKind kind, const Eigen::Vector2d& center) {
    check_planar(p, K);
    Indicatrix out;
    out.center = center;
    out.kind = kind;
    out.angles.reserve(static_cast<std::size_t>(K));
    out.radii.reserve(static_cast<std::size_t>(K));
    const auto norms = direction_norms(p, K, kind);
    for (int k = 0; k < K; ++k) {
        const double n = norms[static_cast<std::size_t>(k)];
        if (!(n > 0.0)) {
            throw DomainError("indicatrix: metric is degenerate along a direction");
        }
        out.angles.push_back(2.0 * std::numbers::pi * k / K);
        out.radii.push_back(1.0 / n);
    }
    return out;
}

bool is_convex(const Indicatrix& ind, double slack) {
    const std::size_t k = ind.radii.size();
    const auto vertex = [&](std::size_t i) {
        const std::size_t j = i % k;
        return Eigen::Vector2d(ind.radii[j] * std::cos(ind.angles[j]), ind.radii[j] * std::sin(ind.angles[j]));
    };
    for (std::size_t i = 0; i < k; ++i) {
        const Eigen::Vector2d a = vertex(i + 1) - vertex(i);
        const Eigen::Vector2d b = vertex(i + 2) - vertex(i + 1);
        if (a(0) * b(1) - a(1) * b(0) < -slack) return false;
    }
    return true;
}

double polygon_area(const Indicatrix& ind) {
    const std::size_t k = ind.radii.size();
    const double s = std::sin(2.0 * std::numbers::pi / static_cast<double>(k));
    double area = 0.0;
    for (std::size_t i = 0; i < k; ++i) area += ind.radii[i] * ind.radii[(i + 1) % k];
    return 0.5 * s * area;
}

double bh_volume(const metric::MetricPoint& p, int K, NormKind kind) {
    check_planar(p, K);
    const auto norms = direction_norms(p, K, kind);
    // A direction of zero norm makes the unit ball unbounded.
    if (std::any_of(norms.begin(), norms.end(), [](double n) { return !(n > 0.0); })) {
        return 0.0;
    }
    const double s = std::sin(2.0 * std::numbers::pi / K);
    double area = 0.0;
    for (std::size_t i = 0; i < norms.size(); ++i) area += 1.0 / (norms[i] * norms[(i + 1) % norms.size()]);
    return std::numbers::pi / (0.5 * s * area);
}

double volume_ratio_bound(const metric::MetricPoint& p, int K) {
    check_planar(p, K);
    double b = 0.0;
    for (const auto& e : directions(K)) {
        b = std::max(b, metric::relative_bound(p.data_dim(), metric::omega(p, e)));
    }
    b = std::min(b, 1.0);
    return 1.0 - std::pow(1.0 - b, p.latent_dim());
}

VolumeField volume_field(const LatentField& field, int grid, int K, std::optional<Box> box) {
    if (field.latent_dim() != 2) {
        throw UnsupportedError("volume_field: requires a 2-D latent space");
    }
    if (grid < 2) {
        throw DomainError("volume_field: grid must be at least 2");
    }
    if (!box) box = field.bounds();
    if (!box) {
        throw DomainError("volume_field: field has no bounds; pass a box");
    }
    VolumeField out;
    out.grid = grid;
    out.samples = K;
    const auto& [lo, hi] = *box;
    for (int iy = 0; iy < grid; ++iy) {
        for (int ix = 0; ix < grid; ++ix) {
            Eigen::VectorXd z(2);
            z(0) = lo(0) + (hi(0) - lo(0)) * ix / (grid - 1);
            z(1) = lo(1) + (hi(1) - lo(1)) * iy / (grid - 1);
            const auto p = field.metric_at(z);
            const double vr = bh_volume(p, K, NormKind::Riemannian);
            const double vf = bh_volume(p, K, NormKind::Finsler);
            out.points.emplace_back(z(0), z(1));
            out.v_riemann.push_back(vr);
            out.v_finsler.push_back(vf);
            out.v_alpha_sigma.push_back(bh_volume(p, K, NormKind::AlphaSigma));
            out.ratio.push_back((vr - vf) / vr);
            out.ratio_bound.push_back(volume_ratio_bound(p, K));
            out.variance.push_back(field.variance(z));
        }
    }
    return out;
}

std::string volume_field_csv(const VolumeField& vf) {
    io::CsvTable table({"z1", "z2", "v_riemann", "v_finsler", "v_alpha_sigma", "ratio", "log10_v_riemann",
                        "log10_v_finsler", "log10_v_alpha_sigma", "log10_ratio", "ratio_bound", "variance"});
    for (std::size_t i = 0; i < vf.points.size(); ++i) {
        table << vf.points[i](0) << vf.points[i](1) << vf.v_riemann[i] << vf.v_finsler[i] << vf.v_alpha_sigma[i]
              << vf.ratio[i] << std::log10(vf.v_riemann[i]) << std::log10(vf.v_finsler[i])
              << std::log10(vf.v_alpha_sigma[i]) << std::log10(vf.ratio[i]) << vf.ratio_bound[i]
              << vf.variance[i];
        table.end_row();
    }
    return table.str();
}

std::string indicatrix_csv(const std::vector<Indicatrix>& inds) {
    io::CsvTable table({"cx", "cy", "kind", "theta", "r"});
    for (const auto& ind : inds) {
        for (std::size_t k = 0; k < ind.radii.size(); ++k) {
            table << ind.center(0) << ind.center(1) << metric::to_string(ind.kind) << ind.angles[k]
                  << ind.radii[k];
            table.end_row();
        }
    }
    return table.str();
}

}  // namespace stochgeom::measure
