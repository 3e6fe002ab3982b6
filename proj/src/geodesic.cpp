#include "stochgeom/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <unordered_map>

#include "stochgeom/errors.hpp"
#include "stochgeom/io.hpp"

namespace stochgeom::geodesic {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kShrink = 0.5;
constexpr int kMaxBacktracks = 50;

double squared_norm(const metric::MetricPoint& p, const Eigen::VectorXd& v, NormKind kind) {
    const double n = metric::norm(p, v, kind);
    return n * n;
}

// ‖v‖² under the metric at m.
double segment_energy_density(const LatentField& field, const Eigen::VectorXd& m, const Eigen::VectorXd& v,
                              NormKind kind) {
    if (kind == NormKind::Euclidean) return v.squaredNorm();
    return squared_norm(field.metric_at(m), v, kind);
}

double energy_impl(const LatentField& field, const DiscreteCurve& c, NormKind kind) {
    double total = 0.0;
    for (int i = 0; i < c.segments(); ++i) {
        total += segment_energy_density(field, c.midpoint(i), c.velocity(i), kind);
    }
    return total * c.dt();
}

bool inside(const Box& box, const Eigen::VectorXd& z, double slack = 1e-12) {
    for (Eigen::Index a = 0; a < z.size(); ++a) {
        if (z(a) < box.first(a) - slack || z(a) > box.second(a) + slack) return false;
    }
    return true;
}

void warn_if_outside(const LatentField& field, const DiscreteCurve& c, const char* where) {
    const auto box = field.bounds();
    if (!box) return;
    for (int i = 0; i < c.size(); ++i) {
        if (!inside(*box, c.point(i))) {
            warn(std::string(where) + ": curve leaves the latent bounding box of the model");
            return;
        }
    }
}

void check_field(const LatentField& field, const DiscreteCurve& c) {
    if (field.latent_dim() != c.dim()) {
        throw DomainError("curve dimension does not match the latent dimension");
    }
}

// Metric size used to scale the Laplacian preconditioner.
double metric_scale(const LatentField& field, const DiscreteCurve& c, NormKind kind) {
    if (kind == NormKind::Euclidean) return 1.0;
    double total = 0.0;
    for (int i = 0; i < c.segments(); ++i) {
        const auto p = field.metric_at(c.midpoint(i));
        const Eigen::MatrixXd g = kind == NormKind::AlphaSigma ? metric::metric_tensor(p, kind)
                                                               : p.expected_metric();
        total += g.trace() / static_cast<double>(c.dim());
    }
    const double scale = total / static_cast<double>(c.segments());
    return scale > 0.0 && std::isfinite(scale) ? scale : 1.0;
}

}  // namespace

DiscreteCurve::DiscreteCurve(Eigen::MatrixXd points) : points_(std::move(points)) {
    if (points_.rows() < 3) {
        throw DomainError("DiscreteCurve: need at least 3 points");
    }
    if (points_.cols() < 1) {
        throw DomainError("DiscreteCurve: points must have at least one coordinate");
    }
    if (!points_.allFinite()) {
        throw DomainError("DiscreteCurve: non-finite coordinates");
    }
}

DiscreteCurve DiscreteCurve::straight_line(const Eigen::VectorXd& start, const Eigen::VectorXd& end,
                                           int n_points) {
    if (start.size() != end.size()) {
        throw DomainError("straight_line: endpoint dimensions differ");
    }
    if (n_points < 3) {
        throw DomainError("straight_line: need at least 3 points");
    }
    Eigen::MatrixXd pts(n_points, start.size());
    for (int i = 0; i < n_points; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n_points - 1);
        pts.row(i) = ((1.0 - t) * start + t * end).transpose();
    }
    return DiscreteCurve(std::move(pts));
}

Eigen::VectorXd DiscreteCurve::velocity(int segment) const {
    return (points_.row(segment + 1) - points_.row(segment)).transpose() / dt();
}

Eigen::VectorXd DiscreteCurve::midpoint(int segment) const {
    return 0.5 * (points_.row(segment + 1) + points_.row(segment)).transpose();
}

DiscreteCurve DiscreteCurve::displaced(const Eigen::MatrixXd& delta) const {
    Eigen::MatrixXd pts = points_;
    const int n = size();
    pts.middleRows(1, n - 2) += delta.middleRows(1, n - 2);
    return DiscreteCurve(std::move(pts));
}

DiscreteCurve DiscreteCurve::resampled(int n_points) const {
    if (n_points < 3) {
        throw DomainError("resampled: need at least 3 points");
    }
    std::vector<double> cum(static_cast<std::size_t>(size()), 0.0);
    for (int i = 1; i < size(); ++i) {
        cum[static_cast<std::size_t>(i)] =
            cum[static_cast<std::size_t>(i - 1)] + (points_.row(i) - points_.row(i - 1)).norm();
    }
    const double total = cum.back();
    Eigen::MatrixXd pts(n_points, dim());
    if (total == 0.0) {
        pts.rowwise() = points_.row(0);
        return DiscreteCurve(std::move(pts));
    }
    int seg = 0;
    for (int k = 0; k < n_points; ++k) {
        const double s = total * static_cast<double>(k) / static_cast<double>(n_points - 1);
        while (seg < size() - 2 && cum[static_cast<std::size_t>(seg + 1)] < s) ++seg;
        const double a = cum[static_cast<std::size_t>(seg)];
        const double b = cum[static_cast<std::size_t>(seg + 1)];
        const double t = b > a ? std::clamp((s - a) / (b - a), 0.0, 1.0) : 0.0;
        pts.row(k) = (1.0 - t) * points_.row(seg) + t * points_.row(seg + 1);
    }
    pts.row(0) = points_.row(0);
    pts.row(n_points - 1) = points_.row(size() - 1);
    return DiscreteCurve(std::move(pts));
}

std::vector<double> segment_speeds(const LatentField& field, const DiscreteCurve& c, NormKind kind) {
    check_field(field, c);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(c.segments()));
    for (int i = 0; i < c.segments(); ++i) {
        const Eigen::VectorXd v = c.velocity(i);
        out.push_back(kind == NormKind::Euclidean ? v.norm()
                                                  : metric::norm(field.metric_at(c.midpoint(i)), v, kind));
    }
    return out;
}

double energy(const LatentField& field, const DiscreteCurve& c, NormKind kind) {
    check_field(field, c);
    warn_if_outside(field, c, "energy");
    return energy_impl(field, c, kind);
}

double curve_length(const LatentField& field, const DiscreteCurve& c, NormKind kind) {
    double total = 0.0;
    for (double s : segment_speeds(field, c, kind)) total += s;
    return total * c.dt();
}

double ambient_length(const LatentField& field, const DiscreteCurve& c) {
    check_field(field, c);
    double total = 0.0;
    Eigen::VectorXd prev = field.decode(c.point(0));
    for (int i = 1; i < c.size(); ++i) {
        Eigen::VectorXd cur = field.decode(c.point(i));
        total += (cur - prev).norm();
        prev = std::move(cur);
    }
    return total;
}

double mean_variance(const LatentField& field, const DiscreteCurve& c) {
    check_field(field, c);
    double total = 0.0;
    for (int i = 0; i < c.size(); ++i) total += field.variance(c.point(i));
    return total / static_cast<double>(c.size());
}

Eigen::MatrixXd energy_gradient(const LatentField& field, const DiscreteCurve& c, NormKind kind,
                                GradientMode mode) {
    check_field(field, c);
    const int n = c.size();
    const int q = c.dim();
    const double dt = c.dt();
    const double h = kFiniteDifferenceStep;
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n, q);

    if (mode == GradientMode::FiniteDifference) {
        const Eigen::MatrixXd& pts = c.points();
        // Only the two segments touching p_j depend on it.
        const auto local = [&](int j, const Eigen::VectorXd& pj) {
            double e = 0.0;
            const Eigen::VectorXd prev = pts.row(j - 1).transpose();
            const Eigen::VectorXd next = pts.row(j + 1).transpose();
            e += segment_energy_density(field, 0.5 * (prev + pj), (pj - prev) / dt, kind);
            e += segment_energy_density(field, 0.5 * (pj + next), (next - pj) / dt, kind);
            return e * dt;
        };
        for (int j = 1; j < n - 1; ++j) {
            const Eigen::VectorXd pj = pts.row(j).transpose();
            for (int a = 0; a < q; ++a) {
                Eigen::VectorXd plus = pj, minus = pj;
                plus(a) += h;
                minus(a) -= h;
                grad(j, a) = (local(j, plus) - local(j, minus)) / (2.0 * h);
            }
        }
        return grad;
    }

    for (int i = 0; i < c.segments(); ++i) {
        const Eigen::VectorXd m = c.midpoint(i);
        const Eigen::VectorXd v = c.velocity(i);
        Eigen::VectorXd g_v;
        Eigen::VectorXd g_m = Eigen::VectorXd::Zero(q);
        if (kind == NormKind::Euclidean) {
            g_v = 2.0 * v;
        } else {
            g_v = metric::norm_squared_gradient(field.metric_at(m), v, kind);
            for (int a = 0; a < q; ++a) {
                Eigen::VectorXd plus = m, minus = m;
                plus(a) += h;
                minus(a) -= h;
                g_m(a) = (segment_energy_density(field, plus, v, kind) -
                          segment_energy_density(field, minus, v, kind)) / (2.0 * h);
            }
        }
        // v_i = (p_{i+1} − p_i)/Δt and m_i = (p_i + p_{i+1})/2.
        grad.row(i) += (-g_v + 0.5 * dt * g_m).transpose();
        grad.row(i + 1) += (g_v + 0.5 * dt * g_m).transpose();
    }
    grad.row(0).setZero();
    grad.row(n - 1).setZero();
    return grad;
}

DiscreteCurve grid_initialize(const LatentField& field, const Eigen::VectorXd& start, const Eigen::VectorXd& end,
                              NormKind kind, const GridOptions& options) {
    if (field.latent_dim() != 2 || start.size() != 2 || end.size() != 2) {
        throw UnsupportedError("grid_initialize: only 2-D latent spaces are supported");
    }
    if (options.grid < 2) {
        throw DomainError("grid_initialize: grid must be at least 2");
    }
    Box box;
    if (options.box) {
        box = *options.box;
    } else if (auto b = field.bounds()) {
        box = *b;
    } else {
        Eigen::VectorXd lo = start.cwiseMin(end);
        Eigen::VectorXd hi = start.cwiseMax(end);
        const double extent = std::max((hi - lo).maxCoeff(), 1e-12);
        lo.array() -= options.margin * extent;
        hi.array() += options.margin * extent;
        box = {lo, hi};
    }
    if (!inside(box, start, 1e-9) || !inside(box, end, 1e-9)) {
        throw DomainError("grid_initialize: endpoints lie outside the grid bounding box");
    }

    const int g = options.grid;
    const auto node_point = [&](int idx) {
        const int ix = idx % g;
        const int iy = idx / g;
        Eigen::VectorXd z(2);
        z(0) = box.first(0) + (box.second(0) - box.first(0)) * ix / (g - 1);
        z(1) = box.first(1) + (box.second(1) - box.first(1)) * iy / (g - 1);
        return z;
    };
    const auto nearest = [&](const Eigen::VectorXd& z) {
        const auto coord = [&](int a) {
            const double span = box.second(a) - box.first(a);
            const double t = span > 0.0 ? (z(a) - box.first(a)) / span : 0.0;
            return std::clamp(static_cast<int>(std::lround(t * (g - 1))), 0, g - 1);
        };
        return coord(0) + g * coord(1);
    };

    const Eigen::VectorXd chord = end - start;
    const double chord_len = chord.norm();
    const double diag = (box.second - box.first).norm();
    const auto chord_distance = [&](const Eigen::VectorXd& z) {
        if (chord_len == 0.0) return (z - start).norm();
        const double t = std::clamp((z - start).dot(chord) / (chord_len * chord_len), 0.0, 1.0);
        return (z - (start + t * chord)).norm();
    };
    const auto edge_weight = [&](int u, int v) {
        const Eigen::VectorXd a = node_point(u);
        const Eigen::VectorXd b = node_point(v);
        const Eigen::VectorXd mid = 0.5 * (a + b);
        const double w = kind == NormKind::Euclidean ? (b - a).norm()
                                                     : metric::norm(field.metric_at(mid), b - a, kind);
        // Exact ties on a uniform grid are broken toward the chord.
        return w * (1.0 + 1e-9 * chord_distance(mid) / std::max(diag, 1e-300));
    };

    const int n_nodes = g * g;
    const int source = nearest(start);
    const int target = nearest(end);
    std::vector<double> dist(static_cast<std::size_t>(n_nodes), std::numeric_limits<double>::infinity());
    std::vector<int> parent(static_cast<std::size_t>(n_nodes), -1);
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    dist[static_cast<std::size_t>(source)] = 0.0;
    queue.push({0.0, source});
    while (!queue.empty()) {
        const auto [d, u] = queue.top();
        queue.pop();
        if (d > dist[static_cast<std::size_t>(u)]) continue;
        if (u == target) break;
        const int ux = u % g;
        const int uy = u / g;
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                const int vx = ux + dx;
                const int vy = uy + dy;
                if (vx < 0 || vy < 0 || vx >= g || vy >= g) continue;
                const int v = vx + g * vy;
                const double nd = d + edge_weight(u, v);
                if (nd < dist[static_cast<std::size_t>(v)]) {
                    dist[static_cast<std::size_t>(v)] = nd;
                    parent[static_cast<std::size_t>(v)] = u;
                    queue.push({nd, v});
                }
            }
        }
    }

    std::vector<Eigen::VectorXd> path;
    for (int v = target; v != -1; v = parent[static_cast<std::size_t>(v)]) path.push_back(node_point(v));
    std::reverse(path.begin(), path.end());
    std::vector<Eigen::VectorXd> pts;
    pts.push_back(start);
    for (const auto& p : path) {
        if ((p - pts.back()).norm() > 1e-12) pts.push_back(p);
    }
    if ((end - pts.back()).norm() > 1e-12 || pts.size() == 1) pts.push_back(end);
    else pts.back() = end;

    Eigen::MatrixXd poly(static_cast<Eigen::Index>(std::max<std::size_t>(pts.size(), 3)), 2);
    if (pts.size() == 2) {
        poly.row(0) = pts[0].transpose();
        poly.row(1) = (0.5 * (pts[0] + pts[1])).transpose();
        poly.row(2) = pts[1].transpose();
    } else {
        for (std::size_t i = 0; i < pts.size(); ++i) poly.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
    }
    return DiscreteCurve(std::move(poly)).resampled(options.n_points);
}

GeodesicResult minimize_energy(const LatentField& field, const DiscreteCurve& init, NormKind kind,
                               const MinimizeOptions& options) {
    check_field(field, init);
    if (options.max_iter < 0 || !(options.tol > 0.0) || options.window < 1) {
        throw DomainError("minimize_energy: invalid options");
    }
    warn_if_outside(field, init, "minimize_energy");

    DiscreteCurve curve = init;
    double e = energy_impl(field, curve, kind);
    std::vector<double> trace{e};
    const int n = curve.size();
    const int interior = n - 2;
    const double dt = curve.dt();

    // For the Euclidean metric ∇E = (2/Δt)·L·p, so (Δt/2)·L⁻¹ is the exact
    // inverse Hessian; other metrics are rescaled by their mean trace.
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(interior, interior);
    for (int i = 0; i < interior; ++i) {
        lap(i, i) = 2.0;
        if (i + 1 < interior) lap(i, i + 1) = lap(i + 1, i) = -1.0;
    }
    const Eigen::LLT<Eigen::MatrixXd> lap_llt(lap);
    const double precond = 0.5 * dt / metric_scale(field, curve, kind);

    bool converged = false;
    int it = 0;
    double step = 1.0;
    for (; it < options.max_iter; ++it) {
        if (e == 0.0) {
            converged = true;
            break;
        }
        const Eigen::MatrixXd grad = energy_gradient(field, curve, kind, options.gradient);
        Eigen::MatrixXd dir = Eigen::MatrixXd::Zero(n, curve.dim());
        dir.middleRows(1, interior) = -precond * lap_llt.solve(grad.middleRows(1, interior));
        const double slope = (grad.array() * dir.array()).sum();
        if (!(slope < 0.0)) {
            converged = true;
            break;
        }
        step = std::min(1.0, 2.0 * step);
        bool accepted = false;
        for (int k = 0; k < kMaxBacktracks; ++k) {
            DiscreteCurve trial = curve.displaced(step * dir);
            const double e_trial = energy_impl(field, trial, kind);
            if (e_trial <= e + kArmijo * step * slope) {
                curve = std::move(trial);
                e = e_trial;
                accepted = true;
                break;
            }
            step *= kShrink;
        }
        if (!accepted) {
            // No decrease is available at working precision.
            converged = true;
            break;
        }
        trace.push_back(e);
        const auto w = static_cast<std::size_t>(options.window);
        if (trace.size() > w) {
            const double before = trace[trace.size() - 1 - w];
            if ((before - e) <= options.tol * std::abs(e)) {
                converged = true;
                ++it;
                break;
            }
        }
    }
    warn_if_outside(field, curve, "minimize_energy");
    const double length = curve_length(field, curve, kind);
    return {std::move(curve), e, length, kind, it, converged, std::move(trace)};
}

std::string curve_csv(const LatentField& field, const DiscreteCurve& c, bool decoded) {
    check_field(field, c);
    std::vector<std::string> cols{"t"};
    for (int a = 0; a < c.dim(); ++a) cols.push_back("z_" + std::to_string(a + 1));
    if (decoded) {
        for (int d = 0; d < field.data_dim(); ++d) cols.push_back("f_" + std::to_string(d + 1));
    }
    io::CsvTable table(std::move(cols));
    for (int i = 0; i < c.size(); ++i) {
        table << static_cast<double>(i) * c.dt();
        for (int a = 0; a < c.dim(); ++a) table << c.points()(i, a);
        if (decoded) {
            const Eigen::VectorXd f = field.decode(c.point(i));
            for (Eigen::Index d = 0; d < f.size(); ++d) table << f(d);
        }
        table.end_row();
    }
    return table.str();
}

}  // namespace stochgeom::geodesic
