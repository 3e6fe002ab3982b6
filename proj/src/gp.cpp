#include "stochgeom/gp.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "stochgeom/errors.hpp"

namespace stochgeom::gp {

namespace {

constexpr double kSqrt5 = 2.2360679774997896964;

void check_point(const Eigen::VectorXd& z, int q, const char* where) {
    if (z.size() != q) {
        throw DomainError(std::string(where) + ": latent point has the wrong dimension");
    }
}

Eigen::MatrixXd rows_to_matrix(const nlohmann::json& rows, const char* name) {
    if (!rows.is_array() || rows.empty()) {
        throw ParseError(std::string("model JSON: '") + name + "' must be a non-empty array");
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto m = static_cast<Eigen::Index>(rows.at(0).size());
    Eigen::MatrixXd out(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = rows.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != m) {
            throw ParseError(std::string("model JSON: ragged row ") + std::to_string(i) +
                             " in '" + name + "'");
        }
        for (Eigen::Index j = 0; j < m; ++j) out(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
    }
    return out;
}

nlohmann::json matrix_to_rows(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::string to_string(KernelFamily family) {
    return family == KernelFamily::SquaredExponential ? "rbf" : "matern52";
}

KernelFamily kernel_family_from_string(const std::string& name) {
    if (name == "rbf" || name == "se" || name == "squared_exponential") {
        return KernelFamily::SquaredExponential;
    }
    if (name == "matern52") {
        return KernelFamily::Matern52;
    }
    throw DomainError("unknown kernel family '" + name + "'");
}

void Kernel::validate() const {
    if (!(lengthscale > 0.0) || !(variance > 0.0) || !std::isfinite(lengthscale) ||
        !std::isfinite(variance)) {
        throw DomainError("Kernel: lengthscale and variance must be positive");
    }
}

double kernel_eval(const Kernel& k, const Eigen::VectorXd& z1, const Eigen::VectorXd& z2) {
    const double r2 = (z1 - z2).squaredNorm();
    const double l = k.lengthscale;
    if (k.family == KernelFamily::SquaredExponential) {
        return k.variance * std::exp(-0.5 * r2 / (l * l));
    }
    const double s = kSqrt5 * std::sqrt(r2) / l;
    return k.variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

Eigen::VectorXd kernel_gradient(const Kernel& k, const Eigen::VectorXd& z1,
                                const Eigen::VectorXd& z2) {
    const Eigen::VectorXd d = z1 - z2;
    const double l2 = k.lengthscale * k.lengthscale;
    if (k.family == KernelFamily::SquaredExponential) {
        return -(kernel_eval(k, z1, z2) / l2) * d;
    }
    const double s = kSqrt5 * d.norm() / k.lengthscale;
    return -(5.0 * k.variance / (3.0 * l2)) * (1.0 + s) * std::exp(-s) * d;
}

Eigen::MatrixXd kernel_cross_hessian(const Kernel& k, const Eigen::VectorXd& z1,
                                     const Eigen::VectorXd& z2) {
    const Eigen::VectorXd d = z1 - z2;
    const auto q = d.size();
    const double l2 = k.lengthscale * k.lengthscale;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(q, q);
    if (k.family == KernelFamily::SquaredExponential) {
        const double kv = kernel_eval(k, z1, z2);
        return kv * (eye / l2 - d * d.transpose() / (l2 * l2));
    }
    const double s = kSqrt5 * d.norm() / k.lengthscale;
    const double e = std::exp(-s);
    const double g = 5.0 * k.variance / (3.0 * l2) * (1.0 + s) * e;
    return g * eye - (25.0 * k.variance / (3.0 * l2 * l2)) * e * d * d.transpose();
}

double kernel_dlog_lengthscale(const Kernel& k, const Eigen::VectorXd& z1,
                               const Eigen::VectorXd& z2) {
    const double r2 = (z1 - z2).squaredNorm();
    const double l2 = k.lengthscale * k.lengthscale;
    if (k.family == KernelFamily::SquaredExponential) {
        return kernel_eval(k, z1, z2) * r2 / l2;
    }
    const double s = kSqrt5 * std::sqrt(r2) / k.lengthscale;
    return k.variance * std::exp(-s) * s * s / 3.0 * (1.0 + s);
}

Eigen::MatrixXd clamp_psd(const Eigen::MatrixXd& cov) {
    const Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.eigenvalues().minCoeff() >= 0.0) {
        return sym;
    }
    const Eigen::VectorXd clamped = eig.eigenvalues().cwiseMax(0.0);
    return eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::MatrixXd kernel_matrix(const Kernel& k, const Eigen::MatrixXd& x) {
    const auto n = x.rows();
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out(i, i) = k.variance;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            out(i, j) = out(j, i) = kernel_eval(k, x.row(i).transpose(), x.row(j).transpose());
        }
    }
    return out;
}

GpModel::GpModel(Kernel kernel, double noise, Eigen::MatrixXd latent_inputs,
                 Eigen::MatrixXd outputs, std::optional<Eigen::VectorXd> output_means)
    : kernel_(kernel), noise_(noise), x_(std::move(latent_inputs)), y_(std::move(outputs)) {
    kernel_.validate();
    if (!(noise_ >= 0.0) || !std::isfinite(noise_)) {
        throw DomainError("GpModel: noise must be non-negative");
    }
    if (x_.rows() < 2 || x_.cols() < 1 || y_.cols() < 1) {
        throw DomainError("GpModel: need N >= 2, q >= 1, D >= 1");
    }
    if (x_.rows() != y_.rows()) {
        throw DomainError("GpModel: latent inputs and outputs disagree on N");
    }
    if (!x_.allFinite() || !y_.allFinite()) {
        throw DomainError("GpModel: non-finite training data");
    }
    if (output_means) {
        if (output_means->size() != y_.cols()) {
            throw DomainError("GpModel: output_means must have D entries");
        }
        y_mean_ = *output_means;
    } else {
        y_mean_ = y_.colwise().mean().transpose();
    }

    const auto n = x_.rows();
    const Eigen::MatrixXd base = kernel_matrix(kernel_, x_) + noise_ * Eigen::MatrixXd::Identity(n, n);
    Eigen::LLT<Eigen::MatrixXd> llt(base);
    double jitter = kInitialJitter * kernel_.variance;
    for (int attempt = 0; llt.info() != Eigen::Success; ++attempt) {
        if (attempt == kMaxJitterEscalations) {
            throw NotPositiveDefiniteError("GpModel: kernel matrix not positive definite after jitter escalation");
        }
        jitter_ = jitter;
        llt.compute(base + jitter * Eigen::MatrixXd::Identity(n, n));
        jitter *= 10.0;
    }
    chol_ = llt.matrixL();
    const Eigen::MatrixXd centred = y_.rowwise() - y_mean_.transpose();
    alpha_ = llt.solve(centred);

    const double d = static_cast<double>(y_.cols());
    const double log_det = 2.0 * chol_.diagonal().array().log().sum();
    lml_ = -0.5 * (centred.array() * alpha_.array()).sum() - 0.5 * d * log_det -
           0.5 * static_cast<double>(n) * d * std::log(2.0 * std::numbers::pi);
}

Eigen::VectorXd GpModel::cross_kernel(const Eigen::VectorXd& z) const {
    Eigen::VectorXd ks(x_.rows());
    for (Eigen::Index n = 0; n < x_.rows(); ++n) ks(n) = kernel_eval(kernel_, z, x_.row(n).transpose());
    return ks;
}

Prediction GpModel::posterior_mean_var(const Eigen::VectorXd& z) const {
    check_point(z, latent_dim(), "posterior_mean_var");
    const Eigen::VectorXd ks = cross_kernel(z);
    const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(ks);
    const double var = kernel_.variance - v.squaredNorm();
    return {y_mean_ + alpha_.transpose() * ks, std::max(var, 0.0)};
}

JointPrediction GpModel::posterior_joint(const std::vector<Eigen::VectorXd>& zs) const {
    const auto m = static_cast<Eigen::Index>(zs.size());
    Eigen::MatrixXd ks(x_.rows(), m);
    Eigen::MatrixXd prior(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        check_point(zs[static_cast<std::size_t>(j)], latent_dim(), "posterior_joint");
        ks.col(j) = cross_kernel(zs[static_cast<std::size_t>(j)]);
        for (Eigen::Index i = 0; i <= j; ++i) {
            prior(i, j) = prior(j, i) =
                kernel_eval(kernel_, zs[static_cast<std::size_t>(i)], zs[static_cast<std::size_t>(j)]);
        }
    }
    const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(ks);
    JointPrediction out;
    out.mean = (ks.transpose() * alpha_).rowwise() + y_mean_.transpose();
    out.cov = prior - v.transpose() * v;
    return out;
}

JacobianPosterior GpModel::jacobian_posterior_closed_form(const Eigen::VectorXd& z) const {
    check_point(z, latent_dim(), "jacobian_posterior_closed_form");
    const auto n = x_.rows();
    const auto q = x_.cols();
    Eigen::MatrixXd dk(n, q);
    for (Eigen::Index i = 0; i < n; ++i) {
        dk.row(i) = kernel_gradient(kernel_, z, x_.row(i).transpose()).transpose();
    }
    const Eigen::MatrixXd w = chol_.triangularView<Eigen::Lower>().solve(dk);
    JacobianPosterior out;
    out.mean = alpha_.transpose() * dk;
    out.cov = clamp_psd(kernel_cross_hessian(kernel_, z, z) - w.transpose() * w);
    out.dim_data = data_dim();
    return out;
}

JacobianPosterior GpModel::jacobian_posterior_discretized(const Eigen::VectorXd& z, double h) const {
    check_point(z, latent_dim(), "jacobian_posterior_discretized");
    if (!(h > 0.0)) {
        throw DomainError("jacobian_posterior_discretized: step must be positive");
    }
    if (h > kernel_.lengthscale / 10.0) {
        warn("jacobian_posterior_discretized: step " + std::to_string(h) +
             " exceeds lengthscale/10; derivative estimate is coarse");
    }
    const auto n = x_.rows();
    const auto q = x_.cols();
    std::vector<Eigen::VectorXd> plus(static_cast<std::size_t>(q)), minus(static_cast<std::size_t>(q));
    for (Eigen::Index a = 0; a < q; ++a) {
        plus[static_cast<std::size_t>(a)] = z;
        minus[static_cast<std::size_t>(a)] = z;
        plus[static_cast<std::size_t>(a)](a) += 0.5 * h;
        minus[static_cast<std::size_t>(a)](a) -= 0.5 * h;
    }
    // Differences are formed before the solve so that the O(h) signal is not
    // lost in the O(1) covariance entries.
    Eigen::MatrixXd diff_cross(n, q);
    Eigen::MatrixXd diff_prior(q, q);
    for (Eigen::Index a = 0; a < q; ++a) {
        const auto& pa = plus[static_cast<std::size_t>(a)];
        const auto& ma = minus[static_cast<std::size_t>(a)];
        diff_cross.col(a) = cross_kernel(pa) - cross_kernel(ma);
        for (Eigen::Index b = 0; b < q; ++b) {
            const auto& pb = plus[static_cast<std::size_t>(b)];
            const auto& mb = minus[static_cast<std::size_t>(b)];
            diff_prior(a, b) = kernel_eval(kernel_, pa, pb) - kernel_eval(kernel_, pa, mb) -
                               kernel_eval(kernel_, ma, pb) + kernel_eval(kernel_, ma, mb);
        }
    }
    const Eigen::MatrixXd w = chol_.triangularView<Eigen::Lower>().solve(diff_cross);
    JacobianPosterior out;
    out.mean = alpha_.transpose() * diff_cross / h;
    out.cov = clamp_psd((diff_prior - w.transpose() * w) / (h * h));
    out.dim_data = data_dim();
    return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> GpModel::latent_bounds(double margin) const {
    Eigen::VectorXd lo = x_.colwise().minCoeff().transpose();
    Eigen::VectorXd hi = x_.colwise().maxCoeff().transpose();
    const Eigen::VectorXd pad = margin * (hi - lo);
    return {lo - pad, hi + pad};
}

nlohmann::json GpModel::to_json() const {
    nlohmann::json doc;
    doc["format"] = "stochgeom.gp/1";
    doc["kernel"] = {{"family", to_string(kernel_.family)},
                     {"lengthscale", kernel_.lengthscale},
                     {"variance", kernel_.variance}};
    doc["noise"] = noise_;
    doc["latent_inputs"] = matrix_to_rows(x_);
    doc["outputs"] = matrix_to_rows(y_);
    doc["output_means"] = std::vector<double>(y_mean_.data(), y_mean_.data() + y_mean_.size());
    return doc;
}

GpModel GpModel::from_json(const nlohmann::json& doc) {
    try {
        const auto format = doc.at("format").get<std::string>();
        if (format != "stochgeom.gp/1") {
            throw ParseError("model JSON: unsupported format '" + format + "'");
        }
        Kernel k;
        k.family = kernel_family_from_string(doc.at("kernel").at("family").get<std::string>());
        k.lengthscale = doc.at("kernel").at("lengthscale").get<double>();
        k.variance = doc.at("kernel").at("variance").get<double>();
        const auto means = doc.at("output_means").get<std::vector<double>>();
        Eigen::VectorXd mean_vec = Eigen::Map<const Eigen::VectorXd>(means.data(),
                                                                     static_cast<Eigen::Index>(means.size()));
        return GpModel(k, doc.at("noise").get<double>(), rows_to_matrix(doc.at("latent_inputs"), "latent_inputs"),
                       rows_to_matrix(doc.at("outputs"), "outputs"), mean_vec);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model JSON: ") + e.what());
    }
}

void GpModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write model file '" + path + "'");
    }
    out << to_json().dump(1) << '\n';
}

GpModel GpModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read model file '" + path + "'");
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("model file '" + path + "': " + e.what());
    }
    return from_json(doc);
}

Eigen::MatrixXd pca_latents(const Eigen::MatrixXd& y, int q) {
    if (q < 1 || q > std::min<Eigen::Index>(y.rows() - 1, y.cols())) {
        throw DomainError("pca_latents: latent dimension must be in [1, min(N-1, D)]");
    }
    const Eigen::MatrixXd centred = y.rowwise() - y.colwise().mean();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centred, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd x = svd.matrixU().leftCols(q) * svd.singularValues().head(q).asDiagonal();
    for (int a = 0; a < q; ++a) {
        Eigen::Index idx;
        svd.matrixV().col(a).cwiseAbs().maxCoeff(&idx);
        if (svd.matrixV()(idx, a) < 0.0) x.col(a) *= -1.0;
    }
    const double n = static_cast<double>(x.rows());
    const double sd = std::sqrt((x.col(0).array() - x.col(0).mean()).square().sum() / (n - 1.0));
    if (sd > 0.0) x /= sd;
    return x;
}

FitResult fit_hyperparameters(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& y, const Kernel& k0,
                              double noise0, int steps, double lr, const FitOptions& options) {
    if (x0.rows() < 2) {
        throw DomainError("fit_hyperparameters: need at least two points");
    }
    if (steps < 0 || !(lr > 0.0)) {
        throw DomainError("fit_hyperparameters: steps must be >= 0 and lr > 0");
    }
    const auto log_prior = [&](const Eigen::MatrixXd& x) {
        return options.optimize_latents ? -0.5 * x.squaredNorm() : 0.0;
    };

    GpModel best(k0, noise0, x0, y);
    const double initial = best.log_marginal_likelihood();
    double best_objective = initial + log_prior(x0);

    const auto n = x0.rows();
    const auto q = x0.cols();
    const double d = static_cast<double>(y.cols());
    const bool fit_noise = options.fit_noise && noise0 > options.min_noise;

    // θ = (log ℓ, log σ², log(noise − min_noise)), then the latent coordinates.
    const Eigen::Index n_hyper = 3;
    const Eigen::Index n_params = n_hyper + (options.optimize_latents ? n * q : 0);
    Eigen::VectorXd theta(n_params);
    theta(0) = std::log(k0.lengthscale);
    theta(1) = std::log(k0.variance);
    theta(2) = fit_noise ? std::log(noise0 - options.min_noise) : 0.0;
    if (options.optimize_latents) {
        theta.tail(n * q) = Eigen::Map<const Eigen::VectorXd>(x0.data(), n * q);
    }
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(n_params);
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(n_params);
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;

    for (int step = 1; step <= steps; ++step) {
        Kernel k = k0;
        k.lengthscale = std::exp(theta(0));
        k.variance = std::exp(theta(1));
        const double noise = fit_noise ? options.min_noise + std::exp(theta(2)) : noise0;
        Eigen::MatrixXd x = x0;
        if (options.optimize_latents) {
            x = Eigen::Map<const Eigen::MatrixXd>(theta.tail(n * q).data(), n, q);
        }
        GpModel model(k, noise, x, y);
        const double objective = model.log_marginal_likelihood() + log_prior(x);
        if (objective > best_objective) {
            best_objective = objective;
            best = model;
        }

        // ∂LML/∂θ = ½ tr(W ∂K/∂θ), W = ααᵀ − D K⁻¹.
        const Eigen::MatrixXd centred = y.rowwise() - model.output_means().transpose();
        const auto l = model.chol().triangularView<Eigen::Lower>();
        const Eigen::MatrixXd alpha = l.transpose().solve(l.solve(centred));
        const Eigen::MatrixXd kinv =
            l.transpose().solve(l.solve(Eigen::MatrixXd::Identity(n, n)));
        const Eigen::MatrixXd w = alpha * alpha.transpose() - d * kinv;

        Eigen::VectorXd grad = Eigen::VectorXd::Zero(n_params);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::VectorXd xi = x.row(i).transpose();
            for (Eigen::Index j = 0; j < n; ++j) {
                const Eigen::VectorXd xj = x.row(j).transpose();
                const double kij = i == j ? k.variance : kernel_eval(k, xi, xj);
                grad(0) += 0.5 * w(i, j) * kernel_dlog_lengthscale(k, xi, xj);
                grad(1) += 0.5 * w(i, j) * kij;
                if (options.optimize_latents && i != j) {
                    const Eigen::VectorXd g = kernel_gradient(k, xi, xj);
                    for (Eigen::Index a = 0; a < q; ++a) grad(n_hyper + a * n + i) += w(i, j) * g(a);
                }
            }
        }
        if (fit_noise) {
            grad(2) = 0.5 * w.trace() * std::exp(theta(2));
        }
        if (options.optimize_latents) {
            grad.tail(n * q) -= theta.tail(n * q);
        }

        m1 = beta1 * m1 + (1.0 - beta1) * grad;
        m2 = beta2 * m2 + (1.0 - beta2) * grad.cwiseProduct(grad);
        const double c1 = 1.0 - std::pow(beta1, step);
        const double c2 = 1.0 - std::pow(beta2, step);
        theta.array() += lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
    }

    if (steps > 0) {
        Kernel k = k0;
        k.lengthscale = std::exp(theta(0));
        k.variance = std::exp(theta(1));
        const double noise = fit_noise ? options.min_noise + std::exp(theta(2)) : noise0;
        Eigen::MatrixXd x = x0;
        if (options.optimize_latents) {
            x = Eigen::Map<const Eigen::MatrixXd>(theta.tail(n * q).data(), n, q);
        }
        GpModel last(k, noise, x, y);
        if (last.log_marginal_likelihood() + log_prior(x) > best_objective) {
            best = last;
        }
    }
    const double final_lml = best.log_marginal_likelihood();
    return {std::move(best), initial, final_lml, steps};
}

}  // namespace stochgeom::gp
