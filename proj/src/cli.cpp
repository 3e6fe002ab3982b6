#include "stochgeom/cli.hpp"

#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stochgeom/data.hpp"
#include "stochgeom/errors.hpp"
#include "stochgeom/experiments.hpp"
#include "stochgeom/field.hpp"
#include "stochgeom/geodesic.hpp"
#include "stochgeom/gp.hpp"
#include "stochgeom/io.hpp"
#include "stochgeom/measure.hpp"

namespace stochgeom::cli {

namespace {

using nlohmann::json;
using metric::NormKind;

const std::vector<std::string> kMetricNames{"riemann", "finsler", "euclid", "alpha_sigma"};

json base_config(const std::string& command) {
    return {{"command", command}, {"version", kVersion}};
}

Eigen::VectorXd parse_point(const std::string& text) {
    std::vector<double> xs;
    std::stringstream ss(text);
    for (std::string cell; std::getline(ss, cell, ',');) {
        try {
            std::size_t used = 0;
            xs.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw CLI::ValidationError("point", "'" + text + "' is not a comma-separated list of numbers");
        }
    }
    if (xs.empty()) throw CLI::ValidationError("point", "empty point");
    return Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

std::vector<NormKind> parse_kinds(const std::vector<std::string>& names) {
    std::vector<NormKind> kinds;
    for (const auto& n : names) kinds.push_back(metric::norm_kind_from_string(n));
    return kinds;
}

bool header_has_label(const std::string& path) {
    const std::string text = io::read_file(path);
    const std::string first = text.substr(0, text.find('\n'));
    const auto comma = first.rfind(',');
    std::string last = comma == std::string::npos ? first : first.substr(comma + 1);
    while (!last.empty() && (last.back() == '\r' || last.back() == ' ')) last.pop_back();
    return last == "label" || last == "\"label\"";
}

// ---- generate -------------------------------------------------------------

struct GenerateArgs {
    int n = 1000;
    int arms = 5;
    double noise = 0.05;
    std::vector<double> radii{0.5, 1.0};
    std::uint64_t seed = 0;
    std::string out;
};

void write_dataset(const data::Dataset& ds, const std::string& out, json config) {
    data::save_csv(ds, out);
    config["provenance"] = ds.provenance;
    config["rows"] = ds.size();
    config["columns"] = ds.dim();
    io::write_sidecar(out, config);
    std::cout << "wrote " << ds.size() << " points to " << out << '\n';
}

// ---- fit ------------------------------------------------------------------

struct FitArgs {
    std::string data;
    bool labels = false;
    int latent_dim = 2;
    std::string kernel = "rbf";
    double lengthscale = 1.0;
    double variance = 1.0;
    double noise = 0.01;
    int steps = 200;
    double lr = 0.05;
    bool optimize_latents = false;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_fit(const FitArgs& a) {
    const bool has_labels = a.labels || header_has_label(a.data);
    const data::Dataset ds = data::load_csv(a.data, has_labels);
    ds.validate();
    const Eigen::MatrixXd latents = gp::pca_latents(ds.points, a.latent_dim);
    gp::Kernel k0{gp::kernel_family_from_string(a.kernel), a.lengthscale, a.variance};
    k0.validate();
    gp::FitOptions opts;
    opts.optimize_latents = a.optimize_latents;
    const auto fit = gp::fit_hyperparameters(latents, ds.points, k0, a.noise, a.steps, a.lr, opts);
    fit.model.save(a.out);
    json config = base_config("fit");
    config["data"] = a.data;
    config["data_fnv1a64"] = ds.provenance.value("fnv1a64", "");
    config["latent_dim"] = a.latent_dim;
    config["kernel"] = a.kernel;
    config["initial"] = {{"lengthscale", a.lengthscale}, {"variance", a.variance}, {"noise", a.noise}};
    config["steps"] = a.steps;
    config["lr"] = a.lr;
    config["optimize_latents"] = a.optimize_latents;
    config["seed"] = a.seed;
    config["result"] = {{"lengthscale", fit.model.kernel().lengthscale},
                        {"variance", fit.model.kernel().variance},
                        {"noise", fit.model.noise()},
                        {"initial_lml", fit.initial_lml},
                        {"final_lml", fit.final_lml},
                        {"steps", fit.steps}};
    io::write_sidecar(a.out, config);
    std::cout << "kernel " << a.kernel << " lengthscale " << io::format_double(fit.model.kernel().lengthscale)
              << " variance " << io::format_double(fit.model.kernel().variance) << " noise "
              << io::format_double(fit.model.noise()) << '\n';
    std::cout << "log marginal likelihood " << io::format_double(fit.final_lml) << '\n';
    return kExitOk;
}

// ---- geodesic -------------------------------------------------------------

struct GeodesicArgs {
    std::string model;
    bool sphere = false;
    std::vector<std::string> from;
    std::vector<std::string> to;
    std::string pairs_file;
    std::vector<std::string> metrics{"riemann", "finsler", "euclid"};
    int nc = 64;
    int grid = 10;
    bool grid_init = true;
    int steps = 500;
    double tol = 1e-8;
    std::string out;
};

std::vector<experiments::EndpointPair> read_pairs(const GeodesicArgs& a, int q) {
    std::vector<experiments::EndpointPair> pairs;
    if (a.from.size() != a.to.size()) {
        throw CLI::ValidationError("--from/--to", "every --from needs a matching --to");
    }
    for (std::size_t i = 0; i < a.from.size(); ++i) pairs.push_back({parse_point(a.from[i]), parse_point(a.to[i])});
    if (!a.pairs_file.empty()) {
        const data::Dataset ds = data::load_csv(a.pairs_file, false);
        if (ds.dim() != 2 * q) {
            throw ParseError(a.pairs_file + ": expected " + std::to_string(2 * q) + " columns (start, end)");
        }
        for (int i = 0; i < ds.size(); ++i) {
            pairs.push_back({ds.points.row(i).head(q).transpose(), ds.points.row(i).tail(q).transpose()});
        }
    }
    if (pairs.empty()) {
        throw CLI::ValidationError("--from/--to", "no endpoint pairs given");
    }
    for (const auto& p : pairs) {
        if (p.start.size() != q || p.end.size() != q) {
            throw CLI::ValidationError("--from/--to", "endpoint dimension does not match the latent dimension");
        }
    }
    return pairs;
}

int cmd_geodesic(const GeodesicArgs& a) {
    std::unique_ptr<gp::GpModel> model;
    std::unique_ptr<LatentField> field;
    if (a.sphere) {
        field = std::make_unique<SphereField>();
    } else {
        model = std::make_unique<gp::GpModel>(gp::GpModel::load(a.model));
        field = std::make_unique<GpField>(*model);
    }
    const auto pairs = read_pairs(a, field->latent_dim());
    experiments::ComparisonOptions opts;
    opts.kinds = parse_kinds(a.metrics);
    opts.grid_init = a.grid_init;
    opts.grid.grid = a.grid;
    opts.grid.n_points = a.nc;
    opts.minimize.max_iter = a.steps;
    opts.minimize.tol = a.tol;
    const auto rows = experiments::geodesic_comparison(*field, pairs, opts);

    io::write_file(a.out, experiments::comparison_csv(rows));
    const std::filesystem::path out(a.out);
    json curves = json::array();
    for (const auto& r : rows) {
        const std::string name =
            out.stem().string() + "_pair" + std::to_string(r.pair) + "_" + metric::to_string(r.kind) + ".csv";
        const std::string path = (out.parent_path() / name).string();
        io::write_file(path, geodesic::curve_csv(*field, r.curve));
        curves.push_back(path);
        std::cout << "pair " << r.pair << ' ' << metric::to_string(r.kind) << " length_R "
                  << io::format_double(r.length_riemann) << " length_F " << io::format_double(r.length_finsler)
                  << (r.converged ? "" : " (not converged)") << '\n';
    }
    json config = base_config("geodesic");
    config["model"] = a.sphere ? json("sphere") : json(a.model);
    json jp = json::array();
    for (const auto& p : pairs) {
        jp.push_back({{"start", std::vector<double>(p.start.data(), p.start.data() + p.start.size())},
                      {"end", std::vector<double>(p.end.data(), p.end.data() + p.end.size())}});
    }
    config["pairs"] = jp;
    config["metrics"] = a.metrics;
    config["nc"] = a.nc;
    config["grid"] = a.grid;
    config["grid_init"] = a.grid_init;
    config["steps"] = a.steps;
    config["tol"] = a.tol;
    config["curves"] = curves;
    io::write_sidecar(a.out, config);
    return kExitOk;
}

// ---- verify ---------------------------------------------------------------

struct VerifyArgs {
    std::uint64_t seed = 0;
    int specs = 10000;
    int curves = 1000;
    int points = 200;
    std::string dims = "2:1024:dyadic";
    int ensemble = 12;
    int v_samples = 64;
    bool inject_violation = false;
    std::string out;
};

int cmd_verify(const VerifyArgs& a) {
    experiments::BoundSweepOptions bopts;
    bopts.n_specs = a.specs;
    bopts.n_curves = a.curves;
    bopts.n_points = a.points;
    bopts.seed = a.seed;
    if (a.inject_violation) bopts.finsler_scale = 1.5;
    const auto report = experiments::bound_sweep(bopts);

    const auto dims = experiments::parse_dims(a.dims);
    const auto ensemble = experiments::bounded_ensemble(a.ensemble, dims.back(), 2, a.seed);
    const auto sweep = experiments::truncation_sweep(ensemble, dims, a.v_samples, a.seed);

    const std::filesystem::path dir(a.out);
    const std::string conv_path = (dir / "convergence.csv").string();
    const std::string report_path = (dir / "bounds.json").string();
    io::write_file(conv_path, experiments::convergence_csv(sweep));
    json rep = report.to_json();
    rep["convergence"] = {{"M", sweep.M},
                          {"one_plus_M", 1.0 + sweep.M},
                          {"gap_times_D_bounded", sweep.bounded()},
                          {"gap_times_D_non_increasing_after_8", sweep.non_increasing_after(8)}};
    io::write_file(report_path, io::dump_json(rep));

    json config = base_config("verify");
    config["seed"] = a.seed;
    config["specs"] = a.specs;
    config["curves"] = a.curves;
    config["points"] = a.points;
    config["dims"] = a.dims;
    config["ensemble"] = a.ensemble;
    config["v_samples"] = a.v_samples;
    config["inject_violation"] = a.inject_violation;
    io::write_sidecar((dir / "verify.csv").string(), config);

    std::cout << "inequality violations: " << report.total() << " (specs " << report.specs << ", curves "
              << report.curves << ", points " << report.points << ")\n";
    std::cout << "D*gap bounded by 1+M = " << io::format_double(1.0 + sweep.M) << ": "
              << (sweep.bounded() ? "yes" : "no") << '\n';
    return report.total() == 0 && sweep.bounded() ? kExitOk : kExitFailure;
}

// ---- volume / indicatrix --------------------------------------------------

struct VolumeArgs {
    std::string model;
    int grid = 32;
    int k = measure::kVolumeSamples;
    std::string out;
};

int cmd_volume(const VolumeArgs& a) {
    const gp::GpModel model = gp::GpModel::load(a.model);
    const GpField field(model);
    const auto vf = measure::volume_field(field, a.grid, a.k);
    io::write_file(a.out, measure::volume_field_csv(vf));
    json config = base_config("volume");
    config["model"] = a.model;
    config["grid"] = a.grid;
    config["k"] = a.k;
    io::write_sidecar(a.out, config);
    std::cout << "wrote " << vf.points.size() << " grid points to " << a.out << '\n';
    return kExitOk;
}

struct IndicatrixArgs {
    std::string model;
    int grid = 8;
    int k = measure::kIndicatrixSamples;
    std::vector<std::string> at;
    std::vector<std::string> metrics{"riemann", "finsler", "alpha_sigma"};
    std::string out;
};

int cmd_indicatrix(const IndicatrixArgs& a) {
    const gp::GpModel model = gp::GpModel::load(a.model);
    const GpField field(model);
    if (field.latent_dim() != 2) {
        throw UnsupportedError("indicatrix: requires a 2-D latent space");
    }
    std::vector<Eigen::VectorXd> centers;
    for (const auto& s : a.at) centers.push_back(parse_point(s));
    if (centers.empty()) {
        if (a.grid < 2) throw CLI::ValidationError("--grid", "must be at least 2");
        const auto [lo, hi] = *field.bounds();
        for (int iy = 0; iy < a.grid; ++iy) {
            for (int ix = 0; ix < a.grid; ++ix) {
                Eigen::VectorXd z(2);
                z(0) = lo(0) + (hi(0) - lo(0)) * ix / (a.grid - 1);
                z(1) = lo(1) + (hi(1) - lo(1)) * iy / (a.grid - 1);
                centers.push_back(z);
            }
        }
    }
    const auto kinds = parse_kinds(a.metrics);
    std::vector<measure::Indicatrix> inds;
    for (const auto& z : centers) {
        if (z.size() != 2) throw CLI::ValidationError("--at", "points must have two coordinates");
        const auto p = field.metric_at(z);
        for (NormKind kind : kinds) inds.push_back(measure::indicatrix(p, a.k, kind, Eigen::Vector2d(z(0), z(1))));
    }
    io::write_file(a.out, measure::indicatrix_csv(inds));
    json config = base_config("indicatrix");
    config["model"] = a.model;
    config["grid"] = a.grid;
    config["k"] = a.k;
    config["at"] = a.at;
    config["metrics"] = a.metrics;
    io::write_sidecar(a.out, config);
    std::cout << "wrote " << inds.size() << " indicatrices to " << a.out << '\n';
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Stochastic Riemannian and Finsler geometry of Gaussian-process latent spaces"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    int exit_code = kExitOk;

    // generate
    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Generate a synthetic dataset on the unit sphere");
    generate->require_subcommand(1);
    auto* pinwheel = generate->add_subcommand("pinwheel", "Pinwheel mapped to the sphere");
    auto* circles = generate->add_subcommand("circles", "Concentric circles mapped to the sphere");
    for (auto* sub : {pinwheel, circles}) {
        sub->add_option("--n", gen.n, "Number of points")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--noise", gen.noise, "Noise standard deviation")->capture_default_str();
        sub->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
        sub->add_option("--out", gen.out, "Output CSV")->required();
    }
    pinwheel->add_option("--arms", gen.arms, "Number of arms")->capture_default_str()->check(CLI::PositiveNumber);
    circles->add_option("--radii", gen.radii, "Circle radii")->capture_default_str()->delimiter(',');
    pinwheel->callback([&] {
        json config = base_config("generate pinwheel");
        config["n"] = gen.n;
        config["arms"] = gen.arms;
        config["noise"] = gen.noise;
        config["seed"] = gen.seed;
        write_dataset(data::gen_pinwheel_sphere(gen.n, gen.arms, gen.noise, gen.seed), gen.out, config);
    });
    circles->callback([&] {
        json config = base_config("generate circles");
        config["n"] = gen.n;
        config["radii"] = gen.radii;
        config["noise"] = gen.noise;
        config["seed"] = gen.seed;
        write_dataset(data::gen_circles_sphere(gen.n, gen.radii, gen.noise, gen.seed), gen.out, config);
    });

    // fit
    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a GP latent-variable model to a dataset");
    fit_cmd->add_option("--data", fit.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
    fit_cmd->add_flag("--labels", fit.labels, "Last column holds labels (auto-detected from a 'label' header)");
    fit_cmd->add_option("--latent-dim", fit.latent_dim, "Latent dimension")->capture_default_str();
    fit_cmd->add_option("--kernel", fit.kernel, "Kernel family")
        ->capture_default_str()
        ->check(CLI::IsMember({"rbf", "matern52"}));
    fit_cmd->add_option("--lengthscale", fit.lengthscale, "Initial lengthscale")->capture_default_str();
    fit_cmd->add_option("--variance", fit.variance, "Initial kernel variance")->capture_default_str();
    fit_cmd->add_option("--noise", fit.noise, "Initial noise variance")->capture_default_str();
    fit_cmd->add_option("--steps", fit.steps, "Optimiser steps")->capture_default_str();
    fit_cmd->add_option("--lr", fit.lr, "Optimiser learning rate")->capture_default_str();
    fit_cmd->add_flag("--optimize-latents", fit.optimize_latents, "Also optimise the latent coordinates");
    fit_cmd->add_option("--seed", fit.seed, "Random seed (recorded)")->capture_default_str();
    fit_cmd->add_option("--out", fit.out, "Output model JSON")->required();
    fit_cmd->callback([&] { exit_code = cmd_fit(fit); });

    // geodesic
    GeodesicArgs geo;
    auto* geo_cmd = app.add_subcommand("geodesic", "Compute geodesics under several metrics");
    auto* model_opt = geo_cmd->add_option("--model", geo.model, "Model JSON")->check(CLI::ExistingFile);
    auto* sphere_flag = geo_cmd->add_flag("--sphere", geo.sphere, "Use the deterministic unit-sphere chart");
    model_opt->excludes(sphere_flag);
    geo_cmd->add_option("--from", geo.from, "Start point 'x,y' (repeatable)");
    geo_cmd->add_option("--to", geo.to, "End point 'x,y' (repeatable)");
    geo_cmd->add_option("--pairs", geo.pairs_file, "CSV of endpoint pairs")->check(CLI::ExistingFile);
    geo_cmd->add_option("--metric", geo.metrics, "Metrics")->capture_default_str()->check(CLI::IsMember(kMetricNames));
    geo_cmd->add_option("--nc", geo.nc, "Curve points")->capture_default_str()->check(CLI::Range(3, 100000));
    geo_cmd->add_option("--grid", geo.grid, "Initialisation grid size")->capture_default_str()->check(CLI::Range(2, 10000));
    geo_cmd->add_flag("!--no-grid-init", geo.grid_init, "Start from straight lines");
    geo_cmd->add_option("--steps", geo.steps, "Maximum optimiser iterations")->capture_default_str();
    geo_cmd->add_option("--tol", geo.tol, "Relative energy tolerance")->capture_default_str();
    geo_cmd->add_option("--out", geo.out, "Comparison table CSV")->required();
    geo_cmd->callback([&] {
        if (geo.model.empty() && !geo.sphere) {
            throw CLI::RequiredError("--model or --sphere");
        }
        exit_code = cmd_geodesic(geo);
    });

    // verify
    VerifyArgs ver;
    auto* ver_cmd = app.add_subcommand("verify", "Check the norm inequalities and the 1/D convergence");
    ver_cmd->add_option("--seed", ver.seed, "Random seed")->capture_default_str();
    ver_cmd->add_option("--specs", ver.specs, "Random specs for the norm checks")
        ->check(CLI::Range(100, 100000000))
        ->capture_default_str();
    ver_cmd->add_option("--curves", ver.curves, "Random curves for the functional checks")->capture_default_str();
    ver_cmd->add_option("--points", ver.points, "Random 2-D points for the volume checks")->capture_default_str();
    ver_cmd->add_option("--dims", ver.dims, "Dimensions, e.g. 2:1024:dyadic")->capture_default_str();
    ver_cmd->add_option("--ensemble", ver.ensemble, "Specs in the truncation ensemble")->capture_default_str();
    ver_cmd->add_option("--v-samples", ver.v_samples, "Tangent vectors per spec")->capture_default_str();
    ver_cmd->add_flag("--inject-violation", ver.inject_violation, "Harness self-test: perturb the Finsler norm");
    ver_cmd->add_option("--out", ver.out, "Output directory")->required();
    ver_cmd->callback([&] { exit_code = cmd_verify(ver); });

    // volume
    VolumeArgs vol;
    auto* vol_cmd = app.add_subcommand("volume", "Volume densities and their ratio on a latent grid");
    vol_cmd->add_option("--model", vol.model, "Model JSON")->required()->check(CLI::ExistingFile);
    vol_cmd->add_option("--grid", vol.grid, "Grid size")->capture_default_str()->check(CLI::Range(2, 10000));
    vol_cmd->add_option("--k", vol.k, "Angular samples")->capture_default_str()->check(CLI::Range(16, 1000000));
    vol_cmd->add_option("--out", vol.out, "Output CSV")->required();
    vol_cmd->callback([&] { exit_code = cmd_volume(vol); });

    // indicatrix
    IndicatrixArgs ind;
    auto* ind_cmd = app.add_subcommand("indicatrix", "Indicatrices at latent points");
    ind_cmd->add_option("--model", ind.model, "Model JSON")->required()->check(CLI::ExistingFile);
    ind_cmd->add_option("--grid", ind.grid, "Grid size when no --at is given")->capture_default_str();
    ind_cmd->add_option("--k", ind.k, "Angular samples")->capture_default_str()->check(CLI::Range(16, 1000000));
    ind_cmd->add_option("--at", ind.at, "Centre 'x,y' (repeatable)");
    ind_cmd->add_option("--metric", ind.metrics, "Metrics")->capture_default_str()->check(CLI::IsMember(kMetricNames));
    ind_cmd->add_option("--out", ind.out, "Output CSV")->required();
    ind_cmd->callback([&] { exit_code = cmd_indicatrix(ind); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return exit_code;
}

}  // namespace stochgeom::cli
