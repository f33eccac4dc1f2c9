// accum: command-line front end for simulating discovery sequences, fitting
// log-logistic accumulation models, predicting future discoveries and
// comparing fits.
//
// Exit codes: 0 success, 2 usage or input error, 3 numerical failure,
// 4 consistency failure between artifacts.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "accum/discovery.hpp"
#include "accum/error.hpp"
#include "accum/inference.hpp"
#include "accum/io.hpp"
#include "accum/prediction.hpp"
#include "accum/simulators.hpp"
#include "accum/survival.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace accum;

namespace {

constexpr const char* kToolVersion = "1.0.0";

fs::path default_out_dir()
{
    if (const char* env = std::getenv("ACCUM_OUT_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return "accum_out";
}

std::string human(double x)
{
    if (!std::isfinite(x)) {
        return x > 0 ? "inf" : (x < 0 ? "-inf" : "nan");
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

json finite_or_null(double x)
{
    return std::isfinite(x) ? json(x) : json(nullptr);
}

void write_json(const fs::path& path, const json& j)
{
    io::write_file(path, j.dump(2) + "\n");
}

json read_json(const fs::path& path)
{
    try {
        return json::parse(io::read_file(path));
    } catch (const json::exception& e) {
        throw InputError("cannot parse JSON '" + path.string() + "': " + e.what());
    }
}

void write_manifest(const fs::path& path, const std::string& command, const json& config,
                    const std::vector<fs::path>& outputs)
{
    json files = json::array();
    for (const auto& f : outputs) {
        files.push_back({{"file", f.filename().string()}, {"hash", io::file_hash(f)}});
    }
    write_json(path, {{"tool", "accum"},
                      {"version", kToolVersion},
                      {"command", command},
                      {"config", config},
                      {"outputs", files}});
}

std::vector<std::size_t> observed_curve(std::span<const std::uint8_t> d)
{
    std::vector<std::size_t> k(d.size());
    std::size_t acc = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        acc += d[i];
        k[i] = acc;
    }
    return k;
}

template <class T>
T get_field(const json& j, const char* key, const fs::path& where)
{
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw InputError("'" + where.string() + "' lacks a valid '" + key + "' field");
    }
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string kind;
    double alpha = 0.0;
    double sigma = 0.0;
    std::size_t H = 0;
    double shape = 0.0;
    std::string family = "ll3";
    double phi = 1.0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::size_t sites = 0;
    std::size_t covariate_dim = 3;
    std::vector<double> gamma;
    std::string out;
    CLI::Option* alpha_opt = nullptr;
    CLI::Option* sigma_opt = nullptr;
    CLI::Option* h_opt = nullptr;
    CLI::Option* shape_opt = nullptr;
    CLI::Option* phi_opt = nullptr;
};

GeneratorSpec generator_spec(const SimulateArgs& a)
{
    GeneratorSpec spec;
    spec.kind = generator_kind_from_string(a.kind);
    spec.n = a.n;
    spec.seed = a.seed;
    if (a.alpha_opt->count() > 0) spec.alpha = a.alpha;
    if (a.sigma_opt->count() > 0) spec.sigma = a.sigma;
    if (a.h_opt->count() > 0) spec.H = a.H;
    if (a.shape_opt->count() > 0) spec.shape = a.shape;
    if (spec.kind == GeneratorKind::SurvivalModel && a.sites == 0) {
        if (a.alpha_opt->count() == 0) {
            throw InputError("model generator needs --alpha");
        }
        const auto fam = family_from_string(a.family);
        spec.params = SurvivalParams(fam, a.alpha, fam == Family::LL1 ? 0.0 : a.sigma,
                                     fam == Family::LL3 ? a.phi : 1.0);
    }
    return spec;
}

// Default covariate effects for synthetic multi-site data: the intercept column
// carries an LL3 curve with finite richness and the remaining covariates shift
// each coefficient mildly while keeping every site inside the constraints.
Eigen::VectorXd default_gamma(std::size_t p)
{
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(3 * p));
    const auto P = static_cast<Eigen::Index>(p);
    g(0) = 3.0;
    g(P) = -0.3;
    g(2 * P) = -4e-4;
    for (Eigen::Index c = 1; c < P; ++c) {
        g(c) = c % 2 == 1 ? 0.4 : -0.3;
        g(P + c) = -0.1;
        g(2 * P + c) = -1e-4;
    }
    return g;
}

int cmd_simulate(const SimulateArgs& a)
{
    const fs::path out = a.out.empty() ? default_out_dir() : fs::path(a.out);
    json config = {{"kind", a.kind}, {"n", a.n}, {"seed", a.seed}};
    if (a.alpha_opt->count() > 0) config["alpha"] = a.alpha;
    if (a.sigma_opt->count() > 0) config["sigma"] = a.sigma;
    if (a.h_opt->count() > 0) config["H"] = a.H;
    if (a.shape_opt->count() > 0) config["shape"] = a.shape;
    if (generator_kind_from_string(a.kind) == GeneratorKind::SurvivalModel) {
        config["family"] = a.family;
        config["phi"] = a.phi;
    }

    if (a.sites == 0) {
        const GeneratorSpec spec = generator_spec(a);
        const TagSequence tags = generate(spec);
        const fs::path tag_file = out / "tags.txt";
        const fs::path csv_file = out / "indicators.csv";
        io::write_tag_file(tag_file, render_tags(tags));
        const DiscoverySequence d = indicators_of(tags);
        io::write_indicator_csv(csv_file, d);
        write_manifest(out / "manifest.json", "simulate", config, {tag_file, csv_file});
        std::cout << "simulated " << d.size() << " observations with " << d.discoveries()
                  << " distinct tags -> " << out.string() << "\n";
        return 0;
    }

    if (a.covariate_dim == 0) {
        throw DomainError("--covariate-dim must be at least 1");
    }
    const auto kind = generator_kind_from_string(a.kind);
    Eigen::VectorXd gamma = default_gamma(a.covariate_dim);
    if (!a.gamma.empty()) {
        if (a.gamma.size() != 3 * a.covariate_dim) {
            throw InputError("--gamma needs 3 * covariate-dim values");
        }
        gamma = Eigen::Map<const Eigen::VectorXd>(a.gamma.data(),
                                                  static_cast<Eigen::Index>(a.gamma.size()));
    }
    Rng cov_rng(a.seed, a.sites);
    std::vector<Site> sites;
    json site_info = json::array();
    for (std::size_t s = 0; s < a.sites; ++s) {
        std::vector<double> z(a.covariate_dim, 1.0);
        for (std::size_t c = 1; c < z.size(); ++c) {
            z[c] = cov_rng.uniform();
        }
        const std::string id = "site" + std::to_string(s + 1);
        DiscoverySequence d{std::vector<std::uint8_t>{1}};
        if (kind == GeneratorKind::SurvivalModel) {
            const auto params = SurvivalParams::from_beta(Family::LL3, site_beta(gamma, z));
            d = simulate_from_model(params, a.n, a.seed, s);
            json pj;
            to_json(pj, params);
            site_info.push_back({{"site_id", id}, {"params", pj}});
        } else {
            GeneratorSpec spec = generator_spec(a);
            spec.seed = a.seed;
            spec.validate();
            TagSequence tags;
            switch (kind) {
            case GeneratorKind::Dirichlet: tags = simulate_dirichlet(*spec.alpha, a.n, a.seed, s); break;
            case GeneratorKind::PitmanYor:
                tags = simulate_pitman_yor(*spec.alpha, *spec.sigma, a.n, a.seed, s);
                break;
            case GeneratorKind::DirichletMultinomial:
                tags = simulate_dirichlet_multinomial(*spec.sigma, *spec.H, a.n, a.seed, s);
                break;
            case GeneratorKind::Zipf: tags = simulate_zipf(*spec.H, *spec.shape, a.n, a.seed, s); break;
            case GeneratorKind::SurvivalModel: break;
            }
            d = indicators_of(tags);
            site_info.push_back({{"site_id", id}});
        }
        sites.push_back(Site{id, std::move(d), std::move(z)});
    }
    const SiteDataset data(std::move(sites));
    const fs::path sites_file = out / "sites.csv";
    const fs::path cov_file = out / "covariates.csv";
    io::write_site_dataset(sites_file, cov_file, data);
    config["sites"] = a.sites;
    config["covariate_dim"] = a.covariate_dim;
    if (kind == GeneratorKind::SurvivalModel) {
        config["gamma"] = std::vector<double>(gamma.data(), gamma.data() + gamma.size());
    }
    config["site_parameters"] = site_info;
    write_manifest(out / "manifest.json", "simulate", config, {sites_file, cov_file});
    std::cout << "simulated " << a.sites << " sites of " << a.n << " observations -> "
              << out.string() << "\n";
    return 0;
}

// --------------------------------------------------------------------- fit

struct FitArgs {
    std::string input;
    std::string sites;
    std::string covariates;
    std::string family = "ll3";
    std::string method = "mle";
    double split = 1.0;
    std::size_t iters = 15000;
    std::size_t burn = 5000;
    std::uint64_t seed = 0;
    std::size_t chains = 1;
    double prior_sd = 10.0;
    std::size_t min_length = 2;
    std::size_t exclude_below = 0;
    std::string out;
    std::string name;
};

json dic_json(const PosteriorDraws& draws)
{
    const auto s = dic_summary(draws);
    return {{"dic", s.dic}, {"p_d", s.p_d}, {"mean_loglik", s.mean_loglik},
            {"loglik_at_mean", s.loglik_at_mean}};
}

json mcmc_json(const PosteriorDraws& draws)
{
    const auto& m = draws.meta;
    return {{"iterations", m.iterations},
            {"burn_in", m.burn_in},
            {"seed", m.seed},
            {"chains", m.chains},
            {"retained", draws.size()},
            {"tmvn_proposals", m.tmvn_proposals},
            {"tmvn_accepted", m.tmvn_accepted},
            {"tmvn_fallbacks", m.tmvn_fallbacks}};
}

std::size_t constraint_violations(const PosteriorDraws& draws, const SiteDataset* data)
{
    std::size_t bad = 0;
    for (Eigen::Index r = 0; r < draws.draws.rows(); ++r) {
        if (data == nullptr) {
            if (draws.family != Family::LL1 && !(draws.draws(r, 1) < 0.0)) ++bad;
            else if (draws.family == Family::LL3 && !(draws.draws(r, 2) <= 0.0)) ++bad;
            continue;
        }
        for (const auto& s : data->sites()) {
            const Beta b = site_beta(draws.draws.row(r).transpose(), s.covariates);
            if (!(b[1] < 0.0) || !(b[2] <= 0.0)) {
                ++bad;
                break;
            }
        }
    }
    return bad;
}

int cmd_fit(const FitArgs& a, const std::string& argv_line)
{
    const fs::path out = a.out.empty() ? default_out_dir() : fs::path(a.out);
    const Family family = family_from_string(a.family);
    if (a.method != "mle" && a.method != "mcmc") {
        throw InputError("--method must be mle or mcmc");
    }
    const bool multi = !a.sites.empty();
    if (multi == !a.input.empty()) {
        throw InputError("give either --input or --sites with --covariates");
    }
    const std::string stem = a.name.empty() ? "fit_" + std::string(to_string(family)) : a.name;
    const fs::path fit_file = out / (stem + ".json");
    const fs::path draws_file = out / (stem + "_draws.csv");
    IngestOptions ingest;
    ingest.min_length = a.min_length;
    ingest.exclude_below = a.exclude_below;
    McmcOptions mo;
    mo.iterations = a.iters;
    mo.burn_in = a.burn;
    mo.seed = a.seed;
    mo.chains = a.chains;

    json config = {{"family", to_string(family)}, {"method", a.method}, {"split", a.split},
                   {"iterations", a.iters}, {"burn_in", a.burn}, {"seed", a.seed},
                   {"chains", a.chains}, {"prior_sd", a.prior_sd}, {"min_length", a.min_length},
                   {"exclude_below", a.exclude_below}, {"argv", argv_line}};
    json report = {{"kind", "fit"}, {"family", to_string(family)}, {"method", a.method}};
    std::vector<fs::path> outputs{fit_file};

    if (multi) {
        if (a.covariates.empty()) {
            throw InputError("--sites needs --covariates");
        }
        if (a.method != "mcmc" || family != Family::LL3) {
            throw InputError("the covariate model is fitted with --family ll3 --method mcmc");
        }
        if (a.split < 1.0) {
            throw InputError("--split is not supported for multi-site data");
        }
        const fs::path sites_path = fs::absolute(a.sites);
        const fs::path cov_path = fs::absolute(a.covariates);
        const SiteDataset data = io::read_site_dataset(sites_path, cov_path, ingest);
        const std::string hash =
            io::content_hash(io::file_hash(sites_path) + io::file_hash(cov_path));
        const auto prior = PriorSpec::for_sites(data, a.prior_sd);
        const auto draws = run_chains(data, prior, mo);
        write_draws_csv(draws_file, draws);
        outputs.push_back(draws_file);
        const Eigen::VectorXd g = draws.mean();
        json sites = json::array();
        for (const auto& s : data.sites()) {
            const Beta b = site_beta(g, s.covariates);
            json pj;
            to_json(pj, SurvivalParams::from_beta(Family::LL3, b));
            sites.push_back({{"id", s.id},
                             {"n", s.sequence.size()},
                             {"k", s.sequence.discoveries()},
                             {"z", s.covariates},
                             {"params_at_mean", pj}});
        }
        report["model"] = "multi-site";
        report["covariate_dim"] = data.covariate_dim();
        report["gamma_mean"] = std::vector<double>(g.data(), g.data() + g.size());
        report["gamma_names"] = draws.column_names();
        report["sites"] = sites;
        report["sites_file"] = sites_path.string();
        report["covariates_file"] = cov_path.string();
        report["data_hash"] = hash;
        report["dic"] = dic_json(draws);
        report["mcmc"] = mcmc_json(draws);
        report["constraint_violations"] = constraint_violations(draws, &data);
        report["draws_file"] = draws_file.filename().string();
        report["loglik"] = *draws.loglik_at_mean;
        config["sites"] = sites_path.string();
        config["covariates"] = cov_path.string();
    } else {
        const fs::path input = fs::absolute(a.input);
        const DiscoverySequence full = io::read_sequence(input, ingest);
        const DiscoverySequence train = a.split < 1.0 ? split(full, a.split).train : full;
        report["model"] = "single-site";
        report["input"] = input.string();
        report["data_hash"] = io::file_hash(input);
        report["split"] = a.split;
        report["n"] = train.size();
        report["k"] = train.discoveries();
        report["n_total"] = full.size();
        report["k_total"] = full.discoveries();
        config["input"] = input.string();
        SurvivalParams params = SurvivalParams::ll1(1.0);
        if (a.method == "mle") {
            const auto fit = fit_mle(train, family);
            params = fit.params;
            json cov = json::array();
            for (int r = 0; r < 3; ++r) {
                cov.push_back({fit.covariance(r, 0), fit.covariance(r, 1), fit.covariance(r, 2)});
            }
            report["beta"] = fit.beta;
            report["covariance"] = cov;
            report["converged"] = fit.converged;
            report["constraint_active"] = fit.constraint_active;
            report["loglik"] = fit.loglik;
            report["iterations"] = fit.iterations;
            report["dic"] = nullptr;
        } else {
            const auto prior = PriorSpec::for_family(family, a.prior_sd);
            const auto draws = run_chains(train, prior, mo);
            write_draws_csv(draws_file, draws);
            outputs.push_back(draws_file);
            const Eigen::VectorXd m = draws.mean();
            params = SurvivalParams::from_beta(family, {m(0), m(1), m(2)});
            report["beta"] = std::vector<double>{m(0), m(1), m(2)};
            report["loglik"] = *draws.loglik_at_mean;
            report["dic"] = dic_json(draws);
            report["mcmc"] = mcmc_json(draws);
            report["constraint_violations"] = constraint_violations(draws, nullptr);
            report["draws_file"] = draws_file.filename().string();
        }
        json pj;
        to_json(pj, params);
        report["params"] = pj;
        const auto probs = discovery_probs(params, train.size());
        double expected = 0.0;
        for (double p : probs) {
            expected += p;
        }
        report["expected_discoveries"] = expected;
    }
    write_json(fit_file, report);
    write_manifest(out / (stem + ".manifest.json"), "fit", config, outputs);

    std::cout << "fit " << to_string(family) << " (" << a.method << ")";
    if (report.contains("params")) {
        const auto& p = report["params"];
        std::cout << ": alpha=" << human(p["alpha"].get<double>())
                  << " sigma=" << human(p["sigma"].get<double>())
                  << " phi=" << human(p["phi"].get<double>());
    }
    if (!report["dic"].is_null()) {
        std::cout << " DIC=" << human(report["dic"]["dic"].get<double>());
    }
    std::cout << " -> " << fit_file.string() << "\n";
    return 0;
}

// ----------------------------------------------------------------- predict

struct PredictArgs {
    std::string fit;
    std::vector<std::size_t> horizons;
    double level = 0.95;
    std::vector<double> targets{0.99, 0.995};
    std::size_t sims = 2000;
    std::size_t max_draws = 500;
    std::uint64_t seed = 0;
    double tail_tol = kDefaultTailTol;
    std::size_t grid = 100;
    std::string out;
};

std::vector<SurvivalParams> thin(std::vector<SurvivalParams> v, std::size_t max_draws)
{
    if (max_draws == 0 || v.size() <= max_draws) {
        return v;
    }
    std::vector<SurvivalParams> out;
    out.reserve(max_draws);
    for (std::size_t i = 0; i < max_draws; ++i) {
        out.push_back(v[i * v.size() / max_draws]);
    }
    return out;
}

std::string target_key(double t)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", t);
    return buf;
}

// Curve CSV and richness entry for one sample.
json predict_sample(const std::string& id, const std::vector<SurvivalParams>& params, bool posterior,
                    std::size_t n, std::size_t k, std::span<const std::uint8_t> observed,
                    const PredictArgs& a, const fs::path& curve_file)
{
    std::vector<std::size_t> horizons = a.horizons;
    if (horizons.empty()) {
        horizons = {std::max<std::size_t>(1, n / 3), n, 2 * n};
    }
    const auto obs = observed_curve(observed);
    BandOptions bo;
    bo.sims_per_draw = a.sims;
    bo.seed = a.seed;

    // In-sample grid over 1..n.
    std::vector<std::size_t> grid;
    const std::size_t points = std::max<std::size_t>(1, std::min(a.grid, n));
    for (std::size_t i = 1; i <= points; ++i) {
        grid.push_back(std::max<std::size_t>(1, i * n / points));
    }
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    std::string csv = "n,observed,expected,lower,upper\n";
    const auto row = [&](std::size_t at, double mean, double lo, double hi) {
        csv += std::to_string(at) + ',';
        if (at <= obs.size()) {
            csv += std::to_string(obs[at - 1]);
        }
        csv += ',' + io::format_real(mean) + ',' + io::format_real(lo) + ',' + io::format_real(hi) + '\n';
    };
    if (posterior) {
        const auto band = predictive_band(params, 0, 0, grid, a.level, bo);
        for (const auto& b : band) {
            row(b.horizon, b.mean, b.lower, b.upper);
        }
    } else {
        const auto probs = discovery_probs(params.front(), n);
        for (std::size_t g : grid) {
            const PoissonBinomial pb(std::span<const double>(probs).first(g));
            row(g, pb.mean(), static_cast<double>(pb.quantile((1.0 - a.level) / 2.0)),
                static_cast<double>(pb.quantile((1.0 + a.level) / 2.0)));
        }
    }

    std::vector<BandPoint> future;
    if (posterior) {
        future = predictive_band(params, n, k, horizons, a.level, bo);
    } else {
        for (std::size_t h : horizons) {
            const auto e = extrapolate(params.front(), n, k, h, a.level);
            future.push_back({h, e.mean, e.lower, e.upper});
        }
    }
    std::vector<BandPoint> sorted_future = future;
    std::sort(sorted_future.begin(), sorted_future.end(),
              [](const BandPoint& x, const BandPoint& y) { return x.horizon < y.horizon; });
    for (const auto& b : sorted_future) {
        row(n + b.horizon, b.mean, b.lower, b.upper);
    }
    io::write_file(curve_file, csv);

    json table = json::array();
    std::cout << id << ": n=" << n << " k=" << k << "\n";
    std::cout << "  m\tn+m\texpected\tlower\tupper\tobserved\tabs_error\n";
    for (const auto& b : future) {
        const std::size_t at = n + b.horizon;
        json entry = {{"m", b.horizon}, {"n_plus_m", at}, {"expected", b.mean},
                      {"lower", b.lower}, {"upper", b.upper}};
        std::string observed_s = "-";
        std::string err_s = "-";
        if (at <= obs.size()) {
            const double o = static_cast<double>(obs[at - 1]);
            entry["observed"] = obs[at - 1];
            entry["abs_error"] = std::abs(o - b.mean);
            observed_s = std::to_string(obs[at - 1]);
            err_s = human(std::abs(o - b.mean));
        }
        table.push_back(entry);
        std::cout << "  " << b.horizon << '\t' << at << '\t' << human(b.mean) << '\t'
                  << human(b.lower) << '\t' << human(b.upper) << '\t' << observed_s << '\t'
                  << err_s << "\n";
    }

    const auto r = richness(params, n, k, a.tail_tol);
    json entry = {{"id", id}, {"n", n}, {"k", k}, {"infinite", r.infinite},
                  {"predictions", table}, {"curve_file", curve_file.filename().string()}};
    json required = json::object();
    if (r.infinite) {
        entry["explanation"] = r.explanation;
        entry["richness_mean"] = nullptr;
        entry["richness_q025"] = nullptr;
        entry["richness_q975"] = nullptr;
        entry["saturation"] = nullptr;
        entry["saturation_plugin"] = nullptr;
        entry["bounds"] = nullptr;
        entry["approx"] = nullptr;
        entry["variance"] = nullptr;
        for (double t : a.targets) {
            required[target_key(t)] = nullptr;
        }
        std::cout << "  richness: infinite (" << r.explanation << ")\n";
    } else {
        entry["richness_mean"] = r.richness;
        entry["richness_q025"] = posterior ? json(r.draws_summary->q025) : json(nullptr);
        entry["richness_q975"] = posterior ? json(r.draws_summary->q975) : json(nullptr);
        entry["saturation"] = finite_or_null(r.saturation.value_or(NAN));
        entry["saturation_plugin"] = finite_or_null(r.saturation_plugin.value_or(NAN));
        entry["bounds"] = {r.lower, r.upper};
        entry["approx"] = r.approx;
        entry["variance"] = r.variance;
        for (double t : a.targets) {
            required[target_key(t)] = required_m(params, n, k, t);
        }
        std::cout << "  richness: " << human(r.richness) << "  saturation: "
                  << human(r.saturation.value_or(NAN));
        for (auto it = required.begin(); it != required.end(); ++it) {
            std::cout << "  m(" << it.key() << ")=" << it.value().get<std::size_t>();
        }
        std::cout << "\n";
    }
    entry["required_m_for"] = required;
    entry["draws_used"] = params.size();
    return entry;
}

std::string safe_id(const std::string& id)
{
    std::string s = id;
    for (auto& c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') {
            c = '_';
        }
    }
    return s;
}

int cmd_predict(const PredictArgs& a, const std::string& argv_line)
{
    const fs::path out = a.out.empty() ? default_out_dir() : fs::path(a.out);
    for (double t : a.targets) {
        if (!(t > 0.0 && t < 1.0)) {
            throw DomainError("saturation targets must lie in (0, 1)");
        }
    }
    for (std::size_t h : a.horizons) {
        if (h == 0) {
            throw DomainError("horizons must be at least 1");
        }
    }
    const fs::path fit_path = a.fit;
    const json fit = read_json(fit_path);
    const auto method = get_field<std::string>(fit, "method", fit_path);
    const auto model = get_field<std::string>(fit, "model", fit_path);
    const Family family = family_from_string(get_field<std::string>(fit, "family", fit_path));
    const bool posterior = method == "mcmc";
    std::optional<PosteriorDraws> draws;
    if (posterior) {
        const fs::path draws_path =
            fit_path.parent_path() / get_field<std::string>(fit, "draws_file", fit_path);
        draws = read_draws_csv(draws_path, family);
    }
    const fs::path richness_file = out / "richness.json";
    std::vector<fs::path> outputs;
    json samples = json::array();

    if (model == "multi-site") {
        const fs::path sites_path = get_field<std::string>(fit, "sites_file", fit_path);
        const fs::path cov_path = get_field<std::string>(fit, "covariates_file", fit_path);
        const std::string hash =
            io::content_hash(io::file_hash(sites_path) + io::file_hash(cov_path));
        if (hash != get_field<std::string>(fit, "data_hash", fit_path)) {
            throw ConsistencyError("multi-site data changed since the fit (hash mismatch)");
        }
        const SiteDataset data = io::read_site_dataset(sites_path, cov_path);
        if (!draws || draws->model != PosteriorDraws::Model::MultiSite ||
            draws->covariate_dim != data.covariate_dim()) {
            throw ConsistencyError("draws file does not match the multi-site fit");
        }
        for (const auto& s : data.sites()) {
            const auto params = thin(posterior_params(*draws, s.covariates), a.max_draws);
            const fs::path curve = out / ("curve_" + safe_id(s.id) + ".csv");
            samples.push_back(predict_sample(s.id, params, true, s.sequence.size(),
                                             s.sequence.discoveries(), s.sequence.indicators(), a,
                                             curve));
            outputs.push_back(curve);
        }
    } else {
        const fs::path input = get_field<std::string>(fit, "input", fit_path);
        if (io::file_hash(input) != get_field<std::string>(fit, "data_hash", fit_path)) {
            throw ConsistencyError("input data changed since the fit (hash mismatch)");
        }
        const DiscoverySequence full = io::read_sequence(input);
        const auto n = get_field<std::size_t>(fit, "n", fit_path);
        const auto k = get_field<std::size_t>(fit, "k", fit_path);
        if (n > full.size() || observed_curve(full.indicators())[n - 1] != k) {
            throw ConsistencyError("fit report disagrees with its input data");
        }
        std::vector<SurvivalParams> params;
        if (posterior) {
            if (draws->model != PosteriorDraws::Model::SingleSite) {
                throw ConsistencyError("draws file does not match the single-site fit");
            }
            params = thin(posterior_params(*draws), a.max_draws);
        } else {
            params.push_back(params_from_json(fit.at("params")));
        }
        const fs::path curve = out / "curve.csv";
        samples.push_back(
            predict_sample("sample", params, posterior, n, k, full.indicators(), a, curve));
        outputs.push_back(curve);
    }

    json report = {{"kind", "prediction"},
                   {"fit", fs::absolute(fit_path).string()},
                   {"method", method},
                   {"level", a.level},
                   {"data_hash", fit.at("data_hash")},
                   {"samples", samples}};
    write_json(richness_file, report);
    outputs.push_back(richness_file);
    json config = {{"fit", fs::absolute(fit_path).string()}, {"horizons", a.horizons},
                   {"level", a.level}, {"saturation_targets", a.targets},
                   {"sims_per_draw", a.sims}, {"max_draws", a.max_draws}, {"seed", a.seed},
                   {"tail_tol", a.tail_tol}, {"grid", a.grid}, {"argv", argv_line}};
    write_manifest(out / "predict.manifest.json", "predict", config, outputs);
    return 0;
}

// ----------------------------------------------------------------- compare

int cmd_compare(const std::vector<std::string>& fits, const std::string& out_csv)
{
    if (fits.size() < 2) {
        throw InputError("compare needs at least two fit reports");
    }
    struct Row {
        std::string file;
        std::string family;
        double dic;
        double p_d;
    };
    std::vector<Row> rows;
    std::string hash;
    for (const auto& f : fits) {
        const json j = read_json(f);
        const auto h = get_field<std::string>(j, "data_hash", f);
        if (hash.empty()) {
            hash = h;
        } else if (h != hash) {
            throw ConsistencyError("fit '" + f + "' was run on different data (hash " + h +
                                   " vs " + hash + ")");
        }
        if (!j.contains("dic") || j["dic"].is_null()) {
            throw InputError("fit '" + f + "' has no DIC; refit with --method mcmc");
        }
        rows.push_back({f, get_field<std::string>(j, "family", f),
                        j["dic"].at("dic").get<double>(), j["dic"].at("p_d").get<double>()});
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& x, const Row& y) { return x.dic < y.dic; });
    std::cout << "rank\tfamily\tDIC\tp_D\tdelta\tfit\n";
    std::string csv = "rank,family,dic,p_d,delta,fit\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const double delta = r.dic - rows.front().dic;
        std::cout << i + 1 << '\t' << r.family << '\t' << human(r.dic) << '\t' << human(r.p_d)
                  << '\t' << human(delta) << '\t' << r.file << "\n";
        csv += std::to_string(i + 1) + ',' + r.family + ',' + io::format_real(r.dic) + ',' +
               io::format_real(r.p_d) + ',' + io::format_real(delta) + ',' + r.file + '\n';
    }
    if (!out_csv.empty()) {
        io::write_file(out_csv, csv);
    }
    return 0;
}

// --------------------------------------------------------------------- pmf

struct PmfArgs {
    std::string fit;
    std::string family = "ll1";
    double alpha = 1.0;
    double sigma = 0.0;
    double phi = 1.0;
    std::size_t n = 0;
    std::size_t k = 0;
    std::size_t m = 0;
    std::string out;
};

int cmd_pmf(const PmfArgs& a)
{
    SurvivalParams params = SurvivalParams::ll1(1.0);
    if (!a.fit.empty()) {
        params = params_from_json(read_json(a.fit).at("params"));
    } else {
        const Family f = family_from_string(a.family);
        params = SurvivalParams(f, a.alpha, f == Family::LL1 ? 0.0 : a.sigma,
                                f == Family::LL3 ? a.phi : 1.0);
    }
    std::string csv = "k,probability\n";
    if (a.m == 0) {
        if (a.n == 0) {
            throw InputError("pmf needs --n >= 1");
        }
        const auto probs = discovery_probs(params, a.n);
        const PoissonBinomial pb(probs);
        for (std::size_t v = 0; v <= a.n; ++v) {
            csv += std::to_string(v) + ',' + io::format_real(pb.probability(v)) + '\n';
        }
    } else {
        const auto e = extrapolate(params, a.n, a.k, a.m);
        for (std::size_t v = 0; v <= a.m; ++v) {
            csv += std::to_string(a.k + v) + ',' + io::format_real(e.distribution->probability(v)) +
                   '\n';
        }
    }
    if (a.out.empty()) {
        std::cout << csv;
    } else {
        io::write_file(a.out, csv);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Model, predict and compare species accumulation curves"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    std::string argv_line;
    for (int i = 1; i < argc; ++i) {
        argv_line += (i > 1 ? " " : "") + std::string(argv[i]);
    }

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Generate a synthetic tag sequence or multi-site data");
    s->add_option("--kind", sim.kind, "dirichlet | pitman-yor | dirichlet-multinomial | zipf | model")
        ->required();
    sim.alpha_opt = s->add_option("--alpha", sim.alpha, "Concentration alpha");
    sim.sigma_opt = s->add_option("--sigma", sim.sigma, "Discount sigma");
    sim.h_opt = s->add_option("--H", sim.H, "Number of species");
    sim.shape_opt = s->add_option("--shape", sim.shape, "Zipf shape");
    s->add_option("--family", sim.family, "Family for --kind model")->capture_default_str();
    sim.phi_opt = s->add_option("--phi", sim.phi, "phi for --kind model with ll3");
    s->add_option("--n", sim.n, "Sequence length")->required();
    s->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
    s->add_option("--sites", sim.sites, "Generate this many sites with covariates");
    s->add_option("--covariate-dim", sim.covariate_dim, "Covariates per site (first is 1)")
        ->capture_default_str();
    s->add_option("--gamma", sim.gamma, "Covariate effects gamma0|gamma1|gamma2")->delimiter(',');
    s->add_option("--out", sim.out, "Output directory (default $ACCUM_OUT_DIR or accum_out)");

    FitArgs fit;
    auto* f = app.add_subcommand("fit", "Fit a log-logistic accumulation model");
    f->add_option("--input", fit.input, "Tag file or indicator CSV");
    f->add_option("--sites", fit.sites, "Multi-site indicator CSV (site_id,index,discovery)");
    f->add_option("--covariates", fit.covariates, "Site covariates CSV (site_id,z1,...,zp)");
    f->add_option("--family", fit.family, "ll1 | ll2 | ll3")->capture_default_str();
    f->add_option("--method", fit.method, "mle | mcmc")->capture_default_str();
    f->add_option("--split", fit.split, "Fraction of the sequence used for fitting")
        ->capture_default_str();
    f->add_option("--iters", fit.iters, "MCMC iterations")->capture_default_str();
    f->add_option("--burn", fit.burn, "MCMC burn-in")->capture_default_str();
    f->add_option("--seed", fit.seed, "Random seed")->capture_default_str();
    f->add_option("--chains", fit.chains, "Independent chains run concurrently")
        ->capture_default_str();
    f->add_option("--prior-sd", fit.prior_sd, "Prior standard deviation")->capture_default_str();
    f->add_option("--min-length", fit.min_length, "Minimum sequence length")->capture_default_str();
    f->add_option("--exclude-below", fit.exclude_below, "Drop sites shorter than this")
        ->capture_default_str();
    f->add_option("--out", fit.out, "Output directory (default $ACCUM_OUT_DIR or accum_out)");
    f->add_option("--name", fit.name, "Report file stem (default fit_<family>)");

    PredictArgs pred;
    auto* p = app.add_subcommand("predict", "Extrapolate a fitted curve and estimate richness");
    p->add_option("--fit", pred.fit, "Fit report JSON")->required();
    p->add_option("--horizons", pred.horizons, "Future horizons m (default n/3, n, 2n)")
        ->delimiter(',');
    p->add_option("--level", pred.level, "Credible level")->capture_default_str();
    p->add_option("--saturation-target", pred.targets, "Saturation targets for required m")
        ->delimiter(',');
    p->add_option("--sims", pred.sims, "Simulations per posterior draw")->capture_default_str();
    p->add_option("--max-draws", pred.max_draws, "Thin posterior draws to at most this many")
        ->capture_default_str();
    p->add_option("--seed", pred.seed, "Random seed")->capture_default_str();
    p->add_option("--tail-tol", pred.tail_tol, "Richness tail truncation")->capture_default_str();
    p->add_option("--grid", pred.grid, "In-sample curve points")->capture_default_str();
    p->add_option("--out", pred.out, "Output directory (default $ACCUM_OUT_DIR or accum_out)");

    std::vector<std::string> compare_fits;
    std::string compare_out;
    auto* c = app.add_subcommand("compare", "Rank fits of the same data by DIC");
    c->add_option("fits", compare_fits, "Fit report JSON files")->required();
    c->add_option("--out", compare_out, "Also write the ranking as CSV");

    PmfArgs pmf;
    auto* q = app.add_subcommand("pmf", "Export the exact distribution of K_n or of K_{n+m}");
    q->add_option("--fit", pmf.fit, "Take parameters from a fit report");
    q->add_option("--family", pmf.family)->capture_default_str();
    q->add_option("--alpha", pmf.alpha)->capture_default_str();
    q->add_option("--sigma", pmf.sigma)->capture_default_str();
    q->add_option("--phi", pmf.phi)->capture_default_str();
    q->add_option("--n", pmf.n, "Observations so far (or horizon when --m is absent)")->required();
    q->add_option("--k", pmf.k, "Distinct entities among the n observations");
    q->add_option("--m", pmf.m, "Future horizon");
    q->add_option("--out", pmf.out, "Output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*s) return cmd_simulate(sim);
        if (*f) return cmd_fit(fit, argv_line);
        if (*p) return cmd_predict(pred, argv_line);
        if (*c) return cmd_compare(compare_fits, compare_out);
        if (*q) return cmd_pmf(pmf);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return 2;
    } catch (const RegimeError& e) {
        std::cerr << "regime error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const ConsistencyError& e) {
        std::cerr << "consistency failure: " << e.what() << "\n";
        return 4;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "file error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
