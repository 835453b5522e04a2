#include "slicedssm/cli.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "slicedssm/csv.hpp"
#include "slicedssm/diagnostics.hpp"
#include "slicedssm/error.hpp"

namespace slicedssm {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

Variant parse_variant(const std::string& name) {
    if (name == "ssm") return Variant::ssm;
    if (name == "mssm") return Variant::mssm;
    if (name == "ols") return Variant::ols;
    throw config_error("unknown variant '" + name + "' (expected ssm, mssm or ols)");
}

std::string to_string(Variant variant) {
    switch (variant) {
        case Variant::ssm: return "ssm";
        case Variant::mssm: return "mssm";
        case Variant::ols: return "ols";
    }
    return "";
}

DgpSpec RunConfig::default_dgp() {
    DgpSpec spec = DgpSpec::threshold_study();
    spec.covariate_lag = 3;
    return spec;
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open " + path.string() + " for hashing");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md.data(), &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return hex.str();
}

// ---- configuration -------------------------------------------------------

namespace {

json opt_string(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }
json opt_int(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

json alpha0_json(const RunConfig& c) {
    if (c.alpha0_mode == "explicit") return json::array({c.alpha0(0), c.alpha0(1)});
    return c.alpha0_mode;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw config_error("config: '" + where + "' must be an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || item.key() == a;
        if (!ok) throw config_error("config: unknown key '" + item.key() + "' in " + where);
    }
}

template <class T>
void take(const json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

template <class T>
void take_opt(const json& j, const char* key, std::optional<T>& dst) {
    if (!j.contains(key)) return;
    if (j.at(key).is_null()) {
        dst.reset();
    } else {
        dst = j.at(key).get<T>();
    }
}

void take_alpha0(const json& j, RunConfig& c) {
    if (!j.contains("alpha0")) return;
    const auto& v = j.at("alpha0");
    if (v.is_string()) {
        const auto mode = v.get<std::string>();
        if (mode != "first_obs" && mode != "zero") {
            throw config_error("config: alpha0 must be \"first_obs\", \"zero\" or [level, slope]");
        }
        c.alpha0_mode = mode;
    } else if (v.is_array() && v.size() == 2) {
        c.alpha0_mode = "explicit";
        c.alpha0 = Eigen::Vector2d(v[0].get<double>(), v[1].get<double>());
    } else {
        throw config_error("config: alpha0 must be \"first_obs\", \"zero\" or [level, slope]");
    }
}

YearMonth parse_year_month(const std::string& text) {
    int year = 0;
    int month = 0;
    char dash = 0;
    std::istringstream in(text);
    if (!(in >> year >> dash >> month) || dash != '-' || month < 1 || month > 12 || !in.eof()) {
        throw config_error("expected YYYY-MM, got '" + text + "'");
    }
    return {year, month};
}

}  // namespace

std::string config_json(const RunConfig& c) {
    json j;
    j["inputs"] = {{"counts", opt_string(c.counts)},
                   {"losses", opt_string(c.losses)},
                   {"panel", opt_string(c.panel)},
                   {"chain", opt_string(c.chain)}};
    j["state"] = c.state;
    j["k"] = c.k;
    j["variant"] = to_string(c.variant);
    j["seed"] = c.seed;
    j["transform"] = {{"mu_x", c.transform.mu_x},
                      {"sigma_x", c.transform.sigma_x},
                      {"link", to_string(c.transform.link)},
                      {"zero_loss_policy", to_string(c.transform.zero_loss_policy)},
                      {"estimate_scale", c.estimate_scale}};
    j["slice"] = {{"lags", c.slice.lags},
                  {"threshold", c.slice.threshold},
                  {"threshold_scale", to_string(c.slice.threshold_scale)}};
    j["prior"] = {{"tau2", c.prior.tau2}, {"rho", c.prior.rho}, {"a", c.prior.a}, {"b", c.prior.b}};
    j["gibbs"] = {{"n_iter", c.n_iter}, {"burn_in", c.burn_in}, {"alpha0", alpha0_json(c)}};
    j["forecast"] = {{"t0_first", opt_int(c.t0_first)},
                     {"t0_last", opt_int(c.t0_last)},
                     {"crps_nodes", c.crps_nodes},
                     {"threads", c.threads},
                     {"warm_start", c.warm_start}};
    j["simulate"] = {{"horizon", c.dgp.horizon},
                     {"beta_upper", c.dgp.beta_upper},
                     {"beta_lower", c.dgp.beta_lower},
                     {"sigma_y2", c.dgp.sigma_y2},
                     {"sigma_mu2", c.dgp.sigma_mu2},
                     {"sigma_nu2", c.dgp.sigma_nu2},
                     {"alpha0", json::array({c.dgp.alpha0(0), c.dgp.alpha0(1)})},
                     {"threshold", c.dgp.threshold},
                     {"covariate_lag", c.dgp.covariate_lag},
                     {"start", c.sim_start.str()}};
    return j.dump(2) + "\n";
}

RunConfig parse_config_json(const std::string& text, RunConfig c) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw config_error(std::string("config: invalid JSON: ") + e.what());
    }
    if (j.is_object() && j.contains("config") && j.contains("artifacts")) j = json(j.at("config"));
    try {
        check_keys(j,
                   {"inputs", "state", "k", "variant", "seed", "transform", "slice", "prior", "gibbs",
                    "forecast", "simulate"},
                   "top level");
        if (j.contains("inputs")) {
            const auto& in = j.at("inputs");
            check_keys(in, {"counts", "losses", "panel", "chain"}, "inputs");
            take_opt(in, "counts", c.counts);
            take_opt(in, "losses", c.losses);
            take_opt(in, "panel", c.panel);
            take_opt(in, "chain", c.chain);
        }
        take(j, "state", c.state);
        take(j, "k", c.k);
        if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
        take(j, "seed", c.seed);
        if (j.contains("transform")) {
            const auto& t = j.at("transform");
            check_keys(t, {"mu_x", "sigma_x", "link", "zero_loss_policy", "estimate_scale"}, "transform");
            take(t, "mu_x", c.transform.mu_x);
            take(t, "sigma_x", c.transform.sigma_x);
            if (t.contains("link")) c.transform.link = parse_link(t.at("link").get<std::string>());
            if (t.contains("zero_loss_policy")) {
                c.transform.zero_loss_policy = parse_zero_loss_policy(t.at("zero_loss_policy").get<std::string>());
            }
            take(t, "estimate_scale", c.estimate_scale);
        }
        if (j.contains("slice")) {
            const auto& s = j.at("slice");
            check_keys(s, {"lags", "threshold", "threshold_scale"}, "slice");
            take(s, "lags", c.slice.lags);
            take(s, "threshold", c.slice.threshold);
            if (s.contains("threshold_scale")) {
                c.slice.threshold_scale = parse_threshold_scale(s.at("threshold_scale").get<std::string>());
            }
        }
        if (j.contains("prior")) {
            const auto& p = j.at("prior");
            check_keys(p, {"tau2", "rho", "a", "b"}, "prior");
            take(p, "tau2", c.prior.tau2);
            take(p, "rho", c.prior.rho);
            take(p, "a", c.prior.a);
            take(p, "b", c.prior.b);
        }
        if (j.contains("gibbs")) {
            const auto& g = j.at("gibbs");
            check_keys(g, {"n_iter", "burn_in", "alpha0"}, "gibbs");
            take(g, "n_iter", c.n_iter);
            take(g, "burn_in", c.burn_in);
            take_alpha0(g, c);
        }
        if (j.contains("forecast")) {
            const auto& f = j.at("forecast");
            check_keys(f, {"t0_first", "t0_last", "crps_nodes", "threads", "warm_start"}, "forecast");
            take_opt(f, "t0_first", c.t0_first);
            take_opt(f, "t0_last", c.t0_last);
            take(f, "crps_nodes", c.crps_nodes);
            take(f, "threads", c.threads);
            take(f, "warm_start", c.warm_start);
        }
        if (j.contains("simulate")) {
            const auto& s = j.at("simulate");
            check_keys(s,
                       {"horizon", "beta_upper", "beta_lower", "sigma_y2", "sigma_mu2", "sigma_nu2", "alpha0",
                        "threshold", "covariate_lag", "start"},
                       "simulate");
            take(s, "horizon", c.dgp.horizon);
            take(s, "beta_upper", c.dgp.beta_upper);
            take(s, "beta_lower", c.dgp.beta_lower);
            take(s, "sigma_y2", c.dgp.sigma_y2);
            take(s, "sigma_mu2", c.dgp.sigma_mu2);
            take(s, "sigma_nu2", c.dgp.sigma_nu2);
            if (s.contains("alpha0")) {
                const auto v = s.at("alpha0").get<std::vector<double>>();
                if (v.size() != 2) throw config_error("config: simulate.alpha0 must have two entries");
                c.dgp.alpha0 = Eigen::Vector2d(v[0], v[1]);
            }
            take(s, "threshold", c.dgp.threshold);
            take(s, "covariate_lag", c.dgp.covariate_lag);
            if (s.contains("start")) c.sim_start = parse_year_month(s.at("start").get<std::string>());
        }
    } catch (const json::exception& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    return c;
}

// ---- run plumbing --------------------------------------------------------

namespace {

/// Error raised inside a named pipeline stage.
struct StageError {
    std::string stage;
    Error error;
};

template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw StageError{name, e};
    } catch (const std::bad_alloc&) {
        throw StageError{name, numerical_error("out of memory")};
    }
}

class Run {
public:
    Run(std::string command, const RunConfig& config) : command_(std::move(command)), config_(config) {
        dir_ = config.out;
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw config_error("cannot create output directory " + dir_.string() + ": " + ec.message());
    }

    fs::path path(const std::string& name) const { return dir_ / name; }

    void emit(const std::string& name, const std::string& contents) {
        csv::write_atomic(path(name), contents);
        artifacts_.emplace_back(name, sha256_file(path(name)));
    }

    void record(const std::string& name) { artifacts_.emplace_back(name, sha256_file(path(name))); }

    void input(const std::string& file) { inputs_.emplace_back(file, sha256_file(file)); }

    void finish() {
        json m;
        m["command"] = command_;
        m["seed"] = config_.seed;
        m["config"] = json::parse(config_json(config_));
        json in = json::object();
        for (const auto& [name, hash] : inputs_) in[name] = hash;
        m["inputs"] = in;
        json art = json::object();
        for (const auto& [name, hash] : artifacts_) art[name] = hash;
        m["artifacts"] = art;
        csv::write_atomic(path("manifest.json"), m.dump(2) + "\n");
    }

private:
    std::string command_;
    RunConfig config_;
    fs::path dir_;
    std::vector<std::pair<std::string, std::string>> inputs_;
    std::vector<std::pair<std::string, std::string>> artifacts_;
};

void validate_config(const RunConfig& c) {
    if (c.k < 1) throw config_error("k must be at least 1");
    c.transform.validate();
    c.slice.validate(c.k);
    c.prior.validate();
    if (c.n_iter < 1 || c.burn_in < 0 || c.burn_in >= c.n_iter) {
        throw config_error("need n_iter >= 1 and 0 <= burn_in < n_iter");
    }
}

SeriesPanel load_panel(const RunConfig& c, Run& run, TransformSpec& transform) {
    transform = c.transform;
    if (c.panel) {
        if (c.counts || c.losses) throw config_error("give either a panel or counts + losses, not both");
        auto panel = read_panel_csv(*c.panel);
        if (!c.state.empty() && c.state != panel.state) {
            throw config_error("panel holds state '" + panel.state + "', not '" + c.state + "'");
        }
        run.input(*c.panel);
        return panel;
    }
    if (!c.counts || !c.losses) throw config_error("an input panel or both counts and losses files are required");
    if (c.state.empty()) throw config_error("--state is required with counts + losses input");
    const auto counts = read_counts_csv(*c.counts);
    const auto losses = read_losses_csv(*c.losses);
    run.input(*c.counts);
    run.input(*c.losses);
    const auto totals = aggregate_losses(losses);
    if (c.estimate_scale) transform = estimate_loss_scale(totals, transform);
    return build_panel(counts, totals, c.state, transform);
}

DesignMatrix make_design(const SeriesPanel& panel, const RunConfig& c, Variant variant) {
    if (variant == Variant::mssm) return build_design(panel, c.slice);
    return build_unsliced_design(panel, c.slice.lags);
}

Eigen::Vector2d resolve_alpha0(const RunConfig& c, const FitData& data) {
    if (c.alpha0_mode == "explicit") return c.alpha0;
    if (c.alpha0_mode == "zero") return Eigen::Vector2d::Zero();
    return Eigen::Vector2d(data.y(0), 0.0);
}

GibbsConfig gibbs_config(const RunConfig& c, const FitData& data) {
    GibbsConfig g;
    g.n_iter = c.n_iter;
    g.burn_in = c.burn_in;
    g.seed = c.seed;
    g.alpha0 = resolve_alpha0(c, data);
    return g;
}

struct Window {
    int first;
    int last;
};

Window resolve_window(const RunConfig& c, const FitData& data, Variant variant) {
    const int n = static_cast<int>(data.size());
    const int min_t0 = variant == Variant::ols ? 2 : 1;
    const int last = c.t0_last.value_or(n - 1);
    const int first = c.t0_first.value_or(std::max(min_t0, last - 41));
    return {first, last};
}

std::string fmt(double v) { return csv::format_double(v); }

// ---- subcommands ---------------------------------------------------------

int cmd_simulate(const RunConfig& c, std::ostream& out) {
    const auto sim = stage("simulate", [&] { return simulate_dgp([&] {
        DgpSpec spec = c.dgp;
        spec.seed = c.seed;
        return spec;
    }()); });
    Run run("simulate", c);
    const std::string state = c.state.empty() ? "SIM" : c.state;
    stage("output", [&] {
        const auto panel = to_panel(sim, c.transform, state, c.sim_start);
        run.emit("panel.csv", panel_csv(panel));

        std::string truth = "t,year,month,x,x_lower,x_upper,mu,nu,y,rate,rate_mu,shock\n";
        for (Eigen::Index t = 0; t < sim.horizon(); ++t) {
            const auto when = panel.months[static_cast<std::size_t>(t)];
            truth += std::to_string(t + 1) + "," + std::to_string(when.year) + "," + std::to_string(when.month) +
                     "," + fmt(sim.x(t)) + "," + fmt(sim.design(t, 0)) + "," + fmt(sim.design(t, 1)) + "," +
                     fmt(sim.mu(t)) + "," + fmt(sim.nu(t)) + "," + fmt(sim.y(t)) + "," + fmt(sim.rate(t)) +
                     "," + fmt(sim.rate_mu(t)) + "," + (sim.shock[static_cast<std::size_t>(t)] ? "1" : "0") +
                     "\n";
        }
        run.emit("truth.csv", truth);

        // A ready-made fit configuration for the simulated panel.
        RunConfig fit = c;
        fit.panel = "panel.csv";
        fit.counts.reset();
        fit.losses.reset();
        fit.state = state;
        fit.slice.threshold = c.dgp.threshold;
        fit.slice.threshold_scale = ThresholdScale::transformed;
        run.emit("fit_config.json", config_json(fit));
        run.finish();
        return 0;
    });
    int shocks = 0;
    for (bool s : sim.shock) shocks += s ? 1 : 0;
    out << "simulated " << sim.horizon() << " months (" << shocks << " covariate exceedances) into " << c.out
        << "\n";
    return 0;
}

int cmd_fit(const RunConfig& c, std::ostream& out) {
    if (c.variant == Variant::ols) throw StageError{"config", config_error("fit supports ssm and mssm only")};
    stage("config", [&] { validate_config(c); return 0; });
    Run run("fit", c);
    TransformSpec transform;
    const auto panel = stage("ingest", [&] { return load_panel(c, run, transform); });
    const auto design = stage("design", [&] { return make_design(panel, c, c.variant); });
    const auto data = stage("design", [&] { return make_fit_data(panel, design, transform.link); });
    const auto chain = stage("fit", [&] {
        return run_gibbs(data.y, data.x, c.prior, gibbs_config(c, data), data.names);
    });
    const auto summary = stage("summarize", [&] { return summarize(chain); });
    stage("output", [&] {
        run.emit("chain.csv", chain_csv(chain));
        write_latent_csv(run.path("latent.csv"), chain);
        run.record("latent.csv");
        run.emit("summary.csv", summary_csv(summary));
        run.emit("traces.csv", traces_csv(export_traces(chain)));
        run.emit("ess.csv", ess_csv(chain_ess(chain)));
        run.finish();
        return 0;
    });
    out << "fit " << to_string(c.variant) << " on " << data.size() << " months (" << design.truncated_rows
        << " dropped for lag history), " << chain.size() << " kept draws\n";
    out << summary_csv(summary);
    return 0;
}

struct Scored {
    std::string csv;
    double mean = 0.0;
    std::vector<std::string> warnings;
};

Scored score_variant(const RunConfig& c, const SeriesPanel& panel, const TransformSpec& transform,
                     Variant variant) {
    const auto design = stage("design", [&] { return make_design(panel, c, variant); });
    const auto data = stage("design", [&] { return make_fit_data(panel, design, transform.link); });
    const auto window = resolve_window(c, data, variant);
    return stage("forecast", [&] {
        Scored s;
        if (variant == Variant::ols) {
            const auto r = ols_baseline(data, window.first, window.last);
            s.csv = forecast_csv(r, data);
            s.mean = r.mean_abs_error;
            s.warnings = r.warnings;
        } else {
            RollingOptions opts;
            opts.prior = c.prior;
            opts.gibbs = gibbs_config(c, data);
            opts.gibbs.store_paths = false;
            opts.crps = CrpsConfig::trapezoid(c.crps_nodes);
            opts.threads = c.threads;
            opts.warm_start = c.warm_start;
            const auto r = rolling_forecast(data, window.first, window.last, opts);
            s.csv = forecast_csv(r, data);
            s.mean = r.mean_crps;
        }
        return s;
    });
}

int cmd_predict(const RunConfig& c, std::ostream& out, std::ostream& err) {
    stage("config", [&] { validate_config(c); return 0; });
    Run run("predict", c);
    TransformSpec transform;
    const auto panel = stage("ingest", [&] { return load_panel(c, run, transform); });
    const auto scored = score_variant(c, panel, transform, c.variant);
    for (const auto& w : scored.warnings) err << "warning: " << w << "\n";
    stage("output", [&] {
        run.emit("forecast_" + to_string(c.variant) + ".csv", scored.csv);
        run.finish();
        return 0;
    });
    out << (c.variant == Variant::ols ? "mean_abs_error " : "mean_crps ") << fmt(scored.mean) << "\n";
    return 0;
}

int cmd_score(const RunConfig& c, std::ostream& out, std::ostream& err) {
    stage("config", [&] { validate_config(c); return 0; });
    Run run("score", c);
    TransformSpec transform;
    const auto panel = stage("ingest", [&] { return load_panel(c, run, transform); });
    std::string table = "variant,metric,mean\n";
    for (Variant v : {Variant::ssm, Variant::mssm, Variant::ols}) {
        const auto scored = score_variant(c, panel, transform, v);
        for (const auto& w : scored.warnings) err << "warning: " << w << "\n";
        stage("output", [&] {
            run.emit("forecast_" + to_string(v) + ".csv", scored.csv);
            return 0;
        });
        table += to_string(v) + "," + (v == Variant::ols ? "abs_error" : "crps") + "," + fmt(scored.mean) + "\n";
    }
    stage("output", [&] {
        run.emit("score.csv", table);
        run.finish();
        return 0;
    });
    out << table;
    return 0;
}

int cmd_summarize(const RunConfig& c, std::ostream& out) {
    if (!c.chain) throw StageError{"config", config_error("--chain is required")};
    Run run("summarize", c);
    const auto chain = stage("ingest", [&] {
        auto ch = read_chain_csv(*c.chain);
        run.input(*c.chain);
        return ch;
    });
    const auto summary = stage("summarize", [&] { return summarize(chain); });
    stage("output", [&] {
        run.emit("summary.csv", summary_csv(summary));
        run.emit("ess.csv", ess_csv(chain_ess(chain)));
        run.finish();
        return 0;
    });
    out << summary_csv(summary);
    return 0;
}

struct Flags {
    std::string config, state, variant, out, counts, losses, panel, chain, threshold_scale, preset, link, alpha0,
        loss_scale;
    std::uint64_t seed = 0;
    int n_iter = 0, burn_in = 0, t0_first = 0, t0_last = 0, horizon = 0, crps_nodes = 0, k = 0;
    double threshold = 0.0;
    std::vector<int> lags;
    unsigned threads = 0;
    bool warm_start = false;
};

void add_flags(CLI::App& app, Flags& f) {
    app.add_option("--config", f.config, "JSON config file or a previous run's manifest.json");
    app.add_option("--state", f.state, "State code");
    app.add_option("--variant", f.variant, "Model variant: ssm, mssm or ols");
    app.add_option("--seed", f.seed, "Root random seed");
    app.add_option("--out", f.out, "Output directory");
    app.add_option("--counts", f.counts, "Monthly delinquency counts CSV");
    app.add_option("--losses", f.losses, "Hazard loss records CSV");
    app.add_option("--panel", f.panel, "Prepared panel CSV (e.g. from simulate)");
    app.add_option("--chain", f.chain, "Chain CSV to summarize");
    app.add_option("--k", f.k, "Delinquency horizon in months");
    app.add_option("--lags", f.lags, "Covariate lags")->delimiter(',');
    app.add_option("--threshold", f.threshold, "Slicing threshold");
    app.add_option("--threshold-scale", f.threshold_scale, "raw_dollars or transformed");
    app.add_option("--link", f.link, "Response link: logit or probit");
    app.add_option("--loss-scale", f.loss_scale, "Loss transform: estimate (from the loss file) or published");
    app.add_option("--n-iter", f.n_iter, "Gibbs sweeps");
    app.add_option("--burn-in", f.burn_in, "Discarded leading sweeps");
    app.add_option("--alpha0", f.alpha0, "Initial state: first_obs, zero or LEVEL,SLOPE");
    app.add_option("--t0-first", f.t0_first, "First training length of the rolling forecast");
    app.add_option("--t0-last", f.t0_last, "Last training length of the rolling forecast");
    app.add_option("--crps-nodes", f.crps_nodes, "Trapezoid nodes for CRPS quadrature");
    app.add_option("--threads", f.threads, "Worker threads for rolling windows (0 = all cores)");
    app.add_flag("--warm-start", f.warm_start, "Start each window from the previous window's last draw");
    app.add_option("--preset", f.preset, "Simulation preset: threshold-study");
    app.add_option("--horizon", f.horizon, "Simulated months");
}

bool given(const CLI::App& app, const char* name) { return app.count(name) > 0; }

RunConfig resolve(const CLI::App& app, const Flags& f) {
    RunConfig c;
    if (given(app, "--config")) {
        std::ifstream in(f.config, std::ios::binary);
        if (!in) throw config_error("cannot open config file " + f.config);
        std::stringstream buf;
        buf << in.rdbuf();
        c = parse_config_json(buf.str(), c);
        const fs::path base = fs::absolute(f.config).parent_path();
        for (auto* p : {&c.counts, &c.losses, &c.panel, &c.chain}) {
            if (*p && fs::path(**p).is_relative()) *p = (base / **p).lexically_normal().string();
        }
    }
    if (given(app, "--preset")) {
        if (f.preset != "threshold-study") throw config_error("unknown preset '" + f.preset + "'");
        const int lag = c.dgp.covariate_lag;
        c.dgp = DgpSpec::threshold_study();
        c.dgp.covariate_lag = lag;
    }
    if (given(app, "--state")) c.state = f.state;
    if (given(app, "--variant")) c.variant = parse_variant(f.variant);
    if (given(app, "--seed")) c.seed = f.seed;
    if (given(app, "--out")) c.out = f.out;
    if (given(app, "--counts")) c.counts = fs::absolute(f.counts).string();
    if (given(app, "--losses")) c.losses = fs::absolute(f.losses).string();
    if (given(app, "--panel")) {
        c.panel = fs::absolute(f.panel).string();
        if (!given(app, "--counts")) c.counts.reset();
        if (!given(app, "--losses")) c.losses.reset();
    }
    if (given(app, "--chain")) c.chain = fs::absolute(f.chain).string();
    if (given(app, "--k")) c.k = f.k;
    if (given(app, "--lags")) c.slice.lags = f.lags;
    if (given(app, "--threshold")) c.slice.threshold = f.threshold;
    if (given(app, "--threshold-scale")) c.slice.threshold_scale = parse_threshold_scale(f.threshold_scale);
    if (given(app, "--link")) c.transform.link = parse_link(f.link);
    if (given(app, "--loss-scale")) {
        if (f.loss_scale == "published") {
            c.estimate_scale = false;
            c.transform.mu_x = TransformSpec::published_loss_scale().mu_x;
            c.transform.sigma_x = TransformSpec::published_loss_scale().sigma_x;
        } else if (f.loss_scale == "estimate") {
            c.estimate_scale = true;
        } else {
            throw config_error("--loss-scale must be estimate or published");
        }
    }
    if (given(app, "--n-iter")) c.n_iter = f.n_iter;
    if (given(app, "--burn-in")) c.burn_in = f.burn_in;
    if (given(app, "--alpha0")) {
        const std::string text = f.alpha0.find(',') == std::string::npos ? "\"" + f.alpha0 + "\""
                                                                          : "[" + f.alpha0 + "]";
        c = parse_config_json("{\"gibbs\": {\"alpha0\": " + text + "}}", c);
    }
    if (given(app, "--t0-first")) c.t0_first = f.t0_first;
    if (given(app, "--t0-last")) c.t0_last = f.t0_last;
    if (given(app, "--crps-nodes")) c.crps_nodes = f.crps_nodes;
    if (given(app, "--threads")) c.threads = f.threads;
    if (given(app, "--warm-start")) c.warm_start = f.warm_start;
    if (given(app, "--horizon")) c.dgp.horizon = f.horizon;
    return c;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sliced local-linear-trend state-space model: simulate, fit, forecast, score"};
    app.require_subcommand(1);
    Flags flags;
    const std::array<std::pair<const char*, const char*>, 5> commands{{
        {"simulate", "Simulate the threshold-shock process into a panel CSV"},
        {"fit", "Fit ssm or mssm by Gibbs sampling and export the chain"},
        {"predict", "Rolling one-step forecasts for one variant with CRPS"},
        {"score", "Rolling forecasts for ssm, mssm and ols, compared"},
        {"summarize", "Posterior summary and ESS of a chain CSV"},
    }};
    for (const auto& [name, help] : commands) add_flags(*app.add_subcommand(name, help), flags);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return 0;
        err << "error [config]: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::config);
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    try {
        const RunConfig config = stage("config", [&] { return resolve(*sub, flags); });
        if (command == "simulate") return cmd_simulate(config, out);
        if (command == "fit") return cmd_fit(config, out);
        if (command == "predict") return cmd_predict(config, out, err);
        if (command == "score") return cmd_score(config, out, err);
        return cmd_summarize(config, out);
    } catch (const StageError& e) {
        err << "error [" << e.stage << "]: " << e.error.what() << "\n";
        return e.error.exit_code();
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    }
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace slicedssm
