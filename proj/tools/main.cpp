#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "tcproc/conjugate.hpp"
#include "tcproc/io.hpp"
#include "tcproc/pde.hpp"
#include "tcproc/procedure.hpp"
#include "tcproc/simulate.hpp"
#include "tcproc/stochvol.hpp"

namespace fs = std::filesystem;
using namespace tcproc;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string preset_name;
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    int paths = 10000;
    int refine = 0;  // halves dx and dt `refine` times
};

ProblemConfig resolve_config(const CommonOpts& opts) {
    ProblemConfig cfg;
    if (!opts.config_path.empty())
        cfg = load_config_file(opts.config_path);
    else if (!opts.preset_name.empty())
        cfg = preset(opts.preset_name);
    else
        throw ConfigError("config", "either --config or --preset is required");
    for (int r = 0; r < opts.refine; ++r) {
        cfg.grid.nt *= 2;
        for (auto& n : cfg.grid.nx) n = 2 * n - 1;
    }
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON config file");
    cmd->add_option("--preset", opts.preset_name, "named preset");
    cmd->add_option("--out-dir", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "master RNG seed");
    cmd->add_option("--paths", opts.paths, "Monte-Carlo path count");
    cmd->add_option("--refine", opts.refine, "grid refinement rounds");
}

ExperimentManifest start_manifest(const ProblemConfig& cfg, const CommonOpts& opts) {
    ExperimentManifest m;
    m.config_hash = fnv1a_hash(cfg.source.is_null() ? cfg.name : cfg.source.dump());
    m.seed = opts.seed;
    m.preset_name = cfg.name;
    return m;
}

int run_conjugate(const CommonOpts& opts) {
    ProblemConfig cfg = resolve_config(opts);
    fs::create_directories(opts.out_dir);
    auto t_start = std::chrono::steady_clock::now();

    double t = cfg.grid.t0;
    Vec x = cfg.start;
    int d = cfg.control_set.dim;
    std::vector<std::vector<double>> rows;
    const int n_z = 41;
    for (int i = 0; i < n_z; ++i) {
        double zval = -2.0 + 4.0 * i / (n_z - 1);
        Vec z = Vec::Zero(d);
        z(d - 1) = zval;
        ConjugateResult r =
            fenchel_numeric(cfg.penalty, cfg.control_set, t, x, z, 64, 40);
        std::vector<double> row;
        for (int k = 0; k < d; ++k) row.push_back(z(k));
        row.push_back(r.value);
        for (int k = 0; k < d; ++k) row.push_back(r.argmax(k));
        rows.push_back(std::move(row));
    }
    std::vector<std::string> header;
    for (int k = 0; k < d; ++k) header.push_back("z" + std::to_string(k));
    header.push_back("f");
    for (int k = 0; k < d; ++k) header.push_back("argmax" + std::to_string(k));
    fs::path out = fs::path(opts.out_dir) / "conjugate.csv";
    write_csv(out, header, rows);

    ExperimentManifest m = start_manifest(cfg, opts);
    m.outputs = {out.string()};
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    write_manifest(fs::path(opts.out_dir) / "manifest.json", m);
    return 0;
}

int run_simulate(const CommonOpts& opts) {
    ProblemConfig cfg = resolve_config(opts);
    fs::create_directories(opts.out_dir);
    auto t_start = std::chrono::steady_clock::now();

    MarkovControl ctrl = zero_control(cfg.control_set.dim, cfg.grid.t0, cfg.grid.t1,
                                      cfg.grid.state_lo, cfg.grid.state_hi);
    PathBatch batch = simulate_paths(cfg.diffusion, cfg.control_set, ctrl, cfg.grid.t0,
                                     cfg.start, cfg.grid, opts.paths, opts.seed);

    std::vector<std::string> header{"path_id", "step"};
    for (int k = 0; k < batch.dim(); ++k) header.push_back("x" + std::to_string(k));
    std::vector<std::vector<double>> rows;
    int dump = std::min(batch.n_paths(), 100);
    for (int j = 0; j < dump; ++j) {
        for (int k = 0; k <= batch.n_steps(); ++k) {
            std::vector<double> row{static_cast<double>(j), static_cast<double>(k)};
            for (int c = 0; c < batch.dim(); ++c) row.push_back(batch.states[k](c, j));
            rows.push_back(std::move(row));
        }
    }
    fs::path out = fs::path(opts.out_dir) / "paths.csv";
    write_csv(out, header, rows);

    ExperimentManifest m = start_manifest(cfg, opts);
    m.outputs = {out.string()};
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    write_manifest(fs::path(opts.out_dir) / "manifest.json", m);
    return 0;
}

int run_solve_control(const CommonOpts& opts) {
    ProblemConfig cfg = resolve_config(opts);
    fs::create_directories(opts.out_dir);
    auto t_start = std::chrono::steady_clock::now();

    ValueField vf = backward_induction(cfg.diffusion, cfg.control_set, cfg.penalty,
                                       cfg.payoff, cfg.grid,
                                       TransitionScheme::LocalQuadrature);
    fs::path out = fs::path(opts.out_dir) / "value_field.csv";
    write_value_field_csv(out, vf);
    std::cout << "value at start: "
              << format_value(cfg.grid.interpolate(vf.values[0], cfg.start)) << "\n";

    ExperimentManifest m = start_manifest(cfg, opts);
    m.outputs = {out.string()};
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    write_manifest(fs::path(opts.out_dir) / "manifest.json", m);
    return 0;
}

int run_solve_pde(const CommonOpts& opts) {
    ProblemConfig cfg = resolve_config(opts);
    fs::create_directories(opts.out_dir);
    auto t_start = std::chrono::steady_clock::now();

    ConjugateEvaluator f = [&](double t, const Vec& x, const Vec& z) {
        return fenchel_numeric(cfg.penalty, cfg.control_set, t, x, z,
                               cfg.grid.control_resolution, 12);
    };
    PdeScheme scheme =
        cfg.grid.dim() == 1 ? PdeScheme::SemiImplicitSplit : PdeScheme::ExplicitUpwind;
    PdeField field = solve_semilinear(cfg.diffusion, f, cfg.payoff, cfg.grid, scheme);

    ValueField as_vf;
    as_vf.grid = field.grid;
    as_vf.values = field.values;
    as_vf.terminal = cfg.payoff;
    fs::path out = fs::path(opts.out_dir) / "pde_field.csv";
    write_value_field_csv(out, as_vf);
    std::cout << "value at start: "
              << format_value(cfg.grid.interpolate(field.values[0], cfg.start)) << "\n"
              << "max residual: " << format_value(field.residual_max) << "\n";

    ExperimentManifest m = start_manifest(cfg, opts);
    m.outputs = {out.string()};
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    write_manifest(fs::path(opts.out_dir) / "manifest.json", m);
    return 0;
}

int run_price_stochvol(const CommonOpts& opts) {
    ProblemConfig cfg = resolve_config(opts);
    if (!cfg.market) throw ConfigError("market", "price-stochvol needs a market config");
    fs::create_directories(opts.out_dir);
    auto t_start = std::chrono::steady_clock::now();

    PriceQuote quote = price_bid_ask(*cfg.market, cfg.payoff, cfg.grid, cfg.start);
    json qdoc;
    qdoc["ask"] = quote.ask;
    qdoc["bid"] = quote.bid;
    qdoc["surrep"] = quote.surrep;
    qdoc["argmax_drift_mean"] = quote.argmax_drift_mean;
    qdoc["argmax_drift_max"] = quote.argmax_drift_max;
    fs::path qout = fs::path(opts.out_dir) / "quote.json";
    std::ofstream(qout) << qdoc.dump(2) << "\n";

    // bid/ask curve across strikes
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 20; ++i) {
        double K = 0.5 + i * (1.0 / 19.0);
        PayoffSpec h = PayoffSpec::call(K, 0, cfg.payoff.cap);
        PriceQuote q = price_bid_ask(*cfg.market, h, cfg.grid, cfg.start);
        rows.push_back({K, q.bid, q.ask, q.surrep});
    }
    fs::path cout_path = fs::path(opts.out_dir) / "bid_ask_curve.csv";
    write_csv(cout_path, {"strike", "bid", "ask", "surrep"}, rows);
    std::cout << "ask " << format_value(quote.ask) << " bid " << format_value(quote.bid)
              << " surrep " << format_value(quote.surrep) << "\n";

    ExperimentManifest m = start_manifest(cfg, opts);
    m.outputs = {qout.string(), cout_path.string()};
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    write_manifest(fs::path(opts.out_dir) / "manifest.json", m);
    return 0;
}

int run_verify_axioms(const CommonOpts& opts) {
    ProblemConfig cfg = resolve_config(opts);
    fs::create_directories(opts.out_dir);

    std::vector<std::pair<PayoffSpec, PayoffSpec>> pairs{
        {PayoffSpec::power(1.0), PayoffSpec::power(2.0)},
        {PayoffSpec::call(0.5), PayoffSpec::constant(1.0)},
    };
    AxiomReport report =
        check_axioms(cfg.diffusion, cfg.control_set, cfg.penalty, cfg.grid,
                     TransitionScheme::LocalQuadrature, pairs, {0.25, 0.5, 0.75},
                     {-1.0, 0.5, 2.0});
    json doc;
    doc["monotonicity"] = report.monotonicity;
    doc["translation_invariance"] = report.translation_invariance;
    doc["convexity"] = report.convexity;
    doc["normalization"] = report.normalization;
    doc["positive_homogeneity"] = report.positive_homogeneity;
    doc["pass"] = report.pass();
    std::ofstream(fs::path(opts.out_dir) / "axioms.json") << doc.dump(2) << "\n";
    std::cout << (report.pass() ? "axioms: all pass\n" : "axioms: VIOLATION\n");
    return report.pass() ? 0 : 3;
}

int run_compare(const CommonOpts& opts) {
    ProblemConfig cfg = resolve_config(opts);
    fs::create_directories(opts.out_dir);

    ValueField vf = backward_induction(cfg.diffusion, cfg.control_set, cfg.penalty,
                                       cfg.payoff, cfg.grid,
                                       TransitionScheme::LocalQuadrature);
    ConjugateEvaluator f = [&](double t, const Vec& x, const Vec& z) {
        return fenchel_numeric(cfg.penalty, cfg.control_set, t, x, z,
                               cfg.grid.control_resolution, 12);
    };
    PdeScheme scheme =
        cfg.grid.dim() == 1 ? PdeScheme::SemiImplicitSplit : PdeScheme::ExplicitUpwind;
    PdeField pf = solve_semilinear(cfg.diffusion, f, cfg.payoff, cfg.grid, scheme);
    DivergenceReport rep = compare_fields(vf, pf);

    json doc;
    doc["max_diff"] = rep.max_diff;
    doc["mean_diff"] = rep.mean_diff;
    std::ofstream(fs::path(opts.out_dir) / "compare.json") << doc.dump(2) << "\n";
    std::cout << "max diff " << format_value(rep.max_diff) << " mean "
              << format_value(rep.mean_diff) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-consistent convex pricing procedures"};
    app.require_subcommand(1);

    CommonOpts opts;
    struct Cmd {
        const char* name;
        const char* desc;
        int (*fn)(const CommonOpts&);
    };
    const Cmd cmds[] = {
        {"conjugate", "emit a Fenchel conjugate table", run_conjugate},
        {"simulate", "simulate base-measure paths", run_simulate},
        {"solve-control", "backward induction value field", run_solve_control},
        {"solve-pde", "semilinear PDE value field", run_solve_pde},
        {"price-stochvol", "bid/ask/surreplication quotes", run_price_stochvol},
        {"verify-axioms", "dynamic-procedure axiom suite", run_verify_axioms},
        {"compare", "stochastic vs PDE route divergence", run_compare},
    };
    for (const Cmd& c : cmds) add_common(app.add_subcommand(c.name, c.desc), opts);

    CLI11_PARSE(app, argc, argv);

    try {
        for (const Cmd& c : cmds)
            if (app.get_subcommand(c.name)->parsed()) return c.fn(opts);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
