#include "tcproc/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace tcproc {

namespace {

const json& require(const json& doc, const std::string& key, const std::string& path) {
    if (!doc.contains(key)) throw ConfigError(path, "missing required field");
    return doc.at(key);
}

Vec parse_vec(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
    Vec v(j.size());
    for (size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ConfigError(path, "expected numbers");
        v(i) = j[i].get<double>();
    }
    return v;
}

Mat parse_mat(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a matrix");
    Mat m(j.size(), j[0].size());
    for (size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != j[0].size())
            throw ConfigError(path, "ragged matrix");
        for (size_t c = 0; c < j[r].size(); ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

DiffusionSpec parse_diffusion(const json& j) {
    const json& sig = require(j, "sigma", "diffusion.sigma");
    std::string type = require(sig, "type", "diffusion.sigma.type").get<std::string>();
    DiffusionSpec d;
    if (type == "constant") {
        d = DiffusionSpec::constant(parse_mat(require(sig, "matrix", "diffusion.sigma.matrix"),
                                              "diffusion.sigma.matrix"));
    } else if (type == "diagonal_affine") {
        d = DiffusionSpec::diagonal_affine(
            parse_vec(require(sig, "offset", "diffusion.sigma.offset"),
                      "diffusion.sigma.offset"),
            parse_vec(require(sig, "slope", "diffusion.sigma.slope"),
                      "diffusion.sigma.slope"),
            require(sig, "lo", "diffusion.sigma.lo").get<double>(),
            require(sig, "hi", "diffusion.sigma.hi").get<double>());
    } else if (type == "table") {
        d = DiffusionSpec::table_interpolated(
            parse_vec(require(sig, "knots", "diffusion.sigma.knots"),
                      "diffusion.sigma.knots"),
            parse_mat(require(sig, "values", "diffusion.sigma.values"),
                      "diffusion.sigma.values"));
    } else {
        throw ConfigError("diffusion.sigma.type", "unknown variant `" + type + "`");
    }
    if (j.contains("sigma_bound")) d.sigma_bound = j.at("sigma_bound").get<double>();
    if (j.contains("dim") && j.at("dim").get<int>() != d.dim)
        throw ConfigError("diffusion.dim", "dimension disagrees with sigma");
    return d;
}

ControlSetSpec parse_control_set(const json& j) {
    std::string type = require(j, "type", "control_set.type").get<std::string>();
    if (type == "point") {
        return ControlSetSpec::point(require(j, "dim", "control_set.dim").get<int>());
    }
    if (type == "ball") {
        return ControlSetSpec::ball(require(j, "dim", "control_set.dim").get<int>(),
                                    require(j, "radius", "control_set.radius").get<double>());
    }
    if (type == "box") {
        return ControlSetSpec::box(
            parse_vec(require(j, "lo", "control_set.lo"), "control_set.lo"),
            parse_vec(require(j, "hi", "control_set.hi"), "control_set.hi"));
    }
    if (type == "linear_constraint") {
        double rho = require(j, "rho", "control_set.rho").get<double>();
        double cap = require(j, "cap", "control_set.cap").get<double>();
        int n = require(j, "n", "control_set.n").get<int>();
        return ControlSetSpec::linear_constraint(
            n, [rho](double, const Vec&) { return rho; },
            [cap](double, const Vec&) { return cap; });
    }
    if (type == "growth_truncated") {
        ControlSetSpec inner = parse_control_set(require(j, "inner", "control_set.inner"));
        return ControlSetSpec::growth_truncated(
            std::move(inner), require(j, "C", "control_set.C").get<double>());
    }
    throw ConfigError("control_set.type", "unknown variant `" + type + "`");
}

PenaltySpec parse_penalty(const json& j) {
    std::string type = require(j, "type", "penalty.type").get<std::string>();
    if (type == "zero") return PenaltySpec::zero();
    if (type == "constant")
        return PenaltySpec::constant(require(j, "c", "penalty.c").get<double>());
    if (type == "power")
        return PenaltySpec::power(require(j, "p", "penalty.p").get<double>(),
                                  j.value("growth_C", 0.0), j.value("growth_m", 0));
    if (type == "quadratic_form")
        return PenaltySpec::quadratic_form(
            parse_mat(require(j, "Q", "penalty.Q"), "penalty.Q"), j.value("growth_C", 0.0),
            j.value("growth_m", 0));
    throw ConfigError("penalty.type", "unknown variant `" + type + "`");
}

PayoffSpec parse_payoff(const json& j) {
    std::string type = require(j, "type", "payoff.type").get<std::string>();
    double cap = j.value("cap", std::numeric_limits<double>::infinity());
    if (type == "call")
        return PayoffSpec::call(require(j, "strike", "payoff.strike").get<double>(),
                                j.value("coordinate", 0), cap);
    if (type == "put")
        return PayoffSpec::put(require(j, "strike", "payoff.strike").get<double>(),
                               j.value("coordinate", 0));
    if (type == "power")
        return PayoffSpec::power(require(j, "exponent", "payoff.exponent").get<double>(),
                                 j.value("coordinate", 0), cap);
    if (type == "constant")
        return PayoffSpec::constant(require(j, "c", "payoff.c").get<double>());
    throw ConfigError("payoff.type", "unknown variant `" + type + "`");
}

GridSpec parse_grid(const json& j) {
    GridSpec g;
    g.t0 = require(j, "t0", "grid.t0").get<double>();
    g.t1 = require(j, "t1", "grid.t1").get<double>();
    g.nt = require(j, "nt", "grid.nt").get<int>();
    g.state_lo = parse_vec(require(j, "state_lo", "grid.state_lo"), "grid.state_lo");
    g.state_hi = parse_vec(require(j, "state_hi", "grid.state_hi"), "grid.state_hi");
    const json& nx = require(j, "nx", "grid.nx");
    if (nx.is_number()) {
        g.nx.assign(g.state_lo.size(), nx.get<int>());
    } else {
        for (const auto& v : nx) g.nx.push_back(v.get<int>());
    }
    g.control_resolution = j.value("control_resolution", 8);
    try {
        g.validate();
    } catch (const Error& e) {
        throw ConfigError("grid", e.what());
    }
    return g;
}

MarketSpec parse_market(const json& j) {
    std::string type = j.value("type", "flat");
    double rho = require(j, "rho", "market.rho").get<double>();
    double alpha = j.value("alpha", 0.0);
    double C = j.value("phi_C", 1.0);
    double p = j.value("p", 2.0);
    if (type == "flat") {
        return MarketSpec::flat(require(j, "sigma", "market.sigma").get<double>(),
                                require(j, "gamma", "market.gamma").get<double>(), rho,
                                alpha, C, p);
    }
    if (type == "hull_white") {
        return MarketSpec::hull_white(rho, alpha,
                                      require(j, "gamma", "market.gamma").get<double>(), C,
                                      p);
    }
    throw ConfigError("market.type", "unknown variant `" + type + "`");
}

}  // namespace

ProblemConfig load_config(const json& doc) {
    if (doc.contains("preset")) {
        ProblemConfig cfg = preset(doc.at("preset").get<std::string>());
        cfg.source = doc;
        return cfg;
    }
    ProblemConfig cfg;
    cfg.name = doc.value("name", "custom");
    cfg.source = doc;
    if (doc.contains("market")) {
        cfg.market = parse_market(doc.at("market"));
        cfg.diffusion = build_joint_diffusion(*cfg.market);
        cfg.control_set = martingale_control_set(*cfg.market);
        cfg.penalty = stochvol_penalty(*cfg.market);
    } else {
        cfg.diffusion = parse_diffusion(require(doc, "diffusion", "diffusion"));
        cfg.control_set = parse_control_set(require(doc, "control_set", "control_set"));
        cfg.penalty = parse_penalty(require(doc, "penalty", "penalty"));
    }
    cfg.payoff = parse_payoff(require(doc, "payoff", "payoff"));
    cfg.grid = parse_grid(require(doc, "grid", "grid"));
    cfg.start = doc.contains("start")
                    ? parse_vec(doc.at("start"), "start")
                    : Vec(0.5 * (cfg.grid.state_lo + cfg.grid.state_hi));
    if (cfg.start.size() != cfg.grid.dim())
        throw ConfigError("start", "dimension disagrees with grid");
    return cfg;
}

ProblemConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), "cannot open config file");
    json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
    }
    return load_config(doc);
}

// ---------------------------------------------------------------------------
// Presets

namespace {

ProblemConfig make_feynman_kac() {
    ProblemConfig cfg;
    cfg.name = "feynman-kac-quadratic";
    cfg.diffusion = DiffusionSpec::constant(Mat::Identity(1, 1));
    cfg.control_set = ControlSetSpec::point(1);
    cfg.penalty = PenaltySpec::zero();
    cfg.payoff = PayoffSpec::power(2.0);
    // box wide enough that the truncation boundary layer is negligible on the
    // inner half-box at this horizon
    cfg.grid = GridSpec::make(0.0, 0.25, 50, Vec::Constant(1, -6.0), Vec::Constant(1, 6.0),
                              201, 2);
    cfg.start = Vec::Zero(1);
    return cfg;
}

ProblemConfig make_ball_sublinear() {
    ProblemConfig cfg;
    cfg.name = "ball-sublinear";
    cfg.diffusion = DiffusionSpec::constant(Mat::Identity(1, 1));
    cfg.control_set = ControlSetSpec::ball(1, 1.0);
    cfg.penalty = PenaltySpec::zero();
    cfg.payoff = PayoffSpec::power(1.0);
    cfg.grid = GridSpec::make(0.0, 0.5, 128, Vec::Constant(1, -8.0), Vec::Constant(1, 8.0),
                              161, 4);
    cfg.start = Vec::Zero(1);
    return cfg;
}

ProblemConfig make_power_penalty() {
    ProblemConfig cfg;
    cfg.name = "power-penalty";
    cfg.diffusion = DiffusionSpec::constant(Mat::Identity(1, 1));
    cfg.control_set = ControlSetSpec::ball(1, 10.0);
    cfg.penalty = PenaltySpec::power(2.0, 50.0, 0);
    cfg.payoff = PayoffSpec::power(1.0);
    cfg.grid = GridSpec::make(0.0, 0.5, 128, Vec::Constant(1, -8.0), Vec::Constant(1, 8.0),
                              161, 20);
    cfg.start = Vec::Zero(1);
    return cfg;
}

ProblemConfig make_stochvol(bool hull_white, double rho) {
    ProblemConfig cfg;
    cfg.market = hull_white ? MarketSpec::hull_white(rho, 0.0, 0.4, 1.0, 2.0)
                            : MarketSpec::flat(0.5, 0.5, rho, 0.0, 1.0, 2.0);
    cfg.name = cfg.market->name + (rho == 0.0 ? "-decoupled" : "");
    cfg.diffusion = build_joint_diffusion(*cfg.market);
    cfg.control_set = martingale_control_set(*cfg.market);
    cfg.penalty = stochvol_penalty(*cfg.market);
    cfg.payoff = PayoffSpec::call(1.0, 0, 2.0);
    Vec lo(2), hi(2);
    lo << -0.5, -1.5;
    hi << 2.5, 1.5;
    cfg.grid = GridSpec::make(0.0, 0.25, 40, lo, hi, 41, 6);
    cfg.grid.nx = {61, 41};
    cfg.start = Vec(2);
    cfg.start << 1.0, 0.0;
    return cfg;
}

}  // namespace

ProblemConfig preset(const std::string& name) {
    if (name == "feynman-kac-quadratic") return make_feynman_kac();
    if (name == "ball-sublinear") return make_ball_sublinear();
    if (name == "power-penalty") return make_power_penalty();
    if (name == "stochvol-flat") return make_stochvol(false, 0.3);
    if (name == "stochvol-decoupled") return make_stochvol(false, 0.0);
    if (name == "stochvol-hull-white") return make_stochvol(true, -0.5);
    throw ConfigError("preset", "unknown preset `" + name + "`");
}

std::vector<std::string> preset_names() {
    return {"feynman-kac-quadratic", "ball-sublinear",     "power-penalty",
            "stochvol-flat",         "stochvol-decoupled", "stochvol-hull-white"};
}

// ---------------------------------------------------------------------------
// Output formatting

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open output file " + path.string());
    for (size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? "," : "\n");
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i)
            out << format_value(row[i]) << (i + 1 < row.size() ? "," : "\n");
    }
}

void write_value_field_csv(const std::filesystem::path& path, const ValueField& vf) {
    std::vector<std::string> header{"time"};
    for (int k = 0; k < vf.grid.dim(); ++k) header.push_back("x" + std::to_string(k));
    header.push_back("value");
    int cdim = vf.argmax.empty() ? 0 : static_cast<int>(vf.argmax[0].rows());
    for (int k = 0; k < cdim; ++k) header.push_back("argmax" + std::to_string(k));

    std::vector<std::vector<double>> rows;
    for (int i = 0; i <= vf.grid.nt; ++i) {
        for (int j = 0; j < vf.grid.num_nodes(); ++j) {
            std::vector<double> row{vf.grid.time(i)};
            Vec x = vf.grid.node(j);
            for (int k = 0; k < x.size(); ++k) row.push_back(x(k));
            row.push_back(vf.values[i](j));
            if (i < vf.grid.nt && cdim > 0)
                for (int k = 0; k < cdim; ++k) row.push_back(vf.argmax[i](k, j));
            else
                for (int k = 0; k < cdim; ++k) row.push_back(0.0);
            rows.push_back(std::move(row));
        }
    }
    write_csv(path, header, rows);
}

std::uint64_t fnv1a_hash(const std::string& data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file for hashing: " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a_hash(data);
}

void write_manifest(const std::filesystem::path& path, const ExperimentManifest& m) {
    json doc;
    doc["config_hash"] = m.config_hash;
    doc["seed"] = m.seed;
    doc["preset"] = m.preset_name;
    doc["version"] = m.version;
    doc["outputs"] = m.outputs;
    doc["wall_seconds"] = m.wall_seconds;
    std::ofstream out(path);
    out << doc.dump(2) << "\n";
}

}  // namespace tcproc
