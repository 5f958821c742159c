// config.hpp — run configuration: a strict, JSON-compatible schema.  Unknown
// keys are rejected so a typo cannot silently fall back to a default.

#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "qbm/bath.hpp"
#include "qbm/coefficients.hpp"
#include "qbm/errors.hpp"
#include "qbm/gaussian.hpp"
#include "qbm/volterra.hpp"

namespace qbm {

struct Tolerances {
    double solver_residual{1e-5};
    double oracle_coeff_rel{1e-4};
    double oracle_moment_rel{1e-5};
    double fd_step{1e-3};
    std::size_t oracle_times{10};
};

struct WignerSnapshotSpec {
    std::vector<double> times;
    double half_width_sigmas{8.0};
    std::size_t points{101};
};

struct RunConfig {
    SystemParams system;
    BathSpec bath;
    double ds{1e-3};
    double t_max{1.0};
    double dt_out{0.1};
    CoeffMode mode{CoeffMode::exact};
    GaussianMomentState initial_state{0.0, 0.0, 0.5, 0.5, 0.0};
    std::string output_dir{"out"};
    Tolerances tolerances;
    std::optional<WignerSnapshotSpec> wigner;

    void validate() const {
        system.validate();
        bath.validate();
        initial_state.validate();
        if (!(ds > 0.0) || !std::isfinite(ds)) throw ConfigError("grids.ds must be positive and finite");
        if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw ConfigError("grids.t_max must be >= 0 and finite");
        if (!(dt_out > 0.0) || !std::isfinite(dt_out)) throw ConfigError("grids.dt_out must be positive and finite");
        if (mode == CoeffMode::ohmic_fp && !system.Omega_ren)
            throw ConfigError("ohmic_fp mode requires system.Omega_ren");
    }
};

namespace detail {

using nlohmann::json;

inline void expect_keys(const json& j, const std::string& where,
                        const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError("config: " + where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("config: unknown key \"" + it.key() + "\" in " + where);
}

inline double num(const json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError("config: " + where + " must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError("config: " + where + " must be finite");
    return v;
}

inline double num_or(const json& j, const char* key, double fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    return num(j.at(key), where + "." + key);
}

} // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    using detail::expect_keys;
    using detail::num;
    using detail::num_or;

    expect_keys(j, "top level",
                {"system", "bath", "grids", "mode", "initial_state", "output", "tolerances",
                 "wigner"});
    RunConfig cfg;

    if (!j.contains("system")) throw ConfigError("config: missing \"system\"");
    {
        const auto& s = j.at("system");
        expect_keys(s, "system", {"M", "Omega", "Omega_ren"});
        cfg.system.M = num_or(s, "M", 1.0, "system");
        cfg.system.Omega = num_or(s, "Omega", 1.0, "system");
        if (s.contains("Omega_ren")) cfg.system.Omega_ren = num(s.at("Omega_ren"), "system.Omega_ren");
    }

    if (!j.contains("bath")) throw ConfigError("config: missing \"bath\"");
    {
        const auto& b = j.at("bath");
        expect_keys(b, "bath", {"spectral", "beta", "hbar", "kB"});
        if (!b.contains("spectral")) throw ConfigError("config: missing bath.spectral");
        const auto& sp = b.at("spectral");
        expect_keys(sp, "bath.spectral", {"type", "modes", "gamma0", "Lambda", "mass"});
        if (!sp.contains("type") || !sp.at("type").is_string())
            throw ConfigError("config: bath.spectral.type must be a string");
        const std::string type = sp.at("type").get<std::string>();
        if (type == "discrete") {
            std::vector<BathMode> modes;
            if (sp.contains("modes")) {
                if (!sp.at("modes").is_array())
                    throw ConfigError("config: bath.spectral.modes must be an array");
                for (const auto& m : sp.at("modes")) {
                    expect_keys(m, "bath.spectral.modes[]", {"C", "m", "omega"});
                    BathMode mode;
                    mode.coupling = num_or(m, "C", 0.0, "mode");
                    mode.mass = num_or(m, "m", 1.0, "mode");
                    mode.omega = num(m.at("omega"), "mode.omega");
                    modes.push_back(mode);
                }
            }
            cfg.bath.spectral = SpectralDensity::discrete(std::move(modes));
        } else if (type == "ohmic_exp" || type == "ohmic_sharp") {
            if (!sp.contains("gamma0") || !sp.contains("Lambda"))
                throw ConfigError("config: ohmic spectral densities need gamma0 and Lambda");
            const double g0 = num(sp.at("gamma0"), "bath.spectral.gamma0");
            const double L = num(sp.at("Lambda"), "bath.spectral.Lambda");
            const double mass = num_or(sp, "mass", cfg.system.M, "bath.spectral");
            cfg.bath.spectral = type == "ohmic_exp" ? SpectralDensity::ohmic_exp(g0, L, mass)
                                                    : SpectralDensity::ohmic_sharp(g0, L, mass);
        } else {
            throw ConfigError("config: bath.spectral.type must be discrete, ohmic_exp or ohmic_sharp");
        }
        if (b.contains("beta")) {
            const auto& beta = b.at("beta");
            if (beta.is_string()) {
                if (beta.get<std::string>() != "inf")
                    throw ConfigError("config: bath.beta must be a number or \"inf\"");
                cfg.bath.beta = beta_infinite;
            } else {
                cfg.bath.beta = num(beta, "bath.beta");
            }
        }
        cfg.bath.hbar = num_or(b, "hbar", 1.0, "bath");
        cfg.bath.kB = num_or(b, "kB", 1.0, "bath");
    }

    if (!j.contains("grids")) throw ConfigError("config: missing \"grids\"");
    {
        const auto& g = j.at("grids");
        expect_keys(g, "grids", {"ds", "t_max", "dt_out"});
        cfg.ds = num_or(g, "ds", 1e-3, "grids");
        cfg.t_max = num_or(g, "t_max", 1.0, "grids");
        cfg.dt_out = num_or(g, "dt_out", 0.1, "grids");
    }

    if (j.contains("mode")) {
        const auto& m = j.at("mode");
        if (!m.is_string()) throw ConfigError("config: mode must be a string");
        const std::string s = m.get<std::string>();
        if (s == "exact")
            cfg.mode = CoeffMode::exact;
        else if (s == "weak")
            cfg.mode = CoeffMode::weak;
        else if (s == "ohmic_fp")
            cfg.mode = CoeffMode::ohmic_fp;
        else
            throw ConfigError("config: mode must be exact, weak or ohmic_fp");
    }

    if (j.contains("initial_state")) {
        const auto& s = j.at("initial_state");
        expect_keys(s, "initial_state", {"mean_q", "mean_p", "sigma_qq", "sigma_pp", "sigma_qp"});
        cfg.initial_state.mean_q = num_or(s, "mean_q", 0.0, "initial_state");
        cfg.initial_state.mean_p = num_or(s, "mean_p", 0.0, "initial_state");
        cfg.initial_state.sigma_qq = num_or(s, "sigma_qq", 0.5, "initial_state");
        cfg.initial_state.sigma_pp = num_or(s, "sigma_pp", 0.5, "initial_state");
        cfg.initial_state.sigma_qp = num_or(s, "sigma_qp", 0.0, "initial_state");
    }

    if (j.contains("output")) {
        const auto& o = j.at("output");
        expect_keys(o, "output", {"directory"});
        if (o.contains("directory")) {
            if (!o.at("directory").is_string())
                throw ConfigError("config: output.directory must be a string");
            cfg.output_dir = o.at("directory").get<std::string>();
        }
    }

    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        expect_keys(t, "tolerances",
                    {"solver_residual", "oracle_coeff_rel", "oracle_moment_rel", "fd_step",
                     "oracle_times"});
        cfg.tolerances.solver_residual = num_or(t, "solver_residual", 1e-5, "tolerances");
        cfg.tolerances.oracle_coeff_rel = num_or(t, "oracle_coeff_rel", 1e-4, "tolerances");
        cfg.tolerances.oracle_moment_rel = num_or(t, "oracle_moment_rel", 1e-5, "tolerances");
        cfg.tolerances.fd_step = num_or(t, "fd_step", 1e-3, "tolerances");
        if (t.contains("oracle_times")) {
            if (!t.at("oracle_times").is_number_unsigned())
                throw ConfigError("config: tolerances.oracle_times must be a positive integer");
            cfg.tolerances.oracle_times = t.at("oracle_times").get<std::size_t>();
        }
    }

    if (j.contains("wigner")) {
        const auto& w = j.at("wigner");
        expect_keys(w, "wigner", {"times", "half_width_sigmas", "points"});
        WignerSnapshotSpec spec;
        if (!w.contains("times") || !w.at("times").is_array())
            throw ConfigError("config: wigner.times must be an array of numbers");
        for (const auto& t : w.at("times")) spec.times.push_back(num(t, "wigner.times[]"));
        spec.half_width_sigmas = num_or(w, "half_width_sigmas", 8.0, "wigner");
        if (w.contains("points")) spec.points = w.at("points").get<std::size_t>();
        cfg.wigner = spec;
    }

    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config: invalid JSON in " + path + ": " + e.what());
    }
    return parse_config(j);
}

} // namespace qbm
