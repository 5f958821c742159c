// csv.hpp — deterministic text output: shortest round-trip decimals, fixed
// column order, '\n' line endings, no timestamps.

#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "qbm/bath.hpp"
#include "qbm/coefficients.hpp"
#include "qbm/errors.hpp"
#include "qbm/gaussian.hpp"
#include "qbm/volterra.hpp"

namespace qbm {

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void write_kernels_csv(std::ostream& os, const KernelTable& table) {
    os << "s,gamma,nu\n";
    for (std::size_t k = 0; k < table.size(); ++k)
        os << format_double(table.ds * double(k)) << ',' << format_double(table.gamma[k]) << ','
           << format_double(table.nu[k]) << '\n';
}

inline void write_elementary_csv(std::ostream& os, const ElementarySolution& sol) {
    os << "s,u1,u2,du1,du2\n";
    for (std::size_t k = 0; k < sol.size(); ++k)
        os << format_double(sol.ds * double(k)) << ',' << format_double(sol.u1[k]) << ','
           << format_double(sol.u2[k]) << ',' << format_double(sol.du1[k]) << ','
           << format_double(sol.du2[k]) << '\n';
}

inline void write_coefficients_csv(std::ostream& os, const CoefficientTrajectory& traj, double M,
                                   double hbar) {
    os << "t,A,B,C,D,delta_Omega2,Gamma,Gamma_f,Gamma_h,provenance\n";
    const std::string prov = to_string(traj.provenance);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const bool flagged = traj.flagged[k] != 0;
        CoefficientSet c = traj.rows[k];
        if (flagged) c = {c.t, nan, nan, nan, nan};
        const auto h = to_hpz(c, M, hbar);
        os << format_double(c.t) << ',' << format_double(c.A) << ',' << format_double(c.B) << ','
           << format_double(c.C) << ',' << format_double(c.D) << ','
           << format_double(h.delta_Omega2) << ',' << format_double(h.Gamma) << ','
           << format_double(h.Gamma_f) << ',' << format_double(h.Gamma_h) << ','
           << (flagged ? prov + "_flagged" : prov) << '\n';
    }
}

inline nlohmann::json coefficients_json(const CoefficientTrajectory& traj, double M, double hbar) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto& c = traj.rows[k];
        const auto h = to_hpz(c, M, hbar);
        rows.push_back({{"t", c.t},
                        {"A", c.A},
                        {"B", c.B},
                        {"C", c.C},
                        {"D", c.D},
                        {"delta_Omega2", h.delta_Omega2},
                        {"Gamma", h.Gamma},
                        {"Gamma_f", h.Gamma_f},
                        {"Gamma_h", h.Gamma_h},
                        {"provenance", to_string(traj.provenance)},
                        {"flagged", traj.flagged[k] != 0}});
    }
    return rows;
}

inline void write_moments_csv(std::ostream& os, const MomentSeries& series) {
    os << "t,mean_q,mean_p,sigma_qq,sigma_pp,sigma_qp,uncertainty_product\n";
    for (std::size_t k = 0; k < series.t.size(); ++k) {
        const auto& s = series.states[k];
        os << format_double(series.t[k]) << ',' << format_double(s.mean_q) << ','
           << format_double(s.mean_p) << ',' << format_double(s.sigma_qq) << ','
           << format_double(s.sigma_pp) << ',' << format_double(s.sigma_qp) << ','
           << format_double(s.uncertainty_product()) << '\n';
    }
}

inline void write_wigner_csv(std::ostream& os, const WignerGaussian& w, double half_width_sigmas,
                             std::size_t n) {
    if (n < 2) throw UsageError("wigner grid needs at least 2 points per axis");
    const double sq = std::sqrt(w.state.sigma_qq);
    const double sp = std::sqrt(w.state.sigma_pp);
    os << "q,p,W\n";
    for (std::size_t i = 0; i < n; ++i) {
        const double q =
            w.state.mean_q + half_width_sigmas * sq * (2.0 * double(i) / double(n - 1) - 1.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double p =
                w.state.mean_p + half_width_sigmas * sp * (2.0 * double(j) / double(n - 1) - 1.0);
            os << format_double(q) << ',' << format_double(p) << ','
               << format_double(wigner_eval(w, q, p)) << '\n';
        }
    }
}

inline void write_file(const std::string& path, const std::function<void(std::ostream&)>& fn) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw UsageError("cannot open output file " + path);
    fn(os);
    if (!os) throw UsageError("failed while writing " + path);
}

} // namespace qbm
