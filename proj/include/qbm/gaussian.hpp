// gaussian.hpp — Gaussian reduced states: first moments, central second
// moments, and their evolution under the time-dependent Wigner equation.
// The quadratic drift / constant diffusion structure maps Gaussians to
// Gaussians, so moments are the whole state.

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "qbm/coefficients.hpp"
#include "qbm/errors.hpp"
#include "qbm/volterra.hpp"

namespace qbm {

struct GaussianMomentState {
    double mean_q{0.0};
    double mean_p{0.0};
    double sigma_qq{0.0};
    double sigma_pp{0.0};
    double sigma_qp{0.0};  // symmetrized: <{q,p}>/2 - <q><p>

    double uncertainty_product() const { return sigma_qq * sigma_pp - sigma_qp * sigma_qp; }

    void validate() const {
        for (double v : {mean_q, mean_p, sigma_qq, sigma_pp, sigma_qp})
            if (!std::isfinite(v)) throw ConfigError("Gaussian state fields must be finite");
        if (sigma_qq < 0.0 || sigma_pp < 0.0 || uncertainty_product() < -1e-12)
            throw ConfigError("Gaussian state covariance must be positive semidefinite");
    }
};

struct WignerGaussian {
    GaussianMomentState state;
};

// time derivative of the moments under the Wigner flow with coefficients
// (A, B, C, D); means follow the classical drift, central second moments the
// Lyapunov equation with diffusion C (cross) and D (momentum):
//   dq = p/M                      dp = -(M Om^2 + A) q - B p
//   d(sqq) = 2 sqp / M
//   d(spp) = -2 (M Om^2 + A) sqp - 2 B spp + 2 D
//   d(sqp) = spp/M - (M Om^2 + A) sqq - B sqp + C
inline GaussianMomentState moment_rhs(const GaussianMomentState& s, const CoefficientSet& coef,
                                      const SystemParams& sys, double Omega_eff_sq,
                                      double A_effective) {
    const double M = sys.M;
    const double drift = M * Omega_eff_sq + A_effective;
    GaussianMomentState d;
    d.mean_q = s.mean_p / M;
    d.mean_p = -drift * s.mean_q - coef.B * s.mean_p;
    d.sigma_qq = 2.0 * s.sigma_qp / M;
    d.sigma_pp = -2.0 * drift * s.sigma_qp - 2.0 * coef.B * s.sigma_pp + 2.0 * coef.D;
    d.sigma_qp = s.sigma_pp / M - drift * s.sigma_qq - coef.B * s.sigma_qp + coef.C;
    return d;
}

// convenient overload: bare Omega, A taken from the set
inline GaussianMomentState moment_rhs(const GaussianMomentState& s, const CoefficientSet& coef,
                                      const SystemParams& sys) {
    return moment_rhs(s, coef, sys, sys.Omega * sys.Omega, coef.A);
}

struct MomentSeries {
    double dt{0.0};
    std::vector<double> t;
    std::vector<GaussianMomentState> states;
};

namespace detail {

struct CoeffInterp {
    const CoefficientTrajectory* traj;
    double Om2_eff;
    bool renormalized;  // ohmic_fp: A is absorbed into Om2_eff

    CoefficientSet at(double t) const {
        const auto& rows = traj->rows;
        const double x = t / traj->dt;
        auto k = std::size_t(x);
        if (k >= rows.size() - 1) k = rows.size() - 2;
        const double f = (t - rows[k].t) / traj->dt;
        auto lerp = [&](double a, double b) { return a * (1.0 - f) + b * f; };
        CoefficientSet c;
        c.t = t;
        c.A = renormalized ? 0.0 : lerp(rows[k].A, rows[k + 1].A);
        c.B = lerp(rows[k].B, rows[k + 1].B);
        c.C = lerp(rows[k].C, rows[k + 1].C);
        c.D = lerp(rows[k].D, rows[k + 1].D);
        return c;
    }
};

} // namespace detail

// Classical RK4 over the moment ODEs with linear interpolation of the
// trajectory rows.  The integrator step is two row spacings, so every stage
// lands on a row when the trajectory is at full solver resolution.
inline MomentSeries evolve(const GaussianMomentState& initial, const CoefficientTrajectory& traj,
                           const SystemParams& sys, double dt_out) {
    initial.validate();
    sys.validate();
    if (traj.size() < 2) throw UsageError("evolve: trajectory needs at least two rows");
    if (!(dt_out > 0.0)) throw UsageError("evolve: dt_out must be positive");

    const double horizon = traj.t_max();
    for (std::size_t k = 0; k < traj.size(); ++k)
        if (traj.flagged[k] && traj.rows[k].t <= horizon)
            throw DegeneracyError("evolve: trajectory row at t = " + std::to_string(traj.rows[k].t) +
                                  " is flagged as a coefficient singularity");

    detail::CoeffInterp interp{&traj, 0.0, false};
    if (traj.provenance == CoeffMode::ohmic_fp) {
        if (!sys.Omega_ren) throw ConfigError("evolve: ohmic_fp trajectories need Omega_ren");
        interp.Om2_eff = *sys.Omega_ren * *sys.Omega_ren;
        interp.renormalized = true;
    } else {
        interp.Om2_eff = sys.Omega * sys.Omega;
    }

    const double h = 2.0 * traj.dt;
    const auto nsteps = std::size_t(std::floor(horizon / h + 1e-9));
    const auto out_every = std::size_t(std::max(1.0, std::round(dt_out / h)));

    auto rhs = [&](const GaussianMomentState& s, double t) {
        const auto c = interp.at(t);
        return moment_rhs(s, c, sys, interp.Om2_eff, c.A);
    };
    auto axpy = [](const GaussianMomentState& s, double a, const GaussianMomentState& d) {
        GaussianMomentState r = s;
        r.mean_q += a * d.mean_q;
        r.mean_p += a * d.mean_p;
        r.sigma_qq += a * d.sigma_qq;
        r.sigma_pp += a * d.sigma_pp;
        r.sigma_qp += a * d.sigma_qp;
        return r;
    };

    MomentSeries series;
    series.dt = h * double(out_every);
    GaussianMomentState s = initial;
    series.t.push_back(0.0);
    series.states.push_back(s);
    for (std::size_t k = 0; k < nsteps; ++k) {
        const double t = h * double(k);
        const auto k1 = rhs(s, t);
        const auto k2 = rhs(axpy(s, h / 2.0, k1), t + h / 2.0);
        const auto k3 = rhs(axpy(s, h / 2.0, k2), t + h / 2.0);
        const auto k4 = rhs(axpy(s, h, k3), t + h);
        GaussianMomentState next = s;
        auto acc = [&](double GaussianMomentState::*f) {
            next.*f = s.*f + (h / 6.0) * (k1.*f + 2.0 * k2.*f + 2.0 * k3.*f + k4.*f);
        };
        acc(&GaussianMomentState::mean_q);
        acc(&GaussianMomentState::mean_p);
        acc(&GaussianMomentState::sigma_qq);
        acc(&GaussianMomentState::sigma_pp);
        acc(&GaussianMomentState::sigma_qp);
        s = next;
        if ((k + 1) % out_every == 0) {
            series.t.push_back(h * double(k + 1));
            series.states.push_back(s);
        }
    }
    return series;
}

// Wigner function value of a normalized Gaussian state.
inline double wigner_eval(const WignerGaussian& w, double q, double p) {
    const auto& s = w.state;
    const double det = s.sigma_qq * s.sigma_pp - s.sigma_qp * s.sigma_qp;
    const double scale = std::max(std::abs(s.sigma_qq), std::abs(s.sigma_pp));
    if (!(det > 1e-14 * scale * scale))
        throw EvaluationError("wigner_eval: covariance is singular");
    const double dq = q - s.mean_q;
    const double dp = p - s.mean_p;
    const double quad =
        (s.sigma_pp * dq * dq - 2.0 * s.sigma_qp * dq * dp + s.sigma_qq * dp * dp) / det;
    return std::exp(-0.5 * quad) / (2.0 * M_PI * std::sqrt(det));
}

} // namespace qbm
