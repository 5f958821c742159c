// coefficients.hpp — time-dependent coefficients A, B, C, D of the reduced
// Wigner equation
//
//   dW/dt = -(p/M) dW/dq + M Omega^2 q dW/dp + A q dW/dp + B d(pW)/dp
//           + C d^2W/dqdp + D d^2W/dp^2
//
// Exact mode: with v1, v2 the fundamental solutions of the memory equation
// and J_i(s) = ∫_0^s eta(s-l) v_i(l) dl,
//
//   A = 2 (J1 v2' - J2 v1') / W,   B = (2/M) (v1 J2 - v2 J1) / W,
//   W = v1 v2' - v1' v2,
//
// which is the boundary-value form rewritten through the initial-value basis
// (it stays finite across v2(t) = 0 conjugate points; genuine singularities
// are zeros of W, where u1'(t) = -W/v2(t) vanishes).  C and D come from the
// exact noise covariance S(t) of the driven solution,
//
//   S_qq = (hbar/M^2) N[v2,v2],  S_qp = (hbar/M) N[v2,v2'],  S_pp = hbar N[v2',v2'],
//   N[w1,w2](t) = ∫_0^t ∫_0^t w1(t-r) w2(t-r') nu(r-r') dr dr',
//
// by matching the covariance rate equation:
//
//   C = S'_qp - S_pp/M + (M Omega^2 + A) S_qq + B S_qp
//   D = S'_pp/2 + (M Omega^2 + A) S_qp + B S_pp.
//
// The whole trajectory is produced in one O(N^2) sweep: the inner correlations
// M_w(x;t) = ∫_0^t w(u) nu(x-u) du are prefix integrals in t for fixed x.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <limits>
#include <string>
#include <vector>

#include "qbm/bath.hpp"
#include "qbm/errors.hpp"
#include "qbm/volterra.hpp"

namespace qbm {

struct CoefficientSet {
    double t{0.0};
    double A{0.0};  // frequency-shift generator
    double B{0.0};  // relaxation
    double C{0.0};  // anomalous diffusion
    double D{0.0};  // momentum diffusion
};

// The same information in the master-equation parametrization.
struct HpzCoefficients {
    double t{0.0};
    double delta_Omega2{0.0};  // A / M
    double Gamma{0.0};         // B / 2
    double Gamma_f{0.0};       // C / hbar
    double Gamma_h{0.0};       // D / (hbar M)
};

inline HpzCoefficients to_hpz(const CoefficientSet& c, double M, double hbar) {
    return {c.t, c.A / M, c.B / 2.0, c.C / hbar, c.D / (hbar * M)};
}
inline CoefficientSet from_hpz(const HpzCoefficients& h, double M, double hbar) {
    return {h.t, M * h.delta_Omega2, 2.0 * h.Gamma, hbar * h.Gamma_f, hbar * M * h.Gamma_h};
}

// The master equation only ever uses the products Gamma f and Gamma h; the
// bare ratios divide by B and exist only away from its zeros.
inline std::optional<double> hpz_f(const CoefficientSet& c, double hbar) {
    if (std::abs(c.B) <= 1e-10) return std::nullopt;
    return 2.0 * c.C / (hbar * c.B);
}
inline std::optional<double> hpz_h(const CoefficientSet& c, double M, double hbar) {
    if (std::abs(c.B) <= 1e-10) return std::nullopt;
    return 2.0 * c.D / (hbar * M * c.B);
}

enum class CoeffMode { exact, weak, ohmic_fp };

inline std::string to_string(CoeffMode m) {
    switch (m) {
        case CoeffMode::exact: return "exact";
        case CoeffMode::weak: return "weak";
        case CoeffMode::ohmic_fp: return "ohmic_fp";
    }
    return "?";
}

struct CoefficientTrajectory {
    CoeffMode provenance{CoeffMode::exact};
    double dt{0.0};                   // row spacing
    std::vector<CoefficientSet> rows; // rows[k] at t = k dt, starting at 0
    std::vector<std::uint8_t> flagged;

    std::size_t size() const { return rows.size(); }
    double t_max() const { return rows.empty() ? 0.0 : rows.back().t; }
    bool any_flagged() const {
        for (auto f : flagged)
            if (f) return true;
        return false;
    }
};

// ---------------------------------------------------------------------------
// Exact coefficients: one sweep produces every grid row.
// ---------------------------------------------------------------------------

namespace detail {

struct ExactSweep {
    // per-grid-point A, B, W and flags plus the C/D contractions
    std::vector<double> A, B, C, D, W;
    std::vector<std::uint8_t> flagged;
};

inline ExactSweep exact_sweep(const SystemParams& sys, const KernelTable& kernels,
                              const IvpPair& p, double hbar) {
    const std::size_t n = p.size() - 1;
    const double h = p.ds;
    const double M = sys.M;
    const double Om2 = sys.Omega * sys.Omega;

    ExactSweep out;
    out.A.assign(n + 1, 0.0);
    out.B.assign(n + 1, 0.0);
    out.C.assign(n + 1, 0.0);
    out.D.assign(n + 1, 0.0);
    out.W.assign(n + 1, 0.0);
    out.flagged.assign(n + 1, 0);

    std::vector<double> J1(n + 1), J2(n + 1);
    double wscale = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        J1[k] = p.J1(k, M, sys.Omega);
        J2[k] = p.J2(k, M, sys.Omega);
        out.W[k] = p.wronskian(k);
        wscale = std::max(wscale,
                          std::abs(p.v1[k] * p.dv2[k]) + std::abs(p.dv1[k] * p.v2[k]));
    }
    for (std::size_t k = 0; k <= n; ++k) {
        const bool tiny = std::abs(out.W[k]) < 1e-9 * wscale;
        const bool crossing =
            (k < n) && std::signbit(out.W[k]) != std::signbit(out.W[k + 1]);
        const bool crossed = (k > 0) && std::signbit(out.W[k - 1]) != std::signbit(out.W[k]);
        if (tiny || crossing || crossed) out.flagged[k] = 1;
    }

    for (std::size_t k = 1; k <= n; ++k) {
        out.A[k] = 2.0 * (J1[k] * p.dv2[k] - J2[k] * p.dv1[k]) / out.W[k];
        out.B[k] = (2.0 / M) * (p.v1[k] * J2[k] - p.v2[k] * J1[k]) / out.W[k];
    }

    // noise-covariance sweep for C, D
    std::vector<double> Mg(n + 1, 0.0), Mh(n + 1, 0.0), MJ(n + 1, 0.0);
    double Q1 = 0.0, Qd1 = 0.0;  // prefix ∫ v2 nu and ∫ v2' nu
    const auto& nu = kernels.nu;
    for (std::size_t k = 0; k < n; ++k) {
        // advance the correlation prefixes to t_{k+1}
        const double wg0 = p.v2[k], wg1 = p.v2[k + 1];
        const double wh0 = p.dv2[k], wh1 = p.dv2[k + 1];
        const double wj0 = J2[k], wj1 = J2[k + 1];
        for (std::size_t x = 0; x <= n; ++x) {
            const double n0 = nu[x >= k ? x - k : k - x];
            const double n1 = nu[x >= k + 1 ? x - k - 1 : k + 1 - x];
            Mg[x] += (h / 2.0) * (wg0 * n0 + wg1 * n1);
            Mh[x] += (h / 2.0) * (wh0 * n0 + wh1 * n1);
            MJ[x] += (h / 2.0) * (wj0 * n0 + wj1 * n1);
        }
        Q1 += (h / 2.0) * (p.v2[k] * nu[k] + p.v2[k + 1] * nu[k + 1]);
        Qd1 += (h / 2.0) * (p.dv2[k] * nu[k] + p.dv2[k + 1] * nu[k + 1]);

        const std::size_t m = k + 1;  // assemble the row at t_{k+1}
        double Ngg = 0.5 * (p.v2[0] * Mg[0] + p.v2[m] * Mg[m]);
        double Ngh = 0.5 * (p.v2[0] * Mh[0] + p.v2[m] * Mh[m]);
        double Nhh = 0.5 * (p.dv2[0] * Mh[0] + p.dv2[m] * Mh[m]);
        double NgJ = 0.5 * (p.v2[0] * MJ[0] + p.v2[m] * MJ[m]);
        double NJh = 0.5 * (J2[0] * Mh[0] + J2[m] * Mh[m]);
        for (std::size_t x = 1; x < m; ++x) {
            Ngg += p.v2[x] * Mg[x];
            Ngh += p.v2[x] * Mh[x];
            Nhh += p.dv2[x] * Mh[x];
            NgJ += p.v2[x] * MJ[x];
            NJh += J2[x] * Mh[x];
        }
        Ngg *= h;
        Ngh *= h;
        Nhh *= h;
        NgJ *= h;
        NJh *= h;

        const double Sqq = hbar / (M * M) * Ngg;
        const double Sqp = hbar / M * Ngh;
        const double Spp = hbar * Nhh;
        const double Sdot_qp = hbar / M * (Q1 + Nhh - Om2 * Ngg - (2.0 / M) * NgJ);
        const double Sdot_pp = 2.0 * hbar * (Qd1 - Om2 * Ngh - (2.0 / M) * NJh);

        const double drift = M * Om2 + out.A[m];
        out.C[m] = Sdot_qp - Spp / M + drift * Sqq + out.B[m] * Sqp;
        out.D[m] = 0.5 * Sdot_pp + drift * Sqp + out.B[m] * Spp;
    }
    return out;
}

} // namespace detail

// Full-resolution exact trajectory on the solver grid (row k at t = k ds).
inline CoefficientTrajectory exact_trajectory(const SystemParams& sys, const BathSpec& bath,
                                              const KernelTable& kernels, double t_max,
                                              double ds, std::size_t stride = 1,
                                              double residual_tol = 1e-5) {
    sys.validate();
    bath.validate();
    if (stride == 0) throw UsageError("trajectory: stride must be >= 1");
    if (t_max == 0.0) {
        CoefficientTrajectory traj;
        traj.provenance = CoeffMode::exact;
        traj.dt = ds * double(stride);
        traj.rows.push_back({0.0, 0.0, 0.0, 0.0, 0.0});
        traj.flagged.push_back(0);
        return traj;
    }
    IvpPair p = solve_ivp_pair(sys, kernels, t_max, ds, residual_tol);
    auto sweep = detail::exact_sweep(sys, kernels, p, bath.hbar);
    const std::size_t n = p.size() - 1;

    CoefficientTrajectory traj;
    traj.provenance = CoeffMode::exact;
    traj.dt = ds * double(stride);
    for (std::size_t k = 0; k <= n; k += stride) {
        traj.rows.push_back({ds * double(k), sweep.A[k], sweep.B[k], sweep.C[k], sweep.D[k]});
        traj.flagged.push_back(sweep.flagged[k]);
    }
    return traj;
}

// Single-point exact coefficients (endpoint of a sweep over [0, t]).
inline CoefficientSet coefficients_exact(const SystemParams& sys, const BathSpec& bath,
                                         const KernelTable& kernels, double t, double ds,
                                         double residual_tol = 1e-5) {
    if (t == 0.0) return {0.0, 0.0, 0.0, 0.0, 0.0};
    auto traj = exact_trajectory(sys, bath, kernels, t, ds, /*stride=*/
                                 detail::checked_steps(t, ds), residual_tol);
    if (traj.flagged.back())
        throw DegeneracyError("coefficients_exact: u1'(t) = 0 coefficient singularity at t = " +
                              std::to_string(t));
    return traj.rows.back();
}

// ---------------------------------------------------------------------------
// Weak-coupling closed forms (second order in the couplings):
//   A = 2 ∫_0^t eta(s) cos(Omega s) ds        B = -(2/M Omega) ∫_0^t eta(s) sin(Omega s) ds
//   C = (hbar/M Omega) ∫_0^t nu(s) sin(Omega s) ds   D = hbar ∫_0^t nu(s) cos(Omega s) ds
// with the eta integrals taken by parts and sin(Omega s)/Omega -> s at Omega = 0.
// ---------------------------------------------------------------------------

inline CoefficientTrajectory weak_trajectory(const SystemParams& sys, const BathSpec& bath,
                                             const KernelTable& kernels, double t_max, double ds,
                                             std::size_t stride = 1) {
    sys.validate();
    bath.validate();
    if (stride == 0) throw UsageError("trajectory: stride must be >= 1");
    if (t_max == 0.0) {
        CoefficientTrajectory traj;
        traj.provenance = CoeffMode::weak;
        traj.dt = ds * double(stride);
        traj.rows.push_back({0.0, 0.0, 0.0, 0.0, 0.0});
        traj.flagged.push_back(0);
        return traj;
    }
    const std::size_t n = detail::checked_steps(t_max, ds);
    if (kernels.size() < n + 1 || std::abs(kernels.ds - ds) > 1e-12 * std::max(1.0, ds))
        throw UsageError("weak_trajectory: kernel table does not cover [0, t_max]");

    const double M = sys.M;
    const double Om = sys.Omega;
    const bool zero_freq = Om < 1e-12;
    const double hbar = bath.hbar;

    CoefficientTrajectory traj;
    traj.provenance = CoeffMode::weak;
    traj.dt = ds * double(stride);

    // prefix trapezoids
    double ig_sin = 0.0, ig_cos = 0.0, ig_plain = 0.0;
    double in_sin = 0.0, in_cos = 0.0, in_s = 0.0;
    auto emit = [&](std::size_t k) {
        const double t = ds * double(k);
        const double g0 = kernels.gamma[0], gt = kernels.gamma[k];
        double A, B, C, D;
        if (zero_freq) {
            A = 2.0 * (gt - g0);
            B = -(2.0 / M) * (gt * t - ig_plain);
            C = hbar / M * in_s;
            D = hbar * in_cos;
        } else {
            A = 2.0 * (gt * std::cos(Om * t) - g0 + Om * ig_sin);
            B = -(2.0 / (M * Om)) * gt * std::sin(Om * t) + (2.0 / M) * ig_cos;
            C = hbar / (M * Om) * in_sin;
            D = hbar * in_cos;
        }
        traj.rows.push_back({t, A, B, C, D});
        traj.flagged.push_back(0);
    };

    emit(0);
    for (std::size_t k = 0; k < n; ++k) {
        const double s0 = ds * double(k), s1 = ds * double(k + 1);
        auto pan = [&](double f0, double f1) { return (ds / 2.0) * (f0 + f1); };
        ig_sin += pan(kernels.gamma[k] * std::sin(Om * s0), kernels.gamma[k + 1] * std::sin(Om * s1));
        ig_cos += pan(kernels.gamma[k] * std::cos(Om * s0), kernels.gamma[k + 1] * std::cos(Om * s1));
        ig_plain += pan(kernels.gamma[k], kernels.gamma[k + 1]);
        in_sin += pan(kernels.nu[k] * std::sin(Om * s0), kernels.nu[k + 1] * std::sin(Om * s1));
        in_cos += pan(kernels.nu[k] * std::cos(Om * s0), kernels.nu[k + 1] * std::cos(Om * s1));
        in_s += pan(kernels.nu[k] * s0, kernels.nu[k + 1] * s1);
        if ((k + 1) % stride == 0) emit(k + 1);
    }
    return traj;
}

inline CoefficientSet coefficients_weak(const SystemParams& sys, const BathSpec& bath,
                                        const KernelTable& kernels, double t) {
    if (t == 0.0) return {0.0, 0.0, 0.0, 0.0, 0.0};
    const std::size_t n = detail::checked_steps(t, kernels.ds);
    auto traj = weak_trajectory(sys, bath, kernels, t, kernels.ds, n);
    return traj.rows.back();
}

// ---------------------------------------------------------------------------
// Ohmic Fokker–Planck limit: constants B = 2 gamma0, C = 0, D = 2 M gamma0 kB T.
// A is the divergent frequency renormalization, reported as NaN; consumers
// must work with Omega_ren.
// ---------------------------------------------------------------------------

inline CoefficientSet coefficients_ohmic_fp(const SystemParams& sys, double gamma0, double T,
                                            double kB = 1.0, double t = 0.0) {
    sys.validate();
    if (!sys.Omega_ren)
        throw ConfigError("ohmic_fp mode needs Omega_ren (the bare Omega carries the divergent shift)");
    if (!(gamma0 >= 0.0) || !(T >= 0.0)) throw ConfigError("ohmic_fp: gamma0 and T must be >= 0");
    const double A = gamma0 == 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
    return {t, A, 2.0 * gamma0, 0.0, 2.0 * sys.M * gamma0 * kB * T};
}

// ---------------------------------------------------------------------------
// Mode dispatch over a uniform output grid.
// ---------------------------------------------------------------------------

inline CoefficientTrajectory trajectory(const SystemParams& sys, const BathSpec& bath,
                                        const KernelTable& kernels, CoeffMode mode, double t_max,
                                        double dt_out, double ds, double residual_tol = 1e-5) {
    if (!(dt_out > 0.0)) throw UsageError("trajectory: dt_out must be positive");
    const double q = dt_out / ds;
    const auto stride = std::size_t(std::llround(q));
    if (stride == 0 || std::abs(q - double(stride)) > 1e-6)
        throw UsageError("trajectory: dt_out must be a multiple of ds");
    switch (mode) {
        case CoeffMode::exact:
            return exact_trajectory(sys, bath, kernels, t_max, ds, stride, residual_tol);
        case CoeffMode::weak:
            return weak_trajectory(sys, bath, kernels, t_max, ds, stride);
        case CoeffMode::ohmic_fp: {
            if (bath.spectral.is_discrete())
                throw ConfigError("ohmic_fp mode needs an Ohmic continuum bath");
            const double T = bath.temperature();
            CoefficientTrajectory traj;
            traj.provenance = CoeffMode::ohmic_fp;
            traj.dt = dt_out;
            const std::size_t nrows = std::size_t(std::llround(t_max / dt_out)) + 1;
            for (std::size_t k = 0; k < nrows; ++k) {
                auto c = coefficients_ohmic_fp(sys, bath.spectral.gamma0, T, bath.kB,
                                               dt_out * double(k));
                traj.rows.push_back(c);
                traj.flagged.push_back(0);
            }
            return traj;
        }
    }
    throw UsageError("trajectory: unknown mode");
}

// ---------------------------------------------------------------------------
// The C, D quadratures with the Green functions exactly as printed in the
// boundary-value construction (Wronskian denominator at the second argument).
// Kept as a selectable evaluation for comparison against the brute-force
// oracle; see coefficients_exact for the covariance route used by default.
// ---------------------------------------------------------------------------

inline CoefficientSet coefficients_exact_printed(const SystemParams& sys, const BathSpec& bath,
                                                 const KernelTable& kernels, double t, double ds,
                                                 double residual_tol = 1e-5) {
    sys.validate();
    if (t == 0.0) return {0.0, 0.0, 0.0, 0.0, 0.0};
    IvpPair p = solve_ivp_pair(sys, kernels, t, ds, residual_tol);
    const std::size_t n = p.size() - 1;
    const double h = ds;
    const double M = sys.M;
    const double hbar = bath.hbar;
    const auto& nu = kernels.nu;
    const auto& ga = kernels.gamma;

    std::vector<double> W(n + 1), J1(n + 1), J2(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        W[k] = p.wronskian(k);
        J1[k] = p.J1(k, M, sys.Omega);
        J2[k] = p.J2(k, M, sys.Omega);
    }
    const double A = 2.0 * (J1[n] * p.dv2[n] - J2[n] * p.dv1[n]) / W[n];
    const double B = (2.0 / M) * (p.v1[n] * J2[n] - p.v2[n] * J1[n]) / W[n];

    auto trapz = [&](const std::vector<double>& f, std::size_t lo, std::size_t hi) {
        if (hi <= lo) return 0.0;
        double s = 0.5 * (f[lo] + f[hi]);
        for (std::size_t k = lo + 1; k < hi; ++k) s += f[k];
        return s * h;
    };

    // Phi_X(tau) = ∫_0^t G(t,l) nu(tau-l) dl with G = G1 (for C) or dG1 (for D),
    // G1(t,l) = [v1(l) v2(t) - v2(l) v1(t)] / W(l),
    // dG1(t,l) = [v1(l) v2'(t) - v2(l) v1'(t)] / W(l)
    std::vector<double> g1t(n + 1), dg1t(n + 1), vt1(n + 1), vt2(n + 1);
    for (std::size_t l = 0; l <= n; ++l) {
        vt1[l] = p.v1[l] / W[l];
        vt2[l] = p.v2[l] / W[l];
        g1t[l] = vt1[l] * p.v2[n] - vt2[l] * p.v1[n];
        dg1t[l] = vt1[l] * p.dv2[n] - vt2[l] * p.dv1[n];
    }
    std::vector<double> phiC(n + 1), phiD(n + 1), tmp(n + 1);
    for (std::size_t tau = 0; tau <= n; ++tau) {
        for (std::size_t l = 0; l <= n; ++l) tmp[l] = g1t[l] * nu[tau >= l ? tau - l : l - tau];
        phiC[tau] = trapz(tmp, 0, n);
        for (std::size_t l = 0; l <= n; ++l) tmp[l] = dg1t[l] * nu[tau >= l ? tau - l : l - tau];
        phiD[tau] = trapz(tmp, 0, n);
    }

    // psi_X(s) = ∫_s^t G2(s,tau) Phi_X(tau) dtau decomposed through the
    // suffix integrals R_i(s) = ∫_s^t (v_i/W)(tau) Phi_X(tau) dtau
    auto triple = [&](const std::vector<double>& phi) {
        std::vector<double> r1(n + 1, 0.0), r2(n + 1, 0.0);
        for (std::size_t k = n; k-- > 0;) {
            r1[k] = r1[k + 1] + (h / 2.0) * (vt1[k] * phi[k] + vt1[k + 1] * phi[k + 1]);
            r2[k] = r2[k + 1] + (h / 2.0) * (vt2[k] * phi[k] + vt2[k + 1] * phi[k + 1]);
        }
        // psi = v2 r1 - v1 r2, psi' = v2' r1 - v1' r2 (boundary terms cancel)
        std::vector<double> dpsi(n + 1);
        for (std::size_t k = 0; k <= n; ++k) dpsi[k] = p.dv2[k] * r1[k] - p.dv1[k] * r2[k];
        const double psi0 = p.v2[0] * r1[0] - p.v1[0] * r2[0];
        // ∫_0^t eta(t-s) psi(s) ds by parts; psi(t) = 0
        std::vector<double> conv(n + 1);
        for (std::size_t k = 0; k <= n; ++k) conv[k] = ga[n - k] * dpsi[k];
        return ga[n] * psi0 + trapz(conv, 0, n);
    };

    const double C = hbar / M * phiC[n] - 2.0 * hbar / (M * M) * triple(phiC);
    const double D = hbar * phiD[n] - 2.0 * hbar / M * triple(phiD);
    return {t, A, B, C, D};
}

} // namespace qbm
