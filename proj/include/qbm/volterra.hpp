// volterra.hpp — the homogeneous integro-differential equation of motion
//
//   Sigma''(s) + Omega^2 Sigma(s) + (2/M) ∫_0^s eta(s-l) Sigma(l) dl = 0
//
// with eta = dgamma/ds.  The memory term is used exclusively in its
// integration-by-parts form
//
//   ∫_0^s eta(s-l) Sigma(l) dl
//       = gamma(s) Sigma(0) - gamma(0) Sigma(s) + ∫_0^s gamma(s-l) Sigma'(l) dl,
//
// so distribution-valued eta (Ohmic limit) never appears.  Two IVP solutions
// v1 (1,0) and v2 (0,1) are advanced by an implicit trapezoidal rule whose
// corrector is solved exactly (the update is linear in the unknowns); the
// boundary-value elementary functions u1, u2 are linear combinations of them.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qbm/bath.hpp"
#include "qbm/errors.hpp"

namespace qbm {

struct SystemParams {
    double M{1.0};                    // Brownian mass
    double Omega{1.0};                // bare frequency
    std::optional<double> Omega_ren;  // renormalized frequency (Ohmic FP mode)

    void validate() const {
        if (!(M > 0.0) || !std::isfinite(M)) throw ConfigError("system mass must be positive and finite");
        if (!(Omega >= 0.0) || !std::isfinite(Omega)) throw ConfigError("Omega must be >= 0 and finite");
        if (Omega_ren && !std::isfinite(*Omega_ren)) throw ConfigError("Omega_ren must be finite");
    }
};

// Fundamental IVP pair on the uniform grid: v1(0)=1, v1'(0)=0; v2(0)=0, v2'(0)=1.
// Second derivatives come from the equation itself and are stored so that the
// memory integrals J_i(s) = ∫_0^s eta(s-l) v_i(l) dl are available for free:
//   J_i = -(M/2) (v_i'' + Omega^2 v_i).
struct IvpPair {
    double ds{0.0};
    double t_final{0.0};
    std::vector<double> v1, dv1, a1;  // value, first, second derivative
    std::vector<double> v2, dv2, a2;
    double residual_norm{0.0};  // normalized defect of the worst interior point

    std::size_t size() const { return v1.size(); }

    double J1(std::size_t k, double M, double Omega) const {
        return -0.5 * M * (a1[k] + Omega * Omega * v1[k]);
    }
    double J2(std::size_t k, double M, double Omega) const {
        return -0.5 * M * (a2[k] + Omega * Omega * v2[k]);
    }
    // Wronskian-like combination v1 v2' - v1' v2 (not constant for nonlocal kernels).
    double wronskian(std::size_t k) const { return v1[k] * dv2[k] - dv1[k] * v2[k]; }
};

namespace detail {

inline std::size_t checked_steps(double t_final, double ds) {
    if (!(ds > 0.0)) throw UsageError("solver: ds must be positive");
    if (!(t_final > 0.0)) throw UsageError("solver: t_final must be positive");
    const double q = t_final / ds;
    const auto n = std::size_t(std::llround(q));
    if (n == 0 || std::abs(q - double(n)) > 1e-6)
        throw UsageError("solver: ds must divide t_final");
    return n;
}

} // namespace detail

inline IvpPair solve_ivp_pair(const SystemParams& sys, const KernelTable& kernels,
                              double t_final, double ds, double residual_tol = 1e-5) {
    sys.validate();
    const std::size_t n = detail::checked_steps(t_final, ds);
    if (kernels.size() < n + 1 || std::abs(kernels.ds - ds) > 1e-12 * std::max(1.0, ds))
        throw UsageError("solver: kernel table does not cover [0, t_final] on this grid");

    const double h = ds;
    const double g0 = kernels.gamma[0];
    const double M = sys.M;
    const double Om2 = sys.Omega * sys.Omega;
    const double p = -Om2 + 2.0 * g0 / M;
    const double q = 2.0 / M;
    const double r = -q * h * g0 / 2.0;
    const double denom = 1.0 - (h * h / 4.0) * p - (h / 2.0) * r;  // = 1 + h^2 Om^2/4
    bool no_memory = true;
    for (std::size_t k = 0; k <= n && no_memory; ++k) no_memory = kernels.gamma[k] == 0.0;

    IvpPair out;
    out.ds = ds;
    out.t_final = t_final;
    auto run = [&](double x0, double y0, std::vector<double>& xs, std::vector<double>& ys,
                   std::vector<double>& as) {
        xs.assign(n + 1, 0.0);
        ys.assign(n + 1, 0.0);
        as.assign(n + 1, 0.0);
        xs[0] = x0;
        ys[0] = y0;
        as[0] = -Om2 * x0;
        for (std::size_t k = 0; k < n; ++k) {
            // history part of the convolution ∫ gamma(t_{k+1}-l) Sigma'(l) dl
            double H = 0.0;
            if (!no_memory) {
                H = 0.5 * kernels.gamma[k + 1] * ys[0];
                for (std::size_t j = 1; j <= k; ++j) H += kernels.gamma[k + 1 - j] * ys[j];
                H *= h;
            }
            const double d = -q * (kernels.gamma[k + 1] * x0 + H);
            const double y1 = (ys[k] + (h / 2.0) * as[k] +
                               (h / 2.0) * p * (xs[k] + (h / 2.0) * ys[k]) + (h / 2.0) * d) /
                              denom;
            const double x1 = xs[k] + (h / 2.0) * (ys[k] + y1);
            xs[k + 1] = x1;
            ys[k + 1] = y1;
            as[k + 1] = p * x1 + r * y1 + d;
        }
    };
    run(1.0, 0.0, out.v1, out.dv1, out.a1);
    run(0.0, 1.0, out.v2, out.dv2, out.a2);

    // defect check: central second difference against the stored acceleration
    double worst = 0.0, scale = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        const double d1 = (out.v1[k + 1] - 2.0 * out.v1[k] + out.v1[k - 1]) / (h * h) - out.a1[k];
        const double d2 = (out.v2[k + 1] - 2.0 * out.v2[k] + out.v2[k - 1]) / (h * h) - out.a2[k];
        worst = std::max({worst, std::abs(d1), std::abs(d2)});
        scale = std::max({scale, std::abs(out.a1[k]), std::abs(out.a2[k])});
    }
    scale += Om2 + 2.0 * std::abs(g0) / M + 1.0;
    out.residual_norm = worst / scale;
    if (out.residual_norm > residual_tol) {
        const double suggest = ds * std::sqrt(residual_tol / out.residual_norm) * 0.8;
        throw AccuracyError("solver: step too large, residual " + std::to_string(out.residual_norm) +
                                " exceeds tolerance " + std::to_string(residual_tol) +
                                "; try ds <= " + std::to_string(suggest),
                            suggest);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Elementary functions u1, u2: the same equation under two-point boundary
// conditions u1(0)=1, u1(t)=0 and u2(0)=0, u2(t)=1.
// ---------------------------------------------------------------------------

struct ElementarySolution {
    double t_final{0.0};
    double ds{0.0};
    std::vector<double> u1, u2, du1, du2;
    std::vector<double> au1, au2;  // second derivatives (for residual checks)
    double du1_at_0{0.0}, du1_at_t{0.0}, du2_at_0{0.0}, du2_at_t{0.0};
    double residual_norm{0.0};

    std::size_t size() const { return u1.size(); }
};

inline ElementarySolution elementary(const SystemParams& sys, const KernelTable& kernels,
                                     double t_final, double ds, double residual_tol = 1e-5) {
    IvpPair p = solve_ivp_pair(sys, kernels, t_final, ds, residual_tol);
    const std::size_t n = p.size() - 1;
    double v2max = 0.0;
    for (double v : p.v2) v2max = std::max(v2max, std::abs(v));
    // the discrete v2(t) sits O(ds^2) away from the true one, so the conjugate
    // point window must be wider than the scheme's own drift
    if (std::abs(p.v2[n]) < 1e-6 * v2max)
        throw SingularBoundaryError(
            "elementary: boundary-value problem is singular at t = " + std::to_string(t_final) +
                " (v2(t) = 0 conjugate point; for a decoupled oscillator these sit at t = n pi/Omega)",
            t_final);

    const double ratio = p.v1[n] / p.v2[n];
    const double vend = p.v2[n];
    ElementarySolution e;
    e.t_final = t_final;
    e.ds = ds;
    e.u1.resize(n + 1);
    e.u2.resize(n + 1);
    e.du1.resize(n + 1);
    e.du2.resize(n + 1);
    e.au1.resize(n + 1);
    e.au2.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        e.u1[k] = p.v1[k] - ratio * p.v2[k];
        e.du1[k] = p.dv1[k] - ratio * p.dv2[k];
        e.au1[k] = p.a1[k] - ratio * p.a2[k];
        e.u2[k] = p.v2[k] / vend;  // division makes u2(t_final) exactly 1
        e.du2[k] = p.dv2[k] / vend;
        e.au2[k] = p.a2[k] / vend;
    }
    e.du1_at_0 = e.du1[0];
    e.du1_at_t = e.du1[n];
    e.du2_at_0 = e.du2[0];
    e.du2_at_t = e.du2[n];

    double worst = 0.0, scale = 0.0;
    const double h = ds;
    for (std::size_t k = 1; k < n; ++k) {
        const double d1 = (e.u1[k + 1] - 2.0 * e.u1[k] + e.u1[k - 1]) / (h * h) - e.au1[k];
        const double d2 = (e.u2[k + 1] - 2.0 * e.u2[k] + e.u2[k - 1]) / (h * h) - e.au2[k];
        worst = std::max({worst, std::abs(d1), std::abs(d2)});
        scale = std::max({scale, std::abs(e.au1[k]), std::abs(e.au2[k])});
    }
    scale += 1.0;
    e.residual_norm = worst / scale;
    return e;
}

// ---------------------------------------------------------------------------
// Green functions built from u1, u2 exactly as printed in the construction:
//   G(s1,s2) = [u1(s2) u2(s1) - u2(s2) u1(s1)] / [u1(s2) u2'(s2) - u1'(s2) u2(s2)]
// with retarded support for G1 (s1 > s2) and advanced support for G2
// (s2 > s1).  G1' is the s1-derivative on the retarded branch.
// ---------------------------------------------------------------------------

class GreenEvaluator {
public:
    explicit GreenEvaluator(const ElementarySolution& sol) : sol_(&sol) {}

    double G1(double s1, double s2) const {
        if (s1 <= s2) return 0.0;
        return ratio(s1, s2, /*derivative=*/false);
    }
    double G2(double s1, double s2) const {
        if (s2 <= s1) return 0.0;
        return ratio(s1, s2, /*derivative=*/false);
    }
    double dG1(double s1, double s2) const {
        if (s1 < s2) return 0.0;
        return ratio(s1, s2, /*derivative=*/true);
    }

private:
    struct Samples {
        double u1, u2, du1, du2;
    };
    Samples at(double s) const {
        const auto& e = *sol_;
        if (s < 0.0 || s > e.t_final * (1.0 + 1e-12))
            throw UsageError("green: argument outside [0, t_final]");
        const double x = std::clamp(s / e.ds, 0.0, double(e.size() - 1));
        const auto k0 = std::min(std::size_t(x), e.size() - 2);
        const double f = x - double(k0);
        auto lerp = [&](const std::vector<double>& a) {
            return a[k0] * (1.0 - f) + a[k0 + 1] * f;
        };
        if (e.size() == 1) return {e.u1[0], e.u2[0], e.du1[0], e.du2[0]};
        return {lerp(e.u1), lerp(e.u2), lerp(e.du1), lerp(e.du2)};
    }
    double ratio(double s1, double s2, bool derivative) const {
        const Samples a = at(s2);   // denominator point
        const Samples b = at(s1);
        const double den = a.u1 * a.du2 - a.du1 * a.u2;
        const double den_scale = std::abs(a.u1 * a.du2) + std::abs(a.du1 * a.u2);
        if (std::abs(den) < 1e-12 * std::max(den_scale, 1e-300))
            throw DegeneracyError("green: Wronskian denominator vanished at s2 = " + std::to_string(s2));
        const double num = derivative ? a.u1 * b.du2 - a.u2 * b.du1
                                      : a.u1 * b.u2 - a.u2 * b.u1;
        return num / den;
    }

    const ElementarySolution* sol_;
};

inline double green_G1(const GreenEvaluator& ev, double s1, double s2) { return ev.G1(s1, s2); }
inline double green_G2(const GreenEvaluator& ev, double s1, double s2) { return ev.G2(s1, s2); }
inline double green_dG1(const GreenEvaluator& ev, double s1, double s2) { return ev.dG1(s1, s2); }

} // namespace qbm
