// bath.hpp — thermal environments: spectral densities and the memory kernels
//
// gamma(s) = ∫_0^∞ dω I(ω)/ω cos(ωs)            (dissipation kernel primitive)
// nu(s)    = ∫_0^∞ dω I(ω) coth(ħωβ/2) cos(ωs)  (noise kernel)
//
// The derivative kernel eta = dgamma/ds is distribution-valued in the Ohmic
// limit and is never sampled pointwise; consumers use eta_moment(), which
// rewrites ∫_0^t eta(t-s) g(s) ds by parts so only gamma appears.

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "qbm/errors.hpp"
#include "qbm/threads.hpp"

namespace qbm {

inline constexpr double beta_infinite = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct BathMode {
    double coupling{0.0};  // C_n
    double mass{1.0};      // m_n > 0
    double omega{1.0};     // ω_n > 0
};

struct SpectralDensity {
    enum class Kind { discrete, ohmic_exp, ohmic_sharp };

    Kind kind{Kind::discrete};
    std::vector<BathMode> modes;  // discrete only
    double gamma0{0.0};           // continuum: I(ω) = (2/π) M γ0 ω cutoff(ω/Λ)
    double cutoff{1.0};           // Λ
    double mass{1.0};             // the M entering the Ohmic normalization

    static SpectralDensity discrete(std::vector<BathMode> m) {
        SpectralDensity s;
        s.kind = Kind::discrete;
        s.modes = std::move(m);
        return s;
    }
    static SpectralDensity ohmic_exp(double gamma0, double cutoff, double mass) {
        SpectralDensity s;
        s.kind = Kind::ohmic_exp;
        s.gamma0 = gamma0;
        s.cutoff = cutoff;
        s.mass = mass;
        return s;
    }
    static SpectralDensity ohmic_sharp(double gamma0, double cutoff, double mass) {
        SpectralDensity s;
        s.kind = Kind::ohmic_sharp;
        s.gamma0 = gamma0;
        s.cutoff = cutoff;
        s.mass = mass;
        return s;
    }

    bool is_discrete() const { return kind == Kind::discrete; }

    // I(ω) for the continuum kinds.
    double density(double w) const {
        if (w <= 0.0) return 0.0;
        switch (kind) {
            case Kind::ohmic_exp:
                return (2.0 / M_PI) * mass * gamma0 * w * std::exp(-w / cutoff);
            case Kind::ohmic_sharp:
                return w <= cutoff ? (2.0 / M_PI) * mass * gamma0 * w : 0.0;
            case Kind::discrete:
                throw UsageError("SpectralDensity::density: discrete baths carry delta weights, not a density");
        }
        return 0.0;
    }

    void validate() const {
        if (kind == Kind::discrete) {
            for (const auto& m : modes) {
                if (!(m.mass > 0.0) || !std::isfinite(m.mass))
                    throw ConfigError("bath mode mass must be positive and finite");
                if (!(m.omega > 0.0) || !std::isfinite(m.omega))
                    throw ConfigError("bath mode frequency must be positive and finite");
                if (!std::isfinite(m.coupling))
                    throw ConfigError("bath mode coupling must be finite");
            }
        } else {
            if (!(gamma0 >= 0.0) || !std::isfinite(gamma0))
                throw ConfigError("ohmic gamma0 must be >= 0 and finite");
            if (!(cutoff > 0.0) || !std::isfinite(cutoff))
                throw ConfigError("ohmic spectral density needs a positive finite cutoff");
            if (!(mass > 0.0) || !std::isfinite(mass))
                throw ConfigError("ohmic mass scale must be positive and finite");
        }
    }
};

struct BathSpec {
    SpectralDensity spectral;
    double beta{1.0};  // inverse temperature; beta_infinite means T = 0
    double hbar{1.0};
    double kB{1.0};

    double temperature() const {
        return std::isinf(beta) ? 0.0 : 1.0 / (kB * beta);
    }

    void validate() const {
        spectral.validate();
        if (!(beta > 0.0)) throw ConfigError("beta must be positive (or infinite for T = 0)");
        if (!(hbar > 0.0) || !std::isfinite(hbar)) throw ConfigError("hbar must be positive and finite");
        if (!(kB > 0.0) || !std::isfinite(kB)) throw ConfigError("kB must be positive and finite");
    }
};

// Sampled kernels on the uniform grid s = 0, ds, ..., n*ds.
struct KernelTable {
    double ds{0.0};
    std::vector<double> gamma;
    std::vector<double> nu;

    double s_max() const { return gamma.empty() ? 0.0 : ds * double(gamma.size() - 1); }
    std::size_t size() const { return gamma.size(); }
};

// ---------------------------------------------------------------------------
// coth(ħωβ/2) with overflow/cancellation-safe branches.  x = ħωβ.
// ---------------------------------------------------------------------------

inline double coth_half(double x) {
    if (std::isinf(x)) return 1.0;
    if (x > 50.0) return 1.0;
    if (x < 1e-4) return 2.0 / x + x / 6.0;
    return 1.0 / std::tanh(0.5 * x);
}

// ---------------------------------------------------------------------------
// Gauss–Legendre nodes/weights on [-1, 1] (Newton on the Legendre polynomial).
// ---------------------------------------------------------------------------

inline void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (double(i) + 0.75) / (double(n) + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * double(j) + 1.0) * x * p1 - double(j) * p2) / (double(j) + 1.0);
            }
            pp = double(n) * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
}

namespace detail {

// Panelization for ∫_0^W f(ω) cos(ωs) dω: panel width bounded both by the
// oscillation rule π/(4s) and by the structure scale Λ/4 of the integrand.
inline double osc_panel_width(double s, double cutoff) {
    double w = cutoff / 8.0;
    if (s > 0.0) w = std::min(w, M_PI / (4.0 * s));
    return w;
}

// Upper integration limit.  The exponential tail is truncated where its
// envelope falls below 1e-15 of the head; the sharp cutoff has exact support.
inline double omega_max(const SpectralDensity& sd) {
    return sd.kind == SpectralDensity::Kind::ohmic_sharp ? sd.cutoff : 35.0 * sd.cutoff;
}

// 4-point Gauss–Legendre panels over [0, omega_max] sized by rule(s_rule).
// Calls f(ω) at each node; integrates f(ω) cos(ω s) exactly enough that the
// truncation, not the rule, limits accuracy for every s <= s_rule.
template <class F>
double panel_cos_integral(const F& f, double s, double s_rule, const SpectralDensity& sd) {
    static const double gx[4] = {-0.8611363115940526, -0.3399810435848563,
                                 0.3399810435848563, 0.8611363115940526};
    static const double gw[4] = {0.3478548451374538, 0.6521451548625461,
                                 0.6521451548625461, 0.3478548451374538};
    const double W = omega_max(sd);
    const double h = osc_panel_width(s_rule, sd.cutoff);
    const std::size_t npanels = std::size_t(std::ceil(W / h));
    double sum = 0.0;
    for (std::size_t p = 0; p < npanels; ++p) {
        const double a = W * double(p) / double(npanels);
        const double b = W * double(p + 1) / double(npanels);
        const double c = 0.5 * (a + b), r = 0.5 * (b - a);
        double ps = 0.0;
        for (int k = 0; k < 4; ++k) {
            const double w = c + r * gx[k];
            ps += gw[k] * f(w) * std::cos(w * s);
        }
        sum += r * ps;
    }
    return sum;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Point kernels
// ---------------------------------------------------------------------------

// gamma(s) = ∫_0^∞ dω I(ω)/ω cos(ωs); exact mode sum for discrete baths.
inline double gamma_kernel(const BathSpec& bath, double s) {
    if (!std::isfinite(s)) throw UsageError("gamma_kernel: s must be finite");
    const auto& sd = bath.spectral;
    if (sd.is_discrete()) {
        double sum = 0.0;
        for (const auto& m : sd.modes)
            sum += m.coupling * m.coupling / (2.0 * m.mass * m.omega * m.omega) * std::cos(m.omega * s);
        return sum;
    }
    sd.validate();  // a divergent (cutoff-free) configuration never reaches here
    return detail::panel_cos_integral([&](double w) { return sd.density(w) / w; }, s, std::abs(s), sd);
}

// nu(s) = ∫_0^∞ dω I(ω) coth(ħωβ/2) cos(ωs); coth → 1 at zero temperature.
inline double nu_kernel(const BathSpec& bath, double s) {
    if (!std::isfinite(s)) throw UsageError("nu_kernel: s must be finite");
    if (!(bath.beta > 0.0)) throw ConfigError("nu_kernel: beta must be positive or infinite");
    const auto& sd = bath.spectral;
    const double hb = bath.hbar * bath.beta;
    if (sd.is_discrete()) {
        double sum = 0.0;
        for (const auto& m : sd.modes)
            sum += m.coupling * m.coupling / (2.0 * m.mass * m.omega) * coth_half(hb * m.omega) *
                   std::cos(m.omega * s);
        return sum;
    }
    sd.validate();
    return detail::panel_cos_integral([&](double w) { return sd.density(w) * coth_half(hb * w); },
                                      s, std::abs(s), sd);
}

// ---------------------------------------------------------------------------
// eta moments: ∫_0^t eta(t-s) g(s) ds with eta = dgamma/ds, evaluated as
//     gamma(t) g(0) - gamma(0) g(t) + ∫_0^t gamma(t-s) g'(s) ds
// so eta is never differenced.  g and g' are sampled on the kernel grid.
// ---------------------------------------------------------------------------

inline double eta_moment(const KernelTable& kernels, std::span<const double> g,
                         std::span<const double> dg) {
    if (g.size() != dg.size()) throw UsageError("eta_moment: g and g' must share the grid");
    if (g.empty()) throw UsageError("eta_moment: empty sample set");
    if (g.size() > kernels.size()) throw UsageError("eta_moment: kernel table does not cover [0, t]");
    const std::size_t n = g.size() - 1;
    if (n == 0) return 0.0;
    double conv = 0.5 * (kernels.gamma[n] * dg[0] + kernels.gamma[0] * dg[n]);
    for (std::size_t j = 1; j < n; ++j) conv += kernels.gamma[n - j] * dg[j];
    conv *= kernels.ds;
    return kernels.gamma[n] * g[0] - kernels.gamma[0] * g[n] + conv;
}

// Convenience overload evaluating gamma pointwise from the bath.
inline double eta_moment(const BathSpec& bath, std::span<const double> g,
                         std::span<const double> dg, double ds) {
    if (!(ds > 0.0)) throw UsageError("eta_moment: ds must be positive");
    if (g.size() != dg.size()) throw UsageError("eta_moment: g and g' must share the grid");
    if (g.empty()) throw UsageError("eta_moment: empty sample set");
    const std::size_t n = g.size() - 1;
    if (n == 0) return 0.0;
    const double t = ds * double(n);
    double conv = 0.5 * (gamma_kernel(bath, t) * dg[0] + gamma_kernel(bath, 0.0) * dg[n]);
    for (std::size_t j = 1; j < n; ++j) conv += gamma_kernel(bath, t - ds * double(j)) * dg[j];
    conv *= ds;
    return gamma_kernel(bath, t) * g[0] - gamma_kernel(bath, 0.0) * g[n] + conv;
}

// ---------------------------------------------------------------------------
// Tabulation
// ---------------------------------------------------------------------------

namespace detail {

// Continuum fast path: one conservative panelization (oscillation rule applied
// at s_max works for every smaller s), I(ω) evaluated once per node, then the
// cosine factors advanced across the uniform s-grid by the Chebyshev two-term
// recurrence, reseeded periodically against drift.
inline void tabulate_continuum(const BathSpec& bath, double ds, std::size_t npts,
                               std::vector<double>& gamma_out, std::vector<double>& nu_out,
                               unsigned nthreads) {
    const auto& sd = bath.spectral;
    const double s_max = ds * double(npts - 1);
    const double W = omega_max(sd);
    const double h = osc_panel_width(s_max, sd.cutoff);
    const std::size_t npanels = std::size_t(std::ceil(W / h));
    static const double gx[4] = {-0.8611363115940526, -0.3399810435848563,
                                 0.3399810435848563, 0.8611363115940526};
    static const double gw[4] = {0.3478548451374538, 0.6521451548625461,
                                 0.6521451548625461, 0.3478548451374538};
    const std::size_t nnodes = 4 * npanels;
    std::vector<double> wnode(nnodes), ag(nnodes), an(nnodes);
    const double hb = bath.hbar * bath.beta;
    for (std::size_t p = 0; p < npanels; ++p) {
        const double a = W * double(p) / double(npanels);
        const double b = W * double(p + 1) / double(npanels);
        const double c = 0.5 * (a + b), r = 0.5 * (b - a);
        for (int k = 0; k < 4; ++k) {
            const std::size_t i = 4 * p + std::size_t(k);
            wnode[i] = c + r * gx[k];
            const double wq = r * gw[k];
            ag[i] = wq * sd.density(wnode[i]) / wnode[i];
            an[i] = wq * sd.density(wnode[i]) * coth_half(hb * wnode[i]);
        }
    }

    gamma_out.assign(npts, 0.0);
    nu_out.assign(npts, 0.0);

    // fixed 64-way chunking over nodes keeps the summation order independent
    // of the thread count
    const std::size_t nchunks = std::min<std::size_t>(nnodes, 64);
    const std::size_t chunk = (nnodes + nchunks - 1) / nchunks;
    const std::size_t used = (nnodes + chunk - 1) / chunk;
    std::vector<std::vector<double>> part_g(used), part_n(used);
    parallel_for(used, nthreads, [&](std::size_t cb, std::size_t ce) {
        constexpr std::size_t reseed = 8192;
        for (std::size_t c = cb; c < ce; ++c) {
            auto& pg = part_g[c];
            auto& pn = part_n[c];
            pg.assign(npts, 0.0);
            pn.assign(npts, 0.0);
            const std::size_t jb = c * chunk, je = std::min(nnodes, jb + chunk);
            for (std::size_t j = jb; j < je; ++j) {
                const double th = wnode[j] * ds;
                const double two_c = 2.0 * std::cos(th);
                double cm = std::cos(th);  // cos at k-1 once the loop rotates
                double cc = 1.0;           // cos at k
                const double aj_g = ag[j], aj_n = an[j];
                for (std::size_t k = 0; k < npts; ++k) {
                    if (k % reseed == 0) {
                        cc = std::cos(wnode[j] * ds * double(k));
                        cm = std::cos(wnode[j] * ds * (double(k) - 1.0));
                    }
                    pg[k] += aj_g * cc;
                    pn[k] += aj_n * cc;
                    const double cn = two_c * cc - cm;
                    cm = cc;
                    cc = cn;
                }
            }
        }
    });
    for (std::size_t c = 0; c < used; ++c) {
        if (part_g[c].empty()) continue;
        for (std::size_t k = 0; k < npts; ++k) {
            gamma_out[k] += part_g[c][k];
            nu_out[k] += part_n[c][k];
        }
    }
}

} // namespace detail

inline KernelTable tabulate_kernels(const BathSpec& bath, double ds, double s_max,
                                    unsigned nthreads = default_threads()) {
    bath.validate();
    if (!(ds > 0.0)) throw ConfigError("tabulate_kernels: ds must be positive");
    if (!(s_max >= ds)) throw ConfigError("tabulate_kernels: s_max must be at least ds");
    const std::size_t npts = std::size_t(std::llround(s_max / ds)) + 1;

    KernelTable table;
    table.ds = ds;
    if (bath.spectral.is_discrete()) {
        table.gamma.assign(npts, 0.0);
        table.nu.assign(npts, 0.0);
        const double hb = bath.hbar * bath.beta;
        for (const auto& m : bath.spectral.modes) {
            const double wg = m.coupling * m.coupling / (2.0 * m.mass * m.omega * m.omega);
            const double wn = m.coupling * m.coupling / (2.0 * m.mass * m.omega) * coth_half(hb * m.omega);
            for (std::size_t k = 0; k < npts; ++k) {
                const double c = std::cos(m.omega * ds * double(k));
                table.gamma[k] += wg * c;
                table.nu[k] += wn * c;
            }
        }
    } else {
        detail::tabulate_continuum(bath, ds, npts, table.gamma, table.nu, nthreads);
    }
    return table;
}

// ---------------------------------------------------------------------------
// Continuum → discrete mode set (for oracle comparisons): N Gauss–Legendre
// nodes on [0, 5Λ], unit masses, couplings matching the quadrature weight of
// I(ω):  C_n^2 / (2 m_n ω_n) = w_n I(ω_n).
// ---------------------------------------------------------------------------

inline std::vector<BathMode> discretize_to_modes(const SpectralDensity& sd, std::size_t n) {
    if (sd.is_discrete()) throw UsageError("discretize_to_modes: bath is already discrete");
    sd.validate();
    std::vector<double> x, w;
    gauss_legendre(n, x, w);
    const double a = 0.0, b = 5.0 * sd.cutoff;
    std::vector<BathMode> modes(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double omega = 0.5 * (b - a) * x[i] + 0.5 * (a + b);
        const double weight = 0.5 * (b - a) * w[i];
        modes[i].mass = 1.0;
        modes[i].omega = omega;
        modes[i].coupling = std::sqrt(2.0 * omega * weight * sd.density(omega));
    }
    return modes;
}

} // namespace qbm
