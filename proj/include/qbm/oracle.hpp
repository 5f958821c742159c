// oracle.hpp — brute-force ground truth: the full linear system+bath evolved
// exactly as one big Gaussian.  Means follow z(t) = U(t) z(0) and covariances
// Sigma(t) = U Sigma U^T with U = exp(G t) computed by scaling-and-squaring;
// reduced moments are the (q, p) block; the Wigner-equation coefficients are
// recovered from exact moment trajectories by inverting their rate equations
// with central differences.
//
// Phase-space ordering: z = (q, q_1..q_N, p, p_1..p_N).

#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qbm/bath.hpp"
#include "qbm/errors.hpp"
#include "qbm/gaussian.hpp"
#include "qbm/volterra.hpp"

namespace qbm {

// ---------------------------------------------------------------------------
// Matrix exponential, Pade(13) with scaling and squaring.
// ---------------------------------------------------------------------------

inline Eigen::MatrixXd expm(const Eigen::MatrixXd& A) {
    static const double b[14] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
    const long n = A.rows();
    const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
    const double theta13 = 5.371920351148152;
    int squarings = 0;
    if (norm1 > theta13) squarings = int(std::ceil(std::log2(norm1 / theta13)));
    const Eigen::MatrixXd As = A / std::pow(2.0, squarings);

    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd A2 = As * As;
    const Eigen::MatrixXd A4 = A2 * A2;
    const Eigen::MatrixXd A6 = A2 * A4;
    const Eigen::MatrixXd U =
        As * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 +
              b[1] * I);
    const Eigen::MatrixXd V =
        A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
    Eigen::MatrixXd R = (V - U).partialPivLu().solve(V + U);
    for (int i = 0; i < squarings; ++i) R = R * R;
    return R;
}

// ---------------------------------------------------------------------------
// Full phase-space model
// ---------------------------------------------------------------------------

class FullPhaseSpaceModel {
public:
    FullPhaseSpaceModel(const SystemParams& sys, std::vector<BathMode> modes)
        : sys_(sys), modes_(std::move(modes)) {
        sys_.validate();
        const long N = long(modes_.size());
        dim_ = 2 * (N + 1);
        K_.setZero(N + 1, N + 1);
        pinv_diag_.setZero(N + 1);
        K_(0, 0) = sys_.M * sys_.Omega * sys_.Omega;
        pinv_diag_(0) = 1.0 / sys_.M;
        for (long i = 0; i < N; ++i) {
            const auto& m = modes_[std::size_t(i)];
            if (!(m.mass > 0.0) || !(m.omega > 0.0))
                throw ConfigError("oracle: bath modes need positive mass and frequency");
            K_(i + 1, i + 1) = m.mass * m.omega * m.omega;
            K_(0, i + 1) = K_(i + 1, 0) = m.coupling;
            pinv_diag_(i + 1) = 1.0 / m.mass;
        }
        gen_.setZero(dim_, dim_);
        gen_.topRightCorner(N + 1, N + 1) = pinv_diag_.asDiagonal();
        gen_.bottomLeftCorner(N + 1, N + 1) = -K_;
        // Hamiltonian-form check: H recovered from the generator must be symmetric
        const Eigen::MatrixXd H = -symplectic_form() * gen_;
        if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + H.cwiseAbs().maxCoeff()))
            throw NumericalError("oracle: generator is not Hamiltonian");
    }

    long dim() const { return dim_; }
    std::size_t n_modes() const { return modes_.size(); }
    const std::vector<BathMode>& modes() const { return modes_; }
    const SystemParams& system() const { return sys_; }
    const Eigen::MatrixXd& generator() const { return gen_; }

    Eigen::MatrixXd symplectic_form() const {
        const long half = dim_ / 2;
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dim_, dim_);
        J.topRightCorner(half, half) = Eigen::MatrixXd::Identity(half, half);
        J.bottomLeftCorner(half, half) = -Eigen::MatrixXd::Identity(half, half);
        return J;
    }

    Eigen::MatrixXd hamiltonian_form() const {
        const long half = dim_ / 2;
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim_, dim_);
        H.topLeftCorner(half, half) = K_;
        H.bottomRightCorner(half, half) = Eigen::MatrixXd(pinv_diag_.asDiagonal());
        return H;
    }

    // exp(G t), cached per t and shared; every returned matrix has passed the
    // symplecticity check |U J U^T - J|_max <= 1e-10
    Eigen::MatrixXd transition(double t) const {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = cache_.find(t);
            if (it != cache_.end()) return it->second;
        }
        Eigen::MatrixXd U = expm(gen_ * t);
        const Eigen::MatrixXd J = symplectic_form();
        const double defect = (U * J * U.transpose() - J).cwiseAbs().maxCoeff();
        if (defect > 1e-10)
            throw NumericalError("oracle: transition matrix failed the symplecticity check at t = " +
                                 std::to_string(t) + " (defect " + std::to_string(defect) + ")");
        std::lock_guard<std::mutex> lock(mutex_);
        cache_.emplace(t, U);
        return U;
    }

private:
    SystemParams sys_;
    std::vector<BathMode> modes_;
    long dim_{0};
    Eigen::MatrixXd K_;
    Eigen::VectorXd pinv_diag_;
    Eigen::MatrixXd gen_;
    mutable std::mutex mutex_;
    mutable std::map<double, Eigen::MatrixXd> cache_;
};

struct FullGaussianState {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

// Factorized initial state: the system Gaussian in the (q, p) block, each bath
// mode thermal and uncorrelated:
//   <q_n^2> = hbar/(2 m w) coth(hbar w beta / 2),  <p_n^2> = hbar m w / 2 coth(...).
inline FullGaussianState initial_full_state(const FullPhaseSpaceModel& model,
                                            const GaussianMomentState& system_state, double beta,
                                            double hbar) {
    system_state.validate();
    const long N = long(model.n_modes());
    const long d = model.dim();
    FullGaussianState st;
    st.mean = Eigen::VectorXd::Zero(d);
    st.cov = Eigen::MatrixXd::Zero(d, d);
    st.mean(0) = system_state.mean_q;
    st.mean(N + 1) = system_state.mean_p;
    st.cov(0, 0) = system_state.sigma_qq;
    st.cov(N + 1, N + 1) = system_state.sigma_pp;
    st.cov(0, N + 1) = st.cov(N + 1, 0) = system_state.sigma_qp;
    for (long i = 0; i < N; ++i) {
        const auto& m = model.modes()[std::size_t(i)];
        const double th = coth_half(hbar * m.omega * beta);
        st.cov(1 + i, 1 + i) = hbar / (2.0 * m.mass * m.omega) * th;
        st.cov(N + 2 + i, N + 2 + i) = hbar * m.mass * m.omega / 2.0 * th;
    }
    return st;
}

inline FullGaussianState propagate_full(const FullPhaseSpaceModel& model,
                                        const FullGaussianState& state, double t) {
    if (!(t >= 0.0)) throw UsageError("propagate_full: t must be >= 0");
    const Eigen::MatrixXd U = model.transition(t);
    FullGaussianState out;
    out.mean = U * state.mean;
    out.cov = U * state.cov * U.transpose();
    return out;
}

inline GaussianMomentState reduced_moments(const FullGaussianState& state) {
    const long d = state.mean.size();
    const long N = d / 2 - 1;
    GaussianMomentState s;
    s.mean_q = state.mean(0);
    s.mean_p = state.mean(N + 1);
    s.sigma_qq = state.cov(0, 0);
    s.sigma_pp = state.cov(N + 1, N + 1);
    s.sigma_qp = 0.5 * (state.cov(0, N + 1) + state.cov(N + 1, 0));
    return s;
}

// scalar diagnostics
inline double total_energy(const FullPhaseSpaceModel& model, const FullGaussianState& st) {
    const Eigen::MatrixXd H = model.hamiltonian_form();
    return 0.5 * (H * st.cov).trace() + 0.5 * st.mean.dot(H * st.mean);
}
inline double full_state_det(const FullGaussianState& st) { return st.cov.determinant(); }

// ---------------------------------------------------------------------------
// Coefficient extraction from exact trajectories.
//
// Means from two independent initial conditions give a 2x2 system for
// (M Omega^2 + A, B) through d<p>/dt = -(M Omega^2 + A) <q> - B <p>; the
// second-moment rates then yield D and C:
//   d<p^2>/dt    = -(M Omega^2 + A) <pq+qp> - 2B <p^2> + 2D
//   d<pq+qp>/dt  = 2<p^2>/M - 2 (M Omega^2 + A) <q^2> - B <pq+qp> + 2C.
// ---------------------------------------------------------------------------

inline CoefficientSet extract_coefficients(const FullPhaseSpaceModel& model, double beta,
                                           double hbar, double t, double fd_step,
                                           const GaussianMomentState& probe = {0.3, -0.2, 0.8, 0.9,
                                                                               0.1}) {
    if (!(fd_step > 0.0)) throw UsageError("extract_coefficients: fd_step must be positive");
    if (!(t > fd_step)) throw UsageError("extract_coefficients: need t > fd_step");

    GaussianMomentState init1{1.0, 0.0, 1.0, 1.0, 0.0};
    GaussianMomentState init2{0.0, 1.0, 1.0, 1.0, 0.0};
    const auto s1 = initial_full_state(model, init1, beta, hbar);
    const auto s2 = initial_full_state(model, init2, beta, hbar);
    const auto sp = initial_full_state(model, probe, beta, hbar);

    auto red = [&](const FullGaussianState& s0, double at) {
        return reduced_moments(propagate_full(model, s0, at));
    };

    const double M = model.system().M;
    const auto r1m = red(s1, t - fd_step), r1p = red(s1, t + fd_step), r1 = red(s1, t);
    const auto r2m = red(s2, t - fd_step), r2p = red(s2, t + fd_step), r2 = red(s2, t);
    const double dp1 = (r1p.mean_p - r1m.mean_p) / (2.0 * fd_step);
    const double dp2 = (r2p.mean_p - r2m.mean_p) / (2.0 * fd_step);

    // [q1 p1; q2 p2] [MOm^2+A; B] = [-dp1; -dp2]
    const double det = r1.mean_q * r2.mean_p - r2.mean_q * r1.mean_p;
    const double scale = std::abs(r1.mean_q * r2.mean_p) + std::abs(r2.mean_q * r1.mean_p) +
                         std::abs(r1.mean_q) + std::abs(r2.mean_p);
    if (std::abs(det) < 1e-8 * std::max(scale, 1e-30))
        throw ExtractionError(
            "extract_coefficients: the two mean trajectories are nearly parallel at t = " +
            std::to_string(t) + "; pick different initial conditions or a different time");
    const double drift = (-dp1 * r2.mean_p + dp2 * r1.mean_p) / det;  // M Omega^2 + A
    const double B = (-r1.mean_q * dp2 + r2.mean_q * dp1) / det;

    auto raw = [&](const GaussianMomentState& g) {
        struct Raw {
            double q2, p2, qp;
        };
        return Raw{g.sigma_qq + g.mean_q * g.mean_q, g.sigma_pp + g.mean_p * g.mean_p,
                   2.0 * (g.sigma_qp + g.mean_q * g.mean_p)};
    };
    const auto pm = raw(red(sp, t - fd_step)), pp = raw(red(sp, t + fd_step)), pc = raw(red(sp, t));
    const double dp2dt = (pp.p2 - pm.p2) / (2.0 * fd_step);
    const double dqpdt = (pp.qp - pm.qp) / (2.0 * fd_step);
    const double D = 0.5 * (dp2dt + drift * pc.qp + 2.0 * B * pc.p2);
    const double C = 0.5 * (dqpdt - 2.0 * pc.p2 / M + 2.0 * drift * pc.q2 + B * pc.qp);

    const double Om2 = model.system().Omega * model.system().Omega;
    return {t, drift - M * Om2, B, C, D};
}

} // namespace qbm
