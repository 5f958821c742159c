// oracles.hpp — independent reference computations used only by the tests.
// Everything here is deliberately brute force and must not share code with
// the implementation paths it checks.

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace testoracle {

// Composite Simpson rule, n even.
inline double simpson(const std::function<double(double)>& f, double a, double b, std::size_t n) {
    if (n % 2) ++n;
    const double h = (b - a) / double(n);
    double sum = f(a) + f(b);
    for (std::size_t k = 1; k < n; ++k) sum += f(a + h * double(k)) * (k % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

// Closed forms for the exponential-cutoff Ohmic bath, I(w) = (2/pi) M g0 w e^{-w/L}:
//   gamma(s) = (2/pi) M g0 L / (1 + L^2 s^2)
//   nu_T0(s) = (2/pi) M g0 L^2 (1 - L^2 s^2) / (1 + L^2 s^2)^2
inline double ohmic_exp_gamma(double M, double g0, double L, double s) {
    return (2.0 / M_PI) * M * g0 * L / (1.0 + L * L * s * s);
}
inline double ohmic_exp_nu_T0(double M, double g0, double L, double s) {
    const double u = L * s;
    return (2.0 / M_PI) * M * g0 * L * L * (1.0 - u * u) / ((1.0 + u * u) * (1.0 + u * u));
}

// Two coupled oscillators (system + one bath mode), H = p^2/2M + MΩ^2q^2/2
// + p1^2/2m + mw^2q1^2/2 + C q q1, solved by exact diagonalization of the
// mass-weighted stiffness matrix.  Returns the system-block fundamental pair:
//   v1(s): q(0)=1, qdot(0)=0, bath at rest;  v2(s): q(0)=0, qdot(0)=1.
struct TwoOscillator {
    double M{1.0}, Omega{1.0}, m{1.0}, omega{1.0}, C{0.0};

    // mass-weighted stiffness and its eigensystem
    void eig(Eigen::Matrix2d& V, Eigen::Vector2d& lam) const {
        Eigen::Matrix2d K;
        K << Omega * Omega, C / std::sqrt(M * m), C / std::sqrt(M * m), omega * omega;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(K);
        V = es.eigenvectors();
        lam = es.eigenvalues();
    }

    // entry (0,0) of cos(sqrt(K) s) and of K^{-1/2} sin(sqrt(K) s)
    double v1(double s) const {
        Eigen::Matrix2d V;
        Eigen::Vector2d lam;
        eig(V, lam);
        double r = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double c = V(0, i) * V(0, i);
            const double l = lam(i);
            if (l > 0)
                r += c * std::cos(std::sqrt(l) * s);
            else if (l < 0)
                r += c * std::cosh(std::sqrt(-l) * s);
            else
                r += c;
        }
        return r;
    }
    double v2(double s) const {
        Eigen::Matrix2d V;
        Eigen::Vector2d lam;
        eig(V, lam);
        double r = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double c = V(0, i) * V(0, i);
            const double l = lam(i);
            if (l > 0)
                r += c * std::sin(std::sqrt(l) * s) / std::sqrt(l);
            else if (l < 0)
                r += c * std::sinh(std::sqrt(-l) * s) / std::sqrt(-l);
            else
                r += c * s;
        }
        return r;
    }
    double dv1(double s) const {
        Eigen::Matrix2d V;
        Eigen::Vector2d lam;
        eig(V, lam);
        double r = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double c = V(0, i) * V(0, i);
            const double l = lam(i);
            if (l > 0)
                r += -c * std::sqrt(l) * std::sin(std::sqrt(l) * s);
            else if (l < 0)
                r += c * std::sqrt(-l) * std::sinh(std::sqrt(-l) * s);
        }
        return r;
    }
    double dv2(double s) const {
        Eigen::Matrix2d V;
        Eigen::Vector2d lam;
        eig(V, lam);
        double r = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double c = V(0, i) * V(0, i);
            const double l = lam(i);
            if (l > 0)
                r += c * std::cos(std::sqrt(l) * s);
            else if (l < 0)
                r += c * std::cosh(std::sqrt(-l) * s);
            else
                r += c;
        }
        return r;
    }
};

} // namespace testoracle
