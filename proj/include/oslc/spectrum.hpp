#pragma once

// Lyapunov exponent estimation by QR averaging (Benettin style) and the
// shift heuristic for the dichotomy algorithms.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>

#include "oslc/core.hpp"
#include "oslc/rng.hpp"

namespace oslc {

struct SpectrumEstimate {
    Eigen::VectorXd lambdas;  // non-increasing, log-growth per step
    int k = 0;
    long steps_used = 0;
};

struct DichotomyShifts {
    double lambda_left;
    double lambda_right;
};

// Estimate the top k exponents: iterate Q_{n+1} R_n = A_n Q_n with the
// positive-diagonal thin QR and average log R_n(i,i).  A short burn-in is
// excluded so the random start frame can align with the Oseledets flag
// before contributing to the average.
inline SpectrumEstimate qr_lyapunov(const CocycleWindow& window, int k, std::uint64_t seed = 1) {
    const int d = window.dim();
    const long L = window.size();
    if (k < 1 || k > d) throw std::invalid_argument("qr_lyapunov: k must be in [1, dim]");
    if (L < 2) throw std::invalid_argument("qr_lyapunov: window must hold at least 2 steps");

    UnitRandom rng(seed);
    Eigen::MatrixXd q = thin_qr_pos(rng.matrix(d, k)).q;

    const long burn_in = std::min(L / 10, 20L);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(k);
    for (long i = 0; i < L; ++i) {
        ThinQR qr = thin_qr_pos(window.at(window.start() + i) * q);
        q = std::move(qr.q);
        for (int c = 0; c < k; ++c) {
            double rii = qr.r(c, c);
            if (rii == 0.0)
                throw numeric_error("rank-deficient step at n = " + std::to_string(window.start() + i));
            if (i >= burn_in) acc[c] += std::log(rii);
        }
    }

    SpectrumEstimate est;
    est.lambdas = acc / static_cast<double>(L - burn_in);
    est.k = k;
    est.steps_used = L - burn_in;
    return est;
}

// Lambda^left just below lambda_2, Lambda^right just above it; the fraction
// of the neighbouring spectral gap used for the offset defaults to 1/10.
inline DichotomyShifts choose_shifts(const SpectrumEstimate& s, double fraction = 0.1) {
    if (s.k < 3) throw std::invalid_argument("choose_shifts: need at least 3 estimated exponents");
    const double l1 = s.lambdas[0], l2 = s.lambdas[1], l3 = s.lambdas[2];
    if (!(l1 - l2 > 1e-8) || !(l2 - l3 > 1e-8))
        throw numeric_error("unseparated spectrum: cannot place dichotomy shifts");
    return DichotomyShifts{l2 - (l2 - l3) * fraction, l2 + (l1 - l2) * fraction};
}

}  // namespace oslc
