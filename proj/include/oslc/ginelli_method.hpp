#pragma once

// Ginelli-style computation of w_j: push an orthonormal j-frame forward with
// repeated thin QR, which converges to the stationary Lyapunov basis S_j,
// then run inverse iteration backwards through the stored triangular factors.
// The R_n form a cocycle of their own, upper triangular with positive
// diagonal, whose dominant backward direction recovers the coefficient
// vector c with Q(x) c in W_j(x).

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "oslc/core.hpp"
#include "oslc/rng.hpp"

namespace oslc {

struct RCocycle {
    int j = 0;
    std::vector<Eigen::MatrixXd> factors;  // time order, j x j upper triangular
};

// Thin-QR push of Q0 from `start` over `steps` steps; the factors come back
// in time order.
inline std::pair<OrthonormalFrame, RCocycle> push_forward_qr(const CocycleWindow& window,
                                                             long start, long steps,
                                                             const OrthonormalFrame& q0) {
    if (steps < 0) throw std::invalid_argument("qr push: steps must be >= 0");
    if (q0.dim() != window.dim()) throw std::invalid_argument("qr push: frame dimension mismatch");
    if (steps > 0 && !window.covers(start, start + steps - 1))
        throw std::invalid_argument("qr push: range outside cocycle window");

    RCocycle rc;
    rc.j = q0.k();
    rc.factors.reserve(static_cast<std::size_t>(steps));
    Eigen::MatrixXd q = q0.cols;
    for (long t = start; t < start + steps; ++t) {
        ThinQR qr = thin_qr_pos(window.at(t) * q);
        for (int i = 0; i < rc.j; ++i)
            if (qr.r(i, i) <= detail::machine_tiny)
                throw numeric_error("basis collapse at step " + std::to_string(t));
        q = std::move(qr.q);
        rc.factors.push_back(std::move(qr.r));
    }
    return {OrthonormalFrame{std::move(q)}, std::move(rc)};
}

// Inverse iteration backwards through the factor list: c <- N(R_n^{-1} c)
// from the latest factor to the earliest.
inline Eigen::VectorXd backward_coefficients(const RCocycle& rc, const Eigen::VectorXd& c_init) {
    if (c_init.size() != rc.j) throw std::invalid_argument("backward iteration: c_init has wrong size");
    double n0 = c_init.norm();
    if (!(n0 > 0.0)) throw std::invalid_argument("backward iteration: c_init must be nonzero");

    Eigen::VectorXd c = c_init / n0;
    for (std::size_t ii = rc.factors.size(); ii-- > 0;) {
        const Eigen::MatrixXd& r = rc.factors[ii];
        for (int i = 0; i < rc.j; ++i)
            if (!(std::abs(r(i, i)) > detail::machine_tiny))
                throw numeric_error("singular factor at index " + std::to_string(ii));
        Eigen::VectorXd next = r.triangularView<Eigen::Upper>().solve(c);
        double nrm = next.norm();
        if (!std::isfinite(nrm) || nrm <= detail::machine_tiny)
            throw numeric_error("singular factor at index " + std::to_string(ii));
        c = next / nrm;
    }
    return c;
}

namespace detail {

inline Eigen::VectorXd default_c_init(int j) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(j);
    c[j - 1] = 1.0;
    return c;
}

inline SubspaceApprox ginelli_finish(const CocycleWindow& window, const OrthonormalFrame& qx,
                                     long half_width, int j, const Eigen::VectorXd& c_init,
                                     Method method, bool degenerate) {
    auto [qn, rc] = push_forward_qr(window, 0, half_width, qx);
    (void)qn;
    Eigen::VectorXd c =
        backward_coefficients(rc, c_init.size() == 0 ? default_c_init(j) : c_init);
    Eigen::VectorXd w = qx.cols * c;

    SubspaceApprox out;
    out.j = j;
    out.time = 0;
    out.vector = sign_fixed(w / w.norm());
    out.method = method;
    out.half_width = half_width;
    if (degenerate) out.warning = "degenerate tail";
    return out;
}

}  // namespace detail

inline SubspaceApprox ginelli(const CocycleWindow& window, long m_steps, long half_width, int j,
                              const Eigen::VectorXd& c_init = {}, std::uint64_t seed = 1) {
    const int d = window.dim();
    if (j < 1 || j > d) throw std::invalid_argument("ginelli: j out of range");
    if (m_steps < 1) throw std::invalid_argument("ginelli: M must be positive");
    if (half_width < 1) throw std::invalid_argument("ginelli: N must be positive");
    if (!window.covers(-m_steps, half_width - 1))
        throw std::invalid_argument("ginelli: window does not cover [-M, N-1]");

    UnitRandom rng(seed);
    OrthonormalFrame q0{thin_qr_pos(rng.matrix(d, j)).q};
    auto [qx, warm] = push_forward_qr(window, -m_steps, m_steps, q0);
    (void)warm;  // the warm-up factors are not needed
    return detail::ginelli_finish(window, qx, half_width, j, c_init, Method::ginelli, false);
}

inline SubspaceApprox ginelli_improved(const CocycleWindow& window, long m_steps, long m_prime,
                                       long half_width, int j, const Eigen::VectorXd& c_init = {}) {
    const int d = window.dim();
    if (j < 1 || j > d) throw std::invalid_argument("ginelli2: j out of range");
    if (m_prime < 1 || m_steps < m_prime)
        throw std::invalid_argument("ginelli2: need M >= M' > 0");
    if (half_width < 1) throw std::invalid_argument("ginelli2: N must be positive");
    if (!window.covers(-m_steps, half_width - 1))
        throw std::invalid_argument("ginelli2: window does not cover [-M, N-1]");

    // Growth-optimised start: left singular frame of the M'-step product at
    // -M lives at -M+M'; QR-push it the remaining M-M' steps to time 0.
    SingularFrame sf = left_singular_frame(scaled_product(window, -m_steps, m_prime), j);
    auto [qx, warm] = push_forward_qr(window, -m_steps + m_prime, m_steps - m_prime, sf.frame);
    (void)warm;
    return detail::ginelli_finish(window, qx, half_width, j, c_init, Method::ginelli2,
                                  sf.degenerate_tail);
}

}  // namespace oslc
