#pragma once

// SVD push-forward approximations of the j-th Oseledets vector at time 0.
//
// The basic variant takes u_j(-N), the j-th right singular vector of the
// M-step product starting at -N, and pushes it forward N steps with per-step
// normalization.  The improved variant does the same push but, at each of a
// set of checkpoints along the way, projects the travelling vector off the
// leading (j-1)-dimensional right singular subspace estimated there; that
// strips the fast components the push keeps re-injecting, so the vector stays
// aligned with the slow subspace instead of collapsing onto w_1.
//
// Checkpoints are given as past offsets: offset t means time -t, so the
// schedule {N, N-5, ..., 1, 0} starts at -N and ends at 0.  Offset N carries
// the initial frame; projections happen on arrival at every later checkpoint,
// including 0.

#include <Eigen/Dense>

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "oslc/core.hpp"

namespace oslc {

struct CheckpointSchedule {
    // Strictly decreasing past offsets, first is the start, last must be 0.
    std::vector<long> offsets;

    CheckpointSchedule() = default;
    explicit CheckpointSchedule(std::vector<long> offs) : offsets(std::move(offs)) {
        if (offsets.size() < 2) throw std::invalid_argument("checkpoint schedule needs >= 2 offsets");
        for (std::size_t i = 0; i + 1 < offsets.size(); ++i)
            if (offsets[i] <= offsets[i + 1])
                throw std::invalid_argument("checkpoint offsets must be strictly decreasing");
        if (offsets.back() != 0) throw std::invalid_argument("checkpoint schedule must end at offset 0");
    }

    long start() const { return offsets.front(); }

    // {N, N-s, N-2s, ...} while > 1, then 1 and 0.
    static CheckpointSchedule stride(long half_width, long s = 5) {
        if (half_width < 1) throw std::invalid_argument("checkpoint schedule: half_width must be positive");
        if (s < 1) throw std::invalid_argument("checkpoint schedule: stride must be positive");
        std::vector<long> offs;
        for (long t = half_width; t > 1; t -= s) offs.push_back(t);
        if (offs.empty() || offs.back() != 1) offs.push_back(1);
        offs.push_back(0);
        return CheckpointSchedule(std::move(offs));
    }
};

// Basic push-forward: u_j from the M-step product at -N, pushed N steps.
inline SubspaceApprox svd_basic(const CocycleWindow& window, long m_steps, long half_width, int j) {
    const long n = half_width;
    if (j < 1 || j > window.dim()) throw std::invalid_argument("svd: j out of range");
    if (m_steps < 1) throw std::invalid_argument("svd: M must be positive");
    if (n < 1) throw std::invalid_argument("svd: N must be positive");
    if (!window.covers(-n, std::max(m_steps - n - 1, -1L)))
        throw std::invalid_argument("svd: window does not cover [-N, M-N-1]");

    SingularFrame sf = right_singular_frame(scaled_product(window, -n, m_steps), j);
    PushResult pushed = propagate(window, -n, n, sf.frame.cols.col(j - 1));

    SubspaceApprox out;
    out.j = j;
    out.time = 0;
    out.vector = sign_fixed(pushed.vector);
    out.method = Method::svd;
    out.half_width = n;
    if (sf.degenerate_tail) out.warning = "degenerate tail";
    return out;
}

// Re-orthogonalised push-forward with checkpoint projections.
inline SubspaceApprox svd_improved(const CocycleWindow& window, long m_steps,
                                   const CheckpointSchedule& schedule, int j) {
    const int d = window.dim();
    if (j < 1 || j > d) throw std::invalid_argument("svd2: j out of range");
    if (m_steps < 1) throw std::invalid_argument("svd2: M must be positive");
    const long n1 = schedule.start();
    if (!window.covers(-n1, std::max(m_steps - 1, -1L)))
        throw std::invalid_argument("svd2: window does not cover [-N, M-1]");

    bool degenerate = false;
    SingularFrame sf0 = right_singular_frame(scaled_product(window, -n1, m_steps), j);
    degenerate |= sf0.degenerate_tail;
    Eigen::VectorXd w = sf0.frame.cols.col(j - 1);

    // Walk the schedule; between checkpoints the loop matches propagate()
    // step for step, so with one segment and j = 1 the result is bit-for-bit
    // the basic method's.
    for (std::size_t seg = 0; seg + 1 < schedule.offsets.size(); ++seg) {
        const long from = -schedule.offsets[seg];
        const long to = -schedule.offsets[seg + 1];
        for (long t = from; t < to; ++t) {
            Eigen::VectorXd av = window.at(t) * w;
            double nrm = av.norm();
            if (nrm <= detail::machine_tiny)
                throw numeric_error("vector annihilated at step " + std::to_string(t));
            w = av / nrm;
        }
        if (j >= 2) {
            SingularFrame sf = right_singular_frame(scaled_product(window, to, m_steps), j - 1);
            degenerate |= sf.degenerate_tail;
            try {
                w = project_out(w, sf.frame);
            } catch (const numeric_error&) {
                throw numeric_error("projection annihilated at checkpoint " +
                                    std::to_string(to));
            }
        }
    }

    SubspaceApprox out;
    out.j = j;
    out.time = 0;
    out.vector = sign_fixed(w);
    out.method = Method::svd2;
    out.half_width = n1;
    if (degenerate) out.warning = "degenerate tail";
    return out;
}

}  // namespace oslc
