#pragma once

// Dichotomy-projector computation of the second Oseledets vector.
//
// For a shift L the scaled dynamics w_{n+1} = e^{-L} A_n w_n over the window
// n = -N .. N-1 stack into the underdetermined block system B w = r,
//
//     B = [ C_{-N}  I                    ]
//         [         C_{-N+1}  I          ]      C_n = -e^{-L} A_n,
//         [                  ...  ...    ]
//         [               C_{N-1}      I ]
//
// with B of size 2dN x d(2N+1).  A minimum-norm solve of B w = r with r an
// impulse at one block row evaluates the Green's function of the shifted
// equation, which is how the stable/unstable projectors act on a vector
// without ever being formed.  Two such solves give w_2:
//
//   w2_projection    projects a random vector onto the slow-unstable range
//                    (left shift), then the result onto the fast-stable range
//                    (right shift); the composition lands on span{w_2}.
//   w2_intersection  spans the two-plane S_2 with two left-shift responses
//                    p^1, p^2, then finds the combination of them that stays
//                    bounded forward under the right shift, via the anchored
//                    system  w_0 + kappa p^1 + p^2 = 0  with forward
//                    constraints on [0, N-1].
//
// B B^T is symmetric positive definite and block tridiagonal with bandwidth
// d, so the normal-equations route is a block Cholesky sweep.  If that breaks
// down (non-invertible A_n, pathological shift) the same operation retries
// with a sparse QR on B^T; only when QR also finds a rank defect does the
// operation fail, with "system rank-deficient".

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseQR>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "oslc/core.hpp"
#include "oslc/rng.hpp"
#include "oslc/spectrum.hpp"

namespace oslc {

struct SolverOptions {
    bool force_qr = false;  // skip the Cholesky path (testing hook)
};

struct ShiftedBlockSystem {
    double shift = 0.0;
    long half_width = 0;
    int dim = 0;
    std::vector<Eigen::MatrixXd> blocks;  // C_n at index n + half_width

    // C_n, n in [-N, N-1]
    const Eigen::MatrixXd& c_at(long n) const {
        if (n < -half_width || n > half_width - 1)
            throw std::invalid_argument("block system: row index out of range");
        return blocks[static_cast<std::size_t>(n + half_width)];
    }

    long rows() const { return 2 * half_width * dim; }
    long cols() const { return (2 * half_width + 1) * dim; }

    Eigen::MatrixXd dense() const {
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(rows(), cols());
        for (long i = 0; i < 2 * half_width; ++i) {
            b.block(i * dim, i * dim, dim, dim) = blocks[static_cast<std::size_t>(i)];
            b.block(i * dim, (i + 1) * dim, dim, dim) = Eigen::MatrixXd::Identity(dim, dim);
        }
        return b;
    }

    Eigen::SparseMatrix<double> sparse() const {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(2 * half_width * dim * (dim + 1)));
        for (long i = 0; i < 2 * half_width; ++i) {
            const Eigen::MatrixXd& c = blocks[static_cast<std::size_t>(i)];
            for (int rr = 0; rr < dim; ++rr) {
                for (int cc = 0; cc < dim; ++cc)
                    trip.emplace_back(static_cast<int>(i * dim + rr),
                                      static_cast<int>(i * dim + cc), c(rr, cc));
                trip.emplace_back(static_cast<int>(i * dim + rr),
                                  static_cast<int>((i + 1) * dim + rr), 1.0);
            }
        }
        Eigen::SparseMatrix<double> b(rows(), cols());
        b.setFromTriplets(trip.begin(), trip.end());
        return b;
    }
};

inline ShiftedBlockSystem build_system(const CocycleWindow& window, long half_width, double shift) {
    if (half_width < 1) throw std::invalid_argument("block system: half_width must be positive");
    if (!window.covers(-half_width, half_width - 1))
        throw std::invalid_argument("block system: window does not cover [-N, N-1]");
    ShiftedBlockSystem sys;
    sys.shift = shift;
    sys.half_width = half_width;
    sys.dim = window.dim();
    sys.blocks.reserve(static_cast<std::size_t>(2 * half_width));
    const double factor = -std::exp(-shift);
    for (long n = -half_width; n <= half_width - 1; ++n) sys.blocks.push_back(factor * window.at(n));
    return sys;
}

namespace detail {

// Solve M y = r for M symmetric positive definite block tridiagonal with
// diagonal blocks D[0..m-1] and subdiagonal blocks E[i] = M_{i+1,i}.
// Throws numeric_error on breakdown; callers fall back to sparse QR.
inline Eigen::VectorXd block_tridiag_llt_solve(const std::vector<Eigen::MatrixXd>& diag,
                                               const std::vector<Eigen::MatrixXd>& sub,
                                               const Eigen::VectorXd& r) {
    const std::size_t m = diag.size();
    const long d = diag[0].rows();
    std::vector<Eigen::LLT<Eigen::MatrixXd>> llt(m);
    std::vector<Eigen::MatrixXd> s(m);  // s[i] = E[i-1] L_{i-1}^{-T}, i >= 1

    llt[0].compute(diag[0]);
    if (llt[0].info() != Eigen::Success) throw numeric_error("block Cholesky breakdown");
    for (std::size_t i = 1; i < m; ++i) {
        s[i] = llt[i - 1].matrixL().solve(sub[i - 1].transpose()).transpose();
        llt[i].compute(diag[i] - s[i] * s[i].transpose());
        if (llt[i].info() != Eigen::Success) throw numeric_error("block Cholesky breakdown");
    }

    Eigen::VectorXd z(static_cast<long>(m) * d);
    z.segment(0, d) = llt[0].matrixL().solve(r.segment(0, d));
    for (std::size_t i = 1; i < m; ++i) {
        Eigen::VectorXd rhs =
            r.segment(static_cast<long>(i) * d, d) - s[i] * z.segment(static_cast<long>(i - 1) * d, d);
        z.segment(static_cast<long>(i) * d, d) = llt[i].matrixL().solve(rhs);
    }

    Eigen::VectorXd y(static_cast<long>(m) * d);
    y.segment(static_cast<long>(m - 1) * d, d) =
        llt[m - 1].matrixL().transpose().solve(z.segment(static_cast<long>(m - 1) * d, d));
    for (std::size_t ii = m - 1; ii-- > 0;) {
        Eigen::VectorXd rhs = z.segment(static_cast<long>(ii) * d, d) -
                              s[ii + 1].transpose() * y.segment(static_cast<long>(ii + 1) * d, d);
        y.segment(static_cast<long>(ii) * d, d) = llt[ii].matrixL().transpose().solve(rhs);
    }
    if (!y.allFinite()) throw numeric_error("block Cholesky breakdown");
    return y;
}

// Minimum-norm solution of B w = r through a rank-revealing QR of B^T:
// B^T P = Q R gives w = Q [R_1^{-T} P^T r; 0].
inline Eigen::VectorXd min_norm_sparse_qr(const Eigen::SparseMatrix<double>& b,
                                          const Eigen::VectorXd& r) {
    Eigen::SparseMatrix<double> bt = b.transpose();
    bt.makeCompressed();
    Eigen::SparseQR<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> qr;
    qr.compute(bt);
    const long n = bt.cols();
    if (qr.info() != Eigen::Success || qr.rank() < n)
        throw numeric_error("system rank-deficient");

    Eigen::VectorXd pr = qr.colsPermutation().transpose() * r;
    Eigen::SparseMatrix<double> rmat = qr.matrixR();
    Eigen::VectorXd u(n);
    for (long i = 0; i < n; ++i) {
        double sum = 0.0, di = 0.0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(rmat, i); it; ++it) {
            if (it.row() < i)
                sum += it.value() * u[it.row()];
            else if (it.row() == i)
                di = it.value();
        }
        if (di == 0.0) throw numeric_error("system rank-deficient");
        u[i] = (pr[i] - sum) / di;
    }
    Eigen::VectorXd lifted = Eigen::VectorXd::Zero(bt.rows());
    lifted.head(n) = u;
    return qr.matrixQ() * lifted;
}

}  // namespace detail

// Minimum-norm solution of B w = r with r zero except block row impulse_time.
// Returns the blocks w_{-N}, ..., w_N.
inline std::vector<Eigen::VectorXd> min_norm_impulse_solve(const ShiftedBlockSystem& sys,
                                                           long impulse_time,
                                                           const Eigen::VectorXd& impulse,
                                                           const SolverOptions& opts = {}) {
    const int d = sys.dim;
    const long nb = 2 * sys.half_width;  // block rows
    if (impulse_time < -sys.half_width || impulse_time > sys.half_width - 1)
        throw std::invalid_argument("impulse solve: impulse_position outside block rows");
    if (impulse.size() != d) throw std::invalid_argument("impulse solve: impulse has wrong size");

    Eigen::VectorXd r = Eigen::VectorXd::Zero(nb * d);
    r.segment((impulse_time + sys.half_width) * d, d) = impulse;

    std::vector<Eigen::VectorXd> w(static_cast<std::size_t>(nb + 1));
    if (!opts.force_qr) {
        try {
            std::vector<Eigen::MatrixXd> diag(static_cast<std::size_t>(nb));
            std::vector<Eigen::MatrixXd> sub(static_cast<std::size_t>(nb - 1));
            for (long i = 0; i < nb; ++i) {
                const Eigen::MatrixXd& c = sys.blocks[static_cast<std::size_t>(i)];
                diag[static_cast<std::size_t>(i)] =
                    c * c.transpose() + Eigen::MatrixXd::Identity(d, d);
                if (i >= 1) sub[static_cast<std::size_t>(i - 1)] = c;
            }
            Eigen::VectorXd y = detail::block_tridiag_llt_solve(diag, sub, r);
            // w = B^T y: column block c meets row c (factor C_c) and row c-1 (I)
            for (long c = 0; c <= nb; ++c) {
                Eigen::VectorXd wc = Eigen::VectorXd::Zero(d);
                if (c <= nb - 1)
                    wc += sys.blocks[static_cast<std::size_t>(c)].transpose() * y.segment(c * d, d);
                if (c >= 1) wc += y.segment((c - 1) * d, d);
                w[static_cast<std::size_t>(c)] = std::move(wc);
            }
            return w;
        } catch (const numeric_error&) {
            // fall through to QR
        }
    }

    Eigen::VectorXd full = detail::min_norm_sparse_qr(sys.sparse(), r);
    for (long c = 0; c <= nb; ++c) w[static_cast<std::size_t>(c)] = full.segment(c * d, d);
    return w;
}

namespace detail {

// Shared step 1 of both w_2 algorithms: the left-shift impulse response,
// carried across the impulse row to time 0 as A_{-1} w_{-1}.
inline Eigen::VectorXd left_response(const CocycleWindow& window, const ShiftedBlockSystem& left,
                                     const Eigen::VectorXd& impulse, const SolverOptions& opts) {
    std::vector<Eigen::VectorXd> w = min_norm_impulse_solve(left, -1, impulse, opts);
    return window.at(-1) * w[static_cast<std::size_t>(left.half_width - 1)];
}

}  // namespace detail

// Intersection variant: two left responses span S_2, the anchored right-shift
// system w_0 + kappa p^1 + p^2 = 0 selects the member decaying forward.
inline SubspaceApprox w2_intersection(const CocycleWindow& window, long half_width,
                                      const DichotomyShifts& shifts, std::uint64_t seed,
                                      const SolverOptions& opts = {}) {
    const int d = window.dim();
    const long n = half_width;
    ShiftedBlockSystem left = build_system(window, n, shifts.lambda_left);

    UnitRandom rng(seed);
    Eigen::VectorXd r1 = rng.vector(d);
    Eigen::VectorXd r2 = rng.vector(d);
    Eigen::VectorXd p1 = detail::left_response(window, left, r1, opts);
    Eigen::VectorXd p2 = detail::left_response(window, left, r2, opts);
    double n1 = p1.norm(), n2 = p2.norm();
    if (n1 <= detail::machine_tiny || n2 <= detail::machine_tiny)
        throw numeric_error("impulse annihilated");
    p1 /= n1;
    p2 /= n2;
    if (std::abs(p1.dot(p2)) > 1.0 - 1e-10) throw numeric_error("degenerate span");

    // Rows: anchor w_0 + kappa p^1 = -p^2, then the right-shift recursion on
    // [0, N-1].  Unknowns (w_0, ..., w_N, kappa); one extra column keeps the
    // system underdetermined, so min-norm via the normal equations again.
    ShiftedBlockSystem right = build_system(window, n, shifts.lambda_right);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero((n + 1) * d);
    rhs.head(d) = -p2;

    Eigen::VectorXd w0;
    bool solved = false;
    if (!opts.force_qr) {
        try {
            std::vector<Eigen::MatrixXd> diag(static_cast<std::size_t>(n + 1));
            std::vector<Eigen::MatrixXd> sub(static_cast<std::size_t>(n));
            diag[0] = Eigen::MatrixXd::Identity(d, d) + p1 * p1.transpose();
            for (long i = 0; i < n; ++i) {
                const Eigen::MatrixXd& c = right.c_at(i);
                diag[static_cast<std::size_t>(i + 1)] =
                    c * c.transpose() + Eigen::MatrixXd::Identity(d, d);
                sub[static_cast<std::size_t>(i)] = c;
            }
            Eigen::VectorXd y = detail::block_tridiag_llt_solve(diag, sub, rhs);
            w0 = y.head(d) + right.c_at(0).transpose() * y.segment(d, d);
            solved = true;
        } catch (const numeric_error&) {
            // fall through to QR
        }
    }
    if (!solved) {
        std::vector<Eigen::Triplet<double>> trip;
        for (int rr = 0; rr < d; ++rr) {
            trip.emplace_back(rr, rr, 1.0);
            trip.emplace_back(rr, static_cast<int>((n + 1) * d), p1[rr]);
        }
        for (long i = 0; i < n; ++i) {
            const Eigen::MatrixXd& c = right.c_at(i);
            for (int rr = 0; rr < d; ++rr) {
                for (int cc = 0; cc < d; ++cc)
                    trip.emplace_back(static_cast<int>((i + 1) * d + rr),
                                      static_cast<int>(i * d + cc), c(rr, cc));
                trip.emplace_back(static_cast<int>((i + 1) * d + rr),
                                  static_cast<int>((i + 1) * d + rr), 1.0);
            }
        }
        Eigen::SparseMatrix<double> b((n + 1) * d, (n + 1) * d + 1);
        b.setFromTriplets(trip.begin(), trip.end());
        w0 = detail::min_norm_sparse_qr(b, rhs).head(d);
    }

    double nrm = w0.norm();
    if (nrm <= detail::machine_tiny) throw numeric_error("solution annihilated");

    SubspaceApprox out;
    out.j = 2;
    out.time = 0;
    out.vector = sign_fixed(w0 / nrm);
    out.method = Method::dich_intersect;
    out.half_width = n;
    return out;
}

// Projection variant: left response r' is pushed through the right-shift
// Green's function; the block at time 0 realizes P^{2,s} P^{3,u} r.
inline SubspaceApprox w2_projection(const CocycleWindow& window, long half_width,
                                    const DichotomyShifts& shifts, std::uint64_t seed,
                                    const SolverOptions& opts = {}) {
    const int d = window.dim();
    const long n = half_width;
    ShiftedBlockSystem left = build_system(window, n, shifts.lambda_left);

    UnitRandom rng(seed);
    Eigen::VectorXd rp = detail::left_response(window, left, rng.vector(d), opts);
    if (rp.norm() <= detail::machine_tiny) throw numeric_error("impulse annihilated");

    ShiftedBlockSystem right = build_system(window, n, shifts.lambda_right);
    std::vector<Eigen::VectorXd> w = min_norm_impulse_solve(right, -1, rp, opts);
    Eigen::VectorXd w0 = w[static_cast<std::size_t>(n)];
    double nrm = w0.norm();
    if (nrm <= detail::machine_tiny) throw numeric_error("solution annihilated");

    SubspaceApprox out;
    out.j = 2;
    out.time = 0;
    out.vector = sign_fixed(w0 / nrm);
    out.method = Method::dich_project;
    out.half_width = n;
    return out;
}

}  // namespace oslc
