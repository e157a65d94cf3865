#pragma once

// Method dispatch under the benchmark defaults (M = 2N for plain svd, M = N
// elsewhere, M' = 5, checkpoint stride 5, c' = (0,...,0,1), shift fraction
// 0.1), plus the (method, N) error sweep.  Sweep grid points are pure and run
// on a small worker pool; results land in a preallocated slot per point and
// per-point seeds are derived by mixing, so the output is identical whatever
// the job count.

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "oslc/core.hpp"
#include "oslc/dichotomy_method.hpp"
#include "oslc/ginelli_method.hpp"
#include "oslc/io.hpp"
#include "oslc/rng.hpp"
#include "oslc/spectrum.hpp"
#include "oslc/svd_method.hpp"
#include "oslc/wolfe_method.hpp"

namespace oslc {

struct MethodParams {
    std::optional<long> m;         // svd (default 2N), svd2/ginelli/ginelli2 (default N)
    std::optional<long> m_prime;   // ginelli2, default min(5, M)
    std::optional<long> m1;        // wolfe, default N
    std::optional<long> m1_prime;  // wolfe, default min(5, M1)
    std::optional<long> m2;        // wolfe, default N
    std::optional<CheckpointSchedule> schedule;  // svd2, default stride schedule
    long checkpoint_stride = 5;
    std::optional<DichotomyShifts> shifts;  // dich-*, required
    double shift_fraction = 0.1;
    Eigen::VectorXd c_init;  // ginelli*, default (0,...,0,1)
    std::uint64_t seed = 1;
    bool force_qr = false;
};

inline DichotomyShifts estimate_shifts(const CocycleWindow& window, std::uint64_t seed,
                                       double fraction = 0.1) {
    return choose_shifts(qr_lyapunov(window, 3, seed), fraction);
}

struct TimeRange {
    long lo = 0;
    long hi = 0;
};

// Matrix indices a method will touch, for precondition reporting.
inline TimeRange required_range(Method method, long half_width, const MethodParams& p) {
    const long n = half_width;
    switch (method) {
        case Method::svd: {
            long m = p.m.value_or(2 * n);
            return {-n, std::max(-n + m - 1, -1L)};
        }
        case Method::svd2: {
            long start = p.schedule ? p.schedule->start() : n;
            long m = p.m.value_or(start);
            return {-start, std::max(m - 1, -1L)};
        }
        case Method::dich_intersect:
        case Method::dich_project:
            return {-n, n - 1};
        case Method::ginelli: {
            long m = p.m.value_or(n);
            return {-m, n - 1};
        }
        case Method::ginelli2: {
            long m = p.m.value_or(n);
            return {-m, n - 1};
        }
        case Method::wolfe: {
            long m1 = p.m1.value_or(n);
            long m2 = p.m2.value_or(n);
            return {-m1, m2 - 1};
        }
    }
    throw std::invalid_argument("unknown method");
}

inline SubspaceApprox compute_subspace(const CocycleWindow& window, Method method, int j,
                                       long half_width, const MethodParams& p = {}) {
    const long n = half_width;
    switch (method) {
        case Method::svd:
            return svd_basic(window, p.m.value_or(2 * n), n, j);
        case Method::svd2: {
            CheckpointSchedule schedule =
                p.schedule ? *p.schedule : CheckpointSchedule::stride(n, p.checkpoint_stride);
            return svd_improved(window, p.m.value_or(schedule.start()), schedule, j);
        }
        case Method::dich_intersect:
        case Method::dich_project: {
            if (j != 2)
                throw std::invalid_argument("dichotomy methods compute j = 2 only");
            if (!p.shifts)
                throw std::invalid_argument("dichotomy methods need shifts; estimate or pass them");
            SolverOptions so{p.force_qr};
            return method == Method::dich_intersect
                       ? w2_intersection(window, n, *p.shifts, p.seed, so)
                       : w2_projection(window, n, *p.shifts, p.seed, so);
        }
        case Method::ginelli:
            return ginelli(window, p.m.value_or(n), n, j, p.c_init, p.seed);
        case Method::ginelli2: {
            long m = p.m.value_or(n);
            long mp = p.m_prime.value_or(std::min(5L, m));
            return ginelli_improved(window, m, mp, n, j, p.c_init);
        }
        case Method::wolfe: {
            long m1 = p.m1.value_or(n);
            long m1p = p.m1_prime.value_or(std::min(5L, m1));
            long m2 = p.m2.value_or(n);
            return wolfe(window, m1, m1p, m2, j);
        }
    }
    throw std::invalid_argument("unknown method");
}

struct SweepSpec {
    std::vector<Method> methods;
    int j = 2;
    long n_min = 10;
    long n_max = 350;
    long n_step = 5;
    int jobs = 1;
    std::uint64_t seed = 1;
    double shift_fraction = 0.1;
    bool force_qr = false;
};

// Error-vs-N grid against the exact vector at time 0.  Failed points carry
// NaN; row order is method-major, N ascending, independent of --jobs.
inline std::vector<SweepRow> sweep(const CocycleWindow& window, const SweepSpec& spec,
                                   const Eigen::VectorXd& truth0) {
    if (spec.n_min < 1 || spec.n_max < spec.n_min || spec.n_step < 1)
        throw std::invalid_argument("sweep: bad N grid");
    if (spec.jobs < 1) throw std::invalid_argument("sweep: jobs must be >= 1");
    if (spec.methods.empty()) throw std::invalid_argument("sweep: no methods");

    // One shift estimate serves every dichotomy grid point; failure here just
    // turns those points into NaN rows later.
    std::optional<DichotomyShifts> shifts;
    bool wants_dich = false;
    for (Method m : spec.methods)
        wants_dich |= (m == Method::dich_intersect || m == Method::dich_project);
    if (wants_dich && spec.j == 2) {
        try {
            shifts = estimate_shifts(window, spec.seed, spec.shift_fraction);
        } catch (const std::exception&) {
        }
    }

    std::vector<long> grid;
    for (long n = spec.n_min; n <= spec.n_max; n += spec.n_step) grid.push_back(n);

    struct Point {
        Method method;
        std::size_t method_idx;
        long n;
    };
    std::vector<Point> points;
    points.reserve(spec.methods.size() * grid.size());
    for (std::size_t mi = 0; mi < spec.methods.size(); ++mi)
        for (long n : grid) points.push_back({spec.methods[mi], mi, n});

    std::vector<SweepRow> rows(points.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= points.size()) return;
            const Point& pt = points[i];
            SweepRow row;
            row.method = method_name(pt.method);
            row.j = spec.j;
            row.half_width = pt.n;
            MethodParams mp;
            mp.shifts = shifts;
            mp.shift_fraction = spec.shift_fraction;
            mp.force_qr = spec.force_qr;
            mp.seed = mix_seed(spec.seed, (static_cast<std::uint64_t>(pt.method_idx) << 32) ^
                                              static_cast<std::uint64_t>(pt.n));
            try {
                SubspaceApprox approx = compute_subspace(window, pt.method, spec.j, pt.n, mp);
                row.error = exact_error(approx.vector, truth0);
            } catch (const std::exception&) {
                row.error = std::numeric_limits<double>::quiet_NaN();
            }
            rows[i] = std::move(row);
        }
    };

    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(spec.jobs), points.size());
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
        for (std::thread& th : pool) th.join();
    }
    return rows;
}

}  // namespace oslc
