#pragma once

// Method-agnostic accuracy checks.  Equivariance measures how well a method's
// output transforms like a covariant vector: the time-0 approximation pushed
// m steps should match the approximation recomputed at base point m.  The
// expansion-rate series watches (1/m) log ||A(x,m) w|| which should settle at
// lambda_j for a good w_j and drift to lambda_1 for a contaminated one.
// exact_error is the sign-blind Euclidean separation used against known
// ground truth.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "oslc/core.hpp"

namespace oslc {

struct TestSeries {
    enum class Kind { equivariance, expansion, exact_error };
    Kind kind = Kind::equivariance;
    std::vector<std::pair<long, double>> points;  // (m, value), m increasing
    std::string failure;  // nonempty if the series was truncated
};

inline const char* kind_name(TestSeries::Kind k) {
    switch (k) {
        case TestSeries::Kind::equivariance: return "equivariance";
        case TestSeries::Kind::expansion: return "expansion";
        case TestSeries::Kind::exact_error: return "exact_error";
    }
    return "?";
}

// An approximator receives the window rebased so its base point sits at time
// 0, plus the original base time (so table-backed stand-ins can look it up).
using Approximator = std::function<SubspaceApprox(const CocycleWindow&, long)>;

inline double exact_error(const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
    if (v.size() != w.size()) throw std::invalid_argument("exact_error: dimension mismatch");
    return std::min((v - w).norm(), (v + w).norm());
}

inline double exact_error(const SubspaceApprox& approx, const Eigen::VectorXd& truth) {
    return exact_error(approx.vector, truth);
}

inline TestSeries equivariance_defect(const CocycleWindow& window, const Approximator& approximator,
                                      int j, long half_width, long m_max) {
    if (m_max < 0) throw std::invalid_argument("equivariance: m_max must be >= 0");
    if (!window.covers(-half_width, half_width - 1 + m_max))
        throw std::invalid_argument(
            "equivariance: window does not cover [-N, N-1+m_max]");
    (void)j;

    TestSeries ts;
    ts.kind = TestSeries::Kind::equivariance;
    Eigen::VectorXd w0;
    for (long m = 0; m <= m_max; ++m) {
        Eigen::VectorXd wm;
        try {
            wm = approximator(window.rebased(m), m).vector;
        } catch (const std::exception& e) {
            ts.failure = "approximator failed at m = " + std::to_string(m) + ": " + e.what();
            break;
        }
        if (m == 0) w0 = wm;
        Eigen::VectorXd pushed = propagate(window, 0, m, w0).vector;
        ts.points.emplace_back(m, std::min((pushed - wm).norm(), (pushed + wm).norm()));
    }
    return ts;
}

inline TestSeries expansion_rate_series(const CocycleWindow& window, const Eigen::VectorXd& w,
                                        long m_max) {
    if (m_max < 1) throw std::invalid_argument("expansion series: m_max must be >= 1");
    if (!window.covers(0, m_max - 1))
        throw std::invalid_argument("expansion series: window does not cover [0, m_max-1]");

    TestSeries ts;
    ts.kind = TestSeries::Kind::expansion;
    double nrm0 = w.norm();
    if (nrm0 <= detail::machine_tiny) throw numeric_error("vector annihilated at step 0");
    Eigen::VectorXd v = w / nrm0;
    double lg = 0.0;
    for (long t = 0; t < m_max; ++t) {
        Eigen::VectorXd av = window.at(t) * v;
        double nrm = av.norm();
        if (nrm <= detail::machine_tiny)
            throw numeric_error("vector annihilated at step " + std::to_string(t));
        lg += std::log(nrm);
        v = av / nrm;
        ts.points.emplace_back(t + 1, lg / static_cast<double>(t + 1));
    }
    return ts;
}

}  // namespace oslc
