#pragma once

// Wolfe-Samelson style computation of w_j as the intersection of two
// subspaces that are each cheap to approximate: the span of the first j
// stationary Lyapunov vectors (forward data up to time 0) and the orthogonal
// complement of the leading j-1 right singular directions of the forward
// product at time 0.  Writing w = sum_i y_i s_i and imposing <u_h, w> = 0 for
// h < j gives the homogeneous system D y = 0 with
//
//     D_{ki} = sum_{h=1}^{j-1} <s_k, u_h><u_h, s_i>,
//
// i.e. D = G^T G for G = u_frame^T s_frame.  The null direction of D is found
// from the SVD of D, whose two smallest singular values also diagnose whether
// the intersection is well defined.

#include <Eigen/Dense>

#include <algorithm>
#include <stdexcept>

#include "oslc/core.hpp"
#include "oslc/ginelli_method.hpp"

namespace oslc {

struct IntersectionSystem {
    Eigen::MatrixXd d;  // j x j, symmetric PSD
    OrthonormalFrame s_frame;
    OrthonormalFrame u_frame;
};

inline IntersectionSystem build_intersection_system(const OrthonormalFrame& s_frame,
                                                    const OrthonormalFrame& u_frame) {
    if (s_frame.dim() != u_frame.dim())
        throw std::invalid_argument("intersection system: frame dimension mismatch");
    if (u_frame.k() != s_frame.k() - 1)
        throw std::invalid_argument("intersection system: u_frame must have j-1 columns");
    Eigen::MatrixXd g = u_frame.cols.transpose() * s_frame.cols;
    return IntersectionSystem{g.transpose() * g, s_frame, u_frame};
}

inline Eigen::VectorXd null_vector(const IntersectionSystem& sys) {
    const long j = sys.d.rows();
    if (j < 2) throw std::invalid_argument("null vector: system must be at least 2x2");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.d, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    double smallest = sv[j - 1], second = sv[j - 2];
    if (!(second > 0.0) || smallest / second >= 0.5)
        throw numeric_error("ambiguous null space");
    return sign_fixed(svd.matrixV().col(j - 1));
}

inline SubspaceApprox wolfe(const CocycleWindow& window, long m1, long m1_prime, long m2, int j) {
    const int d = window.dim();
    if (j < 2 || j > d) throw std::invalid_argument("wolfe: j must be in [2, d]");
    if (m1_prime < 1 || m1 < m1_prime) throw std::invalid_argument("wolfe: need M1 >= M1' > 0");
    if (m2 < 1) throw std::invalid_argument("wolfe: M2 must be positive");
    if (!window.covers(-m1, m2 - 1))
        throw std::invalid_argument("wolfe: window does not cover [-M1, M2-1]");

    SingularFrame sls = left_singular_frame(scaled_product(window, -m1, m1_prime), j);
    auto [s0, warm] = push_forward_qr(window, -m1 + m1_prime, m1 - m1_prime, sls.frame);
    (void)warm;

    SingularFrame srs = right_singular_frame(scaled_product(window, 0, m2), j - 1);

    IntersectionSystem sys = build_intersection_system(s0, srs.frame);
    Eigen::VectorXd y = null_vector(sys);
    Eigen::VectorXd w = s0.cols * y;

    SubspaceApprox out;
    out.j = j;
    out.time = 0;
    out.vector = sign_fixed(w / w.norm());
    out.method = Method::wolfe;
    out.half_width = std::max(m1, m2);
    if (sls.degenerate_tail || srs.degenerate_tail) out.warning = "degenerate tail";
    return out;
}

}  // namespace oslc
