#pragma once

// Core data model for finite matrix cocycles: windows of matrices A_n,
// normalized products, propagation, and the frame utilities shared by all
// subspace algorithms.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace oslc {

// Numerical degeneracy discovered mid-computation (annihilated vectors,
// rank-deficient factorizations, unseparated spectra, ...).  Precondition
// violations throw std::invalid_argument instead; the CLI maps the two to
// different exit codes.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Method {
    svd,
    svd2,
    dich_intersect,
    dich_project,
    ginelli,
    ginelli2,
    wolfe,
};

inline const char* method_name(Method m) {
    switch (m) {
        case Method::svd: return "svd";
        case Method::svd2: return "svd2";
        case Method::dich_intersect: return "dich-intersect";
        case Method::dich_project: return "dich-project";
        case Method::ginelli: return "ginelli";
        case Method::ginelli2: return "ginelli2";
        case Method::wolfe: return "wolfe";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    if (s == "svd") return Method::svd;
    if (s == "svd2") return Method::svd2;
    if (s == "dich-intersect") return Method::dich_intersect;
    if (s == "dich-project") return Method::dich_project;
    if (s == "ginelli") return Method::ginelli;
    if (s == "ginelli2") return Method::ginelli2;
    if (s == "wolfe") return Method::wolfe;
    throw std::invalid_argument("unknown method '" + s + "'");
}

// A finite stretch of a matrix cocycle: d x d matrices A_n for
// n = start .. start+size-1.  Immutable and cheap to copy; rebased() views
// share the underlying storage, so shifting the base point costs nothing.
class CocycleWindow {
  public:
    CocycleWindow(int dim, long start, std::vector<Eigen::MatrixXd> matrices)
        : dim_(dim), start_(start),
          mats_(std::make_shared<const std::vector<Eigen::MatrixXd>>(std::move(matrices))) {
        if (dim_ < 1) throw std::invalid_argument("cocycle dimension must be positive");
        if (mats_->empty()) throw std::invalid_argument("cocycle window must hold at least one matrix");
        for (const auto& a : *mats_) {
            if (a.rows() != dim_ || a.cols() != dim_)
                throw std::invalid_argument("cocycle matrix is not dim x dim");
            if (!a.allFinite())
                throw std::invalid_argument("cocycle matrix has non-finite entries");
        }
    }

    int dim() const { return dim_; }
    long start() const { return start_; }
    long size() const { return static_cast<long>(mats_->size()); }
    long last() const { return start_ + size() - 1; }

    bool covers(long lo, long hi) const { return lo >= start_ && hi <= last() && lo <= hi; }

    const Eigen::MatrixXd& at(long n) const {
        if (n < start_ || n > last())
            throw std::invalid_argument("time index " + std::to_string(n) +
                                        " outside cocycle window [" + std::to_string(start_) +
                                        ", " + std::to_string(last()) + "]");
        return (*mats_)[static_cast<std::size_t>(n - start_)];
    }

    // Same data with time new_origin relabelled as 0.
    CocycleWindow rebased(long new_origin) const {
        CocycleWindow w(*this);
        w.start_ = start_ - new_origin;
        return w;
    }

  private:
    int dim_;
    long start_;
    std::shared_ptr<const std::vector<Eigen::MatrixXd>> mats_;
};

// Matrix product kept at O(1) scale: the represented product is
// exp(log_scale) * matrix.  Normalization uses the Frobenius norm divided by
// sqrt(d), which sits in the same scale class as an operator-norm estimate
// and is deterministic.
struct ScaledProduct {
    Eigen::MatrixXd matrix;
    double log_scale = 0.0;
};

struct OrthonormalFrame {
    Eigen::MatrixXd cols;  // d x k, orthonormal columns

    int dim() const { return static_cast<int>(cols.rows()); }
    int k() const { return static_cast<int>(cols.cols()); }

    // Checked constructor; tolerance 1e-10 on || cols^T cols - I ||_F.
    static OrthonormalFrame from(Eigen::MatrixXd m) {
        if (m.cols() > 0) {
            Eigen::MatrixXd g = m.transpose() * m;
            g -= Eigen::MatrixXd::Identity(m.cols(), m.cols());
            if (g.norm() > 1e-10)
                throw std::invalid_argument("frame columns are not orthonormal");
        }
        return OrthonormalFrame{std::move(m)};
    }
};

// A unit vector approximating the j-th Oseledets direction at a base point.
struct SubspaceApprox {
    int j = 0;
    long time = 0;
    Eigen::VectorXd vector;
    Method method = Method::svd;
    long half_width = 0;  // data half-width N the approximation used
    std::string warning;  // empty when clean; e.g. "degenerate tail"
};

namespace detail {

inline constexpr double machine_tiny = std::numeric_limits<double>::min();

inline int argmax_abs(const Eigen::VectorXd& v) {
    int best = 0;
    double mag = std::abs(v[0]);
    for (int i = 1; i < v.size(); ++i) {
        double m = std::abs(v[i]);
        if (m > mag) {  // strict: first index wins ties
            mag = m;
            best = i;
        }
    }
    return best;
}

}  // namespace detail

// Deterministic sign convention for directions that are only defined up to
// sign: flip so the entry of largest magnitude is positive (first index on
// ties).
inline Eigen::VectorXd sign_fixed(Eigen::VectorXd v) {
    if (v.size() > 0 && v[detail::argmax_abs(v)] < 0.0) v = -v;
    return v;
}

inline Eigen::MatrixXd sign_fixed_columns(Eigen::MatrixXd m) {
    for (int c = 0; c < m.cols(); ++c) {
        Eigen::VectorXd col = m.col(c);
        if (col[detail::argmax_abs(col)] < 0.0) m.col(c) = -col;
    }
    return m;
}

struct PushResult {
    Eigen::VectorXd vector;   // N(A(x,steps) v)
    double log_growth = 0.0;  // log ||A(x,steps) v|| - log ||v||
};

// Multiply-and-normalize push of a single vector over [start, start+steps).
inline PushResult propagate(const CocycleWindow& window, long start, long steps,
                            const Eigen::VectorXd& v) {
    if (steps < 0) throw std::invalid_argument("propagate: steps must be non-negative");
    if (v.size() != window.dim()) throw std::invalid_argument("propagate: vector dimension mismatch");
    double nv = v.norm();
    if (!(nv > 0.0)) throw std::invalid_argument("propagate: zero start vector");
    if (steps > 0 && !window.covers(start, start + steps - 1))
        throw std::invalid_argument("propagate: range outside cocycle window");

    Eigen::VectorXd u = v / nv;
    double log_growth = 0.0;
    for (long i = 0; i < steps; ++i) {
        u = window.at(start + i) * u;
        double nu = u.norm();
        if (nu < detail::machine_tiny)
            throw numeric_error("vector annihilated at step " + std::to_string(start + i));
        log_growth += std::log(nu);
        u /= nu;
    }
    return PushResult{std::move(u), log_growth};
}

// A_{start+steps-1} ... A_{start} with per-factor rescaling.
inline ScaledProduct scaled_product(const CocycleWindow& window, long start, long steps) {
    if (steps < 1) throw std::invalid_argument("scaled_product: steps must be positive");
    if (!window.covers(start, start + steps - 1))
        throw std::invalid_argument("scaled_product: range outside cocycle window");

    const double root_d = std::sqrt(static_cast<double>(window.dim()));
    ScaledProduct p;
    p.matrix = Eigen::MatrixXd::Identity(window.dim(), window.dim());
    for (long i = 0; i < steps; ++i) {
        p.matrix = window.at(start + i) * p.matrix;
        double s = p.matrix.norm() / root_d;
        if (s < detail::machine_tiny)
            throw numeric_error("scaled product annihilated at step " + std::to_string(start + i));
        p.matrix /= s;
        p.log_scale += std::log(s);
    }
    return p;
}

struct SingularFrame {
    OrthonormalFrame frame;
    Eigen::VectorXd sigma;     // leading k singular values, non-increasing
    bool degenerate_tail = false;  // sigma_k / sigma_1 below 1e3 * machine epsilon
};

namespace detail {

inline SingularFrame singular_frame(const Eigen::MatrixXd& m, int k, bool right) {
    if (k < 1 || k > m.cols()) throw std::invalid_argument("singular frame: bad column count");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    Eigen::MatrixXd cols = right ? svd.matrixV().leftCols(k) : svd.matrixU().leftCols(k);
    SingularFrame out{OrthonormalFrame{sign_fixed_columns(std::move(cols))}, sv.head(k), false};
    const double eps = std::numeric_limits<double>::epsilon();
    out.degenerate_tail = !(sv[k - 1] > sv[0] * 1e3 * eps);
    return out;
}

}  // namespace detail

// Right singular vectors of p.matrix: the eigenvectors of (P^T P)^(1/2),
// i.e. the orthogonal splitting estimated from the product.  The rescaling
// in ScaledProduct never changes the singular directions.
inline SingularFrame right_singular_frame(const ScaledProduct& p, int k) {
    return detail::singular_frame(p.matrix, k, true);
}

inline SingularFrame left_singular_frame(const ScaledProduct& p, int k) {
    return detail::singular_frame(p.matrix, k, false);
}

// N(v - F F^T v); error when v is numerically inside span(F).
inline Eigen::VectorXd project_out(const Eigen::VectorXd& v, const OrthonormalFrame& f) {
    Eigen::VectorXd r = v;
    if (f.k() > 0) r -= f.cols * (f.cols.transpose() * v);
    double rn = r.norm();
    if (rn <= 1e-14 * v.norm()) throw numeric_error("projection annihilated");
    return r / rn;
}

struct ThinQR {
    Eigen::MatrixXd q;  // d x k, orthonormal columns
    Eigen::MatrixXd r;  // k x k upper triangular, non-negative diagonal
};

// Thin QR with the Gram-Schmidt sign convention (diagonal of R >= 0), which
// makes successive factors unique and comparable.
inline ThinQR thin_qr_pos(const Eigen::MatrixXd& z) {
    const int k = static_cast<int>(z.cols());
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(z.rows(), k);
    Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    for (int i = 0; i < k; ++i) {
        if (r(i, i) < 0.0) {
            r.row(i) = -r.row(i);
            q.col(i) = -q.col(i);
        }
    }
    return ThinQR{std::move(q), std::move(r)};
}

}  // namespace oslc
