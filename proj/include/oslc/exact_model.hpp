#pragma once

// Benchmark cocycle with analytically known Oseledets subspaces.  With
// R = diag(e^{lambda_1}, ..., e^{lambda_d}) and invertible S_n,
//
//     A_n = S_n R S_{n-1}^{-1}
//
// satisfies A_n S_{n-1} = S_n R, so the columns of S_{n-1} span the Oseledets
// subspaces at time n and the j-th column is the exact w_j.  S_n = I + eps Z_n
// for n != -1 (Z_n entries uniform on [0,1)), while S_{-1} is I plus a random
// subdiagonal, which keeps the time-0 subspaces away from the coordinate axes.
//
// RNG stream order (part of the reproducibility contract): with a fresh Z per
// step, the Z_n are drawn in increasing n over [-N-1, N-1] skipping n = -1,
// each matrix row-major; a redraw forced by the condition guard consumes the
// next d*d values of the same stream.  The subdiagonal values z_2, ..., z_d
// are drawn last.  With fixed_z, one Z is drawn (row-major), then z_2 ... z_d.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "oslc/core.hpp"
#include "oslc/rng.hpp"

namespace oslc {

struct ExactModelSpec {
    int dim = 8;
    Eigen::VectorXd spectrum;  // strictly decreasing lambda_1 > ... > lambda_d
    double epsilon = 0.1;
    long half_width = 350;  // window covers [-N, N-1]
    std::uint64_t seed = 1;
    bool fresh_z = true;  // false: one fixed Z for every n != -1

    // spectrum {log d, log(d-1), ..., log 1}
    static Eigen::VectorXd log_ladder(int d) {
        Eigen::VectorXd s(d);
        for (int i = 0; i < d; ++i) s[i] = std::log(static_cast<double>(d - i));
        return s;
    }
};

class ExactGroundTruth {
  public:
    ExactGroundTruth(long half_width, std::vector<Eigen::MatrixXd> s_mats)
        : half_width_(half_width),
          s_(std::make_shared<const std::vector<Eigen::MatrixXd>>(std::move(s_mats))) {}

    long half_width() const { return half_width_; }
    int dim() const { return static_cast<int>(s_->front().rows()); }

    // S_n, defined for n in [-N-1, N-1].
    const Eigen::MatrixXd& s_at(long n) const {
        if (n < -half_width_ - 1 || n > half_width_ - 1)
            throw std::invalid_argument("ground truth: S_n index out of range");
        return (*s_)[static_cast<std::size_t>(n + half_width_ + 1)];
    }

    // Exact w_j at time n: column j of S_{n-1}, unit and sign-fixed.
    Eigen::VectorXd exact_vector(long n, int j) const {
        if (j < 1 || j > dim()) throw std::invalid_argument("ground truth: j out of range");
        Eigen::VectorXd v = s_at(n - 1).col(j - 1);
        return sign_fixed(v / v.norm());
    }

  private:
    long half_width_;
    std::shared_ptr<const std::vector<Eigen::MatrixXd>> s_;
};

namespace detail {

inline double condition_estimate(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const Eigen::VectorXd& sv = svd.singularValues();
    double smin = sv[sv.size() - 1];
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    return sv[0] / smin;
}

// I + eps * (fresh Z), redrawing Z when the result is near-singular.
inline Eigen::MatrixXd draw_s(UnitRandom& rng, int d, double eps) {
    for (int attempt = 0; attempt < 10; ++attempt) {
        Eigen::MatrixXd s = Eigen::MatrixXd::Identity(d, d) + eps * rng.matrix(d, d);
        if (condition_estimate(s) <= 1e8) return s;
    }
    throw numeric_error("exact model: S_n stayed near-singular after 10 redraws");
}

}  // namespace detail

inline std::pair<CocycleWindow, ExactGroundTruth> generate(const ExactModelSpec& spec) {
    const int d = spec.dim;
    const long N = spec.half_width;
    if (d < 2) throw std::invalid_argument("exact model: dim must be at least 2");
    if (N < 1) throw std::invalid_argument("exact model: half_width must be positive");
    if (!(spec.epsilon >= 0.0)) throw std::invalid_argument("exact model: epsilon must be >= 0");
    if (spec.spectrum.size() != d) throw std::invalid_argument("exact model: spectrum size != dim");
    for (int i = 0; i + 1 < d; ++i)
        if (!(spec.spectrum[i] > spec.spectrum[i + 1]))
            throw std::invalid_argument("exact model: spectrum must be strictly decreasing");

    UnitRandom rng(spec.seed);

    // S_n for n = -N-1 .. N-1, stored at index n + N + 1.
    std::vector<Eigen::MatrixXd> s(static_cast<std::size_t>(2 * N + 1));
    if (spec.fresh_z) {
        for (long n = -N - 1; n <= N - 1; ++n) {
            if (n == -1) continue;
            s[static_cast<std::size_t>(n + N + 1)] = detail::draw_s(rng, d, spec.epsilon);
        }
    } else {
        Eigen::MatrixXd fixed = detail::draw_s(rng, d, spec.epsilon);
        for (long n = -N - 1; n <= N - 1; ++n) {
            if (n == -1) continue;
            s[static_cast<std::size_t>(n + N + 1)] = fixed;
        }
    }
    Eigen::MatrixXd s_minus1 = Eigen::MatrixXd::Identity(d, d);
    for (int i = 1; i < d; ++i) s_minus1(i, i - 1) = rng.next();  // z_2 .. z_d
    s[static_cast<std::size_t>(N)] = std::move(s_minus1);

    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) r(i, i) = std::exp(spec.spectrum[i]);

    // A_n = S_n R S_{n-1}^{-1}, solved as S_{n-1}^T A_n^T = (S_n R)^T.
    std::vector<Eigen::MatrixXd> mats;
    mats.reserve(static_cast<std::size_t>(2 * N));
    for (long n = -N; n <= N - 1; ++n) {
        const Eigen::MatrixXd& sn = s[static_cast<std::size_t>(n + N + 1)];
        const Eigen::MatrixXd& sp = s[static_cast<std::size_t>(n + N)];
        Eigen::MatrixXd at = sp.transpose().partialPivLu().solve((sn * r).transpose());
        mats.push_back(at.transpose());
    }

    return {CocycleWindow(d, -N, std::move(mats)), ExactGroundTruth(N, std::move(s))};
}

}  // namespace oslc
