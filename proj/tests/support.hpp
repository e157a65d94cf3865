#pragma once

// Shared fixtures and reference computations for the test suite.  The
// oracles here stay independent of the library internals on purpose:
// long double arithmetic, naive matrix products, dense decompositions.

#include <sys/wait.h>

#include <Eigen/Dense>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "oslc/core.hpp"
#include "oslc/rng.hpp"

namespace testsup {

using MatrixXl = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VectorXl = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// Plain left-to-right product A_{start+steps-1} ... A_{start} in long double.
inline MatrixXl naive_product_l(const oslc::CocycleWindow& w, long start, long steps) {
    MatrixXl p = MatrixXl::Identity(w.dim(), w.dim());
    for (long i = 0; i < steps; ++i) p = w.at(start + i).cast<long double>() * p;
    return p;
}

// Invertible d=3 random cocycle with exponents near log 4 > log 2 > 0.
// Entries of U_n lie in [0,1), so ||0.2 U_n||_F <= 0.6 < 1 and each factor
// I + 0.2 U_n stays far from singular.
inline oslc::CocycleWindow test_cocycle3(long lo, long hi_exclusive, std::uint64_t seed) {
    oslc::UnitRandom rng(seed);
    Eigen::Vector3d diag(4.0, 2.0, 1.0);
    std::vector<Eigen::MatrixXd> mats;
    mats.reserve(static_cast<std::size_t>(hi_exclusive - lo));
    for (long n = lo; n < hi_exclusive; ++n) {
        Eigen::MatrixXd u = rng.matrix(3, 3);
        mats.push_back(diag.asDiagonal() * (Eigen::MatrixXd::Identity(3, 3) + 0.2 * u));
    }
    return oslc::CocycleWindow(3, lo, std::move(mats));
}

// Constant cocycle A_n = a on [lo, hi).
inline oslc::CocycleWindow constant_cocycle(const Eigen::MatrixXd& a, long lo, long hi_exclusive) {
    std::vector<Eigen::MatrixXd> mats(static_cast<std::size_t>(hi_exclusive - lo), a);
    return oslc::CocycleWindow(static_cast<int>(a.rows()), lo, std::move(mats));
}

// Push a frame one step at a time in long double, re-orthonormalizing with
// QR after every step so the span survives strong growth separation.
inline MatrixXl push_frame_l(const oslc::CocycleWindow& w, long start, long steps, MatrixXl f) {
    for (long i = 0; i < steps; ++i) {
        f = w.at(start + i).cast<long double>() * f;
        Eigen::HouseholderQR<MatrixXl> qr(f);
        f = qr.householderQ() * MatrixXl::Identity(f.rows(), f.cols());
    }
    return f;
}

// Reference w_2(0) for a d=3 cocycle, built from the defining geometry:
// intersect the slow-filtration plane S_2(0), obtained by pushing a generic
// 2-frame from the far past, with the orthogonal complement of the leading
// forward singular direction u_1(0).  Both approximations converge at a
// geometric rate in the horizon, so past_steps = future_steps = 80 already
// lands well below double precision for the fixtures used here.
inline Eigen::VectorXd reference_w2_geometric(const oslc::CocycleWindow& w, long past_steps,
                                              long future_steps) {
    if (w.dim() != 3) throw std::invalid_argument("reference_w2_geometric expects d = 3");

    MatrixXl f = MatrixXl::Zero(3, 2);
    f(0, 0) = 1;
    f(1, 1) = 1;
    MatrixXl q = push_frame_l(w, -past_steps, past_steps, f);

    // Leading right singular direction of the forward product, by power
    // iteration on P^T P.  The top singular gap is enormous, so a handful
    // of iterations is already exact; extra passes cost nothing.
    MatrixXl p = naive_product_l(w, 0, future_steps);
    VectorXl v = VectorXl::Ones(3);
    v /= v.norm();
    for (int it = 0; it < 200; ++it) {
        VectorXl nv = p.transpose() * (p * v);
        long double n = nv.norm();
        if (!(n > 0)) throw std::runtime_error("power iteration collapsed");
        v = nv / n;
    }

    VectorXl b = q.transpose() * v;
    VectorXl y(2);
    y << -b[1], b[0];
    y /= y.norm();
    VectorXl wl = q * y;

    Eigen::VectorXd out(3);
    for (int i = 0; i < 3; ++i) out[i] = static_cast<double>(wl[i]);
    return oslc::sign_fixed(out / out.norm());
}

// Minimum-norm least-squares solve through the dense SVD, written out
// explicitly so it shares nothing with the production solvers.
inline Eigen::VectorXd pinv_solve(const Eigen::MatrixXd& b, const Eigen::VectorXd& r) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    double tol = static_cast<double>(std::max(b.rows(), b.cols())) *
                 std::numeric_limits<double>::epsilon() * (sv.size() > 0 ? sv[0] : 0.0);
    Eigen::VectorXd ut = svd.matrixU().transpose() * r;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > tol) z[i] = ut[i] / sv[i];
    return svd.matrixV() * z;
}

class TempDir {
  public:
    TempDir() {
        char tmpl[] = "/tmp/oslc_test_XXXXXX";
        char* got = mkdtemp(tmpl);
        if (!got) throw std::runtime_error("mkdtemp failed");
        path_ = got;
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CliResult {
    int status = -1;
    std::string out;
    std::string err;
};

inline std::string cli_path() {
    const char* p = std::getenv("OSLC_CLI");
    if (!p || !*p) throw std::runtime_error("OSLC_CLI is not set; run through ctest");
    return p;
}

// Run the CLI with a shell-formatted argument string, capturing both
// streams.  `env_prefix` lets a test prepend e.g. `OSLC_SEED=7 `.
inline CliResult run_cli(const std::string& args, const TempDir& dir,
                         const std::string& env_prefix = "") {
    CliResult res;
    std::string outp = dir.file("cli_stdout.bin");
    std::string errp = dir.file("cli_stderr.txt");
    std::string cmd = env_prefix + cli_path() + " " + args + " >" + outp + " 2>" + errp;
    int rc = std::system(cmd.c_str());
    if (rc == -1) throw std::runtime_error("std::system failed");
    res.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    res.out = slurp(outp);
    res.err = slurp(errp);
    return res;
}

}  // namespace testsup
