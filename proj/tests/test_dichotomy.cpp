#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oslc/dichotomy_method.hpp"
#include "oslc/exact_model.hpp"
#include "oslc/runner.hpp"
#include "oslc/validation.hpp"
#include "support.hpp"

using Catch::Matchers::ContainsSubstring;
using namespace oslc;
using namespace testsup;

namespace {

Eigen::VectorXd stack_blocks(const std::vector<Eigen::VectorXd>& w) {
    long total = 0;
    for (const auto& b : w) total += b.size();
    Eigen::VectorXd out(total);
    long at = 0;
    for (const auto& b : w) {
        out.segment(at, b.size()) = b;
        at += b.size();
    }
    return out;
}

ExactModelSpec d8_spec(long n) {
    ExactModelSpec spec;
    spec.dim = 8;
    spec.spectrum = ExactModelSpec::log_ladder(8);
    spec.half_width = n;
    return spec;
}

DichotomyShifts ladder_shifts() {
    SpectrumEstimate est;
    est.k = 3;
    est.lambdas = Eigen::Vector3d(std::log(8.0), std::log(7.0), std::log(6.0));
    return choose_shifts(est);
}

}  // namespace

TEST_CASE("scalar block system writes the textbook bidiagonal matrix", "[dichotomy]") {
    CocycleWindow w = constant_cocycle(2.0 * Eigen::MatrixXd::Identity(1, 1), -1, 1);
    ShiftedBlockSystem sys = build_system(w, 1, std::log(2.0));

    CHECK(sys.rows() == 2);
    CHECK(sys.cols() == 3);
    Eigen::MatrixXd expect(2, 3);
    expect << -1.0, 1.0, 0.0, 0.0, -1.0, 1.0;
    CHECK(sys.dense() == expect);
    CHECK(Eigen::MatrixXd(sys.sparse()) == expect);
}

TEST_CASE("block system rows encode the shifted recursion", "[dichotomy]") {
    CocycleWindow w = test_cocycle3(-10, 10, 23);
    double shift = std::log(5.0);  // above the top exponent, forward decay
    ShiftedBlockSystem sys = build_system(w, 10, shift);

    CHECK(sys.c_at(-10) == (-std::exp(-shift)) * w.at(-10));
    CHECK(sys.c_at(9) == (-std::exp(-shift)) * w.at(9));
    CHECK_THROWS_AS(sys.c_at(10), std::invalid_argument);
    CHECK_THROWS_AS(sys.c_at(-11), std::invalid_argument);

    // A sequence satisfying w_{n+1} = e^{-shift} A_n w_n lies in the kernel.
    std::vector<Eigen::VectorXd> seq;
    Eigen::VectorXd v = Eigen::Vector3d(0.3, 0.2, 0.9);
    seq.push_back(v);
    for (long n = -10; n <= 9; ++n) {
        v = std::exp(-shift) * (w.at(n) * v);
        seq.push_back(v);
    }
    Eigen::VectorXd res = sys.dense() * stack_blocks(seq);
    CHECK(res.norm() < 1e-12);

    CHECK((Eigen::MatrixXd(sys.sparse()) - sys.dense()).norm() == 0.0);
}

TEST_CASE("zero shift makes the blocks the negated cocycle", "[dichotomy]") {
    CocycleWindow w = test_cocycle3(-2, 2, 3);
    ShiftedBlockSystem sys = build_system(w, 2, 0.0);
    for (long n = -2; n <= 1; ++n) CHECK(sys.c_at(n) == -w.at(n));

    CHECK_THROWS_MATCHES(build_system(w, 3, 0.0), std::invalid_argument,
                         Catch::Matchers::MessageMatches(ContainsSubstring("does not cover")));
    CHECK_THROWS_AS(build_system(w, 0, 0.0), std::invalid_argument);
}

TEST_CASE("impulse solve agrees with the dense pseudoinverse", "[dichotomy]") {
    SECTION("scalar system") {
        CocycleWindow w = constant_cocycle(Eigen::MatrixXd::Identity(1, 1), -3, 3);
        ShiftedBlockSystem sys = build_system(w, 3, 0.0);
        Eigen::VectorXd impulse(1);
        impulse << 1.0;

        auto blocks = min_norm_impulse_solve(sys, 0, impulse);
        Eigen::VectorXd got = stack_blocks(blocks);
        Eigen::VectorXd r = Eigen::VectorXd::Zero(sys.rows());
        r[3] = 1.0;  // impulse_time 0 is block row N = 3
        Eigen::VectorXd ref = pinv_solve(sys.dense(), r);
        CHECK((got - ref).norm() < 1e-12);
    }

    SECTION("d = 3 against pinv and against the QR fallback") {
        CocycleWindow w = test_cocycle3(-8, 8, 31);
        DichotomyShifts shifts = estimate_shifts(w, 1);
        ShiftedBlockSystem sys = build_system(w, 8, shifts.lambda_left);

        UnitRandom rng(5);
        Eigen::VectorXd impulse = rng.vector(3);
        auto llt = min_norm_impulse_solve(sys, -1, impulse);
        auto qr = min_norm_impulse_solve(sys, -1, impulse, SolverOptions{true});

        Eigen::VectorXd r = Eigen::VectorXd::Zero(sys.rows());
        r.segment((-1 + 8) * 3, 3) = impulse;
        Eigen::VectorXd ref = pinv_solve(sys.dense(), r);

        Eigen::VectorXd wl = stack_blocks(llt);
        Eigen::VectorXd wq = stack_blocks(qr);
        CHECK((wl - ref).norm() < 1e-10 * ref.norm());
        CHECK((wq - ref).norm() < 1e-10 * ref.norm());

        // The solution actually solves the system.
        CHECK((sys.dense() * wl - r).norm() < 1e-10 * r.norm());
    }
}

TEST_CASE("impulse solve edge cases", "[dichotomy]") {
    CocycleWindow w = test_cocycle3(-3, 3, 2);
    ShiftedBlockSystem sys = build_system(w, 3, 1.0);

    auto zero = min_norm_impulse_solve(sys, 0, Eigen::Vector3d::Zero());
    for (const auto& b : zero) CHECK(b.norm() == 0.0);

    CHECK_THROWS_AS(min_norm_impulse_solve(sys, 3, Eigen::Vector3d::Ones()),
                    std::invalid_argument);
    CHECK_THROWS_AS(min_norm_impulse_solve(sys, -4, Eigen::Vector3d::Ones()),
                    std::invalid_argument);
    CHECK_THROWS_AS(min_norm_impulse_solve(sys, 0, Eigen::Vector2d::Ones()),
                    std::invalid_argument);
}

TEST_CASE("both dichotomy variants nail a constant diagonal cocycle", "[dichotomy]") {
    // Convergence is geometric in N at the rate the shifts carve out of the
    // spectrum; N = 40 with these offsets sits far below the tolerance.
    CocycleWindow w = constant_cocycle(Eigen::Vector3d(3.0, 2.0, 1.0).asDiagonal(), -40, 40);
    DichotomyShifts shifts{std::log(2.0) - 0.1, std::log(2.0) + 0.1};

    SubspaceApprox wi = w2_intersection(w, 40, shifts, 1);
    CHECK(exact_error(wi.vector, Eigen::Vector3d(0.0, 1.0, 0.0)) < 1e-8);
    CHECK(wi.j == 2);
    CHECK(wi.method == Method::dich_intersect);
    CHECK(wi.half_width == 40);

    SubspaceApprox wp = w2_projection(w, 40, shifts, 1);
    CHECK(exact_error(wp.vector, Eigen::Vector3d(0.0, 1.0, 0.0)) < 1e-8);
    CHECK(wp.method == Method::dich_project);
}

TEST_CASE("dichotomy methods converge on the exact model", "[dichotomy]") {
    auto [w, truth] = generate(d8_spec(150));
    DichotomyShifts shifts = ladder_shifts();
    Eigen::VectorXd t0 = truth.exact_vector(0, 2);

    SubspaceApprox wi = w2_intersection(w, 150, shifts, 1);
    CHECK(exact_error(wi, t0) < 1e-6);

    SubspaceApprox wp = w2_projection(w, 150, shifts, 1);
    CHECK(exact_error(wp, t0) < 1e-6);

    // The two variants approximate the same line, and the projection output
    // must not depend on the random impulse that seeded it.
    CHECK(exact_error(wi.vector, wp.vector) < 1e-6);
    SubspaceApprox wp2 = w2_projection(w, 150, shifts, 99);
    CHECK(exact_error(wp.vector, wp2.vector) < 1e-6);
    SubspaceApprox wi2 = w2_intersection(w, 150, shifts, 99);
    CHECK(exact_error(wi.vector, wi2.vector) < 1e-6);
}

TEST_CASE("dichotomy methods agree with the improved svd method", "[dichotomy]") {
    CocycleWindow w = test_cocycle3(-60, 60, 19);
    DichotomyShifts shifts = estimate_shifts(w, 1);

    SubspaceApprox sv = svd_improved(w, 60, CheckpointSchedule::stride(60), 2);
    SubspaceApprox wi = w2_intersection(w, 60, shifts, 1);
    SubspaceApprox wp = w2_projection(w, 60, shifts, 1);

    CHECK(exact_error(wi.vector, sv.vector) < 1e-6);
    CHECK(exact_error(wp.vector, sv.vector) < 1e-6);
}

TEST_CASE("dichotomy solutions match the geometric reference", "[dichotomy]") {
    CocycleWindow w = test_cocycle3(-80, 80, 17);
    Eigen::VectorXd ref = reference_w2_geometric(w, 80, 80);
    DichotomyShifts shifts = estimate_shifts(w, 1);

    SubspaceApprox wp = w2_projection(w, 80, shifts, 1);
    CHECK(exact_error(wp.vector, ref) < 1e-8);
}

TEST_CASE("scaling the cocycle and the shifts by log 2 is bit for bit covariant", "[dichotomy]") {
    // Powers of two keep every factor exactly representable: the shifted
    // blocks of (2 A_n, shift + log 2) coincide bitwise with those of
    // (A_n, shift), so the whole solve must too.
    CocycleWindow wa = test_cocycle3(-15, 15, 47);
    std::vector<Eigen::MatrixXd> doubled;
    for (long n = -15; n < 15; ++n) doubled.push_back(2.0 * wa.at(n));
    CocycleWindow wb(3, -15, std::move(doubled));

    const double l2 = std::log(2.0);
    DichotomyShifts sa{-l2, 0.0};
    DichotomyShifts sb{0.0, l2};

    SubspaceApprox ia = w2_intersection(wa, 15, sa, 7);
    SubspaceApprox ib = w2_intersection(wb, 15, sb, 7);
    CHECK(ia.vector == ib.vector);

    SubspaceApprox pa = w2_projection(wa, 15, sa, 7);
    SubspaceApprox pb = w2_projection(wb, 15, sb, 7);
    CHECK(pa.vector == pb.vector);
}

TEST_CASE("forced QR fallback reproduces the Cholesky path", "[dichotomy]") {
    CocycleWindow w = test_cocycle3(-12, 12, 61);
    DichotomyShifts shifts = estimate_shifts(w, 1);

    SubspaceApprox a = w2_intersection(w, 12, shifts, 3);
    SubspaceApprox b = w2_intersection(w, 12, shifts, 3, SolverOptions{true});
    CHECK(exact_error(a.vector, b.vector) < 1e-8);

    SubspaceApprox c = w2_projection(w, 12, shifts, 3);
    SubspaceApprox d = w2_projection(w, 12, shifts, 3, SolverOptions{true});
    CHECK(exact_error(c.vector, d.vector) < 1e-8);
}

TEST_CASE("a one dimensional cocycle has a degenerate span", "[dichotomy]") {
    CocycleWindow w = constant_cocycle(2.0 * Eigen::MatrixXd::Identity(1, 1), -4, 4);
    DichotomyShifts shifts{0.0, std::log(2.0)};
    CHECK_THROWS_MATCHES(w2_intersection(w, 4, shifts, 1), numeric_error,
                         Catch::Matchers::MessageMatches(ContainsSubstring("degenerate span")));
}
