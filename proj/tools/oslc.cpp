// Command-line front end: generate the exact benchmark model, run any of the
// subspace methods on a stored cocycle window, sweep error against N,
// validate outputs (equivariance / expansion rate), and estimate exponents.
//
// Exit codes: 0 success, 2 usage or precondition problem, 3 numerical
// failure inside an algorithm.  All file outputs are byte-deterministic for
// fixed flags and seeds; logs go to stderr.

#include <CLI11.hpp>
#include <fmt/core.h>

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "oslc/core.hpp"
#include "oslc/exact_model.hpp"
#include "oslc/io.hpp"
#include "oslc/runner.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::uint64_t env_default_seed() {
    const char* env = std::getenv("OSLC_SEED");
    if (!env || !*env) return 1;
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0')
        throw std::invalid_argument("OSLC_SEED is not an unsigned integer");
    return static_cast<std::uint64_t>(v);
}

Eigen::VectorXd parse_spectrum(const std::string& s) {
    const std::string prefix = "log-ladder:";
    if (s.rfind(prefix, 0) == 0) {
        int k = std::stoi(s.substr(prefix.size()));
        if (k < 1) throw std::invalid_argument("log-ladder size must be positive");
        return oslc::ExactModelSpec::log_ladder(k);
    }
    std::vector<double> vals;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.empty()) throw std::invalid_argument("empty spectrum list");
    Eigen::VectorXd out(static_cast<long>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) out[static_cast<long>(i)] = vals[i];
    return out;
}

Eigen::VectorXd parse_vector(const std::string& s) {
    std::vector<double> vals;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    Eigen::VectorXd out(static_cast<long>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) out[static_cast<long>(i)] = vals[i];
    return out;
}

std::vector<oslc::Method> parse_methods(const std::string& s) {
    using oslc::Method;
    if (s == "all")
        return {Method::svd,     Method::svd2,     Method::dich_intersect, Method::dich_project,
                Method::ginelli, Method::ginelli2, Method::wolfe};
    std::vector<Method> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(oslc::parse_method(cell));
    if (out.empty()) throw std::invalid_argument("empty method list");
    return out;
}

// Flags shared by compute and validate.
struct MethodFlags {
    long m = 0, m_prime = 0, m1 = 0, m1_prime = 0, m2 = 0;
    long stride = 5;
    double lambda_left = 0.0, lambda_right = 0.0;
    double shift_fraction = 0.1;
    std::string c_init;
    bool force_qr = false;
    CLI::Option* o_m = nullptr;
    CLI::Option* o_m_prime = nullptr;
    CLI::Option* o_m1 = nullptr;
    CLI::Option* o_m1_prime = nullptr;
    CLI::Option* o_m2 = nullptr;
    CLI::Option* o_left = nullptr;
    CLI::Option* o_right = nullptr;

    void attach(CLI::App* cmd) {
        o_m = cmd->add_option("--m", m, "Product length M (svd: default 2N, others: N)");
        o_m_prime = cmd->add_option("--m-prime", m_prime, "Initial product length M' (ginelli2)");
        o_m1 = cmd->add_option("--m1", m1, "Forward frame window M1 (wolfe)");
        o_m1_prime = cmd->add_option("--m1-prime", m1_prime, "Initial product length M1' (wolfe)");
        o_m2 = cmd->add_option("--m2", m2, "Singular frame window M2 (wolfe)");
        cmd->add_option("--stride", stride, "Checkpoint stride (svd2)")->capture_default_str();
        o_left = cmd->add_option("--lambda-left", lambda_left, "Left dichotomy shift");
        o_right = cmd->add_option("--lambda-right", lambda_right, "Right dichotomy shift");
        cmd->add_option("--shift-fraction", shift_fraction,
                        "Gap fraction for automatic shifts")
            ->capture_default_str();
        cmd->add_option("--c-init", c_init, "Backward start vector, comma separated (ginelli)");
        cmd->add_flag("--force-qr", force_qr, "Skip the Cholesky path in dichotomy solves");
    }

    // Build MethodParams; estimates shifts from the window when a dichotomy
    // method runs without explicit --lambda-left/--lambda-right.
    oslc::MethodParams resolve(const oslc::CocycleWindow& window, oslc::Method method,
                               std::uint64_t seed) const {
        oslc::MethodParams p;
        if (o_m->count()) p.m = m;
        if (o_m_prime->count()) p.m_prime = m_prime;
        if (o_m1->count()) p.m1 = m1;
        if (o_m1_prime->count()) p.m1_prime = m1_prime;
        if (o_m2->count()) p.m2 = m2;
        p.checkpoint_stride = stride;
        p.shift_fraction = shift_fraction;
        p.seed = seed;
        p.force_qr = force_qr;
        if (!c_init.empty()) p.c_init = parse_vector(c_init);
        if (o_left->count() != o_right->count())
            throw std::invalid_argument("provide both --lambda-left and --lambda-right");
        if (o_left->count()) {
            p.shifts = oslc::DichotomyShifts{lambda_left, lambda_right};
        } else if (method == oslc::Method::dich_intersect ||
                   method == oslc::Method::dich_project) {
            p.shifts = oslc::estimate_shifts(window, seed, shift_fraction);
        }
        return p;
    }
};

void check_window(const oslc::CocycleWindow& window, oslc::Method method, long n,
                  const oslc::MethodParams& p) {
    oslc::TimeRange rr = oslc::required_range(method, n, p);
    if (!window.covers(rr.lo, rr.hi))
        throw std::invalid_argument(fmt::format(
            "window [{}, {}] does not cover the range [{}, {}] required by {} at N = {}",
            window.start(), window.last(), rr.lo, rr.hi, oslc::method_name(method), n));
}

int run(int argc, char** argv) {
    CLI::App app{"Oseledets subspace toolkit: finite-data covariant vector computation"};
    app.require_subcommand(1);
    const std::uint64_t seed_default = env_default_seed();

    // gen-exact ---------------------------------------------------------------
    auto* gen = app.add_subcommand("gen-exact", "Generate the exact benchmark cocycle");
    int g_dim = 8;
    std::string g_spectrum;
    double g_eps = 0.1;
    long g_half = 350;
    std::uint64_t g_seed = seed_default;
    bool g_fixed = false;
    std::string g_out, g_truth_out;
    gen->add_option("--dim", g_dim, "Dimension d")->capture_default_str();
    auto* g_spec_opt = gen->add_option("--spectrum", g_spectrum,
                                       "Comma list or log-ladder:k (default log-ladder:dim)");
    gen->add_option("--eps", g_eps, "Perturbation size")->capture_default_str();
    gen->add_option("--half-width", g_half, "Window half-width N")->capture_default_str();
    gen->add_option("--seed", g_seed, "RNG seed");
    auto* g_fresh_flag = gen->add_flag("--fresh-z", "Fresh Z_n per step (default)");
    gen->add_flag("--fixed-z", g_fixed, "One fixed Z for all steps")->excludes(g_fresh_flag);
    gen->add_option("--out", g_out, "Cocycle file")->required();
    gen->add_option("--truth-out", g_truth_out, "Ground-truth CSV");

    // compute -----------------------------------------------------------------
    auto* comp = app.add_subcommand("compute", "Compute one subspace approximation");
    std::string c_in, c_method, c_out;
    int c_j = 2;
    long c_n = 0;
    std::uint64_t c_seed = seed_default;
    MethodFlags c_flags;
    comp->add_option("--in", c_in, "Cocycle file")->required();
    comp->add_option("--method", c_method,
                     "svd|svd2|dich-intersect|dich-project|ginelli|ginelli2|wolfe")
        ->required();
    comp->add_option("--j", c_j, "Subspace index")->capture_default_str();
    comp->add_option("--n", c_n, "Half-width N")->required();
    c_flags.attach(comp);
    comp->add_option("--seed", c_seed, "RNG seed");
    comp->add_option("--out", c_out, "Output CSV (- for stdout)")->required();

    // sweep -------------------------------------------------------------------
    auto* sw = app.add_subcommand("sweep", "Error against N over a method grid");
    std::string s_in, s_truth, s_methods = "all", s_out;
    int s_j = 2, s_jobs = 1;
    long s_nmin = 10, s_nmax = 350, s_nstep = 5;
    std::uint64_t s_seed = seed_default;
    double s_fraction = 0.1;
    bool s_force_qr = false;
    sw->add_option("--in", s_in, "Cocycle file")->required();
    sw->add_option("--truth", s_truth, "Ground-truth CSV")->required();
    sw->add_option("--methods", s_methods, "Comma list or 'all'")->capture_default_str();
    sw->add_option("--j", s_j, "Subspace index")->capture_default_str();
    sw->add_option("--n-min", s_nmin, "Smallest N")->capture_default_str();
    sw->add_option("--n-max", s_nmax, "Largest N")->capture_default_str();
    sw->add_option("--n-step", s_nstep, "N increment")->capture_default_str();
    sw->add_option("--jobs", s_jobs, "Worker threads")->capture_default_str();
    sw->add_option("--seed", s_seed, "RNG seed");
    sw->add_option("--shift-fraction", s_fraction, "Gap fraction for automatic shifts")
        ->capture_default_str();
    sw->add_flag("--force-qr", s_force_qr, "Skip the Cholesky path in dichotomy solves");
    sw->add_option("--out", s_out, "Output CSV (- for stdout)")->required();

    // validate ----------------------------------------------------------------
    auto* val = app.add_subcommand("validate", "Equivariance / expansion-rate checks");
    std::string v_in, v_method, v_truth, v_out;
    int v_j = 2;
    long v_n = 0, v_equiv = 0, v_expand = 0;
    std::uint64_t v_seed = seed_default;
    MethodFlags v_flags;
    val->add_option("--in", v_in, "Cocycle file")->required();
    val->add_option("--method", v_method, "Method name, or 'truth' with --truth")->required();
    val->add_option("--truth", v_truth, "Ground-truth CSV (for --method truth)");
    val->add_option("--j", v_j, "Subspace index")->capture_default_str();
    val->add_option("--n", v_n, "Half-width N")->required();
    auto* v_eq_opt = val->add_option("--equivariance", v_equiv, "Defect series up to m_max");
    auto* v_ex_opt = val->add_option("--expansion", v_expand, "Rate series up to m_max");
    v_flags.attach(val);
    val->add_option("--seed", v_seed, "RNG seed");
    val->add_option("--out", v_out, "Output CSV (- for stdout)")->required();

    // lyap --------------------------------------------------------------------
    auto* ly = app.add_subcommand("lyap", "Estimate the top k Lyapunov exponents");
    std::string l_in, l_out;
    int l_k = 3;
    std::uint64_t l_seed = seed_default;
    ly->add_option("--in", l_in, "Cocycle file")->required();
    ly->add_option("--k", l_k, "Number of exponents")->capture_default_str();
    ly->add_option("--seed", l_seed, "RNG seed");
    ly->add_option("--out", l_out, "Output CSV (- for stdout)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (gen->parsed()) {
        auto t0 = Clock::now();
        oslc::ExactModelSpec spec;
        spec.dim = g_dim;
        spec.spectrum =
            g_spec_opt->count() ? parse_spectrum(g_spectrum) : oslc::ExactModelSpec::log_ladder(g_dim);
        spec.epsilon = g_eps;
        spec.half_width = g_half;
        spec.seed = g_seed;
        spec.fresh_z = !g_fixed;
        auto [window, truth] = oslc::generate(spec);
        oslc::write_cocycle_file(g_out, window);
        if (!g_truth_out.empty()) oslc::write_truth_csv(g_truth_out, truth);
        fmt::print(stderr, "gen-exact: d={} window [{}, {}] -> {} ({:.1f} ms)\n", spec.dim,
                   window.start(), window.last(), g_out, elapsed_ms(t0));
        return 0;
    }

    if (comp->parsed()) {
        oslc::CocycleWindow window = oslc::read_cocycle_file(c_in);
        oslc::Method method = oslc::parse_method(c_method);
        oslc::MethodParams p = c_flags.resolve(window, method, c_seed);
        check_window(window, method, c_n, p);
        auto t0 = Clock::now();
        oslc::SubspaceApprox approx = oslc::compute_subspace(window, method, c_j, c_n, p);
        fmt::print(stderr, "compute: {} j={} N={} elapsed {:.3f} ms\n",
                   oslc::method_name(method), c_j, c_n, elapsed_ms(t0));
        if (!approx.warning.empty())
            fmt::print(stderr, "warning: {}\n", approx.warning);
        oslc::write_vector_csv(c_out, approx, p.shifts);
        return 0;
    }

    if (sw->parsed()) {
        oslc::CocycleWindow window = oslc::read_cocycle_file(s_in);
        oslc::TruthTable table = oslc::read_truth_csv(s_truth);
        oslc::SweepSpec spec;
        spec.methods = parse_methods(s_methods);
        spec.j = s_j;
        spec.n_min = s_nmin;
        spec.n_max = s_nmax;
        spec.n_step = s_nstep;
        spec.jobs = s_jobs;
        spec.seed = s_seed;
        spec.shift_fraction = s_fraction;
        spec.force_qr = s_force_qr;
        auto t0 = Clock::now();
        std::vector<oslc::SweepRow> rows = oslc::sweep(window, spec, table.lookup(0, s_j));
        fmt::print(stderr, "sweep: {} rows elapsed {:.1f} ms\n", rows.size(), elapsed_ms(t0));
        oslc::write_sweep_csv(s_out, rows);
        return 0;
    }

    if (val->parsed()) {
        oslc::CocycleWindow window = oslc::read_cocycle_file(v_in);
        if (!v_eq_opt->count() && !v_ex_opt->count())
            throw std::invalid_argument("validate needs --equivariance and/or --expansion");

        oslc::Approximator approximator;
        oslc::TruthTable table;
        if (v_method == "truth") {
            if (v_truth.empty())
                throw std::invalid_argument("--method truth needs --truth <csv>");
            table = oslc::read_truth_csv(v_truth);
            approximator = [&table, v_j, v_n](const oslc::CocycleWindow&, long base) {
                oslc::SubspaceApprox a;
                a.j = v_j;
                a.time = 0;
                a.vector = table.lookup(base, v_j);
                a.method = oslc::Method::svd;  // placeholder, unused for truth rows
                a.half_width = v_n;
                return a;
            };
        } else {
            oslc::Method method = oslc::parse_method(v_method);
            oslc::MethodParams p = v_flags.resolve(window, method, v_seed);
            check_window(window, method, v_n, p);
            approximator = [method, v_j, v_n, p](const oslc::CocycleWindow& w, long) {
                return oslc::compute_subspace(w, method, v_j, v_n, p);
            };
        }

        std::vector<oslc::TestSeries> series;
        auto t0 = Clock::now();
        if (v_eq_opt->count()) {
            series.push_back(oslc::equivariance_defect(window, approximator, v_j, v_n, v_equiv));
            if (!series.back().failure.empty())
                fmt::print(stderr, "warning: equivariance series truncated: {}\n",
                           series.back().failure);
        }
        if (v_ex_opt->count()) {
            Eigen::VectorXd w0 = approximator(window.rebased(0), 0).vector;
            series.push_back(oslc::expansion_rate_series(window, w0, v_expand));
        }
        fmt::print(stderr, "validate: {} series elapsed {:.1f} ms\n", series.size(),
                   elapsed_ms(t0));
        oslc::write_series_csv(v_out, series);
        return 0;
    }

    if (ly->parsed()) {
        oslc::CocycleWindow window = oslc::read_cocycle_file(l_in);
        auto t0 = Clock::now();
        oslc::SpectrumEstimate est = oslc::qr_lyapunov(window, l_k, l_seed);
        fmt::print(stderr, "lyap: k={} over {} steps elapsed {:.1f} ms\n", l_k, est.steps_used,
                   elapsed_ms(t0));
        oslc::write_exponent_csv(l_out, est);
        return 0;
    }

    return 2;  // unreachable with require_subcommand(1)
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const oslc::numeric_error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 2;
    }
}
