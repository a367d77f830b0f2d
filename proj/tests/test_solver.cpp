#include <doctest.h>

#include <cmath>

#include "she/kernel.hpp"
#include "she/solver.hpp"

using namespace she;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

SolverConfig deterministic_config(int n_space, Scheme scheme) {
    SolverConfig cfg;
    cfg.n_space = n_space;
    cfg.scheme = scheme;
    cfg.lambda = 0.0;
    cfg.deterministic_test_mode = true;
    cfg.track_qv = false;
    return cfg;
}
}  // namespace

TEST_CASE("config validation") {
    SolverConfig cfg;
    cfg.n_space = 128;
    cfg.dt = 0.1;  // far above dx^2/2
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.scheme = Scheme::SemiImplicitEM;
    CHECK_NOTHROW(cfg.validate());
    cfg.nu = 0.3;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("zero-noise constants are fixed points of both schemes") {
    for (Scheme s : {Scheme::ExplicitEM, Scheme::SemiImplicitEM}) {
        SolverConfig cfg = deterministic_config(32, s);
        cfg.horizon = 0.5;
        TrajectoryRecord rec = run_trajectory(GridFunction::constant(32, 3.0), cfg);
        for (double m : rec.mass) CHECK(m == doctest::Approx(6.0).epsilon(1e-14));
        for (double v : rec.sup) CHECK(v == doctest::Approx(3.0).epsilon(1e-14));
    }
}

TEST_CASE("zero-noise cosine mode decays at rate nu*pi^2") {
    const int n = 64;
    GridFunction u0 = GridFunction::sample(n, [](double x) { return 2.0 + std::cos(kPi * x); });
    for (Scheme s : {Scheme::ExplicitEM, Scheme::SemiImplicitEM}) {
        SolverConfig cfg = deterministic_config(n, s);
        cfg.horizon = 0.5;
        TrajectoryRecord rec = run_trajectory(u0, cfg);
        double amp = rec.sup.back() - 2.0;
        // first-order schemes at dt = dx^2/4: percent-level accuracy is expected
        CHECK(amp == doctest::Approx(std::exp(-kPi * kPi * 0.5)).epsilon(0.02));
        CHECK(rec.mass.back() == doctest::Approx(4.0).epsilon(1e-12));
    }
}

TEST_CASE("semi-implicit step solves its linear system exactly") {
    const int n = 48;
    GridFunction u0 = GridFunction::sample(n, [](double x) { return 1.0 + 0.3 * std::sin(2.0 * kPi * x) + 0.1 * std::cos(kPi * x); });
    SolverConfig cfg = deterministic_config(n, Scheme::SemiImplicitEM);
    cfg.dt = 1e-3;
    TrajectoryState st{0.0, u0, 0};
    std::vector<double> noise(n, 0.0);
    step(st, noise, cfg);
    // (I - a L) u_next = u_prev
    double a = cfg.nu * cfg.dt / (cfg.dx() * cfg.dx());
    for (int j = 0; j < n; ++j) {
        double lap = st.u.values[(j + 1) % n] - 2.0 * st.u.values[j] + st.u.values[(j + n - 1) % n];
        CHECK(st.u.values[j] - a * lap == doctest::Approx(u0.values[j]).epsilon(1e-12));
    }
}

TEST_CASE("discrete mass identity telescopes exactly") {
    for (Scheme s : {Scheme::ExplicitEM, Scheme::SemiImplicitEM}) {
        SolverConfig cfg;
        cfg.n_space = 64;
        cfg.scheme = s;
        cfg.lambda = 1.0;
        cfg.horizon = 0.25;
        cfg.seed = {123, 0};
        TrajectoryRecord rec = run_trajectory(GridFunction::constant(64, 1.0), cfg);
        CHECK(rec.martingale_residual <= 1e-12);
    }
}

TEST_CASE("same seed reproduces the trajectory; shared grid matches the stream") {
    SolverConfig cfg;
    cfg.n_space = 32;
    cfg.lambda = 2.0;
    cfg.horizon = 0.1;
    cfg.seed = {99, 4};
    GridFunction u0 = GridFunction::constant(32, 1.0);
    TrajectoryRecord a = run_trajectory(u0, cfg);
    TrajectoryRecord b = run_trajectory(u0, cfg);
    CHECK(a.mass == b.mass);
    CHECK(a.sup == b.sup);

    double h = cfg.effective_dt();
    auto n_steps = static_cast<std::size_t>(std::llround(cfg.horizon / h));
    NoiseGrid g = sample_noise(NoiseShape{h, cfg.dx(), n_steps, 32}, cfg.seed);
    TrajectoryRecord c = run_trajectory(u0, cfg, &g);
    CHECK(a.mass == c.mass);
    CHECK(a.qv == c.qv);
}

TEST_CASE("qv tracker accumulates the normalized squared mass increments") {
    SolverConfig cfg;
    cfg.n_space = 32;
    cfg.lambda = 1.0;
    cfg.horizon = 0.5;
    cfg.seed = {5, 0};
    TrajectoryRecord rec = run_trajectory(GridFunction::constant(32, 1.0), cfg);
    CHECK(rec.qv.front() == 0.0);
    for (std::size_t i = 1; i < rec.qv.size(); ++i) CHECK(rec.qv[i] >= rec.qv[i - 1]);
    CHECK(rec.qv.back() > 0.0);
}

TEST_CASE("picard iterates") {
    const int n = 16;
    GridFunction u0 = GridFunction::sample(n, [](double x) { return 1.0 + 0.5 * std::cos(kPi * x); });
    SolverConfig cfg;
    cfg.n_space = n;
    cfg.lambda = 0.5;
    cfg.scheme = Scheme::SemiImplicitEM;
    cfg.dt = 1e-2;
    const double t_eval = 0.1;
    NoiseShape shape{1e-2, 2.0 / n, 10, static_cast<std::size_t>(n)};
    NoiseGrid noise = sample_noise(shape, RngSeed{77, 0});

    SUBCASE("zeroth iterate is the initial profile") {
        GridFunction out = picard_solve(u0, noise, cfg, 0, t_eval);
        CHECK(out.values == u0.values);
    }
    SUBCASE("zero noise reduces the first iterate to the semigroup") {
        NoiseGrid zero = noise;
        for (auto& v : zero.increments) v = 0.0;
        GridFunction it1 = picard_solve(u0, zero, cfg, 1, t_eval);
        GridFunction pt = apply_semigroup(t_eval, u0, KernelParams::auto_for(t_eval));
        // both use the same grid quadrature of the wrapped kernel
        for (int j = 0; j < n; ++j)
            CHECK(it1.values[j] == doctest::Approx(pt.values[j]).epsilon(1e-10));
    }
    SUBCASE("successive gaps contract") {
        auto gaps = picard_iterate_gaps(u0, noise, cfg, 6, t_eval);
        REQUIRE(gaps.size() == 6);
        CHECK(gaps[3] < gaps[1]);
        CHECK(gaps[5] < gaps[3]);
        CHECK(gaps[5] < 1e-4);
    }
    SUBCASE("divergence ceiling trips") {
        CHECK_THROWS_AS(picard_solve(u0, noise, cfg, 3, t_eval, 1e-6), std::runtime_error);
    }
}

TEST_CASE("non-finite state raises a step failure") {
    SolverConfig cfg;
    cfg.n_space = 16;
    cfg.lambda = 1.0;
    cfg.horizon = 0.01;
    cfg.seed = {1, 0};
    GridFunction u0 = GridFunction::constant(16, 1e308);
    for (std::size_t j = 0; j < u0.size(); j += 2) u0.values[j] = -1e308;  // overflowing Laplacian
    CHECK_THROWS_AS(run_trajectory(u0, cfg), StepFailure);
}
