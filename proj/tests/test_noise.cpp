#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <vector>

#include "she/noise.hpp"
#include "she/stats.hpp"

using namespace she;

TEST_CASE("streams are deterministic and independent") {
    NoiseStream a(RngSeed{42, 0});
    NoiseStream b(RngSeed{42, 0});
    NoiseStream c(RngSeed{42, 1});
    NoiseStream d(RngSeed{43, 0});
    int differ_c = 0, differ_d = 0;
    for (std::uint64_t i = 0; i < 64; ++i)
        for (std::uint64_t j = 0; j < 8; ++j) {
            CHECK(a.standard_normal(i, j) == b.standard_normal(i, j));
            if (a.standard_normal(i, j) != c.standard_normal(i, j)) ++differ_c;
            if (a.standard_normal(i, j) != d.standard_normal(i, j)) ++differ_d;
        }
    CHECK(differ_c > 500);
    CHECK(differ_d > 500);
}

TEST_CASE("marginals are standard normal (KS at 1e-3)") {
    NoiseStream s(RngSeed{7, 3});
    const std::size_t n = 100000;
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = s.standard_normal(i / 16, i % 16);
    double ks = ks_statistic_normal(z);
    CHECK(ks < ks_critical(1e-3, double(n)));
    CHECK(std::fabs(mean(z)) < 3.0 / std::sqrt(double(n)));
    CHECK(sample_variance(z) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("cell increments carry variance dt*dx and no neighbor correlation") {
    const double dt = 1e-3, dx = 2.0 / 64;
    NoiseShape shape{dt, dx, 500, 64};
    NoiseGrid g = sample_noise(shape, RngSeed{11, 0});
    std::vector<double> all(g.increments);
    double v = sample_variance(all);
    double se = std::sqrt(2.0 / double(all.size())) * dt * dx;  // var of the variance estimate
    CHECK(std::fabs(v - dt * dx) <= 3.0 * se);

    // neighbor products average to ~0
    double corr_space = 0.0, corr_time = 0.0;
    std::size_t n_pairs = 0;
    for (std::size_t i = 0; i + 1 < shape.n_time; ++i)
        for (std::size_t j = 0; j + 1 < shape.n_space; ++j) {
            corr_space += g.at(i, j) * g.at(i, j + 1);
            corr_time += g.at(i, j) * g.at(i + 1, j);
            ++n_pairs;
        }
    double denom = double(n_pairs) * dt * dx;
    CHECK(std::fabs(corr_space / denom) < 3.0 / std::sqrt(double(n_pairs)));
    CHECK(std::fabs(corr_time / denom) < 3.0 / std::sqrt(double(n_pairs)));
}

TEST_CASE("pathwise time coarsening sums rows exactly") {
    NoiseShape shape{1e-3, 2.0 / 16, 12, 16};
    NoiseGrid g = sample_noise(shape, RngSeed{5, 2});
    NoiseGrid c = coarsen_time(g, 3);
    CHECK(c.shape.n_time == 4);
    CHECK(c.shape.dt == doctest::Approx(3e-3));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 16; ++j)
            CHECK(c.at(i, j) ==
                  doctest::Approx(g.at(3 * i, j) + g.at(3 * i + 1, j) + g.at(3 * i + 2, j))
                      .epsilon(1e-15));
    CHECK_THROWS_AS(coarsen_time(g, 5), std::invalid_argument);
}

TEST_CASE("binary round trip is exact") {
    NoiseShape shape{2e-3, 2.0 / 8, 6, 8};
    NoiseGrid g = sample_noise(shape, RngSeed{9, 9});
    const std::string path = "noise_rt.bin";
    write_noise(path, g);
    NoiseGrid h = read_noise(path);
    CHECK(h.shape.n_time == g.shape.n_time);
    CHECK(h.shape.dt == g.shape.dt);
    CHECK(h.increments == g.increments);
    std::remove(path.c_str());
}

TEST_CASE("shape validation") {
    NoiseShape bad{1e-3, 0.1, 10, 16};  // 16*0.1 != 2
    CHECK_THROWS_AS(bad.check(), std::invalid_argument);
    NoiseShape good{1e-3, 2.0 / 16, 10, 16};
    CHECK_NOTHROW(good.check());
}
