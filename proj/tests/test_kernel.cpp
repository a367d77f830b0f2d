#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "she/kernel.hpp"

using namespace she;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

// Independent oracle: spectral form of the periodic kernel on [-1,1],
// p_t(x,y) = 1/2 + sum_{k>=1} exp(-k^2 pi^2 t) cos(k pi (x-y)).
double spectral_kernel(double t, double x, double y) {
    double s = 0.5;
    for (int k = 1; k <= 2000; ++k) {
        double term = std::exp(-double(k) * k * kPi * kPi * t) * std::cos(k * kPi * (x - y));
        s += term;
        if (std::exp(-double(k) * k * kPi * kPi * t) < 1e-18) break;
    }
    return s;
}
}  // namespace

TEST_CASE("free kernel closed form") {
    // (4 pi t)^{-1/2} exp(-a^2/4t) at t=0.25, a=1 equals pi^{-1/2} e^{-1}
    CHECK(free_kernel(0.25, 1.0) == doctest::Approx(0.20755374871029739).epsilon(1e-12));
    CHECK(free_kernel(1.0, 0.0) == doctest::Approx(1.0 / std::sqrt(4.0 * kPi)).epsilon(1e-14));
    CHECK_THROWS_AS(free_kernel(0.0, 1.0), std::domain_error);
}

TEST_CASE("tail bound certifies the image-sum truncation") {
    for (double t : {0.01, 0.5, 3.0, 50.0}) {
        KernelParams p = KernelParams::auto_for(t, 1e-12);
        // brute-force tail: terms beyond the certified order must sum below the bound
        double tail = 0.0;
        for (int n = p.truncation_order + 1; n <= p.truncation_order + 4000; ++n)
            tail += 2.0 * free_kernel(t, 2.0 * n);  // dominated at d = 0
        CHECK(tail <= kernel_tail_bound(t, p.truncation_order));
        CHECK(kernel_tail_bound(t, p.truncation_order) <= 1e-12);
    }
}

TEST_CASE("wrapped sum matches the spectral series") {
    for (double t : {0.01, 0.1, 1.0, 10.0})
        for (double x : {-0.8, 0.0, 0.3})
            for (double y : {-0.5, 0.7}) {
                KernelParams p = KernelParams::auto_for(t, 1e-13);
                CHECK(kernel_eval(t, x, y, p) ==
                      doctest::Approx(spectral_kernel(t, x, y)).epsilon(1e-10));
            }
}

TEST_CASE("truncation guard throws when the order is too small") {
    CHECK_THROWS_AS(kernel_eval(100.0, 0.0, 0.0, KernelParams{1, 1e-12}), TruncationError);
}

TEST_CASE("semigroup damps the first cosine mode at rate pi^2") {
    const int n = 256;
    GridFunction f = GridFunction::sample(n, [](double x) { return std::cos(kPi * x); });
    for (double t : {0.05, 0.3}) {
        GridFunction g = apply_semigroup(t, f, KernelParams::auto_for(t));
        for (std::size_t j = 0; j < g.size(); ++j)
            CHECK(g.values[j] ==
                  doctest::Approx(std::exp(-kPi * kPi * t) * f.values[j]).epsilon(1e-9));
    }
    // t = 0 is the identity
    GridFunction id = apply_semigroup(0.0, f, KernelParams{});
    CHECK(id.values == f.values);
}

TEST_CASE("L2 space difference closed form agrees with quadrature") {
    const int n = 1024;
    const double dx = 2.0 / n;
    for (double t : {0.05, 0.5})
        for (double sep : {0.1, 0.6}) {
            double x = -0.2, y = x + sep;
            KernelParams p = KernelParams::auto_for(t, 1e-13);
            double q = 0.0;
            for (int j = 0; j < n; ++j) {
                double z = -1.0 + j * dx;
                double d = kernel_eval(t, x, z, p) - kernel_eval(t, y, z, p);
                q += d * d;
            }
            q *= dx;
            CHECK(kernel_l2_diff_space(t, x, y) == doctest::Approx(q).epsilon(1e-8));
        }
}

TEST_CASE("L2 time difference: quadrature agreement and bound") {
    const int n = 1024;
    const double dx = 2.0 / n;
    for (double t : {0.1, 0.5, 2.0})
        for (double delta : {0.01, 0.1, 0.5}) {
            KernelParams pa = KernelParams::auto_for(t + delta, 1e-13);
            KernelParams pb = KernelParams::auto_for(t, 1e-13);
            double q = 0.0;
            for (int j = 0; j < n; ++j) {
                double z = -1.0 + j * dx;
                double d = kernel_eval(t + delta, 0.0, z, pa) - kernel_eval(t, 0.0, z, pb);
                q += d * d;
            }
            q *= dx;
            double v = kernel_l2_diff_time(t, delta, 0.0);
            CHECK(v == doctest::Approx(q).epsilon(1e-6));
            CHECK(v <= std::sqrt(kPi / (2.0 * t)) * std::min(1.0, delta / (4.0 * t)));
        }
    CHECK(kernel_l2_diff_time(1.0, 0.0, 0.3) == 0.0);
}

TEST_CASE("interpolation bound holds for flat and peaked data") {
    GridFunction flat = GridFunction::constant(128, 2.0);
    GridFunction bump = GridFunction::sample(128, [](double x) { return std::exp(-40.0 * x * x); });
    for (double t : {0.01, 0.5, 3.0})
        for (double eps : {0.2, 0.8}) {
            CHECK(interpolation_bound_check(t, eps, flat));
            CHECK(interpolation_bound_check(t, eps, bump));
        }
}

TEST_CASE("fixture round trip") {
    KernelConstants c;
    c.c_space = 1.25;
    c.c_holder_025 = 2.5;
    c.c_holder_050 = 3.5;
    c.c_holder_075 = 4.5;
    std::string path = "kernel_constants_rt.json";
    save_kernel_constants(c, path);
    KernelConstants d = load_kernel_constants(path);
    CHECK(d.c_space == c.c_space);
    CHECK(d.c_holder_050 == c.c_holder_050);
    CHECK(d.n_t == c.n_t);
    std::remove(path.c_str());
}

TEST_CASE("verify suite runs clean on freshly fitted constants") {
    KernelConstants fx = fit_kernel_constants();
    CHECK(fx.c_space > 0.0);
    auto checks = verify_kernel_suite(fx, 256);
    for (const auto& c : checks) {
        INFO(c.name, " worst=", c.worst);
        CHECK(c.pass);
    }
    // a zeroed constant must be caught
    KernelConstants bad = fx;
    bad.c_space = 0.0;
    bool any_fail = false;
    for (const auto& c : verify_kernel_suite(bad, 64))
        if (!c.pass) any_fail = true;
    CHECK(any_fail);
}
