#pragma once

#include <stdexcept>
#include <string>

#include "she/grid.hpp"

namespace she {

struct TruncationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Truncation control for the wrapped-Gaussian image sum.
struct KernelParams {
    int truncation_order = 8;       // max |n| in the image sum
    double abs_tolerance = 1e-12;   // certified absolute truncation error

    // Smallest order whose certified Gaussian-tail bound meets `tol` at time t.
    static KernelParams auto_for(double t, double tol = 1e-12);
    void check() const;
};

// Free-space heat kernel G_t(a) = (4*pi*t)^{-1/2} exp(-a^2/(4t)).
double free_kernel(double t, double a);

// Certified upper bound on sum_{|n|>order} G_t(d + 2n), valid for every d in [-2, 2].
double kernel_tail_bound(double t, int order);

// Periodic kernel p_t(x, y) = sum_{|n|<=N} G_t(x - y + 2n).
double kernel_eval(double t, double x, double y, const KernelParams& params);

// Quadrature of int p_t(x, y) f(y) dy at every node; t = 0 returns f unchanged.
GridFunction apply_semigroup(double t, const GridFunction& f, const KernelParams& params);

// int |p_t(x,.) - p_t(y,.)|^2 via the closed form p_{2t}(x,x) + p_{2t}(y,y) - 2 p_{2t}(x,y).
double kernel_l2_diff_space(double t, double x, double y,
                            const KernelParams& params = KernelParams{});

// int |p_{t+delta}(x,.) - p_t(x,.)|^2 via p_{2(t+delta)}(x,x) + p_{2t}(x,x) - 2 p_{2t+delta}(x,x).
double kernel_l2_diff_time(double t, double delta, double x,
                           const KernelParams& params = KernelParams{});

// Checks ||P_t u0||_inf <= 2 (t^{-1/2} v 1)^{1-eps} ||u0||_inf^eps ||u0||_1^{1-eps}.
bool interpolation_bound_check(double t, double eps, const GridFunction& u0,
                               double quadrature_slack = 1e-9);

// Frozen fitted constants for the L^2 space-difference bounds, with the grid
// they were fitted on.  Loaded from the fixture file by the verifier.
struct KernelConstants {
    double c_space = 0.0;                     // |p_t(x,.)-p_t(y,.)|_2^2 <= C |x-y| / (t ^ sqrt t)
    double c_holder_025 = 0.0;                // same with |x-y|^delta / (t^{(d+1)/2} ^ t^{d/2})
    double c_holder_050 = 0.0;
    double c_holder_075 = 0.0;
    double t_min = 1e-3, t_max = 1e2;
    int n_t = 40, n_pairs = 25;
};

KernelConstants fit_kernel_constants();                      // refit on the declared grid
KernelConstants load_kernel_constants(const std::string& path);
void save_kernel_constants(const KernelConstants& c, const std::string& path);

struct KernelCheck {
    std::string name;
    bool pass = false;
    double worst = 0.0;  // worst margin/error seen, meaning depends on the check
};

// Full bound suite: Gaussian sandwich, conservativeness, semigroup composition,
// time-difference bound + quadrature agreement, fitted space-difference bounds,
// and the sup/L1 interpolation bound.  `fixture` supplies the frozen constants.
std::vector<KernelCheck> verify_kernel_suite(const KernelConstants& fixture, int n_space = 512);

}  // namespace she
