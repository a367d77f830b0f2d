#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "she/grid.hpp"
#include "she/record.hpp"

namespace she {

// dx * sum of values (periodic trapezoid = rectangle rule).
double total_mass(const GridFunction& u);

// Event A(t;lambda) = {M_t <= M_0 exp(-lambda^2 L^2 t / 8)}; ties (t = 0) resolve false.
bool mass_event_indicator(const TrajectoryRecord& rec, double t, double lambda, double L_sigma);

enum class Functional { Mass, Sup, Inf };

// Least-squares slope of log(functional) over the window [t_a, t_b].
double log_decay_slope(const TrajectoryRecord& rec, double t_a, double t_b, Functional which);

struct QvCheck {
    bool ok = false;
    bool test_mode = false;  // zero-noise record, vacuous
    double worst_ratio = 0.0;
};

// <N>_t / t >= lambda^2 L^2 / 2 * (1 - slack) for all recorded t >= 0.1.
QvCheck qv_lower_bound_check(const TrajectoryRecord& rec, double lambda, double L_sigma,
                             double slack = 0.15);

// First-passage times T_{n+1} = inf{t > T_n : inf_x u < e^{-1} inf_x u(T_n)},
// computed on the recorded cadence.
std::vector<double> excursion_times(const TrajectoryRecord& rec, int max_n);

struct LyapunovEstimate {
    double lower = 0.0;          // slope of log mean inf-moment
    double upper = 0.0;          // slope of log mean sup-moment
    double lower_half_width = 0.0;
    double upper_half_width = 0.0;
    std::string caveat;          // heavy-tail bias warning
};

// Regression slopes of log of the empirical inf/sup k-th moments over the window,
// with bootstrap confidence half-widths.  Log-of-mean, not mean-of-log.
LyapunovEstimate moment_lyapunov_estimate(std::span<const TrajectoryRecord> records, double k,
                                          double t_a, double t_b, int n_bootstrap = 200,
                                          std::uint64_t bootstrap_seed = 12345);

}  // namespace she
