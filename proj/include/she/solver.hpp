#pragma once

#include <optional>
#include <span>

#include "she/grid.hpp"
#include "she/noise.hpp"
#include "she/record.hpp"
#include "she/sigma.hpp"

namespace she {

enum class Scheme { ExplicitEM, SemiImplicitEM };
enum class NegativityPolicy { RecordOnly, ClampToZero };

struct SolverConfig {
    int n_space = 64;
    double dt = 0.0;            // 0 means "use dx^2/4"
    double horizon = 1.0;
    double lambda = 1.0;
    double nu = 1.0;            // diffusion coefficient, 1 or 1/2
    SigmaSpec sigma = SigmaSpec::linear(1.0);
    RngSeed seed;
    Scheme scheme = Scheme::ExplicitEM;
    NegativityPolicy negativity = NegativityPolicy::RecordOnly;
    double output_cadence = 0.01;
    bool deterministic_test_mode = false;  // lambda = 0, noise suppressed
    bool track_qv = true;

    double dx() const { return 2.0 / n_space; }
    double effective_dt() const { return dt > 0.0 ? dt : dx() * dx() / 4.0; }
    void validate() const;
};

struct TrajectoryState {
    double time = 0.0;
    GridFunction u;
    long negativity_events = 0;
};

struct StepFailure : std::runtime_error {
    double time;
    int cell;
    StepFailure(double t, int c)
        : std::runtime_error("non-finite value at t=" + std::to_string(t) +
                             ", cell=" + std::to_string(c)),
          time(t), cell(c) {}
};

// One Euler-Maruyama step; noise_row holds the cell increments of this time slice.
// Returns lambda * sum_j sigma(u_j) dW_j, the exact mass change of the explicit scheme.
double step(TrajectoryState& state, std::span<const double> noise_row, const SolverConfig& cfg);

// Full trajectory with observables recorded at the output cadence.  When an
// external NoiseGrid is given it is consumed instead of the seeded stream, so
// the Picard oracle and the direct scheme can share one realization.
TrajectoryRecord run_trajectory(const GridFunction& u0, const SolverConfig& cfg,
                                const NoiseGrid* shared_noise = nullptr);

// n_iter-th Picard iterate of the mild form on the given noise realization.
GridFunction picard_solve(const GridFunction& u0, const NoiseGrid& noise,
                          const SolverConfig& cfg, int n_iter, double t_eval,
                          double divergence_ceiling = 1e6);

// Sup-distances between successive Picard iterates, for contraction checks.
std::vector<double> picard_iterate_gaps(const GridFunction& u0, const NoiseGrid& noise,
                                        const SolverConfig& cfg, int n_iter, double t_eval,
                                        double divergence_ceiling = 1e6);

}  // namespace she
