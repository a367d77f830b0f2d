#include "she/solver.hpp"

#include <cmath>

#include "she/kernel.hpp"

namespace she {

void SolverConfig::validate() const {
    if (n_space < 4) throw std::invalid_argument("SolverConfig: n_space must be >= 4");
    if (horizon < 0.0) throw std::invalid_argument("SolverConfig: horizon must be >= 0");
    if (!(nu == 1.0 || nu == 0.5)) throw std::invalid_argument("SolverConfig: nu must be 1 or 1/2");
    double h = effective_dt();
    if (!(h > 0.0)) throw std::invalid_argument("SolverConfig: dt must be > 0");
    if (scheme == Scheme::ExplicitEM && nu * h > dx() * dx() / 2.0 + 1e-15)
        throw std::invalid_argument(
            "SolverConfig: explicit scheme requires dt <= dx^2/2 (diffusive stability)");
    if (deterministic_test_mode) {
        if (lambda != 0.0)
            throw std::invalid_argument("SolverConfig: deterministic test mode requires lambda = 0");
    } else if (!(lambda > 0.0)) {
        throw std::invalid_argument("SolverConfig: lambda must be > 0 outside test mode");
    }
}

namespace {

// Solve (I - a*L) x = rhs with L the periodic second-difference operator,
// via Sherman-Morrison on top of the Thomas algorithm.
void cyclic_implicit_solve(std::vector<double>& rhs, double a, std::vector<double>& scratch) {
    const std::size_t n = rhs.size();
    const double diag = 1.0 + 2.0 * a;
    const double off = -a;

    // Modified system: corner entries folded into the first/last diagonal.
    const double gamma = -diag;
    auto thomas = [&](std::vector<double>& d, std::vector<double>& x) {
        // tridiag with diagonal d (modified), off-diagonals `off`; rhs in x, solution in x
        static thread_local std::vector<double> cp;
        cp.assign(n, 0.0);
        cp[0] = off / d[0];
        x[0] /= d[0];
        for (std::size_t i = 1; i < n; ++i) {
            double m = 1.0 / (d[i] - off * cp[i - 1]);
            cp[i] = off * m;
            x[i] = (x[i] - off * x[i - 1]) * m;
        }
        for (std::size_t i = n - 1; i-- > 0;) x[i] -= cp[i] * x[i + 1];
    };

    static thread_local std::vector<double> d, u;
    d.assign(n, diag);
    d[0] -= gamma;
    d[n - 1] -= off * off / gamma;

    scratch.assign(n, 0.0);
    scratch[0] = gamma;
    scratch[n - 1] = off;

    static thread_local std::vector<double> d2;
    d2 = d;
    thomas(d, rhs);
    u = scratch;
    thomas(d2, u);

    double num = rhs[0] + rhs[n - 1] * off / gamma;
    double den = 1.0 + u[0] + u[n - 1] * off / gamma;
    double fact = num / den;
    for (std::size_t i = 0; i < n; ++i) rhs[i] -= fact * u[i];
}

}  // namespace

double step(TrajectoryState& state, std::span<const double> noise_row, const SolverConfig& cfg) {
    const std::size_t n = state.u.size();
    if (noise_row.size() != n && !cfg.deterministic_test_mode)
        throw std::invalid_argument("step: noise row shape mismatch");

    const double dx = state.u.dx;
    const double h = cfg.effective_dt();
    const double a = cfg.nu * h / (dx * dx);
    std::vector<double>& u = state.u.values;

    static thread_local std::vector<double> next, scratch;
    next.assign(n, 0.0);

    double mass_noise = 0.0;  // lambda * sum sigma(u_j) dW_j, pre-step values (Ito)
    if (cfg.scheme == Scheme::ExplicitEM) {
        for (std::size_t j = 0; j < n; ++j) {
            double lap = u[(j + 1) % n] - 2.0 * u[j] + u[(j + n - 1) % n];
            double dw = 0.0;
            if (!cfg.deterministic_test_mode) {
                dw = cfg.lambda * cfg.sigma.eval(u[j]) * noise_row[j];
                mass_noise += dw;
            }
            next[j] = u[j] + a * lap + dw / dx;
        }
    } else {
        for (std::size_t j = 0; j < n; ++j) {
            double dw = 0.0;
            if (!cfg.deterministic_test_mode) {
                dw = cfg.lambda * cfg.sigma.eval(u[j]) * noise_row[j];
                mass_noise += dw;
            }
            next[j] = u[j] + dw / dx;
        }
        cyclic_implicit_solve(next, a, scratch);
    }

    long neg = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(next[j])) throw StepFailure(state.time + h, static_cast<int>(j));
        if (next[j] < 0.0) {
            ++neg;
            if (cfg.negativity == NegativityPolicy::ClampToZero) next[j] = 0.0;
        }
    }

    u.swap(next);
    state.time += h;
    state.negativity_events += neg;
    return mass_noise;
}

TrajectoryRecord run_trajectory(const GridFunction& u0, const SolverConfig& cfg,
                                const NoiseGrid* shared_noise) {
    cfg.validate();
    u0.check_consistent();
    if (static_cast<int>(u0.size()) != cfg.n_space)
        throw std::invalid_argument("run_trajectory: u0 size does not match config");

    const double h = cfg.effective_dt();
    const std::size_t n_steps = static_cast<std::size_t>(std::llround(cfg.horizon / h));
    const std::size_t cadence = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(cfg.output_cadence / h)));

    if (shared_noise) {
        if (shared_noise->shape.n_space != static_cast<std::size_t>(cfg.n_space) ||
            shared_noise->shape.n_time < n_steps ||
            std::fabs(shared_noise->shape.dt - h) > 1e-12 * h)
            throw std::invalid_argument("run_trajectory: shared noise shape mismatch");
    }

    TrajectoryState state{0.0, u0, 0};
    NoiseStream stream(cfg.seed);
    std::vector<double> row(cfg.n_space, 0.0);

    TrajectoryRecord rec;
    rec.master_seed = cfg.seed.master_seed;
    rec.stream_index = cfg.seed.stream_index;
    double qv = 0.0, noise_total = 0.0;
    const double mass0 = u0.mass();

    auto record = [&](double t) {
        rec.times.push_back(t);
        rec.mass.push_back(state.u.mass());
        rec.sup.push_back(state.u.sup());
        rec.inf.push_back(state.u.inf());
        rec.qv.push_back(qv);
    };
    record(0.0);

    for (std::size_t i = 0; i < n_steps; ++i) {
        std::span<const double> nr;
        if (cfg.deterministic_test_mode) {
            nr = row;  // unused
        } else if (shared_noise) {
            nr = shared_noise->row(i);
        } else {
            stream.fill_row(i, row, h, cfg.dx());
            nr = row;
        }
        double m_pre = cfg.track_qv ? state.u.mass() : 0.0;
        double dm = step(state, nr, cfg);
        noise_total += dm;
        if (cfg.track_qv && m_pre != 0.0) qv += (dm / m_pre) * (dm / m_pre);
        // exact step time avoids drift over many steps
        state.time = static_cast<double>(i + 1) * h;
        if ((i + 1) % cadence == 0 || i + 1 == n_steps) record(state.time);
    }

    rec.negativity_count = state.negativity_events;
    rec.martingale_residual =
        mass0 != 0.0 ? std::fabs(state.u.mass() - mass0 - noise_total) / std::fabs(mass0) : 0.0;
    return rec;
}

namespace {

struct PicardEngine {
    const GridFunction& u0;
    const NoiseGrid& noise;
    const SolverConfig& cfg;
    std::size_t n, K;
    double h, dx;
    std::vector<std::vector<double>> kernel_rows;  // [lag-1][offset]
    std::vector<std::vector<double>> semigroup;    // [k][i] = (P_{t_k} u0)(x_i)

    PicardEngine(const GridFunction& u0_, const NoiseGrid& noise_, const SolverConfig& cfg_,
                 double t_eval)
        : u0(u0_), noise(noise_), cfg(cfg_) {
        n = u0.size();
        h = noise.shape.dt;
        dx = u0.dx;
        K = static_cast<std::size_t>(std::llround(t_eval / h));
        if (noise.shape.n_time < K || noise.shape.n_space != n)
            throw std::invalid_argument("picard_solve: noise does not cover [0, t_eval]");

        kernel_rows.resize(K);
        for (std::size_t lag = 1; lag <= K; ++lag) {
            KernelParams kp = KernelParams::auto_for(static_cast<double>(lag) * h);
            auto& r = kernel_rows[lag - 1];
            r.resize(n);
            for (std::size_t o = 0; o < n; ++o)
                r[o] = kernel_eval(static_cast<double>(lag) * h,
                                   wrap(static_cast<double>(o) * dx), 0.0, kp);
        }
        semigroup.assign(K + 1, std::vector<double>(n, 0.0));
        semigroup[0] = u0.values;
        for (std::size_t k = 1; k <= K; ++k)
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                    acc += kernel_rows[k - 1][(i - j + n) % n] * u0.values[j];
                semigroup[k][i] = acc * dx;
            }
    }

    // One sweep: field <- P u0 + lambda * convolution(sigma(field) dW).
    // Returns sup |new - old| over the whole space-time field.
    double sweep(std::vector<std::vector<double>>& field, double ceiling) const {
        std::vector<std::vector<double>> w(K, std::vector<double>(n));
        for (std::size_t m = 0; m < K; ++m)
            for (std::size_t j = 0; j < n; ++j)
                w[m][j] = cfg.sigma.eval(field[m][j]) * noise.at(m, j);

        double gap = 0.0;
        std::vector<std::vector<double>> next(K + 1, std::vector<double>(n));
        next[0] = u0.values;
        for (std::size_t k = 1; k <= K; ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                double conv = 0.0;
                for (std::size_t m = 0; m < k; ++m) {
                    const auto& row = kernel_rows[k - m - 1];
                    const auto& wm = w[m];
                    for (std::size_t j = 0; j < n; ++j) conv += row[(i - j + n) % n] * wm[j];
                }
                double v = semigroup[k][i] + cfg.lambda * conv;
                if (std::fabs(v) > ceiling)
                    throw std::runtime_error("picard_solve: iterate exceeded divergence ceiling");
                gap = std::max(gap, std::fabs(v - field[k][i]));
                next[k][i] = v;
            }
        }
        field.swap(next);
        return gap;
    }
};

}  // namespace

GridFunction picard_solve(const GridFunction& u0, const NoiseGrid& noise, const SolverConfig& cfg,
                          int n_iter, double t_eval, double divergence_ceiling) {
    if (n_iter < 0) throw std::invalid_argument("picard_solve: n_iter must be >= 0");
    u0.check_consistent();
    if (n_iter == 0) return u0;  // zeroth iterate is the initial profile

    PicardEngine eng(u0, noise, cfg, t_eval);
    std::vector<std::vector<double>> field(eng.K + 1, u0.values);
    for (int it = 0; it < n_iter; ++it) eng.sweep(field, divergence_ceiling);

    GridFunction out(u0.size(), 0.0);
    out.values = field[eng.K];
    return out;
}

std::vector<double> picard_iterate_gaps(const GridFunction& u0, const NoiseGrid& noise,
                                        const SolverConfig& cfg, int n_iter, double t_eval,
                                        double divergence_ceiling) {
    u0.check_consistent();
    PicardEngine eng(u0, noise, cfg, t_eval);
    std::vector<std::vector<double>> field(eng.K + 1, u0.values);
    std::vector<double> gaps;
    for (int it = 0; it < n_iter; ++it) gaps.push_back(eng.sweep(field, divergence_ceiling));
    return gaps;
}

}  // namespace she
