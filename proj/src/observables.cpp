#include "she/observables.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "she/stats.hpp"

namespace she {

std::size_t TrajectoryRecord::nearest_index(double t) const {
    if (times.empty()) throw std::runtime_error("TrajectoryRecord: empty");
    if (t < times.front() - 1e-12 || t > times.back() + 1e-12)
        throw std::out_of_range("time outside the recorded horizon");
    std::size_t best = 0;
    double best_d = std::fabs(times[0] - t);
    for (std::size_t i = 1; i < times.size(); ++i) {
        double d = std::fabs(times[i] - t);
        if (d < best_d) { best = i; best_d = d; }
    }
    return best;
}

void write_record_csv(const TrajectoryRecord& rec, const std::string& path,
                      const std::string& tool_version) {
    std::ofstream out(path, std::ios::binary);  // binary keeps LF on every platform
    if (!out) throw std::runtime_error("write_record_csv: cannot open " + path);
    out << "# tool_version=" << tool_version << "\n";
    out << "# config_digest=" << rec.config_digest << "\n";
    out << "# master_seed=" << rec.master_seed << " stream_index=" << rec.stream_index << "\n";
    out << "t,mass,sup,inf,log_mass,qv_n,negativity_count\n";
    char buf[512];
    for (std::size_t i = 0; i < rec.size(); ++i) {
        double lm = rec.mass[i] > 0.0 ? std::log(rec.mass[i])
                                      : -std::numeric_limits<double>::infinity();
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%ld\n",
                      rec.times[i], rec.mass[i], rec.sup[i], rec.inf[i], lm, rec.qv[i],
                      rec.negativity_count);
        out << buf;
    }
}

double total_mass(const GridFunction& u) { return u.mass(); }

bool mass_event_indicator(const TrajectoryRecord& rec, double t, double lambda, double L_sigma) {
    std::size_t i = rec.nearest_index(t);
    double threshold = rec.mass[0] * std::exp(-lambda * lambda * L_sigma * L_sigma * t / 8.0);
    return rec.mass[i] < threshold;  // strict: the t = 0 tie is false
}

double log_decay_slope(const TrajectoryRecord& rec, double t_a, double t_b, Functional which) {
    if (!(t_b > t_a) || t_a < 0.0) throw std::invalid_argument("log_decay_slope: bad window");
    const std::vector<double>* series = nullptr;
    switch (which) {
        case Functional::Mass: series = &rec.mass; break;
        case Functional::Sup: series = &rec.sup; break;
        case Functional::Inf: series = &rec.inf; break;
    }
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        if (rec.times[i] < t_a - 1e-12 || rec.times[i] > t_b + 1e-12) continue;
        double v = (*series)[i];
        if (!(v > 0.0))
            throw std::runtime_error("log_decay_slope: nonpositive value at index " +
                                     std::to_string(i));
        xs.push_back(rec.times[i]);
        ys.push_back(std::log(v));
    }
    if (xs.size() < 2) throw std::invalid_argument("log_decay_slope: window has < 2 samples");
    return regression_slope(xs, ys);
}

QvCheck qv_lower_bound_check(const TrajectoryRecord& rec, double lambda, double L_sigma,
                             double slack) {
    QvCheck out;
    bool all_zero = true;
    for (double q : rec.qv)
        if (q != 0.0) { all_zero = false; break; }
    if (all_zero && lambda == 0.0) {
        out.test_mode = true;
        out.ok = true;  // vacuous
        return out;
    }
    double bound = lambda * lambda * L_sigma * L_sigma / 2.0 * (1.0 - slack);
    out.worst_ratio = 1e300;
    out.ok = true;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        if (rec.times[i] < 0.1) continue;
        double ratio = rec.qv[i] / rec.times[i];
        out.worst_ratio = std::min(out.worst_ratio, ratio);
        if (ratio < bound) out.ok = false;
    }
    return out;
}

std::vector<double> excursion_times(const TrajectoryRecord& rec, int max_n) {
    std::vector<double> times;
    if (rec.size() == 0) return times;
    double ref = rec.inf[0];
    const double drop = std::exp(-1.0);
    for (std::size_t i = 1; i < rec.size() && static_cast<int>(times.size()) < max_n; ++i) {
        if (rec.inf[i] < drop * ref) {
            times.push_back(rec.times[i]);
            ref = rec.inf[i];
        }
    }
    return times;
}

namespace {

// xorshift-style generator for bootstrap resampling only
struct SmallRng {
    std::uint64_t s;
    explicit SmallRng(std::uint64_t seed) : s(seed ? seed : 1) {}
    std::uint64_t next() {
        s ^= s << 13; s ^= s >> 7; s ^= s << 17;
        return s;
    }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
};

}  // namespace

LyapunovEstimate moment_lyapunov_estimate(std::span<const TrajectoryRecord> records, double k,
                                          double t_a, double t_b, int n_bootstrap,
                                          std::uint64_t bootstrap_seed) {
    if (records.size() < 100)
        throw std::invalid_argument("moment_lyapunov_estimate: need >= 100 trajectories");
    if (!(k >= 2.0)) throw std::invalid_argument("moment_lyapunov_estimate: k must be >= 2");

    const auto& t0 = records[0].times;
    std::vector<std::size_t> idx;
    std::vector<double> xs;
    for (std::size_t i = 0; i < t0.size(); ++i)
        if (t0[i] >= t_a - 1e-12 && t0[i] <= t_b + 1e-12) { idx.push_back(i); xs.push_back(t0[i]); }
    if (idx.size() < 2) throw std::invalid_argument("moment_lyapunov_estimate: window too narrow");

    auto slopes = [&](const std::vector<std::size_t>& sample) {
        std::vector<double> log_sup, log_inf;
        for (std::size_t ti : idx) {
            double ms = 0.0, mi = 0.0;
            for (std::size_t r : sample) {
                ms += std::pow(std::fabs(records[r].sup[ti]), k);
                mi += std::pow(std::fabs(records[r].inf[ti]), k);
            }
            log_sup.push_back(std::log(ms / sample.size()));
            log_inf.push_back(std::log(mi / sample.size()));
        }
        return std::pair{regression_slope(xs, log_inf), regression_slope(xs, log_sup)};
    };

    std::vector<std::size_t> all(records.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    auto [lo, hi] = slopes(all);

    SmallRng rng(bootstrap_seed);
    std::vector<double> boot_lo, boot_hi;
    std::vector<std::size_t> sample(records.size());
    for (int b = 0; b < n_bootstrap; ++b) {
        for (auto& s : sample) s = rng.below(records.size());
        auto [bl, bh] = slopes(sample);
        boot_lo.push_back(bl);
        boot_hi.push_back(bh);
    }

    LyapunovEstimate est;
    est.lower = lo;
    est.upper = hi;
    est.lower_half_width = 1.96 * std::sqrt(sample_variance(boot_lo));
    est.upper_half_width = 1.96 * std::sqrt(sample_variance(boot_hi));
    est.caveat = "log-of-mean estimator; heavy tails bias these low at small ensembles";
    return est;
}

}  // namespace she
