#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace she {

// Time series of scalar observables along one trajectory.
struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> mass;      // L^1 norm by quadrature
    std::vector<double> sup;       // max over the grid
    std::vector<double> inf;       // min over the grid
    std::vector<double> qv;        // running sum of (dM/M)^2, the <N> estimate
    long negativity_count = 0;
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;
    std::string config_digest;

    // |M_T - M_0 - lambda * sum sigma(u) dW| / M_0, exact discrete identity residual
    double martingale_residual = 0.0;

    std::size_t size() const { return times.size(); }

    // Index of the recorded time nearest to t.
    std::size_t nearest_index(double t) const;
};

// CSV schema: t, mass, sup, inf, log_mass, qv_n, negativity_count (17 significant digits).
void write_record_csv(const TrajectoryRecord& rec, const std::string& path,
                      const std::string& tool_version);

}  // namespace she
