#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace she {

// (master_seed, stream_index) -> noise realization is a pure deterministic map;
// distinct streams are independent.
struct RngSeed {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;
};

struct NoiseShape {
    double dt = 0.0;
    double dx = 0.0;
    std::size_t n_time = 0;
    std::size_t n_space = 0;
    void check() const;
};

// Discretized space-time white noise: entry (i,j) is the W-measure of the cell
// [t_i, t_{i+1}) x [x_j, x_{j+1}), i.e. N(0, dt*dx), all entries independent.
struct NoiseGrid {
    NoiseShape shape;
    std::vector<double> increments;  // row-major, time-major

    double& at(std::size_t i, std::size_t j) { return increments[i * shape.n_space + j]; }
    double at(std::size_t i, std::size_t j) const { return increments[i * shape.n_space + j]; }
    std::span<const double> row(std::size_t i) const {
        return {increments.data() + i * shape.n_space, shape.n_space};
    }
};

// Counter-based Gaussian stream: sample (i, j) depends only on (seed, i, j), so
// trajectories are reproducible independently of scheduling.
class NoiseStream {
  public:
    explicit NoiseStream(RngSeed seed);

    // Standard normal for cell (time i, space j).
    double standard_normal(std::uint64_t i, std::uint64_t j) const;

    // One time slice of increments, scaled by sqrt(dt*dx).
    void fill_row(std::uint64_t i, std::span<double> out, double dt, double dx) const;

  private:
    std::uint64_t key_;
};

NoiseGrid sample_noise(const NoiseShape& shape, RngSeed seed);

// Sum consecutive time rows; exact pathwise coarsening used by refinement checks.
NoiseGrid coarsen_time(const NoiseGrid& fine, std::size_t factor);

// Binary dump: magic, shape header, 64-bit little-endian reals, row-major time-major.
void write_noise(const std::string& path, const NoiseGrid& grid);
NoiseGrid read_noise(const std::string& path);

}  // namespace she
