#include "she/noise.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace she {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline double u01(std::uint64_t h) {
    // (0,1), never exactly 0 so log is safe
    return (static_cast<double>(h >> 11) + 0.5) * 0x1p-53;
}

// Box-Muller pair for the cell pair `jp` of time slice `i`.
inline void normal_pair(std::uint64_t key, std::uint64_t i, std::uint64_t jp,
                        double& z0, double& z1) {
    std::uint64_t h = mix64(mix64(key ^ mix64(i)) ^ jp);
    double u1 = u01(h);
    double u2 = u01(mix64(h ^ 0xd1342543de82ef95ULL));
    double r = std::sqrt(-2.0 * std::log(u1));
    z0 = r * std::cos(kTwoPi * u2);
    z1 = r * std::sin(kTwoPi * u2);
}

}  // namespace

void NoiseShape::check() const {
    if (!(dt > 0.0) || !(dx > 0.0)) throw std::invalid_argument("NoiseShape: dt, dx must be > 0");
    if (n_time == 0 || n_space == 0) throw std::invalid_argument("NoiseShape: empty grid");
    if (std::fabs(static_cast<double>(n_space) * dx - 2.0) > 1e-9)
        throw std::invalid_argument("NoiseShape: n_space*dx must cover the torus exactly");
}

NoiseStream::NoiseStream(RngSeed seed)
    : key_(mix64(seed.master_seed ^ mix64(seed.stream_index ^ 0x5851f42d4c957f2dULL))) {}

double NoiseStream::standard_normal(std::uint64_t i, std::uint64_t j) const {
    double z0, z1;
    normal_pair(key_, i, j / 2, z0, z1);
    return (j % 2 == 0) ? z0 : z1;
}

void NoiseStream::fill_row(std::uint64_t i, std::span<double> out, double dt, double dx) const {
    const double scale = std::sqrt(dt * dx);
    std::size_t n = out.size();
    for (std::size_t jp = 0; 2 * jp < n; ++jp) {
        double z0, z1;
        normal_pair(key_, i, jp, z0, z1);
        out[2 * jp] = scale * z0;
        if (2 * jp + 1 < n) out[2 * jp + 1] = scale * z1;
    }
}

NoiseGrid sample_noise(const NoiseShape& shape, RngSeed seed) {
    shape.check();
    NoiseGrid g;
    g.shape = shape;
    g.increments.resize(shape.n_time * shape.n_space);
    NoiseStream stream(seed);
    for (std::size_t i = 0; i < shape.n_time; ++i) {
        std::span<double> row{g.increments.data() + i * shape.n_space, shape.n_space};
        stream.fill_row(i, row, shape.dt, shape.dx);
    }
    return g;
}

NoiseGrid coarsen_time(const NoiseGrid& fine, std::size_t factor) {
    if (factor == 0 || fine.shape.n_time % factor != 0)
        throw std::invalid_argument("coarsen_time: factor must divide n_time");
    NoiseGrid g;
    g.shape = fine.shape;
    g.shape.n_time = fine.shape.n_time / factor;
    g.shape.dt = fine.shape.dt * static_cast<double>(factor);
    g.increments.assign(g.shape.n_time * g.shape.n_space, 0.0);
    for (std::size_t i = 0; i < fine.shape.n_time; ++i)
        for (std::size_t j = 0; j < fine.shape.n_space; ++j)
            g.at(i / factor, j) += fine.at(i, j);
    return g;
}

namespace {
constexpr char kMagic[8] = {'S', 'H', 'E', 'N', 'O', 'I', 'S', '1'};
}

void write_noise(const std::string& path, const NoiseGrid& grid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_noise: cannot open " + path);
    out.write(kMagic, sizeof(kMagic));
    std::uint64_t nt = grid.shape.n_time, ns = grid.shape.n_space;
    out.write(reinterpret_cast<const char*>(&nt), 8);
    out.write(reinterpret_cast<const char*>(&ns), 8);
    out.write(reinterpret_cast<const char*>(&grid.shape.dt), 8);
    out.write(reinterpret_cast<const char*>(&grid.shape.dx), 8);
    out.write(reinterpret_cast<const char*>(grid.increments.data()),
              static_cast<std::streamsize>(grid.increments.size() * 8));
}

NoiseGrid read_noise(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_noise: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("read_noise: bad magic");
    NoiseGrid g;
    std::uint64_t nt = 0, ns = 0;
    in.read(reinterpret_cast<char*>(&nt), 8);
    in.read(reinterpret_cast<char*>(&ns), 8);
    in.read(reinterpret_cast<char*>(&g.shape.dt), 8);
    in.read(reinterpret_cast<char*>(&g.shape.dx), 8);
    g.shape.n_time = nt;
    g.shape.n_space = ns;
    g.shape.check();
    g.increments.resize(nt * ns);
    in.read(reinterpret_cast<char*>(g.increments.data()),
            static_cast<std::streamsize>(g.increments.size() * 8));
    if (!in) throw std::runtime_error("read_noise: truncated file");
    return g;
}

}  // namespace she
