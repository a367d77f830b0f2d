#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "she/torus.hpp"

namespace she {

// One spatial snapshot sampled at the uniform nodes x_j = -1 + j*dx.
struct GridFunction {
    std::vector<double> values;
    double dx = 0.0;

    GridFunction() = default;
    GridFunction(std::size_t n, double fill)
        : values(n, fill), dx(kTorusLength / static_cast<double>(n)) {}

    static GridFunction constant(std::size_t n, double c) { return GridFunction(n, c); }

    static GridFunction sample(std::size_t n, const std::function<double(double)>& f) {
        GridFunction g(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) g.values[j] = f(g.node(j));
        return g;
    }

    std::size_t size() const { return values.size(); }
    double node(std::size_t j) const { return -1.0 + static_cast<double>(j) * dx; }

    double mass() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s * dx;
    }
    double sup() const { return *std::max_element(values.begin(), values.end()); }
    double inf() const { return *std::min_element(values.begin(), values.end()); }
    double sup_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::fabs(v));
        return m;
    }
    double l1_norm() const {
        double s = 0.0;
        for (double v : values) s += std::fabs(v);
        return s * dx;
    }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void check_consistent() const {
        if (values.empty()) throw std::invalid_argument("GridFunction: empty grid");
        double len = static_cast<double>(values.size()) * dx;
        if (std::fabs(len - kTorusLength) > 1e-9)
            throw std::invalid_argument("GridFunction: n*dx must equal the torus length 2");
    }
};

}  // namespace she
