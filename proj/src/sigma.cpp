#include "she/sigma.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace she {

namespace {

std::vector<double> validation_grid() {
    constexpr int kPerSign = 10000;
    std::vector<double> grid;
    grid.reserve(2 * kPerSign);
    for (int i = 0; i < kPerSign; ++i) {
        double mag = 1e-8 * std::pow(1e16, double(i) / (kPerSign - 1));
        grid.push_back(mag);
        grid.push_back(-mag);
    }
    return grid;
}

}  // namespace

double SigmaSpec::eval(double a) const {
    if (a == 0.0) return 0.0;
    switch (kind) {
        case Kind::Linear: return c * a;
        case Kind::ShiftedSine: return a + c * std::sin(a);
    }
    throw std::logic_error("SigmaSpec: unknown kind");
}

SigmaSpec SigmaSpec::linear(double c) {
    if (c == 0.0) throw std::invalid_argument("SigmaSpec::linear: c must be nonzero");
    SigmaSpec s;
    s.kind = Kind::Linear;
    s.c = c;
    s.L_sigma = s.Lip_sigma = std::fabs(c);
    return s;
}

SigmaSpec SigmaSpec::shifted_sine(double c) {
    if (!(c >= 0.0 && c < 1.0))
        throw std::invalid_argument("SigmaSpec::shifted_sine: need 0 <= c < 1 for a valid cone");
    SigmaSpec s;
    s.kind = Kind::ShiftedSine;
    s.c = c;
    // |sigma(a)/a| = |1 + c sin(a)/a|; scan for the extremes.
    double lo = 1.0, hi = 1.0;
    for (double a : validation_grid()) {
        double r = std::fabs(s.eval(a) / a);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    s.L_sigma = lo;
    s.Lip_sigma = std::max(hi, 1.0 + c);  // ratio sup is attained in the a -> 0 limit
    return s;
}

std::string SigmaSpec::name() const {
    switch (kind) {
        case Kind::Linear: return "linear(" + std::to_string(c) + ")";
        case Kind::ShiftedSine: return "shifted_sine(" + std::to_string(c) + ")";
    }
    return "?";
}

ConeReport validate_cone(const SigmaSpec& spec) {
    ConeReport rep;
    rep.worst_lower = 1e300;
    rep.worst_upper = 0.0;
    bool found_violation = false;
    for (double a : validation_grid()) {
        double r = std::fabs(spec.eval(a) / a);
        rep.worst_lower = std::min(rep.worst_lower, r);
        rep.worst_upper = std::max(rep.worst_upper, r);
        bool bad = r < spec.L_sigma * (1.0 - 1e-12) || r > spec.Lip_sigma * (1.0 + 1e-12);
        if (bad && !found_violation) {
            found_violation = true;
            rep.offending_a = a;
        }
    }
    rep.ok = !found_violation && spec.L_sigma > 0.0 && spec.L_sigma <= spec.Lip_sigma;
    rep.message = rep.ok ? "cone holds on the validation grid"
                         : "cone violated at a = " + std::to_string(rep.offending_a);
    return rep;
}

}  // namespace she
