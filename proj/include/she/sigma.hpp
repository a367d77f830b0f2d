#pragma once

#include <string>

namespace she {

// Nonlinearity with cone constants 0 < L_sigma <= |sigma(a)/a| <= Lip_sigma.
struct SigmaSpec {
    enum class Kind { Linear, ShiftedSine };

    Kind kind = Kind::Linear;
    double c = 1.0;
    double L_sigma = 1.0;
    double Lip_sigma = 1.0;

    double eval(double a) const;

    // Factories fill in the cone constants (numerically for shifted_sine).
    static SigmaSpec linear(double c);
    static SigmaSpec shifted_sine(double c);

    std::string name() const;
};

struct ConeReport {
    bool ok = false;
    double worst_lower = 0.0;  // min over the grid of |sigma(a)/a|
    double worst_upper = 0.0;  // max over the grid of |sigma(a)/a|
    double offending_a = 0.0;  // first grid point violating the declared constants
    std::string message;
};

// Scans 10^4 log-spaced magnitudes per sign in [1e-8, 1e8] against the declared constants.
ConeReport validate_cone(const SigmaSpec& spec);

}  // namespace she
