#pragma once

#include <span>
#include <string>
#include <vector>

namespace she {

// sup_t of int_0^t (t/s)^{1-eps} e^{-beta(t-s)} (t-s)^{-alpha} ds vs the
// closed-form bound (2*Gamma(1-alpha) + 1) / ((1-alpha) * eps * beta^{1-alpha}).
struct IntegralQuery {
    double eps = 0.5;    // in (0, 1)
    double alpha = 0.0;  // in [0, 1)
    double beta = 1.0;   // >= 1
    double t_min = 1e-3;
    double t_max = 1e3;
    int n_t = 40;             // log-spaced sup grid
    int base_panels = 256;    // Simpson panels per half before refinement
    double rel_tol = 1e-6;    // refinement stopping criterion on the sup
    void check() const;
};

struct IntegralCertificate {
    double eps = 0.0, alpha = 0.0, beta = 0.0;
    double sup_value = 0.0;
    double sup_t = 0.0;       // grid point attaining the sup
    double bound = 0.0;
    double margin = 0.0;      // bound - sup_value
    double quadrature_rel_change = 0.0;  // last refinement's relative effect on the sup
    bool pass = false;
};

// Single integral value at fixed t, by singularity-absorbing substitutions
// (s = t*r, then r = w^{1/eps} near 0 and 1-r = z^{1/(1-alpha)} near 1).
double singular_integral(double t, double eps, double alpha, double beta, int panels);

// Certificate for one (eps, alpha, beta) tuple; throws on quadrature non-convergence.
IntegralCertificate verify_singular_integral(const IntegralQuery& q);

// Relative defect of sup(beta) = beta^{alpha-1} * sup(1).
double scaling_defect(double eps, double alpha, double beta);

// Full default lattice eps in {0.1..0.9} x alpha in {0,.25,.5,.75} x beta in {1,2,8,64}.
std::vector<IntegralCertificate> default_lattice_certificates();

struct BetaCertificate {
    double eps = 0.0, alpha = 0.0;
    double value = 0.0;  // B(eps, 1-alpha)
    double bound = 0.0;  // 1 / (eps * (1-alpha))
    bool pass = false;
};

// B(eps, 1-alpha) <= 1/(eps*(1-alpha)), beta function via lgamma.
BetaCertificate verify_beta_bound(double eps, double alpha);

// One JSON object per line: {eps, alpha, beta, sup_value, bound, margin, pass}.
void write_certificates_jsonl(const std::string& path,
                              std::span<const IntegralCertificate> certs);

}  // namespace she
