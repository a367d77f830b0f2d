#include "she/inequalities.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace she {

void IntegralQuery::check() const {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("IntegralQuery: eps in (0,1)");
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw std::invalid_argument("IntegralQuery: alpha in [0,1)");
    if (!(beta >= 1.0)) throw std::invalid_argument("IntegralQuery: beta >= 1");
    if (!(t_min > 0.0 && t_max > t_min)) throw std::invalid_argument("IntegralQuery: bad t range");
    if (n_t < 2 || base_panels < 2) throw std::invalid_argument("IntegralQuery: bad resolution");
}

namespace {

// Composite Simpson on [0, b] with n panels (n rounded up to even).
template <class F>
double simpson(F f, double b, int n) {
    if (n % 2) ++n;
    const double h = b / n;
    double acc = f(0.0) + f(b);
    for (int i = 1; i < n; ++i) acc += f(i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

}  // namespace

double singular_integral(double t, double eps, double alpha, double beta, int panels) {
    // s = t*r gives t^{1-alpha} * int_0^1 r^{eps-1} (1-r)^{-alpha} e^{-beta t (1-r)} dr,
    // split at r = 1/2 with a power substitution absorbing each endpoint singularity.
    const double bt = beta * t;

    // r in [0, 1/2]: r = w^{1/eps}, integrand becomes (1/eps) (1-r)^{-alpha} e^{-bt(1-r)}
    const double w_hi = std::pow(0.5, eps);
    auto f_lo = [&](double w) {
        double r = std::pow(w, 1.0 / eps);
        double om = 1.0 - r;
        return std::pow(om, -alpha) * std::exp(-bt * om);
    };
    double part_lo = simpson(f_lo, w_hi, panels) / eps;

    // r in [1/2, 1], i.e. om = 1-r in [0, 1/2]: both an om^{-alpha} singularity and,
    // for large bt, an e^{-bt om} boundary layer of width 1/bt. Split at
    // om0 = min(1/2, 10/bt) so each piece is smooth after its substitution.
    const double oma = 1.0 - alpha;
    const double om0 = std::min(0.5, 10.0 / bt);

    // [0, om0]: om = om0 * z^{1/(1-alpha)} absorbs the power singularity and the
    // exponent bt*om stays <= 10
    auto f_layer = [&](double z) {
        double om = om0 * std::pow(z, 1.0 / oma);
        return std::pow(1.0 - om, eps - 1.0) * std::exp(-bt * om);
    };
    double part_hi = std::pow(om0, oma) * simpson(f_layer, 1.0, panels) / oma;

    // [om0, 1/2]: log grid; e^{-bt om} decays a fixed factor per unit of u = log om
    if (om0 < 0.5) {
        double u_lo = std::log(om0), u_hi = std::log(0.5);
        auto f_log = [&](double du) {
            double om = std::exp(u_lo + du);
            return std::pow(om, oma) * std::pow(1.0 - om, eps - 1.0) * std::exp(-bt * om);
        };
        part_hi += simpson(f_log, u_hi - u_lo, panels);
    }

    return std::pow(t, oma) * (part_lo + part_hi);
}

namespace {

double sup_over_grid(const IntegralQuery& q, int panels, double* sup_t) {
    double best = 0.0, best_t = q.t_min;
    for (int i = 0; i < q.n_t; ++i) {
        double t = q.t_min * std::pow(q.t_max / q.t_min, double(i) / (q.n_t - 1));
        double v = singular_integral(t, q.eps, q.alpha, q.beta, panels);
        if (v > best) { best = v; best_t = t; }
    }
    if (sup_t) *sup_t = best_t;
    return best;
}

}  // namespace

IntegralCertificate verify_singular_integral(const IntegralQuery& q) {
    q.check();
    IntegralCertificate cert;
    cert.eps = q.eps;
    cert.alpha = q.alpha;
    cert.beta = q.beta;

    int panels = q.base_panels;
    double prev = sup_over_grid(q, panels, &cert.sup_t);
    double cur = prev, rel = 1.0;
    for (int level = 0; level < 5; ++level) {
        panels *= 2;
        cur = sup_over_grid(q, panels, &cert.sup_t);
        rel = std::fabs(cur - prev) / std::max(cur, 1e-300);
        if (rel < q.rel_tol) break;
        prev = cur;
    }
    if (rel >= q.rel_tol)
        throw std::runtime_error("verify_singular_integral: quadrature did not converge (rel=" +
                                 std::to_string(rel) + ")");

    cert.sup_value = cur;
    cert.quadrature_rel_change = rel;
    cert.bound = (2.0 * std::tgamma(1.0 - q.alpha) + 1.0) /
                 ((1.0 - q.alpha) * q.eps * std::pow(q.beta, 1.0 - q.alpha));
    cert.margin = cert.bound - cert.sup_value;
    cert.pass = cert.sup_value <= cert.bound;
    return cert;
}

double scaling_defect(double eps, double alpha, double beta) {
    // change of variables gives the exact identity I_beta(t) = beta^{alpha-1} I_1(beta t)
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        double t = 1e-2 * std::pow(1e4, i / 19.0);
        double lhs = singular_integral(t, eps, alpha, beta, 2048);
        double rhs = std::pow(beta, alpha - 1.0) * singular_integral(beta * t, eps, alpha, 1.0, 2048);
        worst = std::max(worst, std::fabs(lhs - rhs) / std::max(rhs, 1e-300));
    }
    return worst;
}

std::vector<IntegralCertificate> default_lattice_certificates() {
    std::vector<IntegralCertificate> out;
    const double alphas[] = {0.0, 0.25, 0.5, 0.75};
    const double betas[] = {1.0, 2.0, 8.0, 64.0};
    for (int e = 1; e <= 9; ++e)
        for (double alpha : alphas)
            for (double beta : betas) {
                IntegralQuery q;
                q.eps = 0.1 * e;
                q.alpha = alpha;
                q.beta = beta;
                out.push_back(verify_singular_integral(q));
            }
    return out;
}

BetaCertificate verify_beta_bound(double eps, double alpha) {
    if (!(eps > 0.0 && eps < 1.0) || !(alpha >= 0.0 && alpha < 1.0))
        throw std::invalid_argument("verify_beta_bound: eps in (0,1), alpha in [0,1)");
    BetaCertificate cert;
    cert.eps = eps;
    cert.alpha = alpha;
    double b = 1.0 - alpha;
    cert.value = std::exp(std::lgamma(eps) + std::lgamma(b) - std::lgamma(eps + b));
    cert.bound = 1.0 / (eps * b);
    cert.pass = cert.value <= cert.bound * (1.0 + 1e-12);
    return cert;
}

void write_certificates_jsonl(const std::string& path,
                              std::span<const IntegralCertificate> certs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_certificates_jsonl: cannot open " + path);
    for (const auto& c : certs) {
        nlohmann::json row{{"eps", c.eps},       {"alpha", c.alpha},   {"beta", c.beta},
                           {"sup_value", c.sup_value}, {"bound", c.bound}, {"margin", c.margin},
                           {"pass", c.pass}};
        out << row.dump() << "\n";
    }
}

}  // namespace she
