#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "she/config.hpp"
#include "she/digest.hpp"
#include "she/experiments.hpp"
#include "she/inequalities.hpp"
#include "she/kernel.hpp"
#include "she/observables.hpp"
#include "she/solver.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitBoundFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericalError = 3;

int cmd_simulate(const std::string& config_path, const std::vector<std::string>& overrides) {
    she::RunConfig cfg = she::load_config(config_path, overrides);
    const auto& plan = cfg.plan;
    const std::string digest = cfg.digest();
    fs::create_directories(plan.output_dir);

    she::SolverConfig solver = plan.base;
    solver.horizon = plan.horizon;
    she::GridFunction u0 = plan.make_u0();
    std::uint64_t master = plan.probe_seed("trajectories");

    std::vector<she::TrajectoryRecord> recs(plan.n_trajectories);
    she::parallel_for(plan.n_trajectories, plan.workers, [&](std::size_t i) {
        she::SolverConfig c = solver;
        c.seed = {master, i};
        recs[i] = she::run_trajectory(u0, c);
    });

    std::ofstream manifest(fs::path(plan.output_dir) / "manifest.jsonl", std::ios::binary);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        recs[i].config_digest = digest;
        char name[32];
        std::snprintf(name, sizeof(name), "traj_%05zu.csv", i);
        she::write_record_csv(recs[i], (fs::path(plan.output_dir) / name).string(),
                              she::kToolVersion);
        nlohmann::json row{{"file", name},
                           {"master_seed", master},
                           {"stream_index", i},
                           {"final_mass", recs[i].mass.back()},
                           {"negativity_count", recs[i].negativity_count},
                           {"martingale_residual", recs[i].martingale_residual},
                           {"config_digest", digest},
                           {"tool_version", she::kToolVersion}};
        manifest << row.dump() << "\n";
    }
    if (cfg.log_level != "quiet")
        std::printf("wrote %zu trajectories to %s (digest %s)\n", recs.size(),
                    plan.output_dir.c_str(), digest.c_str());
    return 0;
}

int cmd_verify_kernel(const std::string& fixture_path, const std::string& out_dir, bool quiet,
                      bool refit) {
    if (refit) {
        she::KernelConstants fitted = she::fit_kernel_constants();
        fs::create_directories(fs::path(fixture_path).parent_path());
        she::save_kernel_constants(fitted, fixture_path);
        if (!quiet) std::printf("wrote fitted constants to %s\n", fixture_path.c_str());
    }
    she::KernelConstants fx = she::load_kernel_constants(fixture_path);
    auto checks = she::verify_kernel_suite(fx);
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "kernel_certificates.jsonl", std::ios::binary);
    bool all_ok = true;
    for (const auto& c : checks) {
        out << nlohmann::json{{"check", c.name}, {"pass", c.pass}, {"worst", c.worst}}.dump()
            << "\n";
        if (!quiet) std::printf("%-24s %s (worst %.3e)\n", c.name.c_str(),
                                c.pass ? "PASS" : "FAIL", c.worst);
        all_ok = all_ok && c.pass;
    }
    return all_ok ? 0 : kExitBoundFailure;
}

int cmd_verify_inequalities(double eps, double alpha, double beta, bool single,
                            const std::string& out_dir, bool quiet) {
    std::vector<she::IntegralCertificate> certs;
    if (single) {
        she::IntegralQuery q;
        q.eps = eps;
        q.alpha = alpha;
        q.beta = beta;
        certs.push_back(she::verify_singular_integral(q));
    } else {
        certs = she::default_lattice_certificates();
    }
    fs::create_directories(out_dir);
    she::write_certificates_jsonl((fs::path(out_dir) / "integral_certificates.jsonl").string(),
                                  certs);
    bool all_ok = true;
    for (const auto& c : certs) {
        if (!c.pass) {
            std::fprintf(stderr, "FAIL eps=%g alpha=%g beta=%g sup=%.9g bound=%.9g\n", c.eps,
                         c.alpha, c.beta, c.sup_value, c.bound);
            all_ok = false;
        }
    }
    // beta-function companion bound on the same (eps, alpha) marginals
    for (int e = 1; e <= 9 && all_ok; ++e)
        for (double a : {0.0, 0.25, 0.5, 0.75}) {
            auto b = she::verify_beta_bound(0.1 * e, a);
            if (!b.pass) {
                std::fprintf(stderr, "FAIL beta-bound eps=%g alpha=%g\n", b.eps, b.alpha);
                all_ok = false;
            }
        }
    if (!quiet)
        std::printf("%zu integral certificates, %s\n", certs.size(),
                    all_ok ? "all PASS" : "failures present");
    return all_ok ? 0 : kExitBoundFailure;
}

int cmd_probe(const std::string& config_path, const std::vector<std::string>& overrides,
              int workers_flag) {
    she::RunConfig cfg = she::load_config(config_path, overrides);
    if (workers_flag > 0) cfg.plan.workers = workers_flag;
    auto outcome = she::run_plan(cfg.plan);
    if (cfg.log_level != "quiet") {
        std::printf("%-16s %12s %10s %12s %s\n", "probe", "estimate", "se", "bound", "verdict");
        for (const auto& r : outcome.results)
            std::printf("%-16s %12.5g %10.3g %12.5g %s\n", r.probe.c_str(), r.estimate, r.se,
                        r.bound, r.verdict.c_str());
        for (const auto& e : outcome.errors) std::fprintf(stderr, "probe error: %s\n", e.c_str());
    }
    return outcome.any_fail ? kExitBoundFailure : 0;
}

int cmd_kernel_eval(double t, double x, double y, double tol) {
    she::KernelParams kp = she::KernelParams::auto_for(t, tol);
    std::printf("%.17g\n", she::kernel_eval(t, x, y, kp));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic heat equation simulator and bound verifier"};
    app.require_subcommand(1);

    std::string config_path, fixture_path = "data/kernel_constants.json", out_dir = "out";
    std::vector<std::string> overrides;
    int workers_flag = 0;
    bool quiet = false;
    app.add_flag("--quiet", quiet, "suppress the human-readable summary");

    auto* sim = app.add_subcommand("simulate", "run trajectories and write CSVs + manifest");
    sim->add_option("--config", config_path, "JSON run configuration")->required();
    sim->add_option("--set", overrides, "override a config key, e.g. --set lambda=2");

    auto* ver = app.add_subcommand("verify", "run deterministic bound suites");
    std::string target;
    ver->add_option("target", target, "kernel | inequalities")->required();
    ver->add_option("--fixture", fixture_path, "fitted kernel constants file");
    ver->add_option("--out", out_dir, "certificate output directory");
    bool refit = false;
    ver->add_flag("--refit", refit, "refit and overwrite the kernel constants fixture");
    double eps = 0.0, alpha = 0.0, beta = 0.0;
    auto* eps_opt = ver->add_option("--eps", eps, "single-tuple eps in (0,1)");
    ver->add_option("--alpha", alpha, "single-tuple alpha in [0,1)");
    ver->add_option("--beta", beta, "single-tuple beta >= 1");

    auto* prb = app.add_subcommand("probe", "run the Monte Carlo probe plan");
    prb->add_option("--config", config_path, "JSON plan configuration")->required();
    prb->add_option("--set", overrides, "override a config key");
    prb->add_option("--workers", workers_flag, "worker threads (overrides config)");

    auto* kev = app.add_subcommand("kernel-eval", "print one periodic heat kernel value");
    double t = 1.0, x = 0.0, y = 0.0, tol = 1e-12;
    kev->add_option("--t", t, "time > 0")->required();
    kev->add_option("--x", x, "first spatial point");
    kev->add_option("--y", y, "second spatial point");
    kev->add_option("--tol", tol, "certified truncation tolerance");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(config_path, overrides);
        if (ver->parsed()) {
            if (target == "kernel") return cmd_verify_kernel(fixture_path, out_dir, quiet, refit);
            if (target == "inequalities")
                return cmd_verify_inequalities(eps, alpha, beta, eps_opt->count() > 0, out_dir,
                                               quiet);
            std::fprintf(stderr, "unknown verify target '%s' (kernel | inequalities)\n",
                         target.c_str());
            return kExitConfigError;
        }
        if (prb->parsed()) return cmd_probe(config_path, overrides, workers_flag);
        if (kev->parsed()) return cmd_kernel_eval(t, x, y, tol);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const she::StepFailure& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumericalError;
    } catch (const she::TruncationError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumericalError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumericalError;
    }
    return 0;
}
