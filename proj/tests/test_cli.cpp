#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    std::string cmd = std::string(SHE_CLI_PATH) + " " + args + " > cli_out.txt 2> cli_err.txt";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    out << body;
}

}  // namespace

TEST_CASE("help and bad invocations") {
    CHECK(run("--help") == 0);
    CHECK(run("") != 0);
}

TEST_CASE("kernel-eval prints a plausible value") {
    CHECK(run("kernel-eval --t 1.0 --x 0 --y 0") == 0);
    double v = std::stod(slurp("cli_out.txt"));
    CHECK(v > 0.5);   // long-time limit is the uniform density 1/2
    CHECK(v < 0.65);
}

TEST_CASE("missing config file exits 2 with the path in the message") {
    CHECK(run("simulate --config definitely_missing.json") == 2);
    CHECK(slurp("cli_err.txt").find("definitely_missing.json") != std::string::npos);
}

TEST_CASE("explicit stability violation via --set exits 2") {
    write_file("cli_cfg.json", R"({"n_space": 128, "n_trajectories": 2, "horizon": 0.01})");
    CHECK(run("simulate --config cli_cfg.json --set dt=0.1") == 2);
    CHECK(slurp("cli_err.txt").find("stability") != std::string::npos);
}

TEST_CASE("simulate writes trajectory csvs and a manifest") {
    write_file("cli_cfg.json",
               R"({"n_space": 16, "n_trajectories": 3, "horizon": 0.05, "output_dir": "cli_sim_out"})");
    CHECK(run("simulate --config cli_cfg.json") == 0);
    CHECK(fs::exists("cli_sim_out/traj_00000.csv"));
    CHECK(fs::exists("cli_sim_out/traj_00002.csv"));
    CHECK(fs::exists("cli_sim_out/manifest.jsonl"));

    // identical rerun reproduces identical bytes
    std::string before = slurp("cli_sim_out/traj_00001.csv");
    CHECK(run("simulate --config cli_cfg.json") == 0);
    CHECK(slurp("cli_sim_out/traj_00001.csv") == before);
    fs::remove_all("cli_sim_out");
    fs::remove("cli_cfg.json");
}

TEST_CASE("verify inequalities single tuple") {
    CHECK(run("verify inequalities --eps 0.5 --alpha 0 --beta 1 --out cli_ver_out") == 0);
    std::string certs = slurp("cli_ver_out/integral_certificates.jsonl");
    CHECK(certs.find("\"pass\":true") != std::string::npos);
    fs::remove_all("cli_ver_out");
}

TEST_CASE("tampered kernel fixture exits 1") {
    write_file("cli_bad_fixture.json", R"({
        "c_space": 0.0, "c_holder_025": 0.0, "c_holder_050": 0.0, "c_holder_075": 0.0,
        "grid": {"t_min": 1e-3, "t_max": 1e2, "n_t": 8, "n_pairs": 25}})");
    CHECK(run("verify kernel --fixture cli_bad_fixture.json --out cli_ver_bad") == 1);
    fs::remove_all("cli_ver_bad");
    fs::remove("cli_bad_fixture.json");
}

TEST_CASE("probe with an unknown probe name exits 2 and lists known probes") {
    write_file("cli_plan.json", R"({"probes": ["nonexistent"]})");
    CHECK(run("probe --config cli_plan.json") == 2);
    CHECK(slurp("cli_err.txt").find("known probes") != std::string::npos);
    fs::remove("cli_plan.json");
}

TEST_CASE("probe runs a small plan and reports verdicts") {
    write_file("cli_plan.json", R"({
        "probes": ["bernoulli_ld"], "ld_trials": 500, "output_dir": "cli_probe_out"})");
    CHECK(run("probe --config cli_plan.json") == 0);
    CHECK(slurp("cli_out.txt").find("bernoulli_ld") != std::string::npos);
    CHECK(fs::exists("cli_probe_out/results.jsonl"));
    fs::remove_all("cli_probe_out");
    fs::remove("cli_plan.json");
}
