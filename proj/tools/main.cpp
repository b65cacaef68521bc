#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "branchlab/error.hpp"
#include "branchlab/harness.hpp"
#include "branchlab/limit_sde.hpp"
#include "branchlab/model_io.hpp"
#include "branchlab/moments.hpp"
#include "branchlab/simulator.hpp"
#include "branchlab/threading.hpp"
#include "branchlab/version.hpp"

namespace {

using namespace branchlab;

constexpr int kExitOk = 0;
constexpr int kExitFamilyFail = 1;
constexpr int kExitUsage = 2;

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io error: cannot write " + path);
    out << content;
}

std::string joined_command(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

struct CommonArgs {
    std::string model_file;
    std::uint64_t seed = 1;
    unsigned threads = 0;  // 0: BRANCHLAB_THREADS env, else 1
    std::string out;
};

int cmd_analyze(const CommonArgs& args, const std::string& command) {
    const BranchingModel m = load_model(args.model_file);
    const ValidationReport v = validate_critical_indecomposable(m);
    if (!m.irreducible)
        std::cerr << "warning: decomposable mean matrix; no cyclic structure emitted\n";
    const MetadataHeader meta{command, args.seed, model_hash(m)};
    const std::string doc = with_meta(analysis_to_json(m, v), meta);
    if (args.out.empty()) {
        std::cout << doc;
    } else {
        write_file(args.out, doc);
        std::cout << "wrote " << args.out << "\n";
    }
    return kExitOk;
}

int cmd_simulate(const CommonArgs& args, std::size_t steps, std::size_t reps,
                 const std::string& sampling, const std::string& command) {
    const BranchingModel m = load_model(args.model_file);
    const SamplingMode mode =
        sampling == "per-individual" ? SamplingMode::per_individual : SamplingMode::superposition;
    const unsigned threads = resolve_threads(args.threads);
    if (reps == 0) throw Error("invalid argument: --reps must be positive");

    std::vector<Trajectory> trajectories(reps);
    parallel_chunks(reps, threads, [&](std::size_t lo, std::size_t hi, std::size_t) {
        for (std::size_t rep = lo; rep < hi; ++rep)
            trajectories[rep] = simulate_trajectory(m, steps, args.seed, rep, mode);
    });

    const MetadataHeader meta{command, args.seed, model_hash(m)};
    std::filesystem::create_directories(args.out.empty() ? "." : args.out);
    const std::string dir = args.out.empty() ? "." : args.out;

    {
        std::ostringstream csv;
        csv << metadata_header(meta);
        csv << "rep,k";
        for (std::size_t c = 1; c <= m.p; ++c) csv << ",x" << c;
        csv << "\n";
        for (std::size_t rep = 0; rep < reps; ++rep)
            for (std::size_t k = 0; k <= steps; ++k) {
                csv << rep << "," << k;
                for (std::size_t c = 0; c < m.p; ++c)
                    csv << "," << trajectories[rep].states[k][c];
                csv << "\n";
            }
        write_file(dir + "/trajectories.csv", csv.str());
    }
    {
        std::ostringstream csv;
        csv << metadata_header(meta);
        csv << "k";
        for (std::size_t c = 1; c <= m.p; ++c) csv << ",mean_emp_" << c << ",mean_exact_" << c;
        for (std::size_t i = 1; i <= m.p; ++i)
            for (std::size_t j = 1; j <= m.p; ++j)
                csv << ",cov_emp_" << i << "_" << j << ",cov_exact_" << i << "_" << j;
        csv << "\n";
        const double R = static_cast<double>(reps);
        for (std::size_t k = 0; k <= steps; ++k) {
            Vec mu(m.p, 0.0);
            for (std::size_t rep = 0; rep < reps; ++rep)
                for (std::size_t c = 0; c < m.p; ++c)
                    mu[c] += static_cast<double>(trajectories[rep].states[k][c]) / R;
            Mat cov(m.p, m.p);
            if (reps > 1) {
                for (std::size_t rep = 0; rep < reps; ++rep)
                    for (std::size_t i = 0; i < m.p; ++i)
                        for (std::size_t j = 0; j < m.p; ++j)
                            cov(i, j) +=
                                (static_cast<double>(trajectories[rep].states[k][i]) - mu[i]) *
                                (static_cast<double>(trajectories[rep].states[k][j]) - mu[j]) /
                                (R - 1.0);
            }
            const Vec mu_exact = mean_vector(m, k);
            const Mat cov_exact = variance_matrix(m, k);
            csv << k;
            for (std::size_t c = 0; c < m.p; ++c)
                csv << "," << format_double(mu[c]) << "," << format_double(mu_exact[c]);
            for (std::size_t i = 0; i < m.p; ++i)
                for (std::size_t j = 0; j < m.p; ++j)
                    csv << "," << format_double(cov(i, j)) << ","
                        << format_double(cov_exact(i, j));
            csv << "\n";
        }
        write_file(dir + "/moments.csv", csv.str());
    }
    std::cout << "wrote " << dir << "/trajectories.csv and " << dir << "/moments.csv\n";
    return kExitOk;
}

int cmd_limit(const CommonArgs& args, double T, double dt, std::size_t reps,
              const std::string& command) {
    const BranchingModel m = load_model(args.model_file);
    if (!m.irreducible || !m.critical) throw Error("not critical");
    const SdeCoefficients c = sde_coefficients(m);
    const MetadataHeader meta{command, args.seed, model_hash(m)};
    std::filesystem::create_directories(args.out.empty() ? "." : args.out);
    const std::string dir = args.out.empty() ? "." : args.out;

    write_file(dir + "/coefficients.json", with_meta(coefficients_to_json(c), meta));

    const std::size_t r = c.r;
    const std::size_t path_reps = std::min<std::size_t>(reps, 100);
    std::ostringstream paths;
    paths << metadata_header(meta);
    paths << "rep,t";
    for (std::size_t i = 1; i <= r; ++i) paths << ",Z" << i;
    for (std::size_t cdx = 1; cdx <= m.p; ++cdx) paths << ",Y" << cdx;
    for (std::size_t e = 1; e <= r * m.p; ++e) paths << ",X" << e;
    paths << "\n";
    for (std::size_t rep = 0; rep < path_reps; ++rep) {
        std::vector<ScalarPath> zs;
        for (std::size_t i = 0; i < r; ++i) {
            // Per-class law on the Perron-ray parametrization: drift r*a_i,
            // diffusion coefficient r^2*b_i.
            zs.push_back(simulate_Z(r * c.a[i], static_cast<double>(r) * r * c.b[i], T, dt,
                                    args.seed, rep * r + i));
        }
        const LimitPath lp = assemble_limit(zs, m);
        for (std::size_t g = 0; g < lp.grid.size(); ++g) {
            paths << rep << "," << format_double(lp.grid[g]);
            for (std::size_t i = 0; i < r; ++i) paths << "," << format_double(lp.Z[i][g]);
            for (double y : lp.Y[g]) paths << "," << format_double(y);
            for (double x : lp.X[g]) paths << "," << format_double(x);
            paths << "\n";
        }
    }
    write_file(dir + "/paths.csv", paths.str());

    // Endpoint samples of the class functional, for marginal comparisons.
    std::ostringstream ends;
    ends << metadata_header(meta);
    ends << "rep,class,z_T,exact_mean,exact_variance\n";
    const std::uint64_t end_stream_base = std::uint64_t{1} << 32;
    for (std::size_t i = 0; i < r; ++i) {
        const MarginalLaw law = class_functional_marginal(c, i + 1, T);
        for (std::size_t rep = 0; rep < reps; ++rep) {
            Rng rng(args.seed, end_stream_base + rep * r + i);
            const double z =
                simulate_Z_endpoint(c.a[i], static_cast<double>(r) * c.b[i], T, dt, rng);
            ends << rep << "," << (i + 1) << "," << format_double(z) << ","
                 << format_double(law.mean()) << "," << format_double(law.variance()) << "\n";
        }
    }
    write_file(dir + "/endpoints.csv", ends.str());
    std::cout << "wrote " << dir << "/coefficients.json, paths.csv, endpoints.csv\n";
    return kExitOk;
}

int cmd_converge(const CommonArgs& args, const std::vector<std::size_t>& n_list, double T,
                 std::size_t reps, std::size_t cov_reps, const std::string& command) {
    const BranchingModel m = load_model(args.model_file);
    if (!m.irreducible || !m.critical) throw Error("not critical");
    ConvergenceOptions opts;
    if (!n_list.empty()) opts.n_list = n_list;
    opts.T = T;
    opts.replications = reps;
    opts.cov_replications = cov_reps;
    opts.seed = args.seed;
    opts.threads = args.threads;
    opts.keep_samples = true;
    const ConvergenceReport report = run_convergence(m, opts);

    const MetadataHeader meta{command, args.seed, model_hash(m)};
    std::filesystem::create_directories(args.out.empty() ? "." : args.out);
    const std::string dir = args.out.empty() ? "." : args.out;
    write_file(dir + "/report.json", with_meta(report_to_json(report), meta));

    std::ostringstream csv;
    csv << metadata_header(meta);
    csv << "n,class,rep,z\n";
    for (const SampleDump& s : report.samples)
        for (std::size_t rep = 0; rep < s.z.size(); ++rep)
            csv << s.n << "," << s.class_index << "," << rep << "," << format_double(s.z[rep])
                << "\n";
    write_file(dir + "/samples.csv", csv.str());

    for (const auto& note : report.notes) std::cout << "note: " << note << "\n";
    if (report.independence.skipped)
        std::cout << "independence test skipped: " << report.independence.notice << "\n";
    std::cout << "families: marginal=" << (report.marginal.pass ? "pass" : "FAIL")
              << " ray=" << (report.ray.skipped ? "skipped" : report.ray.pass ? "pass" : "FAIL")
              << " independence="
              << (report.independence.skipped ? "skipped"
                                              : report.independence.pass ? "pass" : "FAIL")
              << " lindeberg_cov=" << (report.lindeberg_cov.pass ? "pass" : "FAIL")
              << " algebra=" << (report.algebra.pass ? "pass" : "FAIL") << "\n";
    std::cout << "wrote " << dir << "/report.json and samples.csv\n";
    std::cout << (report.pass ? "PASS" : "FAIL") << "\n";
    return report.pass ? kExitOk : kExitFamilyFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"branchlab: critical multi-type branching processes with immigration"};
    app.set_version_flag("--version", std::string("branchlab ") + kVersion);
    app.require_subcommand(1);

    CommonArgs args;

    auto* analyze = app.add_subcommand("analyze", "structural analysis of a model file");
    analyze->add_option("model", args.model_file, "model file (.json or .toml)")->required();
    analyze->add_option("--out", args.out, "output file (default: stdout)");

    auto* simulate = app.add_subcommand("simulate", "simulate trajectories and moments");
    std::size_t steps = 10, reps = 100;
    std::string sampling = "auto";
    simulate->add_option("model", args.model_file)->required();
    simulate->add_option("--steps", steps, "steps per trajectory")->required();
    simulate->add_option("--reps", reps, "number of trajectories");
    simulate->add_option("--seed", args.seed, "master seed");
    simulate->add_option("--out", args.out, "output directory");
    simulate->add_option("--sampling", sampling, "auto|per-individual")
        ->check(CLI::IsMember({"auto", "per-individual"}));
    simulate->add_option("--threads", args.threads, "worker threads (0 = env/1)");

    auto* limit = app.add_subcommand("limit", "limit-diffusion coefficients and sample paths");
    double T = 1.0, dt = 1e-3;
    std::size_t limit_reps = 1000;
    limit->add_option("model", args.model_file)->required();
    limit->add_option("--T", T, "time horizon");
    limit->add_option("--dt", dt, "integrator step");
    limit->add_option("--reps", limit_reps, "endpoint samples (paths capped at 100)");
    limit->add_option("--seed", args.seed, "master seed");
    limit->add_option("--out", args.out, "output directory");
    limit->add_option("--threads", args.threads, "worker threads (0 = env/1)");

    auto* converge = app.add_subcommand("converge", "statistical verification harness");
    std::vector<std::size_t> n_list;
    double cT = 1.0;
    std::size_t creps = 10000, cov_reps = 400;
    converge->add_option("model", args.model_file)->required();
    converge->add_option("--n-list", n_list, "scaling indices (default 50,100,200)")
        ->delimiter(',');
    converge->add_option("--T", cT, "time horizon");
    converge->add_option("--reps", creps, "replicates for marginal families");
    converge->add_option("--cov-reps", cov_reps, "replicates for the Lindeberg/covariance batch");
    converge->add_option("--seed", args.seed, "master seed");
    converge->add_option("--out", args.out, "output directory");
    converge->add_option("--threads", args.threads, "worker threads (0 = env/1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help/--version
        app.exit(e);
        return kExitUsage;
    }

    const std::string command = joined_command(argc, argv);
    try {
        if (analyze->parsed()) return cmd_analyze(args, command);
        if (simulate->parsed()) return cmd_simulate(args, steps, reps, sampling, command);
        if (limit->parsed()) return cmd_limit(args, T, dt, limit_reps, command);
        if (converge->parsed()) return cmd_converge(args, n_list, cT, creps, cov_reps, command);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
