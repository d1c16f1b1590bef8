// Command-line front end: `gradlab run` executes the configured methods and
// writes trace CSVs plus a summary; `gradlab compare` prints residuals of two
// methods side by side at the configured checkpoints.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gradlab/experiment.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw gradlab::IoError("cannot open config file: " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

gradlab::Method parse_method_or_die(const std::string& token) {
    const auto m = gradlab::parse_method_token(token);
    if (!m)
        throw gradlab::ParseError("unknown method '" + token + "' (expected sd, bb, lmsd, lmsdc or lmsdr)",
                                  "method");
    return *m;
}

struct RunOptions {
    std::string config_path;
    std::vector<std::string> methods;
    std::uint64_t seed = 0;
    std::string out_dir;
    int repeat = 1;
};

struct CompareOptions {
    std::string config_path;
    std::string method_a;
    std::string method_b;
    std::string checkpoints;
};

gradlab::ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) return gradlab::default_config();
    return gradlab::parse_config(read_file(path));
}

int do_run(const RunOptions& opt, const CLI::App& cmd) {
    gradlab::ExperimentConfig cfg = load_config(opt.config_path);
    if (!opt.methods.empty()) {
        cfg.methods.clear();
        for (const auto& tok : opt.methods) cfg.methods.push_back(parse_method_or_die(tok));
    }
    if (cmd.count("--seed") > 0) cfg.problem.seed = opt.seed;
    if (cmd.count("--out") > 0) cfg.out_dir = opt.out_dir;
    if (cmd.count("--repeat") > 0) {
        if (opt.repeat < 1) throw gradlab::ParseError("--repeat must be at least 1", "repeat");
        cfg.repeat = opt.repeat;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const gradlab::ExperimentResult result = gradlab::run_experiment(cfg);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    for (const auto& r : result.runs) {
        std::printf("%-6s run %d  seed %llu  %s  iterations %d  factorizations %d  "
                    "f-increase %d  g-increase %d  -> %s\n",
                    gradlab::method_token(r.method), r.run_index,
                    static_cast<unsigned long long>(r.seed),
                    r.trace.converged ? "converged    " : "not converged",
                    r.trace.iterations, r.trace.factorization_count,
                    r.trace.count_events(gradlab::events::kFIncrease),
                    r.trace.count_events(gradlab::events::kGIncrease),
                    r.csv_path.string().c_str());
    }
    std::printf("summary: %s\n", result.summary_path.string().c_str());
    std::printf("wall time: %.3f s (informational)\n", elapsed);
    return 0;
}

int do_compare(const CompareOptions& opt, const CLI::App& cmd) {
    gradlab::ExperimentConfig cfg = load_config(opt.config_path);
    const gradlab::Method a = parse_method_or_die(opt.method_a);
    const gradlab::Method b = parse_method_or_die(opt.method_b);
    if (cmd.count("--checkpoints") > 0) {
        cfg.checkpoints.clear();
        std::size_t pos = 0;
        const std::string& s = opt.checkpoints;
        while (pos <= s.size()) {
            std::size_t comma = s.find(',', pos);
            if (comma == std::string::npos) comma = s.size();
            cfg.checkpoints.push_back(static_cast<int>(
                gradlab::detail::parse_int_field(s.substr(pos, comma - pos), "checkpoints")));
            pos = comma + 1;
        }
    }

    const gradlab::ComparisonReport report = gradlab::compare_methods(cfg, a, b);
    std::printf("%-12s %-22s %-22s %-22s\n", "checkpoint", gradlab::method_token(a),
                gradlab::method_token(b), "|difference|");
    for (const auto& row : report.rows) {
        std::printf("%-12d %.15e%s %.15e%s %.15e\n", row.checkpoint, row.residual_a,
                    row.carried_a ? "*" : " ", row.residual_b, row.carried_b ? "*" : " ",
                    row.abs_diff);
    }
    bool any_carried = false;
    for (const auto& row : report.rows) any_carried = any_carried || row.carried_a || row.carried_b;
    if (any_carried)
        std::printf("(* final residual carried forward past convergence)\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gradlab: gradient-method laboratory for strongly convex quadratics"};
    app.require_subcommand(1);

    RunOptions run_opt;
    CLI::App* run_cmd = app.add_subcommand("run", "Run methods, emit trace CSVs and a summary");
    run_cmd->add_option("--config", run_opt.config_path, "Configuration file (key = value, # comments)");
    run_cmd->add_option("--method", run_opt.methods,
                        "Method to run: sd, bb, lmsd, lmsdc, lmsdr (repeatable; overrides config)");
    run_cmd->add_option("--seed", run_opt.seed, "Base seed for the right-hand side");
    run_cmd->add_option("--out", run_opt.out_dir, "Output directory");
    run_cmd->add_option("--repeat", run_opt.repeat,
                        "Number of runs per method; run i uses seed + i");

    CompareOptions cmp_opt;
    CLI::App* cmp_cmd = app.add_subcommand("compare", "Compare residuals of two methods at checkpoints");
    cmp_cmd->add_option("--config", cmp_opt.config_path, "Configuration file");
    cmp_cmd->add_option("--a", cmp_opt.method_a, "First method")->required();
    cmp_cmd->add_option("--b", cmp_opt.method_b, "Second method")->required();
    cmp_cmd->add_option("--checkpoints", cmp_opt.checkpoints, "Comma-separated iteration indices");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return do_run(run_opt, *run_cmd);
        if (cmp_cmd->parsed()) return do_compare(cmp_opt, *cmp_cmd);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
