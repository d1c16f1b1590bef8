#ifndef GRADLAB_EXPERIMENT_HPP
#define GRADLAB_EXPERIMENT_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gradlab/errors.hpp"
#include "gradlab/problem.hpp"
#include "gradlab/sweeps.hpp"
#include "gradlab/trace_io.hpp"

namespace gradlab {

struct ProblemSpec {
    int dim = 20;
    double lambda1 = 1.0;
    double ratio = std::sqrt(2.0);
    double b_low = 10.0;
    double b_high = 20.0;
    std::uint64_t seed = 1;

    bool operator==(const ProblemSpec&) const = default;
};

enum class StartKind { Zero, Minimizer, Explicit };

/// A full experiment: one seeded benchmark problem, a set of methods with
/// per-method sweep configuration, and reporting options.
struct ExperimentConfig {
    ProblemSpec problem;
    std::vector<Method> methods{Method::Sd, Method::Bb, Method::Lmsd, Method::Lmsdc, Method::Lmsdr};
    std::map<Method, SweepConfig> sweep;
    StartKind x0_kind = StartKind::Zero;
    Vector x0_values;
    std::string out_dir = "out";
    std::vector<int> checkpoints{100, 150, 200};
    int repeat = 1;

    const SweepConfig& sweep_for(Method m) const { return sweep.at(m); }

    bool operator==(const ExperimentConfig&) const = default;
};

inline ExperimentConfig default_config() {
    ExperimentConfig cfg;
    for (Method m : {Method::Sd, Method::Bb, Method::Lmsd, Method::Lmsdc, Method::Lmsdr}) {
        SweepConfig sc;
        sc.method = m;
        cfg.sweep.emplace(m, sc);
    }
    return cfg;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline int parse_config_int(std::string_view v, const std::string& key) {
    try {
        return static_cast<int>(parse_int_field(v, key.c_str()));
    } catch (const ParseError&) {
        throw ParseError("config: invalid integer for key '" + key + "'", key);
    }
}

inline double parse_config_double(std::string_view v, const std::string& key) {
    try {
        return parse_double_field(v, key.c_str());
    } catch (const ParseError&) {
        throw ParseError("config: invalid number for key '" + key + "'", key);
    }
}

inline bool parse_config_bool(std::string_view v, const std::string& key) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ParseError("config: expected true or false for key '" + key + "'", key);
}

inline std::uint64_t parse_config_seed(std::string_view v, const std::string& key) {
    const std::string tmp(v);
    char* end = nullptr;
    errno = 0;
    const unsigned long long s = std::strtoull(tmp.c_str(), &end, 10);
    if (end != tmp.c_str() + tmp.size() || tmp.empty() || errno == ERANGE)
        throw ParseError("config: invalid seed '" + tmp + "'", key);
    return s;
}

/// Assign one sweep field by name, validating its range. `key` is the full
/// document key used in error messages.
inline void apply_sweep_field(SweepConfig& sc, std::string_view field, std::string_view v,
                              const std::string& key) {
    if (field == "m") {
        sc.m = parse_config_int(v, key);
        if (sc.m < 1) throw ParseError("config: m must be at least 1", key);
    } else if (field == "d") {
        sc.d = parse_config_int(v, key);
        if (sc.d < 0) throw ParseError("config: d must be nonnegative", key);
    } else if (field == "k") {
        sc.k = parse_config_int(v, key);
        if (sc.k < 1) throw ParseError("config: k must be at least 1", key);
    } else if (field == "tol") {
        sc.tol = parse_config_double(v, key);
        if (!(sc.tol > 0.0 && sc.tol < 1.0)) throw ParseError("config: tol must lie in (0, 1)", key);
    } else if (field == "max_iter") {
        sc.max_iter = parse_config_int(v, key);
        if (sc.max_iter < 1) throw ParseError("config: max_iter must be at least 1", key);
    } else if (field == "rank_tol") {
        sc.rank_tol = parse_config_double(v, key);
        if (!(sc.rank_tol > 0.0)) throw ParseError("config: rank_tol must be positive", key);
    } else if (field == "detector") {
        sc.detector_enabled = parse_config_bool(v, key);
    } else {
        throw ParseError("config: unknown key '" + key + "'", key);
    }
}

inline bool is_sweep_field(std::string_view field) {
    return field == "m" || field == "d" || field == "k" || field == "tol" ||
           field == "max_iter" || field == "rank_tol" || field == "detector";
}

}  // namespace detail

/// Parse a flat key-value configuration document ('#' starts a comment).
/// Unknown keys are rejected; missing keys keep the benchmark defaults
/// (dim 20, lambda1 1, ratio sqrt(2), b in [10, 20], tol 1e-6, m 4, d 4,
/// k 2, zero start). Global sweep keys apply to every method; "<method>.<key>"
/// overrides one method. Later assignments win.
inline ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg = default_config();

    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;

        const std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) {
            if (pos > text.size()) break;
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ParseError("config: malformed line '" + std::string(line) + "'",
                             std::string(line));
        const std::string key{detail::trim(line.substr(0, eq))};
        const std::string_view value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("config: empty key", key);

        if (key == "dim") {
            cfg.problem.dim = detail::parse_config_int(value, key);
            if (cfg.problem.dim < 1) throw ParseError("config: dim must be at least 1", key);
        } else if (key == "lambda1") {
            cfg.problem.lambda1 = detail::parse_config_double(value, key);
            if (!(cfg.problem.lambda1 > 0.0))
                throw ParseError("config: lambda1 must be positive", key);
        } else if (key == "ratio") {
            cfg.problem.ratio = detail::parse_config_double(value, key);
            if (!(cfg.problem.ratio > 0.0)) throw ParseError("config: ratio must be positive", key);
        } else if (key == "b_low") {
            cfg.problem.b_low = detail::parse_config_double(value, key);
        } else if (key == "b_high") {
            cfg.problem.b_high = detail::parse_config_double(value, key);
        } else if (key == "seed") {
            cfg.problem.seed = detail::parse_config_seed(value, key);
        } else if (key == "method") {
            cfg.methods.clear();
            for (std::string_view tok : detail::split(value, ',')) {
                tok = detail::trim(tok);
                const auto m = parse_method_token(tok);
                if (!m) throw ParseError("config: unknown method '" + std::string(tok) + "'", key);
                cfg.methods.push_back(*m);
            }
            if (cfg.methods.empty()) throw ParseError("config: empty method list", key);
        } else if (key == "x0") {
            if (value == "zero") {
                cfg.x0_kind = StartKind::Zero;
                cfg.x0_values.clear();
            } else if (value == "minimizer") {
                cfg.x0_kind = StartKind::Minimizer;
                cfg.x0_values.clear();
            } else {
                cfg.x0_kind = StartKind::Explicit;
                cfg.x0_values.clear();
                for (std::string_view tok : detail::split(value, ','))
                    cfg.x0_values.push_back(detail::parse_config_double(detail::trim(tok), key));
            }
        } else if (key == "out") {
            cfg.out_dir = std::string(value);
            if (cfg.out_dir.empty()) throw ParseError("config: empty output path", key);
        } else if (key == "checkpoints") {
            cfg.checkpoints.clear();
            for (std::string_view tok : detail::split(value, ','))
                cfg.checkpoints.push_back(detail::parse_config_int(detail::trim(tok), key));
            for (std::size_t i = 0; i + 1 < cfg.checkpoints.size(); ++i)
                if (cfg.checkpoints[i] >= cfg.checkpoints[i + 1])
                    throw ParseError("config: checkpoints must be strictly increasing", key);
            if (!cfg.checkpoints.empty() && cfg.checkpoints.front() < 0)
                throw ParseError("config: checkpoints must be nonnegative", key);
        } else if (key == "repeat") {
            cfg.repeat = detail::parse_config_int(value, key);
            if (cfg.repeat < 1) throw ParseError("config: repeat must be at least 1", key);
        } else if (detail::is_sweep_field(key)) {
            for (auto& [m, sc] : cfg.sweep) detail::apply_sweep_field(sc, key, value, key);
        } else {
            const std::size_t dotpos = key.find('.');
            if (dotpos != std::string::npos) {
                const auto m = parse_method_token(std::string_view(key).substr(0, dotpos));
                const std::string_view field = std::string_view(key).substr(dotpos + 1);
                if (m && detail::is_sweep_field(field)) {
                    detail::apply_sweep_field(cfg.sweep.at(*m), field, value, key);
                } else {
                    throw ParseError("config: unknown key '" + key + "'", key);
                }
            } else {
                throw ParseError("config: unknown key '" + key + "'", key);
            }
        }
    }

    if (cfg.problem.b_low > cfg.problem.b_high)
        throw ParseError("config: b_low must not exceed b_high", "b_low");
    if (cfg.x0_kind == StartKind::Explicit &&
        cfg.x0_values.size() != static_cast<std::size_t>(cfg.problem.dim))
        throw ParseError("config: x0 length does not match dim", "x0");
    return cfg;
}

/// Canonical text form; parse_config(serialize_config(c)) reproduces c.
inline std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out;
    auto kv = [&out](std::string_view k, const std::string& v) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    };
    kv("dim", std::to_string(cfg.problem.dim));
    kv("lambda1", format_double(cfg.problem.lambda1));
    kv("ratio", format_double(cfg.problem.ratio));
    kv("b_low", format_double(cfg.problem.b_low));
    kv("b_high", format_double(cfg.problem.b_high));
    kv("seed", std::to_string(cfg.problem.seed));

    std::string methods;
    for (Method m : cfg.methods) {
        if (!methods.empty()) methods += ',';
        methods += method_token(m);
    }
    kv("method", methods);

    switch (cfg.x0_kind) {
        case StartKind::Zero: kv("x0", "zero"); break;
        case StartKind::Minimizer: kv("x0", "minimizer"); break;
        case StartKind::Explicit: {
            std::string v;
            for (double x : cfg.x0_values) {
                if (!v.empty()) v += ',';
                v += format_double(x);
            }
            kv("x0", v);
            break;
        }
    }
    kv("out", cfg.out_dir);

    std::string cps;
    for (int c : cfg.checkpoints) {
        if (!cps.empty()) cps += ',';
        cps += std::to_string(c);
    }
    kv("checkpoints", cps);
    kv("repeat", std::to_string(cfg.repeat));

    for (const auto& [m, sc] : cfg.sweep) {
        const std::string p = method_token(m);
        kv(p + ".m", std::to_string(sc.m));
        kv(p + ".d", std::to_string(sc.d));
        kv(p + ".k", std::to_string(sc.k));
        kv(p + ".tol", format_double(sc.tol));
        kv(p + ".max_iter", std::to_string(sc.max_iter));
        kv(p + ".rank_tol", format_double(sc.rank_tol));
        kv(p + ".detector", sc.detector_enabled ? "true" : "false");
    }
    return out;
}

inline QuadraticProblem build_problem(const ProblemSpec& spec, std::uint64_t seed) {
    return make_fletcher_problem(spec.dim, spec.lambda1, spec.ratio, spec.b_low, spec.b_high, seed);
}

inline Vector start_point(const ExperimentConfig& cfg, const QuadraticProblem& p) {
    switch (cfg.x0_kind) {
        case StartKind::Zero: return Vector(p.dim(), 0.0);
        case StartKind::Minimizer: return p.minimizer();
        case StartKind::Explicit:
            if (cfg.x0_values.size() != p.dim()) throw ShapeError("x0 length does not match dim");
            return cfg.x0_values;
    }
    throw std::logic_error("start_point: unknown kind");
}

struct MethodRunResult {
    Method method = Method::Sd;
    int run_index = 0;
    std::uint64_t seed = 0;
    RunTrace trace;
    std::filesystem::path csv_path;
};

struct ExperimentResult {
    std::vector<MethodRunResult> runs;
    std::filesystem::path out_dir;
    std::filesystem::path summary_path;
};

namespace detail {

inline std::string summary_block(const MethodRunResult& r, bool with_run) {
    std::string out;
    out += std::string("method = ") + method_token(r.method) + "\n";
    if (with_run) {
        out += "run = " + std::to_string(r.run_index) + "\n";
        out += "seed = " + std::to_string(r.seed) + "\n";
    }
    out += std::string("converged = ") + (r.trace.converged ? "true" : "false") + "\n";
    out += "iterations = " + std::to_string(r.trace.iterations) + "\n";
    out += "factorizations = " + std::to_string(r.trace.factorization_count) + "\n";
    out += "f_increase_count = " + std::to_string(r.trace.count_events(events::kFIncrease)) + "\n";
    out += "g_increase_count = " + std::to_string(r.trace.count_events(events::kGIncrease)) + "\n";
    return out;
}

inline std::string format_mean(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace detail

/// Run every configured method on the seeded problem (`repeat` times, run i
/// using seed + i), emit one trace CSV per run and a key-value summary with
/// per-run and, for batches, per-method mean counts. All files are written
/// atomically; the output directory is probed for writability before any run
/// starts.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    const fs::path out_dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());
    {
        const fs::path probe = out_dir / ".write_probe.tmp";
        std::ofstream f(probe, std::ios::trunc);
        if (!f) throw IoError("output directory not writable: " + out_dir.string());
        f.close();
        fs::remove(probe, ec);
    }

    ExperimentResult result;
    result.out_dir = out_dir;

    for (int i = 0; i < cfg.repeat; ++i) {
        const std::uint64_t seed = cfg.problem.seed + static_cast<std::uint64_t>(i);
        const QuadraticProblem p = build_problem(cfg.problem, seed);
        const Vector x0 = start_point(cfg, p);
        for (Method m : cfg.methods) {
            MethodRunResult r;
            r.method = m;
            r.run_index = i;
            r.seed = seed;
            r.trace = run_method(p, x0, cfg.sweep_for(m));
            const std::string name =
                cfg.repeat == 1 ? std::string(method_token(m)) + ".csv"
                                : std::string(method_token(m)) + "_run" + std::to_string(i) + ".csv";
            r.csv_path = out_dir / name;
            write_trace_csv(r.csv_path, r.trace);
            result.runs.push_back(std::move(r));
        }
    }

    std::string summary;
    for (const auto& r : result.runs) {
        summary += detail::summary_block(r, cfg.repeat > 1);
        summary += '\n';
    }
    if (cfg.repeat > 1) {
        for (Method m : cfg.methods) {
            double it_sum = 0, fact_sum = 0, f_inc = 0, g_inc = 0;
            int n = 0;
            bool all_converged = true;
            for (const auto& r : result.runs) {
                if (r.method != m) continue;
                ++n;
                it_sum += r.trace.iterations;
                fact_sum += r.trace.factorization_count;
                f_inc += r.trace.count_events(events::kFIncrease);
                g_inc += r.trace.count_events(events::kGIncrease);
                all_converged = all_converged && r.trace.converged;
            }
            summary += std::string("method = ") + method_token(m) + "\n";
            summary += "run = mean\n";
            summary += std::string("converged = ") + (all_converged ? "true" : "false") + "\n";
            summary += "iterations = " + detail::format_mean(it_sum / n) + "\n";
            summary += "factorizations = " + detail::format_mean(fact_sum / n) + "\n";
            summary += "f_increase_count = " + detail::format_mean(f_inc / n) + "\n";
            summary += "g_increase_count = " + detail::format_mean(g_inc / n) + "\n";
            summary += '\n';
        }
    }
    result.summary_path = out_dir / "summary.txt";
    atomic_write_file(result.summary_path, summary);
    return result;
}

struct ComparisonRow {
    int checkpoint = 0;
    double residual_a = 0.0;
    double residual_b = 0.0;
    double abs_diff = 0.0;
    bool carried_a = false;
    bool carried_b = false;
};

/// Residual histories of two methods side by side. Residuals are relative
/// gradient norms gnorm(n)/gnorm(0); a method that converged before a
/// checkpoint contributes its final residual there, flagged as carried.
struct ComparisonReport {
    Method method_a = Method::Sd;
    Method method_b = Method::Sd;
    std::vector<ComparisonRow> rows;
};

namespace detail {

inline std::pair<double, bool> residual_at(const RunTrace& t, int n) {
    const double g0 = t.records.front().gnorm;
    const auto rel = [g0](double g) { return g0 > 0.0 ? g / g0 : 0.0; };
    if (n < static_cast<int>(t.records.size()))
        return {rel(t.records[static_cast<std::size_t>(n)].gnorm), false};
    return {rel(t.records.back().gnorm), true};
}

}  // namespace detail

inline ComparisonReport compare_methods(const ExperimentConfig& cfg, Method a, Method b) {
    const SweepConfig& ca = cfg.sweep_for(a);
    const SweepConfig& cb = cfg.sweep_for(b);
    for (int cp : cfg.checkpoints)
        if (cp > ca.max_iter && cp > cb.max_iter)
            throw std::range_error("compare_methods: checkpoint " + std::to_string(cp) +
                                   " beyond both traces' max_iter");

    const QuadraticProblem p = build_problem(cfg.problem, cfg.problem.seed);
    const Vector x0 = start_point(cfg, p);
    const RunTrace ta = run_method(p, x0, ca);
    const RunTrace tb = run_method(p, x0, cb);

    ComparisonReport report;
    report.method_a = a;
    report.method_b = b;
    for (int cp : cfg.checkpoints) {
        const auto [pa, carried_a] = detail::residual_at(ta, cp);
        const auto [pb, carried_b] = detail::residual_at(tb, cp);
        report.rows.push_back({cp, pa, pb, std::abs(pa - pb), carried_a, carried_b});
    }
    return report;
}

}  // namespace gradlab

#endif
