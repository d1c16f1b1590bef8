#ifndef GRADLAB_SWEEPS_HPP
#define GRADLAB_SWEEPS_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gradlab/errors.hpp"
#include "gradlab/factorize.hpp"
#include "gradlab/problem.hpp"
#include "gradlab/steplength.hpp"

namespace gradlab {

enum class Method { Sd, Bb, Lmsd, Lmsdc, Lmsdr };

/// What produced a given trace record: the starting point, an exact
/// line-search step, a constant (alignment) step, a Ritz sweep step, or a
/// Barzilai-Borwein step.
enum class Phase { Init, Sd, YuanConst, Ritz, Bb };

namespace events {
inline constexpr std::uint32_t kFIncrease = 1u << 0;
inline constexpr std::uint32_t kGIncrease = 1u << 1;
inline constexpr std::uint32_t kSweepTerminated = 1u << 2;
inline constexpr std::uint32_t kRollback = 1u << 3;
inline constexpr std::uint32_t kDiscriminantClamped = 1u << 4;
inline constexpr std::uint32_t kWindowShrunk = 1u << 5;
inline constexpr std::uint32_t kAll = (1u << 6) - 1;
}  // namespace events

inline const char* method_token(Method m) {
    switch (m) {
        case Method::Sd: return "sd";
        case Method::Bb: return "bb";
        case Method::Lmsd: return "lmsd";
        case Method::Lmsdc: return "lmsdc";
        case Method::Lmsdr: return "lmsdr";
    }
    return "?";
}

inline std::optional<Method> parse_method_token(std::string_view s) {
    if (s == "sd") return Method::Sd;
    if (s == "bb") return Method::Bb;
    if (s == "lmsd") return Method::Lmsd;
    if (s == "lmsdc") return Method::Lmsdc;
    if (s == "lmsdr") return Method::Lmsdr;
    return std::nullopt;
}

inline const char* phase_token(Phase p) {
    switch (p) {
        case Phase::Init: return "init";
        case Phase::Sd: return "sd";
        case Phase::YuanConst: return "yuan-const";
        case Phase::Ritz: return "ritz";
        case Phase::Bb: return "bb";
    }
    return "?";
}

inline std::optional<Phase> parse_phase_token(std::string_view s) {
    if (s == "init") return Phase::Init;
    if (s == "sd") return Phase::Sd;
    if (s == "yuan-const") return Phase::YuanConst;
    if (s == "ritz") return Phase::Ritz;
    if (s == "bb") return Phase::Bb;
    return std::nullopt;
}

inline std::string event_tokens(std::uint32_t ev) {
    static constexpr std::pair<std::uint32_t, const char*> kNames[] = {
        {events::kFIncrease, "f-increase"},
        {events::kGIncrease, "g-increase"},
        {events::kSweepTerminated, "sweep-terminated"},
        {events::kRollback, "rollback"},
        {events::kDiscriminantClamped, "discriminant-clamped"},
        {events::kWindowShrunk, "window-shrunk"},
    };
    std::string out;
    for (const auto& [bit, name] : kNames) {
        if (ev & bit) {
            if (!out.empty()) out += '|';
            out += name;
        }
    }
    return out;
}

inline std::optional<std::uint32_t> parse_event_tokens(std::string_view s) {
    std::uint32_t ev = 0;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t bar = s.find('|', pos);
        if (bar == std::string_view::npos) bar = s.size();
        const std::string_view tok = s.substr(pos, bar - pos);
        if (tok == "f-increase") ev |= events::kFIncrease;
        else if (tok == "g-increase") ev |= events::kGIncrease;
        else if (tok == "sweep-terminated") ev |= events::kSweepTerminated;
        else if (tok == "rollback") ev |= events::kRollback;
        else if (tok == "discriminant-clamped") ev |= events::kDiscriminantClamped;
        else if (tok == "window-shrunk") ev |= events::kWindowShrunk;
        else return std::nullopt;
        pos = bar + 1;
    }
    return ev;
}

/// Per-run configuration. `m` is the window memory, `d` the constant-step
/// phase length (Lmsdc only), `k` the per-Ritz-value reuse count (Lmsdr only).
struct SweepConfig {
    Method method = Method::Lmsd;
    int m = 4;
    int d = 4;
    int k = 2;
    double tol = 1e-6;
    int max_iter = 1000;
    double rank_tol = kDefaultRankTol;
    bool detector_enabled = true;

    bool operator==(const SweepConfig&) const = default;
};

inline void validate(const SweepConfig& cfg) {
    if (cfg.m < 1) throw std::invalid_argument("sweep config: m must be at least 1");
    if (cfg.d < 0) throw std::invalid_argument("sweep config: d must be nonnegative");
    if (cfg.k < 1) throw std::invalid_argument("sweep config: k must be at least 1");
    if (!(cfg.tol > 0.0 && cfg.tol < 1.0)) throw std::invalid_argument("sweep config: tol must lie in (0, 1)");
    if (cfg.max_iter < 1) throw std::invalid_argument("sweep config: max_iter must be at least 1");
    if (!(cfg.rank_tol > 0.0)) throw std::invalid_argument("sweep config: rank_tol must be positive");
}

/// One row of a run history. Record 0 is the starting point (phase `init`,
/// alpha 0); record n holds the state reached by the n-th gradient step and
/// the steplength that produced it. A record flagged `rollback` is a rejected
/// candidate: the iterate was discarded and the run resumed from its
/// predecessor, but the attempt still consumes an iteration index.
struct TraceRecord {
    int index = 0;
    double fval = 0.0;
    double gnorm = 0.0;
    double alpha = 0.0;
    Phase phase = Phase::Init;
    int sweep_id = 0;
    std::uint32_t events = 0;

    bool operator==(const TraceRecord&) const = default;
};

struct RunTrace {
    std::vector<TraceRecord> records;
    bool converged = false;
    int iterations = 0;
    int factorization_count = 0;

    int count_events(std::uint32_t mask) const {
        int n = 0;
        for (const auto& r : records)
            if (r.events & mask) ++n;
        return n;
    }

    bool operator==(const RunTrace&) const = default;
};

/// Precomputed Ritz values pending use within a sweep, kept in decreasing
/// order; each value carries a remaining-use counter (1 for Lmsd/Lmsdc, k for
/// Lmsdr) that is exhausted before moving on to the next value.
class RitzStack {
public:
    RitzStack(const RitzValues& ritz, int uses_per_value) {
        if (uses_per_value < 1) throw std::invalid_argument("RitzStack: uses_per_value < 1");
        pending_.reserve(ritz.values.size());
        for (double v : ritz.values) pending_.push_back({v, uses_per_value});
    }

    bool empty() const { return head_ == pending_.size(); }

    /// Largest remaining value; consumes one use.
    double next() {
        if (empty()) throw std::logic_error("RitzStack: empty");
        Entry& e = pending_[head_];
        const double v = e.value;
        if (--e.remaining == 0) ++head_;
        return v;
    }

private:
    struct Entry {
        double value;
        int remaining;
    };
    std::vector<Entry> pending_;
    std::size_t head_ = 0;
};

enum class PoliceDecision { Accept, AcceptTerminateSweep, RollbackTerminateSweep };

/// Nonmonotonicity detector. An objective increase rejects the candidate and
/// terminates the sweep; a gradient-norm increase alone keeps the candidate
/// but still terminates the sweep. Comparison is against the last accepted
/// record. Callers gate this on detector_enabled.
inline PoliceDecision detect_and_police(const RunTrace& trace, const Iterate& candidate) {
    for (auto it = trace.records.rbegin(); it != trace.records.rend(); ++it) {
        if (it->events & events::kRollback) continue;
        if (candidate.fval > it->fval) return PoliceDecision::RollbackTerminateSweep;
        if (candidate.gnorm > it->gnorm) return PoliceDecision::AcceptTerminateSweep;
        return PoliceDecision::Accept;
    }
    return PoliceDecision::Accept;
}

/// Optional observers. `on_factorize` fires once per factorization with the
/// guarded window, the steplengths pairing each window column with its
/// successor gradient, and the extracted Ritz values.
struct SweepHooks {
    std::function<void(const GradientWindow&, std::span<const double>, const RitzValues&)>
        on_factorize;
};

namespace detail {

class RunState {
public:
    RunState(const QuadraticProblem& p, Vector x0, const SweepConfig& cfg)
        : p_(p), cfg_(cfg) {
        validate(cfg);
        Iterate it = evaluate_iterate(p, std::move(x0), 0);
        x_ = std::move(it.x);
        g_ = std::move(it.g);
        fval_ = it.fval;
        gnorm_ = it.gnorm;
        g0norm_ = gnorm_;
        trace_.records.push_back({0, fval_, gnorm_, 0.0, Phase::Init, 0, 0});
        update_stopping();
    }

    bool done() const { return stopped_; }
    const Vector& position() const { return x_; }
    const Vector& gradient_vec() const { return g_; }
    double gnorm() const { return gnorm_; }
    void begin_sweep() { ++sweep_id_; }
    void add_pending(std::uint32_t ev) { pending_ |= ev; }

    struct StepOutcome {
        bool accepted = true;
        bool terminate_sweep = false;
    };

    /// One gradient iteration x - alpha*g. Reports whether the iterate was
    /// kept and whether the detector terminated the current sweep.
    StepOutcome step(double alpha, Phase phase, bool police) {
        if (!(alpha > 0.0)) throw std::domain_error("sweep step: nonpositive steplength");
        Iterate cand = evaluate_iterate(p_, add_scaled(x_, -alpha, g_), next_index());

        std::uint32_t ev = pending_;
        pending_ = 0;
        if (cand.fval > fval_) ev |= events::kFIncrease;
        if (cand.gnorm > gnorm_) ev |= events::kGIncrease;

        bool accept = true;
        bool terminate = false;
        if (police) {
            switch (detect_and_police(trace_, cand)) {
                case PoliceDecision::Accept:
                    break;
                case PoliceDecision::AcceptTerminateSweep:
                    terminate = true;
                    ev |= events::kSweepTerminated;
                    break;
                case PoliceDecision::RollbackTerminateSweep:
                    accept = false;
                    terminate = true;
                    ev |= events::kSweepTerminated | events::kRollback;
                    break;
            }
        }

        trace_.records.push_back({cand.index, cand.fval, cand.gnorm, alpha, phase, sweep_id_, ev});
        if (accept) {
            history_.emplace_back(std::move(g_), alpha);
            if (static_cast<int>(history_.size()) > cfg_.m) history_.pop_front();
            x_ = std::move(cand.x);
            g_ = std::move(cand.g);
            fval_ = cand.fval;
            gnorm_ = cand.gnorm;
        }
        trace_.iterations = static_cast<int>(trace_.records.size()) - 1;
        update_stopping();
        return {accept, terminate};
    }

    /// Guard, factorize and eigensolve the stored window. Increments the
    /// factorization count and notifies the hook.
    RitzValues factorize(const SweepHooks& hooks) {
        GradientWindow w;
        w.columns.reserve(history_.size());
        for (const auto& [g, a] : history_) w.columns.push_back(g);
        w.current = g_;

        GradientWindow guarded = condition_guard(w, cfg_.rank_tol);
        if (guarded.columns.size() < w.columns.size()) pending_ |= events::kWindowShrunk;

        const QrFactors qr = qr_factor(guarded.columns, cfg_.rank_tol);
        const TridiagonalMatrix t = build_T_explicit(qr.q_columns, p_);
        RitzValues ritz = ritz_values(t);
        ++trace_.factorization_count;
        if (!(ritz.values.back() > 0.0))
            throw IllConditionedError("sweep: nonpositive Ritz value");

        if (hooks.on_factorize) {
            std::vector<double> alphas;
            alphas.reserve(guarded.columns.size());
            for (std::size_t i = history_.size() - guarded.columns.size(); i < history_.size(); ++i)
                alphas.push_back(history_[i].second);
            hooks.on_factorize(guarded, alphas, ritz);
        }
        return ritz;
    }

    RunTrace take_trace() { return std::move(trace_); }

private:
    int next_index() const { return static_cast<int>(trace_.records.size()); }

    /// Stop on the relative residual criterion, with an absolute floor at the
    /// roundoff level of the gradient evaluation so that starts at (or runs
    /// reaching) the exact minimizer terminate cleanly.
    void update_stopping() {
        const double floor =
            8.0 * std::numeric_limits<double>::epsilon() *
            (p_.lambda_max() * norm2(x_) + norm2(p_.rhs()));
        if (gnorm_ < cfg_.tol * g0norm_ || gnorm_ <= floor) {
            trace_.converged = true;
            stopped_ = true;
        } else if (next_index() > cfg_.max_iter) {
            stopped_ = true;
        }
    }

    const QuadraticProblem& p_;
    SweepConfig cfg_;
    RunTrace trace_;
    Vector x_;
    Vector g_;
    double fval_ = 0.0;
    double gnorm_ = 0.0;
    double g0norm_ = 0.0;
    std::deque<std::pair<Vector, double>> history_;  // (gradient, step applied at it)
    std::uint32_t pending_ = 0;
    int sweep_id_ = 0;
    bool stopped_ = false;
};

/// Shared driver for the Ritz-sweep methods. The window grows greedily: the
/// first iteration takes an exact line-search step, and each sweep factorizes
/// every stored back gradient (up to m) before applying the reciprocal Ritz
/// steplengths in decreasing order, each `reuse` times.
///
/// A sweep whose very termination discarded the iterate leaves the stored
/// window unchanged, so refactorizing would reproduce the same rejected
/// candidate indefinitely. One exact line-search step after such a sweep
/// restores progress and gives the next factorization fresh data.
inline RunTrace run_ritz_sweeps(const QuadraticProblem& p, Vector x0, const SweepConfig& cfg,
                                int reuse, const SweepHooks& hooks) {
    RunState st(p, std::move(x0), cfg);
    if (st.done()) return st.take_trace();
    st.step(sd_step(p, st.gradient_vec()), Phase::Sd, false);
    while (!st.done()) {
        st.begin_sweep();
        RitzStack stack(st.factorize(hooks), reuse);
        bool rolled_back = false;
        while (!stack.empty() && !st.done()) {
            const double theta = stack.next();
            const auto out = st.step(1.0 / theta, Phase::Ritz, cfg.detector_enabled);
            if (out.terminate_sweep) {
                rolled_back = !out.accepted;
                break;
            }
        }
        if (rolled_back && !st.done()) st.step(sd_step(p, st.gradient_vec()), Phase::Sd, false);
    }
    return st.take_trace();
}

}  // namespace detail

/// Steepest descent with exact line search.
inline RunTrace run_sd(const QuadraticProblem& p, Vector x0, const SweepConfig& cfg) {
    if (cfg.method != Method::Sd) throw std::invalid_argument("run_sd: config method mismatch");
    detail::RunState st(p, std::move(x0), cfg);
    while (!st.done()) st.step(sd_step(p, st.gradient_vec()), Phase::Sd, false);
    return st.take_trace();
}

/// Barzilai-Borwein. The first step falls back to the exact line-search
/// steplength since no history exists yet.
inline RunTrace run_bb(const QuadraticProblem& p, Vector x0, const SweepConfig& cfg) {
    if (cfg.method != Method::Bb) throw std::invalid_argument("run_bb: config method mismatch");
    detail::RunState st(p, std::move(x0), cfg);
    if (st.done()) return st.take_trace();
    Vector x_prev = st.position();
    Vector g_prev = st.gradient_vec();
    st.step(sd_step(p, st.gradient_vec()), Phase::Sd, false);
    while (!st.done()) {
        const Vector s = subtract(st.position(), x_prev);
        const Vector y = subtract(st.gradient_vec(), g_prev);
        const double alpha = bb_step(s, y);
        x_prev = st.position();
        g_prev = st.gradient_vec();
        st.step(alpha, Phase::Bb, false);
    }
    return st.take_trace();
}

/// Limited memory steepest descent: sweeps of Ritz steplengths from the QR
/// projection of the back gradient window.
inline RunTrace run_lmsd(const QuadraticProblem& p, Vector x0, const SweepConfig& cfg,
                         const SweepHooks& hooks = {}) {
    if (cfg.method != Method::Lmsd) throw std::invalid_argument("run_lmsd: config method mismatch");
    return detail::run_ritz_sweeps(p, std::move(x0), cfg, 1, hooks);
}

/// Limited memory steepest descent with retards: each Ritz value drives k
/// consecutive iterations, so a sweep spends k*m steps per factorization.
inline RunTrace run_lmsdr(const QuadraticProblem& p, Vector x0, const SweepConfig& cfg,
                          const SweepHooks& hooks = {}) {
    if (cfg.method != Method::Lmsdr) throw std::invalid_argument("run_lmsdr: config method mismatch");
    return detail::run_ritz_sweeps(p, std::move(x0), cfg, cfg.k, hooks);
}

/// Limited memory steepest descent with a constant (alignment) phase. Each
/// cycle takes m exact line-search steps, computes the Yuan steplength from
/// the last two of them, holds it constant for d steps, then factorizes the
/// stored window and applies the m Ritz steplengths. With fewer than two line
/// search steps available (m = 1 on the first cycle) the constant phase is
/// skipped for that cycle.
inline RunTrace run_lmsdc(const QuadraticProblem& p, Vector x0, const SweepConfig& cfg,
                          const SweepHooks& hooks = {}) {
    if (cfg.method != Method::Lmsdc) throw std::invalid_argument("run_lmsdc: config method mismatch");
    detail::RunState st(p, std::move(x0), cfg);
    while (!st.done()) {
        st.begin_sweep();

        double a_prev = 0.0, a_curr = 0.0, gn_prev = 0.0, gn_curr = 0.0;
        int applied = 0;
        for (int i = 0; i < cfg.m && !st.done(); ++i) {
            const double a = sd_step(p, st.gradient_vec());
            a_prev = a_curr;
            gn_prev = gn_curr;
            a_curr = a;
            gn_curr = st.gnorm();
            ++applied;
            st.step(a, Phase::Sd, false);
        }
        if (st.done()) break;

        if (cfg.d > 0 && applied >= 2) {
            bool clamped = false;
            const double ay = yuan_step({a_prev, a_curr, gn_prev, gn_curr}, clamped);
            if (clamped) st.add_pending(events::kDiscriminantClamped);
            for (int i = 0; i < cfg.d && !st.done(); ++i)
                if (st.step(ay, Phase::YuanConst, cfg.detector_enabled).terminate_sweep) break;
        }
        if (st.done()) break;

        RitzStack stack(st.factorize(hooks), 1);
        while (!stack.empty() && !st.done()) {
            const double theta = stack.next();
            if (st.step(1.0 / theta, Phase::Ritz, cfg.detector_enabled).terminate_sweep) break;
        }
    }
    return st.take_trace();
}

inline RunTrace run_method(const QuadraticProblem& p, Vector x0, const SweepConfig& cfg,
                           const SweepHooks& hooks = {}) {
    switch (cfg.method) {
        case Method::Sd: return run_sd(p, std::move(x0), cfg);
        case Method::Bb: return run_bb(p, std::move(x0), cfg);
        case Method::Lmsd: return run_lmsd(p, std::move(x0), cfg, hooks);
        case Method::Lmsdc: return run_lmsdc(p, std::move(x0), cfg, hooks);
        case Method::Lmsdr: return run_lmsdr(p, std::move(x0), cfg, hooks);
    }
    throw std::invalid_argument("run_method: unknown method");
}

}  // namespace gradlab

#endif
