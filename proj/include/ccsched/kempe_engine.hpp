#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ccsched/colored_graph.hpp"

namespace ccsched {

struct NotAVariable : std::runtime_error {
    explicit NotAVariable(const std::string& what) : std::runtime_error(what) {}
};

struct WrongSide : std::runtime_error {
    explicit WrongSide(const std::string& what) : std::runtime_error(what) {}
};

struct InsufficientHistory : std::runtime_error {
    explicit InsufficientHistory(const std::string& what) : std::runtime_error(what) {}
};

struct NoEliminations : std::runtime_error {
    explicit NoEliminations(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidRate : std::runtime_error {
    explicit InvalidRate(const std::string& what) : std::runtime_error(what) {}
};

enum class ExchangeKind { Moved, EliminatedOne, EliminatedTwo, DontCareEliminated, Blocked };

struct ExchangeOutcome {
    ExchangeKind kind;
    std::array<int, 2> affected_edges{-1, -1};
};

enum class PhaseLabel { Initial = 0, Steady = 1, Deadlock = 2 };

inline const char* phase_name(PhaseLabel p) {
    switch (p) {
        case PhaseLabel::Initial: return "initial";
        case PhaseLabel::Steady: return "steady";
        default: return "deadlock";
    }
}

struct IterationStats {
    int t = 0;
    double R = 0.0;       // variable density after this iteration
    double alpha = 0.0;   // elimination rate of this iteration
    long long eliminated = 0;
    long long exchanges = 0;
};

/// Per-iteration elimination series plus the lifetimes of variables eliminated
/// at each iteration (walk length in iterations, counted from frame entry).
struct EliminationStats {
    long long edge_count = 0;
    double initial_density = 0.0;  // R(0)
    std::vector<IterationStats> iterations;
    std::vector<std::vector<int>> lifetimes;  // [t-1] -> lifetimes ended at iteration t

    static constexpr int kSmoothingWindow = 5;

    double density_at(int t) const {  // t = 0 .. iterations.size()
        if (t == 0) return initial_density;
        return iterations[t - 1].R;
    }

    double alpha_at(int t) const { return t == 0 ? 0.0 : iterations[t - 1].alpha; }

    /// CSV export: one row per iteration, columns t,R,alpha,eliminated,exchanges,phase.
    std::string to_csv() const;
};

struct PhaseReport {
    long long moved = 0;
    long long eliminated_one = 0;
    long long eliminated_two = 0;
    long long dont_care = 0;
    long long blocked = 0;

    long long exchanges() const { return moved + eliminated_one + eliminated_two + dont_care; }
    long long eliminated_variables() const {
        return eliminated_one + 2 * eliminated_two + dont_care;
    }

    void operator+=(const PhaseReport& o) {
        moved += o.moved;
        eliminated_one += o.eliminated_one;
        eliminated_two += o.eliminated_two;
        dont_care += o.dont_care;
        blocked += o.blocked;
    }
};

/// Stop-time parameterization: T = ceil(a*ln(|V|+b)+c), clamped to [1, hard_cap].
/// Defaults deliberately stop the engine well before the variable count
/// freezes: the leftover variables are carried into the next frame by the
/// scheduler, trading a small slice of bandwidth for a short schedule. The
/// values are calibrated on dense frame graphs (|V|=128, delta near 2000) so
/// that the leftover stays around 0.3% of the edges; the `calibrate-stopping`
/// CLI subcommand refits a and c for other workloads.
struct StoppingRule {
    double a = 7.0;
    double b = 0.0;
    double c = 6.0;
    int hard_cap = 4096;
    double target_epsilon = 1e-4;

    int stop_time(int num_vertices) const {
        double raw = a * std::log(static_cast<double>(num_vertices) + b) + c;
        if (!std::isfinite(raw)) return hard_cap;
        long long t = static_cast<long long>(std::ceil(raw));
        if (t < 1) t = 1;
        if (t > hard_cap) t = hard_cap;
        return static_cast<int>(t);
    }
};

struct StopWindow {
    double t2_estimate;  // steady-model iteration count to reach epsilon
    double upper_bound;  // Ts
};

/// Steady-phase stopping window: the geometric-decay model gives the iteration
/// at which the density first reaches epsilon, and 1/alpha * ln(R(t1)/eps) + t1
/// bounds it from above. Callers pick T anywhere inside the window.
inline StopWindow stopping_time(const StoppingRule& rule, double R_t1, double alpha_steady,
                                double t1 = 0.0) {
    if (!(alpha_steady > 0.0 && alpha_steady < 1.0))
        throw InvalidRate("alpha_steady must lie in (0,1)");
    double eps = rule.target_epsilon;
    if (!(eps > 0.0 && eps < R_t1)) throw InvalidRate("target_epsilon must lie in (0, R(t1))");
    double lnratio = std::log(R_t1 / eps);
    double t2 = t1 + lnratio / (-std::log1p(-alpha_steady));
    double ts = t1 + lnratio / alpha_steady;
    double cap = static_cast<double>(rule.hard_cap);
    return {std::min(std::max(t2, 1.0), cap), std::min(std::max(ts, 1.0), cap)};
}

namespace detail {

inline double smoothed(const EliminationStats& s, int t, bool use_alpha) {
    int w = EliminationStats::kSmoothingWindow;
    double acc = 0.0;
    for (int k = t - w + 1; k <= t; ++k) acc += use_alpha ? s.alpha_at(k) : s.density_at(k);
    return acc / w;
}

}  // namespace detail

/// Phase labels for every iteration from the smoothing window onward, with the
/// Initial -> Steady -> Deadlock progression enforced (no regression).
inline std::vector<PhaseLabel> classify_phases(const EliminationStats& stats) {
    int total = static_cast<int>(stats.iterations.size());
    std::vector<PhaseLabel> labels;
    labels.reserve(total);
    PhaseLabel cur = PhaseLabel::Initial;
    for (int t = 1; t <= total; ++t) {
        if (t < EliminationStats::kSmoothingWindow) {
            labels.push_back(cur);
            continue;
        }
        double dR = detail::smoothed(stats, t, false) - detail::smoothed(stats, t - 1, false);
        double dA = detail::smoothed(stats, t, true) - detail::smoothed(stats, t - 1, true);
        PhaseLabel raw = cur;
        if (std::fabs(dR) < 1e-6 && std::fabs(dA) < 1e-3) raw = PhaseLabel::Deadlock;
        else if (dR < 0.0 && std::fabs(dA) < 1e-3) raw = PhaseLabel::Steady;
        else if (dR < 0.0 && dA < 0.0) raw = PhaseLabel::Initial;
        if (static_cast<int>(raw) > static_cast<int>(cur)) cur = raw;
        labels.push_back(cur);
    }
    return labels;
}

inline PhaseLabel classify_phase(const EliminationStats& stats, int t) {
    if (t < EliminationStats::kSmoothingWindow)
        throw InsufficientHistory("iteration below smoothing window");
    if (t > static_cast<int>(stats.iterations.size()))
        throw InsufficientHistory("iteration beyond recorded history");
    return classify_phases(stats)[t - 1];
}

/// Mean walk length of the variables eliminated during Steady-labelled iterations.
inline double hitting_time_estimate(const EliminationStats& stats) {
    auto labels = classify_phases(stats);
    long long count = 0;
    double sum = 0.0;
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != PhaseLabel::Steady) continue;
        for (int life : stats.lifetimes[i]) {
            sum += life;
            ++count;
        }
    }
    if (count == 0) throw NoEliminations("no variable eliminated in the steady phase");
    return sum / static_cast<double>(count);
}

inline std::string EliminationStats::to_csv() const {
    auto labels = classify_phases(*this);
    std::string out = "t,R,alpha,eliminated,exchanges,phase\n";
    char buf[160];
    for (size_t i = 0; i < iterations.size(); ++i) {
        const IterationStats& it = iterations[i];
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%lld,%lld,%s\n", it.t, it.R, it.alpha,
                      it.eliminated, it.exchanges, phase_name(labels[i]));
        out += buf;
    }
    return out;
}

struct ColoringResult {
    int iterations_used = 0;
    int stop_time = 0;
    EliminationStats stats;
    std::vector<int> remaining;  // surviving variable edge ids (carryover candidates)
};

struct EngineOptions {
    int stop_time_override = -1;  // <0: derive from the rule and |V|
    bool stop_on_zero = true;     // false: keep iterating to the stop time for stats runs
    int threads = 1;              // >1 partitions the active side across threads
};

/// Variable-elimination engine. Owns the graph for the duration of a run and
/// tracks per-variable birth iterations so walk lifetimes survive Moved hops.
class KempeEngine {
public:
    explicit KempeEngine(ColoredBipartiteMultigraph& g)
        : g_(g),
          birth_(g.edge_count(), 0),
          used_stamp_(2 * g.edge_count(), -1) {}

    /// One effective color exchange at `pivot` for the given variable edge.
    /// The variable's pivot-side color q walks toward the pivot's link colored
    /// with the far color p; a missing partner is the don't-care case.
    ExchangeOutcome try_exchange(int edge_id, VertexRef pivot) {
        const Edge& e = g_.edge(edge_id);
        if (!e.is_variable()) throw NotAVariable("edge is not a variable");
        Side pivot_side = pivot.side;
        if ((pivot_side == Side::X && e.x != pivot.index) ||
            (pivot_side == Side::Y && e.y != pivot.index))
            throw WrongSide("pivot is not an endpoint of the edge");
        if (active_side_valid_ && pivot_side != active_side_)
            throw WrongSide("pivot is not on the active side of this phase");

        Color q = e.color_at(pivot_side);
        Color p = e.color_at(other_side(pivot_side));
        if (q == kNoColor || p == kNoColor)
            return {ExchangeKind::Blocked, {edge_id, -1}};  // engine runs on fully colored graphs
        if (link_used(edge_id, pivot_side)) return {ExchangeKind::Blocked, {edge_id, -1}};

        int partner = g_.occupant(pivot, p);
        if (partner == -1) {
            // Pivot is deficient in p: exchange with the phantom don't-care edge.
            g_.set_link_color(edge_id, pivot_side, p);
            mark_used(edge_id, pivot_side);
            record_lifetime(edge_id);
            return {ExchangeKind::DontCareEliminated, {edge_id, -1}};
        }
        // The partner's link at the pivot vertex is its pivot-side link.
        Side partner_side = pivot_side;
        if (link_used(partner, partner_side)) return {ExchangeKind::Blocked, {edge_id, partner}};

        const Edge& pe = g_.edge(partner);
        bool partner_was_variable = pe.is_variable();
        Color partner_far = pe.color_at(other_side(partner_side));
        bool partner_still_variable = (q != partner_far);
        int delta_vars = -1 + (partner_still_variable ? 1 : 0) - (partner_was_variable ? 1 : 0);
        if (delta_vars > 0) return {ExchangeKind::Blocked, {edge_id, partner}};

        g_.swap_pivot_links(edge_id, partner, pivot);
        mark_used(edge_id, pivot_side);
        mark_used(partner, partner_side);

        if (!partner_was_variable) {
            // Constant partner: the variable walked one hop; the walk keeps its birth.
            birth_[partner] = birth_[edge_id];
            return {ExchangeKind::Moved, {edge_id, partner}};
        }
        record_lifetime(edge_id);
        if (!partner_still_variable) {
            record_lifetime(partner);
            return {ExchangeKind::EliminatedTwo, {edge_id, partner}};
        }
        return {ExchangeKind::EliminatedOne, {edge_id, partner}};
    }

    /// One half-iteration: every vertex on `side` refreshes its variable list and
    /// attempts one exchange per variable, each link participating at most once.
    /// Work at distinct vertices only touches links at that vertex, so parallel
    /// execution is observably identical to ascending-vertex sequential order.
    PhaseReport run_phase(Side side, int threads = 1) {
        ++phase_epoch_;
        active_side_ = side;
        active_side_valid_ = true;

        // Snapshot the variable worklist grouped by active-side pivot; the set is
        // ordered by edge id, which also orders each per-vertex bucket.
        std::vector<std::pair<int, int>> work;  // (pivot index, edge id)
        work.reserve(g_.variables().size());
        for (int id : g_.variables()) {
            const Edge& e = g_.edge(id);
            work.emplace_back(side == Side::X ? e.x : e.y, id);
        }
        std::stable_sort(work.begin(), work.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });

        PhaseReport total;
        if (threads <= 1 || work.size() < 64) {
            for (const auto& [pivot, id] : work) total += attempt(id, {side, pivot});
        } else {
            // Split on vertex boundaries so one vertex is never shared by threads.
            int nthreads = std::min<int>(threads, std::thread::hardware_concurrency());
            if (nthreads < 1) nthreads = 1;
            std::vector<size_t> cuts{0};
            size_t chunk = work.size() / nthreads + 1;
            while (cuts.back() < work.size()) {
                size_t pos = std::min(cuts.back() + chunk, work.size());
                while (pos < work.size() && work[pos].first == work[pos - 1].first) ++pos;
                cuts.push_back(pos);
            }
            std::vector<PhaseReport> reports(cuts.size() - 1);
            std::vector<std::vector<std::pair<int, int>>> partial_lifetimes(cuts.size() - 1);
            std::vector<std::thread> pool;
            for (size_t ci = 0; ci + 1 < cuts.size(); ++ci) {
                pool.emplace_back([&, ci] {
                    thread_lifetimes_ = &partial_lifetimes[ci];
                    for (size_t k = cuts[ci]; k < cuts[ci + 1]; ++k)
                        reports[ci] += attempt(work[k].second, {side, work[k].first});
                    thread_lifetimes_ = nullptr;
                });
            }
            for (auto& th : pool) th.join();
            for (size_t ci = 0; ci + 1 < cuts.size(); ++ci) {
                total += reports[ci];
                for (auto& [id, life] : partial_lifetimes[ci]) pending_lifetimes_.push_back(life);
            }
        }
        active_side_valid_ = false;
        return total;
    }

    /// Alternates X and Y phases (one iteration = X + Y) until all variables are
    /// gone or the stop time fires. The graph stays consistent throughout and
    /// every non-returned edge ends constant.
    ColoringResult run(const StoppingRule& rule, const EngineOptions& opts = {}) {
        current_iteration_ = 0;
        std::fill(birth_.begin(), birth_.end(), 0);
        ColoringResult res;
        res.stop_time = opts.stop_time_override > 0
                            ? opts.stop_time_override
                            : rule.stop_time(2 * g_.ports());
        long long edge_total = static_cast<long long>(g_.edge_count());
        res.stats.edge_count = edge_total;
        long long prev_vars = g_.variable_count();
        res.stats.initial_density = edge_total ? static_cast<double>(prev_vars) / edge_total : 0.0;

        for (int t = 1; t <= res.stop_time; ++t) {
            current_iteration_ = t;
            pending_lifetimes_.clear();
            PhaseReport rep = run_phase(Side::X, opts.threads);
            rep += run_phase(Side::Y, opts.threads);
            long long vars = g_.variable_count();

            IterationStats it;
            it.t = t;
            it.R = edge_total ? static_cast<double>(vars) / edge_total : 0.0;
            it.eliminated = prev_vars - vars;
            it.alpha = prev_vars > 0 ? static_cast<double>(it.eliminated) / prev_vars : 0.0;
            it.exchanges = rep.exchanges();
            res.stats.iterations.push_back(it);
            res.stats.lifetimes.push_back(std::move(pending_lifetimes_));
            pending_lifetimes_ = {};
            prev_vars = vars;
            res.iterations_used = t;
            if (vars == 0 && opts.stop_on_zero) break;
        }
        res.remaining.assign(g_.variables().begin(), g_.variables().end());
        return res;
    }

private:
    PhaseReport attempt(int edge_id, VertexRef pivot) {
        PhaseReport rep;
        if (!g_.edge(edge_id).is_variable()) return rep;  // eliminated earlier this phase
        ExchangeOutcome out = try_exchange(edge_id, pivot);
        switch (out.kind) {
            case ExchangeKind::Moved: ++rep.moved; break;
            case ExchangeKind::EliminatedOne: ++rep.eliminated_one; break;
            case ExchangeKind::EliminatedTwo: ++rep.eliminated_two; break;
            case ExchangeKind::DontCareEliminated: ++rep.dont_care; break;
            case ExchangeKind::Blocked: ++rep.blocked; break;
        }
        return rep;
    }

    bool link_used(int edge_id, Side s) const {
        return used_stamp_[2 * edge_id + (s == Side::Y ? 1 : 0)] == phase_epoch_;
    }

    void mark_used(int edge_id, Side s) {
        used_stamp_[2 * edge_id + (s == Side::Y ? 1 : 0)] = phase_epoch_;
    }

    void record_lifetime(int edge_id) {
        int life = current_iteration_ - birth_[edge_id];
        if (life < 1) life = 1;  // eliminated within the iteration it appeared
        if (thread_lifetimes_) thread_lifetimes_->emplace_back(edge_id, life);
        else pending_lifetimes_.push_back(life);
    }

    ColoredBipartiteMultigraph& g_;
    std::vector<int> birth_;        // iteration a walk entered the frame / was created
    std::vector<int> used_stamp_;   // per link, last phase epoch it was exchanged in
    int phase_epoch_ = 0;
    int current_iteration_ = 1;
    Side active_side_ = Side::X;
    bool active_side_valid_ = false;
    std::vector<int> pending_lifetimes_;
    static thread_local std::vector<std::pair<int, int>>* thread_lifetimes_;
};

inline thread_local std::vector<std::pair<int, int>>* KempeEngine::thread_lifetimes_ = nullptr;

inline ColoringResult parallel_complex_coloring(ColoredBipartiteMultigraph& g,
                                                const StoppingRule& rule,
                                                const EngineOptions& opts = {}) {
    KempeEngine engine(g);
    return engine.run(rule, opts);
}

}  // namespace ccsched
