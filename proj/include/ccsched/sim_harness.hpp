#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <memory>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccsched/frame_scheduler.hpp"
#include "ccsched/islip.hpp"
#include "ccsched/traffic.hpp"

namespace ccsched {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ExperimentConfig {
    std::string scheduler;  // "complex_coloring" or "islip"
    TrafficKind traffic = TrafficKind::Uniform;
    int n = 0;
    double load = -1.0;
    long long frame_size = 0;
    bool auto_frame = false;
    double eta = 0.95;
    double eps = 0.05;
    uint64_t seed = 1;
    int frames = 200;   // measurement window, in frames
    int warmup = 10;    // discarded frames before the window
    int islip_iterations = 0;  // 0 -> ceil(log2 N)
    int threads = 1;
    double instability_slope = 0.01;  // packets per slot, least-squares threshold
    StoppingRule rule;

    std::string stats_out;
    std::string schedule_out;
    std::string trace_in;
    std::string trace_out;
    bool dump_graph = false;
};

struct Metrics {
    std::string scheduler;
    std::string traffic;
    int n = 0;
    double load = 0.0;
    long long frame_size = 0;
    uint64_t seed = 0;

    long long arrived = 0;    // packets arriving inside the measurement window
    long long delivered = 0;  // of those, packets that departed before the run ended
    double throughput = 0.0;
    double mean_delay = 0.0;  // slots, arrival to departure inclusive
    long long max_delay = 0;

    double mean_engine_iterations = 0.0;
    double engine_seconds = 0.0;
    double per_matching_seconds = 0.0;

    bool unstable = false;
    double backlog_slope = 0.0;  // packets per slot over the measurement window
    long long backlog_end = 0;

    bool conservation_ok = true;
    bool in_order_ok = true;
    bool matchings_valid = true;

    static std::string csv_header(bool include_timing = true) {
        std::string h =
            "scheduler,traffic,n,load,frame_size,seed,arrived,delivered,throughput,"
            "mean_delay,max_delay,mean_engine_iterations,unstable,backlog_slope,"
            "backlog_end,conservation_ok,in_order_ok,matchings_valid";
        if (include_timing) h += ",engine_seconds,per_matching_seconds";
        return h + "\n";
    }

    /// With include_timing=false the row is a pure function of (config, seed).
    std::string to_csv(bool include_timing = true) const {
        char buf[512];
        std::snprintf(buf, sizeof(buf),
                      "%s,%s,%d,%.6g,%lld,%llu,%lld,%lld,%.9g,%.9g,%lld,%.9g,%d,%.9g,%lld,%d,%d,%d",
                      scheduler.c_str(), traffic.c_str(), n, load, frame_size,
                      static_cast<unsigned long long>(seed), arrived, delivered, throughput,
                      mean_delay, max_delay, mean_engine_iterations, unstable ? 1 : 0,
                      backlog_slope, backlog_end, conservation_ok ? 1 : 0, in_order_ok ? 1 : 0,
                      matchings_valid ? 1 : 0);
        std::string row = buf;
        if (include_timing) {
            std::snprintf(buf, sizeof(buf), ",%.9g,%.9g", engine_seconds, per_matching_seconds);
            row += buf;
        }
        return row + "\n";
    }
};

namespace detail {

inline double least_squares_slope(const std::vector<double>& y) {
    size_t m = y.size();
    if (m < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t k = 0; k < m; ++k) {
        sx += k;
        sy += y[k];
        sxx += static_cast<double>(k) * k;
        sxy += k * y[k];
    }
    double denom = m * sxx - sx * sx;
    return denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
}

/// Per-flow monitor for exact in-order delivery; feed deliveries in departure order.
class OrderMonitor {
public:
    explicit OrderMonitor(int n) : last_arrival_(static_cast<size_t>(n) * n, -1),
                                   last_departure_(static_cast<size_t>(n) * n, -1), n_(n) {}

    bool record(int input, int output, long long arrival, long long departure) {
        size_t flow = static_cast<size_t>(input) * n_ + output;
        bool ok = arrival > last_arrival_[flow] && departure > last_departure_[flow];
        last_arrival_[flow] = arrival;
        last_departure_[flow] = departure;
        return ok;
    }

private:
    std::vector<long long> last_arrival_;
    std::vector<long long> last_departure_;
    int n_;
};

struct TraceReader {
    // slot -> arrivals; slots are 1-based and may be sparse in the file
    std::map<long long, std::vector<Arrival>> slots;

    explicit TraceReader(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open trace file: " + path);
        std::string line;
        std::getline(in, line);  // header: slot,input,output
        long long slot;
        int i, j;
        char comma;
        while (std::getline(in, line)) {
            std::istringstream row(line);
            if (row >> slot >> comma >> i >> comma >> j) slots[slot].push_back({i, j});
        }
    }
};

inline void validate_config(const ExperimentConfig& cfg) {
    if (cfg.scheduler != "complex_coloring" && cfg.scheduler != "islip")
        throw ConfigError("scheduler must be complex_coloring or islip");
    if (cfg.n <= 0) throw ConfigError("missing or invalid port count");
    if (cfg.load < 0.0 || cfg.load >= 1.0)
        throw ConfigError("offered load must lie in [0,1): inadmissible load");
    if (cfg.frames <= 0 || cfg.warmup < 0) throw ConfigError("invalid window lengths");
    if (!cfg.auto_frame && cfg.frame_size <= 0)
        throw ConfigError("frame_size must be positive (or use auto frame sizing)");
}

}  // namespace detail

inline Metrics run_experiment(const ExperimentConfig& cfg) {
    detail::validate_config(cfg);

    long long f = cfg.frame_size;
    if (cfg.auto_frame) {
        f = FrameSizer(cfg.n, cfg.eta, cfg.eps).min_frame_size();
        if (f == kFrameSizeInfinite) throw ConfigError("auto frame size diverges for this eta");
    }

    Metrics m;
    m.scheduler = cfg.scheduler;
    m.traffic = traffic_name(cfg.traffic);
    m.n = cfg.n;
    m.load = cfg.load;
    m.frame_size = f;
    m.seed = cfg.seed;

    const int n = cfg.n;
    const int total_frames = cfg.warmup + cfg.frames;
    const long long window_begin = static_cast<long long>(cfg.warmup) * f + 1;
    const long long window_end = static_cast<long long>(total_frames) * f;

    ArrivalProcess proc(TrafficModel(cfg.traffic, n, cfg.load), cfg.seed);
    std::unique_ptr<detail::TraceReader> trace;
    if (!cfg.trace_in.empty()) trace = std::make_unique<detail::TraceReader>(cfg.trace_in);
    std::ofstream trace_out;
    if (!cfg.trace_out.empty()) {
        trace_out.open(cfg.trace_out);
        trace_out << "slot,input,output\n";
    }
    auto arrivals_for_slot = [&](long long slot) {
        std::vector<Arrival> out;
        if (trace) {
            auto it = trace->slots.find(slot);
            if (it != trace->slots.end()) out = it->second;
        } else {
            out = proc.generate_slot(slot);
        }
        if (trace_out.is_open())
            for (const Arrival& a : out) trace_out << slot << ',' << a.input << ',' << a.output << '\n';
        return out;
    };

    detail::OrderMonitor order(n);
    std::ofstream sched_out;
    if (!cfg.schedule_out.empty()) {
        sched_out.open(cfg.schedule_out);
        sched_out << "frame,slot,input,output,packet_id,arrival_slot\n";
    }

    double delay_sum = 0.0;
    std::vector<double> backlog;  // one sample per frame, measurement window only

    if (cfg.scheduler == "complex_coloring") {
        HistoryTable history = empty_history(n);
        std::vector<PendingPacket> carry;
        long long next_id = 0;
        long long arrived_total = 0, scheduled_total = 0;
        double iter_sum = 0.0;
        std::vector<char> slot_in_use(n), slot_out_use(n);
        bool stats_written = false;

        for (int k = 0; k < total_frames; ++k) {
            std::vector<PendingPacket> frame_arrivals;
            for (long long s = 1; s <= f; ++s) {
                long long slot = static_cast<long long>(k) * f + s;
                for (const Arrival& a : arrivals_for_slot(slot)) {
                    frame_arrivals.push_back({next_id++, a.input, a.output, slot});
                    ++arrived_total;
                    if (slot >= window_begin && slot <= window_end) ++m.arrived;
                }
            }
            FrameContext ctx =
                graph_initialization(n, f, k, frame_arrivals, history, carry);
            EngineOptions opts;
            opts.threads = cfg.threads;
            FrameResult fr = schedule_frame(ctx, cfg.rule, opts);
            if (cfg.dump_graph && k == cfg.warmup) std::fputs(ctx.graph.dump().c_str(), stdout);
            if (!cfg.stats_out.empty() && k >= cfg.warmup && !stats_written) {
                std::ofstream out(cfg.stats_out);
                out << fr.coloring.stats.to_csv();
                stats_written = true;
            }
            history = std::move(fr.history);
            carry = std::move(fr.carryover);
            scheduled_total += fr.scheduled;
            m.engine_seconds += fr.engine_seconds;
            iter_sum += fr.coloring.iterations_used;

            for (const SlotSchedule& slot : fr.slots) {
                std::fill(slot_in_use.begin(), slot_in_use.end(), 0);
                std::fill(slot_out_use.begin(), slot_out_use.end(), 0);
                long long departure = static_cast<long long>(k + 2) * f + slot.slot;
                for (const ScheduledPacket& p : slot.matching) {
                    if (slot_in_use[p.input] || slot_out_use[p.output]) m.matchings_valid = false;
                    slot_in_use[p.input] = 1;
                    slot_out_use[p.output] = 1;
                    if (!order.record(p.input, p.output, p.arrival_slot, departure))
                        m.in_order_ok = false;
                    if (sched_out.is_open())
                        sched_out << k << ',' << slot.slot << ',' << p.input << ',' << p.output
                                  << ',' << p.packet_id << ',' << p.arrival_slot << '\n';
                    if (p.arrival_slot >= window_begin && p.arrival_slot <= window_end) {
                        ++m.delivered;
                        long long d = departure - p.arrival_slot + 1;
                        delay_sum += static_cast<double>(d);
                        m.max_delay = std::max(m.max_delay, d);
                    }
                }
            }
            if (k >= cfg.warmup) backlog.push_back(static_cast<double>(carry.size()));
        }
        m.conservation_ok =
            arrived_total == scheduled_total + static_cast<long long>(carry.size());
        m.backlog_end = static_cast<long long>(carry.size());
        m.mean_engine_iterations = total_frames > 0 ? iter_sum / total_frames : 0.0;
        m.per_matching_seconds =
            total_frames > 0 ? m.engine_seconds / (static_cast<double>(total_frames) * f) : 0.0;
        m.backlog_slope = detail::least_squares_slope(backlog) / static_cast<double>(f);
    } else {
        IslipState islip(n, cfg.islip_iterations);
        std::vector<std::deque<std::pair<long long, long long>>> voq(static_cast<size_t>(n) * n);
        std::vector<uint8_t> occupancy(static_cast<size_t>(n) * n, 0);
        long long arrived_total = 0, departed_total = 0;
        long long next_id = 0;
        auto t0 = std::chrono::steady_clock::now();
        double match_seconds = 0.0;

        for (long long slot = 1; slot <= window_end; ++slot) {
            for (const Arrival& a : arrivals_for_slot(slot)) {
                size_t q = static_cast<size_t>(a.input) * n + a.output;
                voq[q].emplace_back(next_id++, slot);
                occupancy[q] = 1;
                ++arrived_total;
                if (slot >= window_begin) ++m.arrived;
            }
            auto ms = std::chrono::steady_clock::now();
            std::vector<int> matched = islip.match(occupancy);
            match_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - ms)
                                 .count();
            for (int i = 0; i < n; ++i) {
                int j = matched[i];
                if (j < 0) continue;
                size_t q = static_cast<size_t>(i) * n + j;
                auto [pid, arr] = voq[q].front();
                voq[q].pop_front();
                if (voq[q].empty()) occupancy[q] = 0;
                ++departed_total;
                if (!order.record(i, j, arr, slot)) m.in_order_ok = false;
                if (sched_out.is_open())
                    sched_out << slot / f << ',' << slot % f << ',' << i << ',' << j << ',' << pid
                              << ',' << arr << '\n';
                if (arr >= window_begin && arr <= window_end) {
                    ++m.delivered;
                    long long d = slot - arr + 1;
                    delay_sum += static_cast<double>(d);
                    m.max_delay = std::max(m.max_delay, d);
                }
            }
            if (slot % f == 0 && slot >= window_begin)
                backlog.push_back(static_cast<double>(arrived_total - departed_total));
        }
        (void)t0;
        m.conservation_ok = true;
        long long queued = 0;
        for (const auto& q : voq) queued += static_cast<long long>(q.size());
        m.conservation_ok = arrived_total == departed_total + queued;
        m.backlog_end = queued;
        m.engine_seconds = match_seconds;
        m.per_matching_seconds = window_end > 0 ? match_seconds / window_end : 0.0;
        m.backlog_slope = detail::least_squares_slope(backlog) / static_cast<double>(f);
    }

    m.throughput = m.arrived > 0 ? static_cast<double>(m.delivered) / m.arrived : 1.0;
    m.mean_delay = m.delivered > 0 ? delay_sum / m.delivered : 0.0;
    m.unstable = m.backlog_slope > cfg.instability_slope;
    return m;
}

/// One row per config; a failing config becomes an error row instead of
/// aborting the sweep.
inline std::string sweep(const std::vector<ExperimentConfig>& configs,
                         bool include_timing = true) {
    std::string out = Metrics::csv_header(include_timing);
    for (const ExperimentConfig& cfg : configs) {
        try {
            out += run_experiment(cfg).to_csv(include_timing);
        } catch (const std::exception& ex) {
            out += "error: ";
            out += ex.what();
            out += "\n";
        }
    }
    return out;
}

}  // namespace ccsched
