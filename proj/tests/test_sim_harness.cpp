#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "ccsched/sim_harness.hpp"

using namespace ccsched;

namespace {

ExperimentConfig base_config() {
    ExperimentConfig cfg;
    cfg.scheduler = "complex_coloring";
    cfg.traffic = TrafficKind::Uniform;
    cfg.n = 8;
    cfg.load = 0.6;
    cfg.frame_size = 50;
    cfg.seed = 12345;
    cfg.frames = 20;
    cfg.warmup = 3;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& p) : path(p) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("small run satisfies all invariants") {
    auto m = run_experiment(base_config());
    CHECK(m.conservation_ok);
    CHECK(m.in_order_ok);
    CHECK(m.matchings_valid);
    CHECK(m.arrived > 0);
    CHECK(m.delivered > 0);
    CHECK(m.throughput > 0.9);
    CHECK(m.mean_delay >= 1.0);
    CHECK(m.max_delay >= static_cast<long long>(m.mean_delay));
    CHECK_FALSE(m.unstable);
}

TEST_CASE("identical seeds give byte-identical metric rows") {
    auto a = run_experiment(base_config()).to_csv(false);
    auto b = run_experiment(base_config()).to_csv(false);
    CHECK(a == b);

    auto cfg = base_config();
    cfg.seed = 999;
    auto c = run_experiment(cfg).to_csv(false);
    CHECK(a != c);
}

TEST_CASE("threaded engine runs match the sequential metrics") {
    auto cfg = base_config();
    cfg.n = 16;
    cfg.load = 0.8;
    auto seq = run_experiment(cfg).to_csv(false);
    cfg.threads = 4;
    auto par = run_experiment(cfg).to_csv(false);
    CHECK(seq == par);
}

TEST_CASE("config validation rejects bad inputs") {
    auto cfg = base_config();
    cfg.load = 1.0;
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);

    cfg = base_config();
    cfg.scheduler = "maxweight";
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);

    cfg = base_config();
    cfg.n = 0;
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);

    cfg = base_config();
    cfg.frame_size = 0;
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);

    cfg = base_config();
    cfg.frames = 0;
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
}

TEST_CASE("islip runs satisfy the same invariants") {
    auto cfg = base_config();
    cfg.scheduler = "islip";
    auto m = run_experiment(cfg);
    CHECK(m.conservation_ok);
    CHECK(m.in_order_ok);
    CHECK(m.arrived > 0);
    CHECK(m.throughput > 0.9);
    CHECK_FALSE(m.unstable);
}

TEST_CASE("trace round trip replays the exact same arrivals on both schedulers") {
    TempFile trace("/tmp/ccsched_trace_test.csv");
    auto cfg = base_config();
    cfg.trace_out = trace.path;
    auto recorded = run_experiment(cfg);

    auto replay = base_config();
    replay.trace_in = trace.path;
    replay.seed = 777;  // seed is irrelevant under trace replay
    auto m1 = run_experiment(replay);
    CHECK(m1.arrived == recorded.arrived);
    CHECK(m1.delivered == recorded.delivered);
    CHECK(m1.to_csv(false) != recorded.to_csv(false));  // seed column differs only
    replay.seed = cfg.seed;
    auto m2 = run_experiment(replay);
    CHECK(m2.to_csv(false) == recorded.to_csv(false));

    replay.scheduler = "islip";
    auto mi = run_experiment(replay);
    CHECK(mi.arrived == recorded.arrived);
    CHECK(mi.conservation_ok);
}

TEST_CASE("missing trace file is a config error") {
    auto cfg = base_config();
    cfg.trace_in = "/tmp/ccsched_no_such_trace.csv";
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
}

TEST_CASE("schedule and stats files carry the documented headers") {
    TempFile sched("/tmp/ccsched_sched_test.csv");
    TempFile stats("/tmp/ccsched_stats_test.csv");
    auto cfg = base_config();
    cfg.schedule_out = sched.path;
    cfg.stats_out = stats.path;
    auto m = run_experiment(cfg);

    auto sched_text = slurp(sched.path);
    CHECK(sched_text.rfind("frame,slot,input,output,packet_id,arrival_slot\n", 0) == 0);
    long long rows = std::count(sched_text.begin(), sched_text.end(), '\n') - 1;
    // every scheduled packet of the whole run appears once
    CHECK(rows >= m.delivered);

    auto stats_text = slurp(stats.path);
    CHECK(stats_text.rfind("t,R,alpha,eliminated,exchanges,phase\n", 0) == 0);
}

TEST_CASE("mean delay grows with offered load") {
    auto cfg = base_config();
    cfg.n = 8;
    cfg.frames = 30;
    std::vector<double> delays;
    for (double load : {0.3, 0.6, 0.9}) {
        cfg.load = load;
        delays.push_back(run_experiment(cfg).mean_delay);
    }
    CHECK(delays[0] < delays[2]);
}

TEST_CASE("a frame size far below the load is flagged unstable") {
    // f=10 at N=8: per-frame per-port demand ~0.95*10 but color budget is 10;
    // variance makes overflow persistent, so the backlog keeps climbing
    auto cfg = base_config();
    cfg.load = 0.95;
    cfg.frame_size = 10;
    cfg.frames = 80;
    cfg.warmup = 5;
    auto m = run_experiment(cfg);
    CHECK(m.backlog_slope > 0.0);
    // conservation still holds under overload
    CHECK(m.conservation_ok);
}

TEST_CASE("auto frame sizing picks the analytic bound") {
    auto cfg = base_config();
    cfg.n = 16;
    cfg.auto_frame = true;
    cfg.eta = 0.9;
    cfg.eps = 0.05;
    cfg.frames = 5;
    cfg.warmup = 1;
    auto m = run_experiment(cfg);
    CHECK(m.frame_size == FrameSizer(16, 0.9, 0.05).min_frame_size());
}

TEST_CASE("sweep emits one row per config and keeps going past errors") {
    auto good = base_config();
    good.frames = 5;
    auto bad = base_config();
    bad.load = 1.0;
    auto csv = sweep({good, bad, good}, false);
    CHECK(csv.rfind(Metrics::csv_header(false), 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(csv.find("error: ") != std::string::npos);
    CHECK(csv.find("inadmissible load") != std::string::npos);
}
