// Command line front end: run/sweep experiments, calibrate the stopping rule,
// size frames, and audit invariants on random instances.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ccsched/sim_harness.hpp"

using namespace ccsched;

namespace {

struct ExperimentFlags {
    std::string scheduler = "complex_coloring";
    std::string traffic = "uniform";
    int n = 0;
    double load = -1.0;
    long long frame_size = 0;
    bool auto_frame = false;
    double eta = 0.95;
    double eps = 0.05;
    uint64_t seed = 1;
    int frames = 200;
    int warmup = 10;
    int threads = 1;
    int islip_iterations = 0;
    double instability_slope = 0.01;
    double rule_a = StoppingRule{}.a;
    double rule_b = StoppingRule{}.b;
    double rule_c = StoppingRule{}.c;
    int hard_cap = StoppingRule{}.hard_cap;
    std::string stats_out, schedule_out, trace_in, trace_out, out;
    bool dump_graph = false;
};

void add_experiment_options(CLI::App* cmd, ExperimentFlags& fl, bool sweepable,
                            std::vector<double>* loads, std::vector<int>* ns) {
    cmd->add_option("--scheduler", fl.scheduler, "complex_coloring or islip");
    cmd->add_option("--traffic", fl.traffic, "uniform, hotspot, or logdiag");
    if (sweepable) {
        cmd->add_option("--n", *ns, "port counts")->delimiter(',');
        cmd->add_option("--load", *loads, "offered loads in [0,1)")->delimiter(',');
    } else {
        cmd->add_option("--n", fl.n, "port count");
        cmd->add_option("--load", fl.load, "offered load in [0,1)");
    }
    auto* fs = cmd->add_option("--frame-size", fl.frame_size, "frame size in slots");
    cmd->add_flag("--auto-frame", fl.auto_frame, "derive the frame size from --eta/--eps")
        ->excludes(fs);
    cmd->add_option("--eta", fl.eta, "throughput target for --auto-frame");
    cmd->add_option("--eps", fl.eps, "confidence parameter for --auto-frame");
    cmd->add_option("--seed", fl.seed, "random seed");
    cmd->add_option("--frames", fl.frames, "measurement window, in frames");
    cmd->add_option("--warmup", fl.warmup, "frames discarded before the window");
    cmd->add_option("--threads", fl.threads, "engine worker threads");
    cmd->add_option("--islip-iterations", fl.islip_iterations,
                    "request/grant/accept rounds per slot (0: ceil(log2 N))");
    cmd->add_option("--instability-slope", fl.instability_slope,
                    "backlog slope threshold, packets per slot");
    cmd->add_option("--rule-a", fl.rule_a, "stopping rule coefficient a");
    cmd->add_option("--rule-b", fl.rule_b, "stopping rule offset b");
    cmd->add_option("--rule-c", fl.rule_c, "stopping rule constant c");
    cmd->add_option("--hard-cap", fl.hard_cap, "stopping rule iteration cap");
    cmd->add_option("--stats-out", fl.stats_out, "per-iteration engine stats CSV");
    cmd->add_option("--schedule-out", fl.schedule_out, "emitted schedule CSV");
    cmd->add_option("--trace-in", fl.trace_in, "replay arrivals from a trace CSV");
    cmd->add_option("--trace-out", fl.trace_out, "record arrivals to a trace CSV");
    cmd->add_option("--out", fl.out, "metrics file; .json for JSON, else CSV");
    cmd->add_flag("--dump-graph", fl.dump_graph, "print the first measured frame's graph");
}

ExperimentConfig to_config(const ExperimentFlags& fl) {
    ExperimentConfig cfg;
    cfg.scheduler = fl.scheduler;
    cfg.traffic = traffic_from_name(fl.traffic);
    cfg.n = fl.n;
    cfg.load = fl.load;
    cfg.frame_size = fl.frame_size;
    cfg.auto_frame = fl.auto_frame;
    cfg.eta = fl.eta;
    cfg.eps = fl.eps;
    cfg.seed = fl.seed;
    cfg.frames = fl.frames;
    cfg.warmup = fl.warmup;
    cfg.threads = fl.threads;
    cfg.islip_iterations = fl.islip_iterations;
    cfg.instability_slope = fl.instability_slope;
    cfg.rule.a = fl.rule_a;
    cfg.rule.b = fl.rule_b;
    cfg.rule.c = fl.rule_c;
    cfg.rule.hard_cap = fl.hard_cap;
    cfg.stats_out = fl.stats_out;
    cfg.schedule_out = fl.schedule_out;
    cfg.trace_in = fl.trace_in;
    cfg.trace_out = fl.trace_out;
    cfg.dump_graph = fl.dump_graph;
    return cfg;
}

nlohmann::json metrics_to_json(const Metrics& m) {
    return nlohmann::json{{"scheduler", m.scheduler},
                          {"traffic", m.traffic},
                          {"n", m.n},
                          {"load", m.load},
                          {"frame_size", m.frame_size},
                          {"seed", m.seed},
                          {"arrived", m.arrived},
                          {"delivered", m.delivered},
                          {"throughput", m.throughput},
                          {"mean_delay", m.mean_delay},
                          {"max_delay", m.max_delay},
                          {"mean_engine_iterations", m.mean_engine_iterations},
                          {"engine_seconds", m.engine_seconds},
                          {"per_matching_seconds", m.per_matching_seconds},
                          {"unstable", m.unstable},
                          {"backlog_slope", m.backlog_slope},
                          {"backlog_end", m.backlog_end},
                          {"conservation_ok", m.conservation_ok},
                          {"in_order_ok", m.in_order_ok},
                          {"matchings_valid", m.matchings_valid}};
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::fputs(text.c_str(), stdout);
        return;
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << text;
}

int cmd_run(const ExperimentFlags& fl) {
    Metrics m = run_experiment(to_config(fl));
    if (ends_with(fl.out, ".json")) {
        emit(fl.out, metrics_to_json(m).dump(2) + "\n");
    } else {
        emit(fl.out, Metrics::csv_header() + m.to_csv());
    }
    return 0;
}

int cmd_sweep(const ExperimentFlags& fl, const std::vector<double>& loads,
              const std::vector<int>& ns) {
    if (loads.empty() || ns.empty())
        throw ConfigError("sweep needs at least one --load and one --n");
    std::vector<ExperimentConfig> grid;
    for (int n : ns) {
        for (double load : loads) {
            ExperimentFlags one = fl;
            one.n = n;
            one.load = load;
            grid.push_back(to_config(one));
        }
    }
    if (ends_with(fl.out, ".json")) {
        nlohmann::json rows = nlohmann::json::array();
        for (const ExperimentConfig& cfg : grid) {
            try {
                rows.push_back(metrics_to_json(run_experiment(cfg)));
            } catch (const std::exception& ex) {
                rows.push_back(nlohmann::json{{"error", ex.what()}});
            }
        }
        emit(fl.out, rows.dump(2) + "\n");
    } else {
        emit(fl.out, sweep(grid));
    }
    return 0;
}

// delta rounds of random perfect matchings give a delta-regular multigraph,
// the densest case the stopping rule has to cover
ColoredBipartiteMultigraph regular_instance(int n, int delta, std::mt19937_64& rng) {
    ColoredBipartiteMultigraph g(n, delta);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int r = 0; r < delta; ++r) {
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int i = 0; i < n; ++i) g.add_edge(i, perm[i], r);
    }
    g.greedy_consistent_coloring(rng);
    return g;
}

int cmd_calibrate(const std::vector<int>& sizes, int delta, int seeds, double epsilon,
                  int hard_cap, const std::string& out) {
    std::ostringstream table;
    table << "num_vertices,mean_hit_iterations\n";
    std::vector<double> xs, ys;
    for (int v : sizes) {
        if (v < 4 || v % 2 != 0) throw ConfigError("sizes must be even and at least 4");
        double sum = 0.0;
        for (int s = 0; s < seeds; ++s) {
            std::mt19937_64 rng(0x5EEDULL * (s + 1) + v);
            ColoredBipartiteMultigraph g = regular_instance(v / 2, delta, rng);
            StoppingRule rule;
            rule.hard_cap = hard_cap;
            EngineOptions opts;
            opts.stop_time_override = hard_cap;
            ColoringResult res = parallel_complex_coloring(g, rule, opts);
            int hit = res.iterations_used;  // cap if epsilon is never reached
            for (const IterationStats& it : res.stats.iterations) {
                if (it.R <= epsilon) {
                    hit = it.t;
                    break;
                }
            }
            sum += hit;
        }
        double mean = sum / seeds;
        table << v << "," << mean << "\n";
        xs.push_back(std::log(static_cast<double>(v)));
        ys.push_back(mean);
    }
    // least squares for T = a*ln|V| + c
    size_t k = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < k; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double denom = k * sxx - sx * sx;
    if (k < 2 || denom == 0.0) throw ConfigError("need at least two distinct sizes to fit");
    double a = (k * sxy - sx * sy) / denom;
    double c = (sy - a * sx) / k;
    table << "fit: a=" << a << " b=0 c=" << c << " (T = ceil(a*ln|V|+c))\n";
    emit(out, table.str());
    return 0;
}

int cmd_frame_size(int n, double eta, double eps, long long frame) {
    FrameSizer fs(n, eta, eps);
    long long f = fs.min_frame_size();
    if (f == kFrameSizeInfinite)
        std::printf("min_frame_size: unbounded for eta=%g eps=%g\n", eta, eps);
    else
        std::printf("min_frame_size: %lld\n", f);
    if (frame > 0) {
        std::printf("eta_for_frame(%lld): %.6f\n", frame, fs.eta_for_frame(frame));
        std::printf("gumbel a=%.6g b=%.6g tail(f)=%.6f\n", fs.gumbel_a(frame),
                    fs.gumbel_b(frame), fs.max_degree_tail(frame, static_cast<double>(frame)));
    }
    return 0;
}

int cmd_validate(int trials, uint64_t seed) {
    std::mt19937_64 rng(seed);
    int bad = 0;
    for (int t = 0; t < trials; ++t) {
        int n = std::uniform_int_distribution<int>(2, 8)(rng);
        int delta = std::uniform_int_distribution<int>(1, 8)(rng);
        int edges = std::uniform_int_distribution<int>(1, n * delta)(rng);
        ColoredBipartiteMultigraph g(n, delta);
        std::vector<int> deg_x(n, 0), deg_y(n, 0);
        for (int e = 0; e < edges; ++e) {
            int i = std::uniform_int_distribution<int>(0, n - 1)(rng);
            int j = std::uniform_int_distribution<int>(0, n - 1)(rng);
            if (deg_x[i] >= delta || deg_y[j] >= delta) continue;
            g.add_edge(i, j, e);
            ++deg_x[i];
            ++deg_y[j];
        }
        g.greedy_consistent_coloring(rng);
        StoppingRule rule;
        EngineOptions opts;
        opts.stop_time_override = 500;
        parallel_complex_coloring(g, rule, opts);

        ConsistencyReport rep = g.audit();
        bool ok = rep.consistent && g.occupancy_matches() && rep.uncolored == 0 &&
                  rep.variables == g.variable_count();
        if (g.variable_count() == 0) {
            for (const Edge& e : g.edges()) ok = ok && e.is_constant();
        }
        if (!ok) {
            ++bad;
            std::printf("trial %d FAILED audit\n%s", t, g.dump().c_str());
        }
    }

    // one small end-to-end pass per scheduler
    for (const char* sched : {"complex_coloring", "islip"}) {
        ExperimentConfig cfg;
        cfg.scheduler = sched;
        cfg.traffic = TrafficKind::Uniform;
        cfg.n = 8;
        cfg.load = 0.7;
        cfg.frame_size = 50;
        cfg.seed = seed;
        cfg.frames = 20;
        cfg.warmup = 2;
        Metrics m = run_experiment(cfg);
        if (!(m.conservation_ok && m.in_order_ok && m.matchings_valid)) {
            ++bad;
            std::printf("end-to-end %s FAILED invariants\n", sched);
        }
    }
    std::printf("validate: %d trials, %d failures\n", trials, bad);
    return bad == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"frame-based switch scheduling by complex coloring"};
    // key=value file; keys live in a section named after the subcommand,
    // e.g. [run] then load=0.9
    app.set_config("--config")->description("key=value config file");
    app.require_subcommand(1);

    ExperimentFlags fl;
    std::vector<double> loads;
    std::vector<int> ns;
    CLI::App* run = app.add_subcommand("run", "run one experiment");
    add_experiment_options(run, fl, false, nullptr, nullptr);

    ExperimentFlags sw;
    CLI::App* swp = app.add_subcommand("sweep", "run a grid of experiments");
    add_experiment_options(swp, sw, true, &loads, &ns);

    // delta large enough that the deadlock floor (about ten stuck variables)
    // stays under epsilon * edge_count at every size
    std::vector<int> sizes{32, 64, 128};
    int cal_delta = 2000, cal_seeds = 3, cal_cap = 4096;
    double cal_eps = 1e-3;
    std::string cal_out;
    CLI::App* cal = app.add_subcommand("calibrate-stopping", "fit stopping rule a and c");
    cal->add_option("--sizes", sizes, "vertex counts |V| to sweep")->delimiter(',');
    cal->add_option("--delta", cal_delta, "degree of the regular test instances");
    cal->add_option("--seeds", cal_seeds, "trials per size");
    cal->add_option("--epsilon", cal_eps, "target residual variable density");
    cal->add_option("--hard-cap", cal_cap, "iteration cap per trial");
    cal->add_option("--out", cal_out, "write the table here instead of stdout");

    int fsn = 64;
    double fseta = 0.95, fseps = 0.05;
    long long fsf = 0;
    CLI::App* fsc = app.add_subcommand("frame-size", "frame size calculator");
    fsc->add_option("--n", fsn, "port count");
    fsc->add_option("--eta", fseta, "throughput target");
    fsc->add_option("--eps", fseps, "confidence parameter");
    fsc->add_option("--frame", fsf, "also evaluate this frame size");

    int vtrials = 100;
    uint64_t vseed = 1;
    CLI::App* val = app.add_subcommand("validate", "invariant audits on random instances");
    val->add_option("--trials", vtrials, "number of random graphs");
    val->add_option("--seed", vseed, "random seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(fl);
        if (swp->parsed()) return cmd_sweep(sw, loads, ns);
        if (cal->parsed()) return cmd_calibrate(sizes, cal_delta, cal_seeds, cal_eps, cal_cap, cal_out);
        if (fsc->parsed()) return cmd_frame_size(fsn, fseta, fseps, fsf);
        if (val->parsed()) return cmd_validate(vtrials, vseed);
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 2;
    }
    return 0;
}
