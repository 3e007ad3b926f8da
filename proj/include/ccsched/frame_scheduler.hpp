#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "ccsched/colored_graph.hpp"
#include "ccsched/kempe_engine.hpp"

namespace ccsched {

/// A packet waiting to be scheduled: either a fresh arrival of this frame or a
/// carryover from an earlier one. Identity and arrival timestamp survive
/// carryover so in-order delivery can be enforced across frames.
struct PendingPacket {
    long long packet_id = -1;
    int input = -1;
    int output = -1;
    long long arrival_slot = 0;
};

/// Per-pair historical color sets C_{i,j}: the slot-feasible colors each (i,j)
/// pair used in the previous properly colored frame, sorted ascending.
using HistoryTable = std::vector<std::vector<Color>>;  // indexed by i*n + j

inline HistoryTable empty_history(int n) {
    return HistoryTable(static_cast<size_t>(n) * n);
}

struct ScheduledPacket {
    int input;
    int output;
    long long packet_id;
    long long arrival_slot;
};

/// Matching for one timeslot of the transmit frame. Validity (no input or
/// output twice) follows from coloring consistency and is re-checked by tests.
struct SlotSchedule {
    int slot = 0;  // 1-based within the frame
    std::vector<ScheduledPacket> matching;
};

/// Everything one frame needs: its graph, packet identity per edge, the frame
/// size, the history used for pre-coloring, and the merged carryover.
struct FrameContext {
    int frame_index = 0;
    int n = 0;
    long long f = 0;
    int delta = 0;
    ColoredBipartiteMultigraph graph{1, 1};
    std::vector<long long> packet_ids;      // by edge id
    std::vector<long long> arrival_slots;   // by edge id (mirror of the graph, handy for sorting)
    long long reused_history_colors = 0;
};

/// Builds the frame's consistently colored graph. Per pair, edges are created
/// in arrival order; the first |C_{i,j}| edges reuse the historical colors as
/// constants (no new variables), surplus edges are left for the greedy fill.
/// Delta is the realized max degree, which may exceed f under overload.
inline FrameContext graph_initialization(int n, long long f, int frame_index,
                                         const std::vector<PendingPacket>& arrivals,
                                         const HistoryTable& history,
                                         const std::vector<PendingPacket>& carryover) {
    FrameContext ctx;
    ctx.frame_index = frame_index;
    ctx.n = n;
    ctx.f = f;

    std::vector<std::vector<PendingPacket>> pairs(static_cast<size_t>(n) * n);
    for (const PendingPacket& p : carryover) pairs[static_cast<size_t>(p.input) * n + p.output].push_back(p);
    for (const PendingPacket& p : arrivals) pairs[static_cast<size_t>(p.input) * n + p.output].push_back(p);

    std::vector<int> deg_x(n, 0), deg_y(n, 0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            auto& bucket = pairs[static_cast<size_t>(i) * n + j];
            std::sort(bucket.begin(), bucket.end(), [](const PendingPacket& a, const PendingPacket& b) {
                if (a.arrival_slot != b.arrival_slot) return a.arrival_slot < b.arrival_slot;
                return a.packet_id < b.packet_id;
            });
            deg_x[i] += static_cast<int>(bucket.size());
            deg_y[j] += static_cast<int>(bucket.size());
        }
    }
    int delta = 1;
    for (int i = 0; i < n; ++i) delta = std::max({delta, deg_x[i], deg_y[i]});
    ctx.delta = delta;
    ctx.graph = ColoredBipartiteMultigraph(n, delta);

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (const PendingPacket& p : pairs[static_cast<size_t>(i) * n + j]) {
                ctx.graph.add_edge(i, j, p.arrival_slot);
                ctx.packet_ids.push_back(p.packet_id);
                ctx.arrival_slots.push_back(p.arrival_slot);
            }
        }
    }

    // Reuse historical colors as constants, in ascending color order against
    // ascending arrival order. A color that no longer fits (delta shrank, or a
    // collision from changed pair structure) leaves the edge uncolored instead.
    if (!history.empty()) {
        int edge_id = 0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const auto& bucket = pairs[static_cast<size_t>(i) * n + j];
                const auto& hist = history[static_cast<size_t>(i) * n + j];
                for (size_t k = 0; k < bucket.size(); ++k, ++edge_id) {
                    if (k >= hist.size()) continue;
                    Color c = hist[k];
                    if (c < 1 || c > delta) continue;
                    if (ctx.graph.occupant(x_vertex(i), c) != -1) continue;
                    if (ctx.graph.occupant(y_vertex(j), c) != -1) continue;
                    ctx.graph.set_link_color(edge_id, Side::X, c);
                    ctx.graph.set_link_color(edge_id, Side::Y, c);
                    ++ctx.reused_history_colors;
                }
            }
        }
    }

    ctx.graph.greedy_consistent_coloring();
    return ctx;
}

/// Re-sorts the colors of each pair's constant edges so ascending arrival gets
/// ascending color index. Color classes keep the same (i,j) membership; only
/// which parallel packet rides which slot changes.
inline void reorder_colors(FrameContext& ctx) {
    int n = ctx.n;
    std::vector<std::vector<int>> pair_edges(static_cast<size_t>(n) * n);
    for (const Edge& e : ctx.graph.edges())
        if (e.is_constant()) pair_edges[static_cast<size_t>(e.x) * n + e.y].push_back(e.id);
    std::vector<Color> colors;
    for (auto& ids : pair_edges) {
        if (ids.size() < 2) continue;
        // ids are already in arrival order (edges were added per pair sorted).
        colors.clear();
        for (int id : ids) colors.push_back(ctx.graph.edge(id).color_x);
        std::sort(colors.begin(), colors.end());
        ctx.graph.recolor_constants(ids, colors);
    }
}

struct FrameResult {
    std::vector<SlotSchedule> slots;             // only nonempty slots, ascending
    std::vector<PendingPacket> carryover;        // unresolved + deferred packets
    HistoryTable history;                        // colors delivered this frame, per pair
    ColoringResult coloring;
    long long scheduled = 0;                     // packets emitted into slots
    long long deferred_over_budget = 0;          // constants with color > f
    long long carryover_variables = 0;           // engine survivors
    long long demoted_for_order = 0;             // constants held back behind a survivor
    double engine_seconds = 0.0;
};

/// Runs the elimination engine, fixes packet order, converts color classes at
/// or below f into slot matchings, and carries everything else forward.
///
/// Delivery per pair is the maximal arrival-order prefix of edges that ended
/// constant with a slot-feasible color. Holding back the packets behind an
/// unresolved survivor keeps per-flow delivery in arrival order even across
/// frames; the paper's carryover sets list exactly these packets.
inline FrameResult schedule_frame(FrameContext& ctx, const StoppingRule& rule,
                                  const EngineOptions& opts = {}) {
    FrameResult res;
    auto start = std::chrono::steady_clock::now();
    res.coloring = parallel_complex_coloring(ctx.graph, rule, opts);
    reorder_colors(ctx);
    res.engine_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    int n = ctx.n;
    res.history = empty_history(n);
    std::vector<std::vector<int>> pair_edges(static_cast<size_t>(n) * n);
    for (const Edge& e : ctx.graph.edges())
        pair_edges[static_cast<size_t>(e.x) * n + e.y].push_back(e.id);

    std::vector<std::vector<ScheduledPacket>> by_slot(static_cast<size_t>(ctx.f) + 1);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const auto& ids = pair_edges[static_cast<size_t>(i) * n + j];
            size_t cut = 0;  // edges before the cut are delivered this frame
            while (cut < ids.size()) {
                const Edge& e = ctx.graph.edge(ids[cut]);
                if (!e.is_constant() || e.color_x > ctx.f) break;
                ++cut;
            }
            auto& hist = res.history[static_cast<size_t>(i) * n + j];
            for (size_t k = 0; k < ids.size(); ++k) {
                const Edge& e = ctx.graph.edge(ids[k]);
                if (k < cut) {
                    by_slot[e.color_x].push_back(
                        {i, j, ctx.packet_ids[e.id], ctx.arrival_slots[e.id]});
                    hist.push_back(e.color_x);
                    ++res.scheduled;
                } else {
                    res.carryover.push_back(
                        {ctx.packet_ids[e.id], i, j, ctx.arrival_slots[e.id]});
                    if (!e.is_constant()) ++res.carryover_variables;
                    else if (e.color_x > ctx.f) ++res.deferred_over_budget;
                    else ++res.demoted_for_order;
                }
            }
        }
    }
    for (long long s = 1; s <= ctx.f; ++s) {
        if (by_slot[s].empty()) continue;
        SlotSchedule slot;
        slot.slot = static_cast<int>(s);
        slot.matching = std::move(by_slot[s]);
        res.slots.push_back(std::move(slot));
    }
    return res;
}

}  // namespace ccsched
