#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccsched {

enum class Side { X, Y };

inline Side other_side(Side s) { return s == Side::X ? Side::Y : Side::X; }

/// A vertex of the bipartite graph: side X holds input ports, side Y output ports.
struct VertexRef {
    Side side;
    int index;

    friend bool operator==(const VertexRef& a, const VertexRef& b) {
        return a.side == b.side && a.index == b.index;
    }
};

inline VertexRef x_vertex(int i) { return {Side::X, i}; }
inline VertexRef y_vertex(int j) { return {Side::Y, j}; }

/// Link colors are dense integers 1..delta; 0 is the don't-care symbol.
using Color = int;
inline constexpr Color kNoColor = 0;

struct DegreeOverflow : std::runtime_error {
    explicit DegreeOverflow(const std::string& what) : std::runtime_error(what) {}
};

struct ConsistencyViolation : std::runtime_error {
    explicit ConsistencyViolation(const std::string& what) : std::runtime_error(what) {}
};

/// One edge of the multigraph, split into two half-edge links with independent colors.
/// The edge is a variable when the two link colors differ.
struct Edge {
    int id = -1;
    int x = -1;  // input port index
    int y = -1;  // output port index
    int rank = 0;  // 1-based among parallel edges of the same (x, y) pair
    long long arrival_slot = 0;
    Color color_x = kNoColor;
    Color color_y = kNoColor;

    Color color_at(Side s) const { return s == Side::X ? color_x : color_y; }
    bool is_variable() const { return color_x != color_y; }
    bool is_constant() const { return color_x == color_y && color_x != kNoColor; }
    bool is_uncolored() const { return color_x == kNoColor && color_y == kNoColor; }
};

/// Recomputed-from-scratch view of the coloring state; ignores all cached occupancy.
struct ConsistencyReport {
    long long variables = 0;
    long long constants = 0;
    long long uncolored = 0;
    bool consistent = true;
};

/// Bipartite multigraph over N input and N output ports with half-edge coloring.
///
/// Invariant maintained by every public mutator: at each vertex all non-empty
/// link colors are pairwise distinct. Occupancy maps are kept incrementally;
/// audit() recomputes everything from the edge list as an independent check.
class ColoredBipartiteMultigraph {
public:
    ColoredBipartiteMultigraph(int n, int delta)
        : n_(n), delta_(delta),
          occupancy_(2 * static_cast<size_t>(n), std::vector<int>(delta + 1, -1)),
          incident_(2 * static_cast<size_t>(n)),
          degree_(2 * static_cast<size_t>(n), 0),
          next_free_(2 * static_cast<size_t>(n), 1),
          pair_multiplicity_(static_cast<size_t>(n) * n, 0),
          class_mutex_(std::make_unique<std::mutex>()) {
        if (n <= 0 || delta <= 0) throw std::invalid_argument("graph needs n >= 1 and delta >= 1");
    }

    int ports() const { return n_; }
    int delta() const { return delta_; }
    size_t edge_count() const { return edges_.size(); }
    const Edge& edge(int id) const { return edges_[id]; }
    const std::vector<Edge>& edges() const { return edges_; }

    int degree(VertexRef v) const { return degree_[vid(v)]; }
    const std::vector<int>& incident_edges(VertexRef v) const { return incident_[vid(v)]; }

    /// Edge currently holding color c at vertex v, or -1.
    int occupant(VertexRef v, Color c) const { return occupancy_[vid(v)][c]; }

    /// Ordered ids of edges that are currently variables.
    const std::set<int>& variables() const { return variables_; }
    long long variable_count() const { return static_cast<long long>(variables_.size()); }
    long long uncolored_count() const { return uncolored_count_; }
    long long constant_count() const {
        return static_cast<long long>(edges_.size()) - variable_count() - uncolored_count_;
    }

    int add_edge(int input, int output, long long arrival_slot) {
        if (input < 0 || input >= n_ || output < 0 || output >= n_)
            throw std::out_of_range("port index out of range");
        int xv = vid(x_vertex(input));
        int yv = vid(y_vertex(output));
        if (degree_[xv] >= delta_ || degree_[yv] >= delta_)
            throw DegreeOverflow("vertex already has delta incident edges");
        Edge e;
        e.id = static_cast<int>(edges_.size());
        e.x = input;
        e.y = output;
        e.rank = ++pair_multiplicity_[static_cast<size_t>(input) * n_ + output];
        e.arrival_slot = arrival_slot;
        edges_.push_back(e);
        incident_[xv].push_back(e.id);
        incident_[yv].push_back(e.id);
        ++degree_[xv];
        ++degree_[yv];
        ++uncolored_count_;
        return e.id;
    }

    int add_edge(VertexRef x, VertexRef y, long long arrival_slot) {
        if (x.side != Side::X || y.side != Side::Y)
            throw std::invalid_argument("add_edge expects an X vertex and a Y vertex");
        return add_edge(x.index, y.index, arrival_slot);
    }

    void set_link_color(int edge_id, Side endpoint, Color c) {
        Edge& e = edges_[edge_id];
        int v = vid(endpoint_of(e, endpoint));
        Color old = e.color_at(endpoint);
        if (c == old) return;
        if (c != kNoColor) {
            if (c < 1 || c > delta_) throw std::out_of_range("color outside 1..delta");
            if (occupancy_[v][c] != -1)
                throw ConsistencyViolation("color already occupied at vertex");
        }
        auto cls_before = classify(e);
        if (old != kNoColor) occupancy_[v][old] = -1;
        if (c != kNoColor) occupancy_[v][c] = edge_id;
        (endpoint == Side::X ? e.color_x : e.color_y) = c;
        reclassify(e, cls_before);
    }

    /// Swap the colors of the pivot-side links of two edges incident to the same
    /// vertex. This is the primitive beneath color exchange: per-vertex color sets
    /// are permuted, so consistency is preserved without any intermediate state.
    void swap_pivot_links(int edge_a, int edge_b, VertexRef pivot) {
        Edge& ea = edges_[edge_a];
        Edge& eb = edges_[edge_b];
        Side sa = side_at(ea, pivot);
        Side sb = side_at(eb, pivot);
        Color ca = ea.color_at(sa);
        Color cb = eb.color_at(sb);
        if (ca == cb) return;
        int v = vid(pivot);
        auto ca_cls = classify(ea);
        auto cb_cls = classify(eb);
        if (ca != kNoColor) occupancy_[v][ca] = edge_b;
        if (cb != kNoColor) occupancy_[v][cb] = edge_a;
        (sa == Side::X ? ea.color_x : ea.color_y) = cb;
        (sb == Side::X ? eb.color_x : eb.color_y) = ca;
        reclassify(ea, ca_cls);
        reclassify(eb, cb_cls);
    }

    /// Reassign whole-edge colors among a set of constant edges (a permutation of
    /// the multiset of colors they already hold between the same vertex pair).
    void recolor_constants(const std::vector<int>& edge_ids, const std::vector<Color>& colors) {
        if (edge_ids.size() != colors.size())
            throw std::invalid_argument("edge/color count mismatch");
        for (int id : edge_ids) {
            Edge& e = edges_[id];
            if (!e.is_constant()) throw std::invalid_argument("recolor_constants on non-constant edge");
            occupancy_[vid(x_vertex(e.x))][e.color_x] = -1;
            occupancy_[vid(y_vertex(e.y))][e.color_y] = -1;
        }
        for (size_t k = 0; k < edge_ids.size(); ++k) {
            Edge& e = edges_[edge_ids[k]];
            Color c = colors[k];
            int xv = vid(x_vertex(e.x));
            int yv = vid(y_vertex(e.y));
            if (c < 1 || c > delta_ || occupancy_[xv][c] != -1 || occupancy_[yv][c] != -1)
                throw ConsistencyViolation("recolor_constants would collide");
            occupancy_[xv][c] = e.id;
            occupancy_[yv][c] = e.id;
            e.color_x = c;
            e.color_y = c;
        }
    }

    /// Test hook: writes a link color without any consistency check, leaving the
    /// cached occupancy untouched so that audit() can detect the damage.
    void force_link_color(int edge_id, Side endpoint, Color c) {
        Edge& e = edges_[edge_id];
        auto cls_before = classify(e);
        (endpoint == Side::X ? e.color_x : e.color_y) = c;
        reclassify(e, cls_before);
    }

    /// Colors every remaining uncolored link with the lowest color free at the
    /// link's own vertex, X side first, then Y side, in ascending vertex order.
    /// Pre-colored links are never touched. The result is consistent but may
    /// contain variables.
    void greedy_consistent_coloring() { greedy_fill(nullptr); }

    /// Same traversal but picks uniformly among the free colors at the vertex.
    /// Used for random re-initialization of survivors.
    void greedy_consistent_coloring(std::mt19937_64& rng) { greedy_fill(&rng); }

    /// Strips all link colors so the graph can be re-initialized from scratch.
    void clear_colors() {
        for (auto& occ : occupancy_) std::fill(occ.begin(), occ.end(), -1);
        std::fill(next_free_.begin(), next_free_.end(), 1);
        for (Edge& e : edges_) {
            e.color_x = kNoColor;
            e.color_y = kNoColor;
        }
        variables_.clear();
        uncolored_count_ = static_cast<long long>(edges_.size());
    }

    /// First-principles audit: recomputes per-vertex color sets from the edge
    /// list, ignoring cached occupancy. A failed audit is a report, not an error.
    ConsistencyReport audit() const {
        ConsistencyReport rep;
        for (const Edge& e : edges_) {
            if (e.is_uncolored()) ++rep.uncolored;
            else if (e.is_variable()) ++rep.variables;
            else ++rep.constants;
        }
        std::vector<char> seen(delta_ + 1, 0);
        for (int v = 0; v < 2 * n_; ++v) {
            std::fill(seen.begin(), seen.end(), 0);
            for (int id : incident_[v]) {
                const Edge& e = edges_[id];
                Color c = v < n_ ? e.color_x : e.color_y;
                if (c == kNoColor) continue;
                if (c < 1 || c > delta_ || seen[c]) {
                    rep.consistent = false;
                    break;
                }
                seen[c] = 1;
            }
            if (!rep.consistent) break;
        }
        return rep;
    }

    /// Cross-check of the incremental occupancy maps against the edge list.
    bool occupancy_matches() const {
        for (int v = 0; v < 2 * n_; ++v) {
            std::vector<int> expect(delta_ + 1, -1);
            for (int id : incident_[v]) {
                const Edge& e = edges_[id];
                Color c = v < n_ ? e.color_x : e.color_y;
                if (c == kNoColor) continue;
                if (c < 1 || c > delta_ || expect[c] != -1) return false;
                expect[c] = id;
            }
            if (expect != occupancy_[v]) return false;
        }
        return true;
    }

    /// One line per edge: `edge <id> x=<i> y=<j> r=<rank> colors=(<cx>,<cy>) arrived=<slot>`.
    std::string dump() const {
        std::ostringstream out;
        for (const Edge& e : edges_) {
            out << "edge " << e.id << " x=" << e.x << " y=" << e.y << " r=" << e.rank
                << " colors=(" << color_token(e.color_x) << ',' << color_token(e.color_y)
                << ") arrived=" << e.arrival_slot << '\n';
        }
        return out.str();
    }

private:
    static std::string color_token(Color c) { return c == kNoColor ? "-" : std::to_string(c); }

    int vid(VertexRef v) const { return v.side == Side::X ? v.index : n_ + v.index; }

    static VertexRef endpoint_of(const Edge& e, Side s) {
        return s == Side::X ? x_vertex(e.x) : y_vertex(e.y);
    }

    static Side side_at(const Edge& e, VertexRef v) {
        if (v.side == Side::X && e.x == v.index) return Side::X;
        if (v.side == Side::Y && e.y == v.index) return Side::Y;
        throw std::invalid_argument("vertex is not an endpoint of the edge");
    }

    enum class EdgeClass { Uncolored, Variable, Constant };

    static EdgeClass classify(const Edge& e) {
        if (e.is_uncolored()) return EdgeClass::Uncolored;
        return e.is_variable() ? EdgeClass::Variable : EdgeClass::Constant;
    }

    // The class index is the only state shared across vertices; link colors and
    // occupancy are vertex-local, so phased-parallel mutation needs just this lock.
    void reclassify(Edge& e, EdgeClass before) {
        EdgeClass after = classify(e);
        if (before == after) return;
        std::lock_guard<std::mutex> lock(*class_mutex_);
        if (before == EdgeClass::Uncolored) --uncolored_count_;
        if (before == EdgeClass::Variable) variables_.erase(e.id);
        if (after == EdgeClass::Uncolored) ++uncolored_count_;
        if (after == EdgeClass::Variable) variables_.insert(e.id);
    }

    Color lowest_free(int v) {
        int& cur = next_free_[v];
        while (cur <= delta_ && occupancy_[v][cur] != -1) ++cur;
        return cur;
    }

    Color random_free(int v, std::mt19937_64& rng) {
        std::vector<Color> free;
        for (Color c = 1; c <= delta_; ++c)
            if (occupancy_[v][c] == -1) free.push_back(c);
        if (free.empty()) return delta_ + 1;
        return free[std::uniform_int_distribution<size_t>(0, free.size() - 1)(rng)];
    }

    void greedy_fill(std::mt19937_64* rng) {
        // The cursor in next_free_ only advances; colors are never released while
        // filling, so the lowest-free scan is amortized O(delta) per vertex.
        std::fill(next_free_.begin(), next_free_.end(), 1);
        for (Side side : {Side::X, Side::Y}) {
            for (int i = 0; i < n_; ++i) {
                int v = vid({side, i});
                for (int id : incident_[v]) {
                    Edge& e = edges_[id];
                    if (e.color_at(side) != kNoColor) continue;
                    Color c = rng ? random_free(v, *rng) : lowest_free(v);
                    if (c > delta_)
                        throw ConsistencyViolation("no free color at vertex (degree exceeds delta?)");
                    set_link_color(id, side, c);
                }
            }
        }
    }

    int n_;
    int delta_;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> occupancy_;  // [vertex][color] -> edge id or -1
    std::vector<std::vector<int>> incident_;   // [vertex] -> edge ids in creation order
    std::vector<int> degree_;
    std::vector<int> next_free_;               // greedy fill cursor per vertex
    std::vector<int> pair_multiplicity_;       // [x*n+y] -> parallel edge count
    std::unique_ptr<std::mutex> class_mutex_;
    std::set<int> variables_;
    long long uncolored_count_ = 0;
};

}  // namespace ccsched
