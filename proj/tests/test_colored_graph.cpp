#include <catch2/catch_amalgamated.hpp>

#include "ccsched/colored_graph.hpp"
#include "test_support.hpp"

using namespace ccsched;

TEST_CASE("fresh edge is uncolored with rank 1") {
    ColoredBipartiteMultigraph g(3, 3);
    int id = g.add_edge(1, 1, 5);
    const Edge& e = g.edge(id);
    CHECK(e.rank == 1);
    CHECK(e.is_uncolored());
    CHECK(g.uncolored_count() == 1);
}

TEST_CASE("parallel edges get increasing ranks") {
    ColoredBipartiteMultigraph g(3, 3);
    g.add_edge(1, 2, 1);
    int second = g.add_edge(1, 2, 2);
    CHECK(g.edge(second).rank == 2);
}

TEST_CASE("add_edge refuses a vertex already at delta") {
    ColoredBipartiteMultigraph g(3, 2);
    g.add_edge(1, 0, 1);
    g.add_edge(1, 1, 2);
    CHECK_THROWS_AS(g.add_edge(1, 2, 3), DegreeOverflow);
}

TEST_CASE("set_link_color updates classification and occupancy") {
    ColoredBipartiteMultigraph g(3, 3);
    int id = g.add_edge(0, 0, 1);
    g.set_link_color(id, Side::X, 1);
    CHECK(g.edge(id).is_variable());  // (1, empty)
    CHECK(g.occupant(x_vertex(0), 1) == id);

    g.set_link_color(id, Side::Y, 2);
    CHECK(g.edge(id).is_variable());
    g.set_link_color(id, Side::Y, 1);  // releases 2 at y0, takes 1
    CHECK(g.edge(id).is_constant());
    CHECK(g.occupant(y_vertex(0), 2) == -1);
}

TEST_CASE("duplicate color at a vertex is rejected") {
    ColoredBipartiteMultigraph g(3, 3);
    int a = g.add_edge(0, 0, 1);
    int b = g.add_edge(0, 1, 2);
    g.set_link_color(a, Side::X, 1);
    CHECK_THROWS_AS(g.set_link_color(b, Side::X, 1), ConsistencyViolation);
    // failed call must not have mutated anything
    CHECK(g.edge(b).is_uncolored());
    CHECK(g.occupancy_matches());
}

TEST_CASE("both links same color classifies constant") {
    ColoredBipartiteMultigraph g(2, 2);
    int id = g.add_edge(0, 1, 1);
    g.set_link_color(id, Side::X, 2);
    g.set_link_color(id, Side::Y, 2);
    CHECK(g.edge(id).is_constant());
    CHECK(g.constant_count() == 1);
}

TEST_CASE("single edge with delta=1 colors to (1,1) with no variables") {
    ColoredBipartiteMultigraph g(2, 1);
    g.add_edge(0, 0, 1);
    g.greedy_consistent_coloring();
    auto rep = g.audit();
    CHECK(rep.consistent);
    CHECK(rep.variables == 0);
    CHECK(rep.uncolored == 0);
    CHECK(g.edge(0).color_x == 1);
    CHECK(g.edge(0).color_y == 1);
}

TEST_CASE("greedy coloring of random 6x6 multigraphs is consistent and complete") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        auto g = ccsched::testing::random_multigraph(6, 5, 20, rng);
        g.greedy_consistent_coloring();
        auto rep = g.audit();
        CHECK(rep.consistent);
        CHECK(rep.uncolored == 0);
        CHECK(g.occupancy_matches());
        CHECK(rep.variables + rep.constants + rep.uncolored ==
              static_cast<long long>(g.edge_count()));
    }
}

TEST_CASE("greedy coloring never touches pre-colored links") {
    ColoredBipartiteMultigraph g(3, 3);
    int a = g.add_edge(0, 0, 1);
    g.add_edge(0, 1, 2);
    g.add_edge(1, 0, 3);
    g.set_link_color(a, Side::X, 3);
    g.set_link_color(a, Side::Y, 3);
    g.greedy_consistent_coloring();
    CHECK(g.edge(a).color_x == 3);
    CHECK(g.edge(a).color_y == 3);
    auto rep = g.audit();
    CHECK(rep.consistent);
    CHECK(rep.uncolored == 0);
}

TEST_CASE("audit detects a forced inconsistency") {
    ColoredBipartiteMultigraph g(3, 3);
    int a = g.add_edge(0, 0, 1);
    int b = g.add_edge(0, 1, 2);
    g.set_link_color(a, Side::X, 1);
    g.force_link_color(b, Side::X, 1);  // bypasses the consistency check
    CHECK_FALSE(g.audit().consistent);
}

TEST_CASE("random operation sequences keep the audit green") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        ColoredBipartiteMultigraph g(4, 4);
        std::uniform_int_distribution<int> port(0, 3), color(0, 4), coin(0, 1);
        for (int step = 0; step < 60; ++step) {
            if (coin(rng) == 0 && g.edge_count() < 12) {
                try {
                    g.add_edge(port(rng), port(rng), step);
                } catch (const DegreeOverflow&) {
                }
            } else if (g.edge_count() > 0) {
                int id = std::uniform_int_distribution<int>(
                    0, static_cast<int>(g.edge_count()) - 1)(rng);
                try {
                    g.set_link_color(id, coin(rng) ? Side::X : Side::Y, color(rng));
                } catch (const ConsistencyViolation&) {
                }
            }
        }
        auto rep = g.audit();
        CHECK(rep.consistent);
        CHECK(g.occupancy_matches());
        CHECK(rep.variables == g.variable_count());
        CHECK(rep.uncolored == g.uncolored_count());
    }
}

TEST_CASE("dump format") {
    ColoredBipartiteMultigraph g(3, 3);
    int id = g.add_edge(2, 1, 17);
    g.set_link_color(id, Side::Y, 2);
    CHECK(g.dump() == "edge 0 x=2 y=1 r=1 colors=(-,2) arrived=17\n");
}
