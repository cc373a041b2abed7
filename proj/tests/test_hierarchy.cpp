#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

using namespace lyap;
using namespace testing_support;

namespace {

CoalescenceTree tree_of(const std::string& text) { return renormalize(split(parse_network(text))); }

std::vector<double> pick(const std::vector<double>& x, const std::vector<int>& idx) {
    std::vector<double> r;
    for (int i : idx) r.push_back(x[i]);
    return r;
}

}  // namespace

TEST_CASE("accessible set") {
    auto g = load_graph("example2_b5.net");
    CHECK(restrict_accessible(g, 0) == std::vector<int>{0, 1, 2, 3});
    auto e1 = load_graph("example1.net");
    CHECK(restrict_accessible(e1, "3") == std::vector<int>{2});
    auto chain = split(parse_network("base 10\nspecies 1 2 3\nreaction 1 -> 2 scale 0\nreaction 2 -> 3 scale 0\n"));
    CHECK(restrict_accessible(chain, 1) == std::vector<int>{1, 2});
}

TEST_CASE("cores and threshold") {
    auto t = renormalize(load_graph("example2_b5.net"));
    auto cs = cores_and_threshold(t, 0);
    REQUIRE(cs.cores.size() == 1);
    CHECK(t.nodes[t.final_graph.ids[cs.cores[0]]].name == "G2");
    CHECK(cs.threshold == -7);
    CHECK_FALSE(cs.resonant_cores);

    auto m = cores_and_threshold(renormalize(load_graph("markov.net")), 0);
    CHECK(m.threshold == neg_inf);

    auto twin = tree_of("base 10\nspecies s x y\nreaction s -> x scale -1\nreaction s -> y scale -1\n"
                        "reaction x -> x + x scale -7\nreaction y -> y + y scale -7\n");
    auto tc = cores_and_threshold(twin, 0);
    CHECK(tc.cores.size() == 2);
    CHECK(tc.threshold == -7);
    CHECK(tc.resonant_cores);

    auto apart = tree_of("base 10\nspecies s x y\nreaction s -> x scale -1\nreaction s -> y scale -1\n"
                         "reaction x -> x + x scale -7\nreaction y -> y + y scale -9\n");
    auto ac = cores_and_threshold(apart, 0);
    CHECK(ac.cores.size() == 1);
    CHECK_FALSE(ac.resonant_cores);
}

TEST_CASE("path depths and the leading DAG") {
    auto t = renormalize(load_graph("example2_b5.net"));
    const auto& f = t.final_graph;
    int G1 = f.index_of_node(4), G2 = f.index_of_node(5);
    CHECK(path_depth(f, {G2}, -7) == 0);
    CHECK(path_depth(f, {G2, G1}, -7) == 13);
    auto dag = leading_dag(f, G2, -7);
    CHECK(dag.depth[G2] == 0);
    CHECK(dag.depth[G1] == 13);
    CHECK(dag.edges.size() == 1);

    auto star = effective_graph(split(parse_network("base 10\nspecies r a b\nreaction r -> a scale 0\nreaction r -> b scale -2\n")));
    auto sd = leading_dag(star, 0, neg_inf);
    CHECK(sd.depth == std::vector<double>{0, 0, 2});
    CHECK(sd.edges.size() == 2);

    auto diamond = effective_graph(split(parse_network(
        "base 10\nspecies r a b t\nreaction r -> a scale 0\nreaction r -> b scale 0\n"
        "reaction a -> t scale -1\nreaction b -> t scale -1\n")));
    auto dd = leading_dag(diamond, 0, neg_inf);
    CHECK(dd.depth[3] == 0);
    CHECK(dd.edges.size() == 4);
}

TEST_CASE("hierarchical estimates: Example 2") {
    auto h = hier_estimates(renormalize(load_graph("example2_b5.net")), 0);
    CHECK(h.status == LambdaStatus::autocatalytic);
    CHECK(h.lambda_log == -7);
    CHECK(h.pi_log == std::vector<double>{-12, -12, 0, 0});
    CHECK(h.vdagger_log == std::vector<double>{-10, -10, 0, 0});
    CHECK(h.v_log == std::vector<double>{-18, -13, -4, 0});
    CHECK_FALSE(h.resonance);
}

TEST_CASE("hierarchical estimates: Example 1 and a Markov chain") {
    auto t = renormalize(load_graph("example1.net"));
    auto h = hier_estimates(t, 0);
    CHECK(h.status == LambdaStatus::autocatalytic);
    CHECK(h.lambda_log == -3);
    CHECK(pick(h.pi_log, {0, 1, 2}) == std::vector<double>{0, 0, -3});

    auto g = load_graph("markov.net");
    auto m = hier_estimates(renormalize(g), 0);
    CHECK(m.status == LambdaStatus::non_positive);
    CHECK(m.lambda_log == neg_inf);
    auto pi = stationary(weights(g, 0.0, WeightFlavor::Tilde));
    for (int s = 0; s < 3; ++s) CHECK(std::abs(m.pi_log[s] - log_max_aligned(pi, s, 10)) <= 1);
}

TEST_CASE("supports follow accessibility") {
    auto t = renormalize(load_graph("example1.net"));
    auto h = hier_estimates(t, 2);
    CHECK(h.accessible == std::vector<int>{2});
    CHECK(h.pi_log[0] == neg_inf);
    CHECK(h.pi_log[2] == 0);
}

TEST_CASE("comparison against the oracle") {
    auto g = load_graph("cycle2.net");
    auto h = hier_estimates(renormalize(g), 0);
    auto rep = compare(h, perron(g), g.base_b, g.names);
    CHECK(rep.max_deviation == doctest::Approx(0).epsilon(1e-9));
    CHECK(rep.rows.size() == 5);

    auto e = load_graph("example2_b5.net");
    auto he = hier_estimates(renormalize(e), 0);
    auto re = compare(he, perron(e), e.base_b, e.names);
    CHECK(re.max_deviation <= 2);
    CHECK(re.rows[0].quantity == "lambda");
}

TEST_CASE("property: DAG depths match shortest depths") {
    std::mt19937_64 rng(31);
    RandomGraphSpec spec;
    spec.kappa_p = 0.4;
    spec.lo = -7;
    for (int trial = 0; trial < 60; ++trial) {
        auto t = renormalize(random_graph(rng, spec));
        auto cs = cores_and_threshold(t, 0);
        const auto& f = t.final_graph;
        auto dag = leading_dag(f, cs.cores, cs.threshold);
        for (auto& [x, y] : dag.edges) CHECK(dag.depth[y] == dag.depth[x] + edge_depth(f, x, y, cs.threshold));
        for (int v : cs.accessible) CHECK(dag.depth[v] != pos_inf);
        for (int c : cs.cores) CHECK(dag.depth[c] == 0);
    }
}
