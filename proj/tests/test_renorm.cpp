#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "support.hpp"

using namespace lyap;
using namespace testing_support;

namespace {

std::set<double> edge_scales(const EffectiveGraph& g) {
    std::set<double> s;
    for (int v = 0; v < g.size(); ++v)
        for (auto& [w, k] : g.out[v]) s.insert(scale_of(k));
    return s;
}

int edge_count(const EffectiveGraph& g) {
    int c = 0;
    for (auto& o : g.out) c += static_cast<int>(o.size());
    return c;
}

bool has_edge(const EdgeSet& es, int a, int b) { return std::find(es.begin(), es.end(), std::make_pair(a, b)) != es.end(); }

EffectiveGraph graph_of(const std::string& text) { return effective_graph(split(parse_network(text))); }

const ClusterStats& stats_of(const CoalescenceTree& t, const std::string& name) {
    for (auto& n : t.nodes)
        if (n.name == name) return *n.stats;
    throw std::runtime_error("no node " + name);
}

RandomGraphSpec random_spec() {
    RandomGraphSpec spec;
    spec.max_n = 9;
    spec.lo = -8;
    spec.kappa_p = 0.3;
    spec.kappa_lo = -10;
    spec.kappa_hi = -1;
    spec.beta_p = 0.2;
    spec.beta_lo = -10;
    return spec;
}

}  // namespace

TEST_CASE("cut-off graphs") {
    auto g = effective_graph(load_graph("example2_b5.net"));
    auto same = cutoff(g, neg_inf);
    CHECK(same.out == g.out);
    CHECK(same.kappa == g.kappa);

    auto c = cutoff(g, -5);
    CHECK(edge_scales(c) == std::set<double>{0, -2, -5});
    std::set<double> kap;
    for (double k : c.kappa)
        if (k != neg_inf) kap.insert(k);
    CHECK(kap == std::set<double>{-3});

    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        auto r = effective_graph(random_graph(rng, random_spec()));
        int prev = -1;
        for (double n = 2; n >= -10; --n) {
            int cnt = edge_count(cutoff(r, n));
            CHECK(cnt >= prev);
            prev = cnt;
        }
    }
}

TEST_CASE("dominant edges") {
    auto chain = graph_of("base 10\nspecies a b c\nreaction a -> b scale -1\nreaction b -> c scale -4\n");
    CHECK(dominant_subgraph(chain, neg_inf, 0).size() == 2);

    auto g = effective_graph(load_graph("example2_b5.net"));
    auto dom = dominant_subgraph(g, neg_inf, 0);
    CHECK(has_edge(dom, 0, 1));
    CHECK_FALSE(has_edge(dom, 0, 2));

    auto two = graph_of("base 10\nspecies a b c\nreaction a -> b scale -3\nreaction a -> c scale -4\n");
    auto d1 = dominant_subgraph(two, neg_inf, 1);
    CHECK(has_edge(d1, 0, 1));
    CHECK(has_edge(d1, 0, 2));
    auto d0 = dominant_subgraph(two, neg_inf, 0);
    CHECK(d0.size() == 1);

    // edges below alpha are never dominant
    CHECK(dominant_subgraph(two, -3, 1).size() == 1);

    // a dominant deficiency suppresses the transition edge
    auto ac = graph_of("base 10\nspecies a b\nreaction a -> b scale -3\nreaction a -> a + a scale -1\nreaction b -> a scale 0\n");
    auto dac = dominant_subgraph(ac, neg_inf, 0);
    CHECK_FALSE(has_edge(dac, 0, 1));
    CHECK(has_edge(dac, 1, 0));
}

TEST_CASE("maximal dominant SCCs") {
    auto dag = graph_of("base 10\nspecies a b c\nreaction a -> b scale 0\nreaction b -> c scale 0\n");
    CHECK(maximal_dominant_sccs(dag, 0).empty());

    auto g = effective_graph(load_graph("example2_b5.net"));
    auto cl = maximal_dominant_sccs(cutoff(g, -5).size(), dominant_subgraph(cutoff(g, -5), neg_inf, 0, &g));
    REQUIRE(cl.size() == 1);
    CHECK(cl[0] == std::vector<int>{0, 1});

    auto twin = graph_of("base 10\nspecies a b c d\nreaction a -> b scale 0\nreaction b -> a scale 0\n"
                         "reaction c -> d scale -1\nreaction d -> c scale -1\n");
    auto tc = maximal_dominant_sccs(twin, 0);
    REQUIRE(tc.size() == 2);
    CHECK(tc[0] == std::vector<int>{0, 1});
    CHECK(tc[1] == std::vector<int>{2, 3});

    // a dominant exit makes the class non-maximal
    auto leak = graph_of("base 10\nspecies a b c\nreaction a -> b scale 0\nreaction b -> a scale 0\nreaction b -> c scale 0\n");
    CHECK(maximal_dominant_sccs(leak, 0).empty());
}

TEST_CASE("cluster statistics: Example 2") {
    auto t = renormalize(load_graph("example2_b5.net"));
    const auto& g1 = stats_of(t, "G1");
    CHECK(g1.tau_inv == -5);
    CHECK(g1.eps_bar == -7);
    CHECK(g1.Z0 == -12);
    CHECK(g1.regime == Regime::autocatalytic);
    CHECK(g1.lambda == -12);
    CHECK(g1.Z_weight == -7);
    CHECK(g1.k_ext == -17);
    const auto& g2 = stats_of(t, "G2");
    CHECK(g2.regime == Regime::autocatalytic);
    CHECK(g2.lambda == -7);
}

TEST_CASE("cluster statistics: weighted and scale modes agree on a dominant cluster") {
    auto g = graph_of("base 10\nspecies a b c x\nreaction a -> b rate 3\nreaction b -> c rate 2\nreaction c -> a rate 5\n"
                      "reaction b -> a rate 4\nreaction c -> x rate 0.002\nreaction a -> a + a rate 0.03\nreaction x -> a rate 1\n");
    RenormOptions s, w;
    w.mode = Mode::weighted;
    auto gw = effective_graph(split(parse_network("base 10\nspecies a b c x\nreaction a -> b rate 3\nreaction b -> c rate 2\n"
                                                  "reaction c -> a rate 5\nreaction b -> a rate 4\nreaction c -> x rate 0.002\n"
                                                  "reaction a -> a + a rate 0.03\nreaction x -> a rate 1\n")),
                             Mode::weighted);
    auto ss = cluster_stats(g, {0, 1, 2}, s);
    auto sw = cluster_stats(gw, {0, 1, 2}, w);
    CHECK(std::abs(ss.tau_inv - sw.tau_inv) <= 1);
    CHECK(std::abs(ss.eps_bar - sw.eps_bar) <= 1);
    // the weighted exit carries the stationary weight of the exiting member
    CHECK(std::abs(ss.Z0 - sw.Z0) <= 1 + log_b(3, 10));
    CHECK(ss.regime == sw.regime);
}

TEST_CASE("cycle regimes") {
    // cycle 1 -> 2 -> 3 -> 1 at scale 0 with exit xi from 3 and deficiency on 1
    auto make = [](int kappa, int xi) {
        std::string t = "base 10\nspecies 1 2 3 e\nreaction 1 -> 2 scale 0\nreaction 2 -> 3 scale 0\nreaction 3 -> 1 scale 0\n"
                        "reaction 3 -> e scale " + std::to_string(xi) + "\nreaction e -> 1 scale -8\n"
                        "reaction 1 -> 1 + 1 scale " + std::to_string(kappa) + "\n";
        return effective_graph(split(parse_network(t)));
    };
    CHECK(cluster_stats(make(-2, -4), {0, 1, 2}).regime == Regime::autocatalytic);
    CHECK(cluster_stats(make(-4, -2), {0, 1, 2}).regime == Regime::free);
    CHECK(cluster_stats(make(-3, -3), {0, 1, 2}).regime == Regime::resonance);
    RenormOptions wide;
    wide.regime_tol = 1;
    CHECK(cluster_stats(make(-2, -3), {0, 1, 2}, wide).regime == Regime::resonance);

    auto free_stats = cluster_stats(make(-4, -2), {0, 1, 2});
    CHECK(free_stats.lambda == neg_inf);
    CHECK(free_stats.k_ext == -2);
    CHECK(free_stats.Z_weight == -2);
    CHECK(z_alpha(free_stats, -1, 10) == -1);
    CHECK(z_alpha(free_stats, -5, 10) == -2);
}

TEST_CASE("collapse: rewired rates") {
    auto g = effective_graph(load_graph("example2_b5.net"));
    auto [st, rw] = cluster_stats_and_rewiring(g, {0, 1}, {});
    auto c = collapse(g, {0, 1}, rw, 4);
    REQUIRE(c.size() == 3);
    int G = c.index_of_node(4), b1 = c.index_of_node(2);
    CHECK(c.out[G].at(b1) == -17);
    CHECK(c.out[b1].at(G) == -16);
    CHECK(c.kappa[G] == -12);

    auto mm = graph_of("base 10\nspecies S ES P\nreaction S -> ES scale -1\nreaction ES -> S scale 0\n"
                       "reaction ES -> P scale -3\nreaction P -> S scale -4\n");
    auto [ms, mrw] = cluster_stats_and_rewiring(mm, {0, 1}, {});
    auto mc = collapse(mm, {0, 1}, mrw, 3);
    int MG = mc.index_of_node(3), P = mc.index_of_node(2);
    CHECK(mc.out[MG].at(P) == -1 + -3 - 0);
    CHECK(mc.out[P].at(MG) == -4);

    auto closed = graph_of("base 10\nspecies a b\nreaction a -> b scale 0\nreaction b -> a scale 0\n");
    auto [cs, crw] = cluster_stats_and_rewiring(closed, {0, 1}, {});
    CHECK(cs.closed);
    auto cc = collapse(closed, {0, 1}, crw, 2);
    CHECK(cc.size() == 1);
    CHECK(cc.out[0].empty());
    CHECK(cc.kappa[0] == neg_inf);
}

TEST_CASE("renormalize: fixtures") {
    auto m = renormalize(load_graph("cycle2.net"));
    REQUIRE(m.steps.size() == 1);
    CHECK(m.nodes.back().stats->closed);
    CHECK(m.nodes.back().stats->lambda == neg_inf);

    auto e2 = renormalize(load_graph("example2_b5.net"));
    REQUIRE(e2.steps.size() == 2);
    CHECK(e2.steps[0].cutoff == -5);
    CHECK(e2.steps[1].cutoff == -6);
    CHECK(e2.nodes[4].members == std::vector<int>{0, 1});
    CHECK(e2.nodes[5].members == std::vector<int>{2, 3});

    auto e1 = renormalize(load_graph("example1.net"));
    REQUIRE(e1.steps.size() == 1);
    CHECK(e1.nodes[3].members == std::vector<int>{0, 1});
    CHECK(e1.nodes[3].stats->regime == Regime::autocatalytic);
    CHECK(e1.top(0) == 3);
    CHECK(e1.top(2) == 2);
    CHECK(e1.enclosing(1) == std::vector<int>{3});
    CHECK_FALSE(e1.resonance());
    CHECK(renormalize(load_graph("resonant.net")).resonance());
}

TEST_CASE("tree dump golden") {
    CHECK(dump(renormalize(load_graph("example2_b5.net"))) ==
          "1 {1} step=0 n=- tau_inv=- eps_bar=- Z0=- regime=bare lambda=-\n"
          "2 {2} step=0 n=- tau_inv=- eps_bar=- Z0=- regime=bare lambda=-\n"
          "1b {1b} step=0 n=- tau_inv=- eps_bar=- Z0=- regime=bare lambda=-\n"
          "2b {2b} step=0 n=- tau_inv=- eps_bar=- Z0=- regime=bare lambda=-\n"
          "G1 {1,2} step=1 n=-5 tau_inv=-5 eps_bar=-7 Z0=-12 regime=autocatalytic lambda=-12\n"
          "G2 {1b,2b} step=2 n=-6 tau_inv=-6 eps_bar=-1 Z0=-14 regime=autocatalytic lambda=-7\n");
    CHECK(dump(renormalize(load_graph("markov.net"))) ==
          "a {a} step=0 n=- tau_inv=- eps_bar=- Z0=- regime=bare lambda=-\n"
          "b {b} step=0 n=- tau_inv=- eps_bar=- Z0=- regime=bare lambda=-\n"
          "c {c} step=0 n=- tau_inv=- eps_bar=- Z0=- regime=bare lambda=-\n"
          "G1 {a,b} step=1 n=-2 tau_inv=-2 eps_bar=-inf Z0=-1 regime=free lambda=-inf\n"
          "G2 {a,b,c} step=2 n=-3 tau_inv=-3 eps_bar=-inf Z0=-inf regime=free(closed) lambda=-inf\n");
    CHECK(dump(renormalize(load_graph("resonant.net"))).find("G1 {1,2} step=1 n=-2 tau_inv=-2 eps_bar=-3 Z0=-3 regime=resonance") !=
          std::string::npos);
}

TEST_CASE("renormalized generator") {
    // cycle with two exits
    auto g = split(parse_network("base 10\nspecies 1 2 3 x y\nreaction 1 -> 2 rate 1\nreaction 2 -> 3 rate 2\n"
                                 "reaction 3 -> 1 rate 0.5\nreaction 1 -> x rate 1e-4\nreaction 3 -> y rate 2e-4\n"
                                 "reaction x -> 1 rate 1e-2\nreaction y -> 2 rate 1e-2\n"));
    auto R = renormalized_generator(g, {{0, 1, 2}});
    REQUIRE(R.m.rows() == 3);
    CHECK(R.m.colwise().sum().cwiseAbs().maxCoeff() < 1e-15);
    // k_{G -> x} = k_min * xi_1 / k_1 at leading order
    CHECK(std::abs(log_b(R.m(1, 0), 10) - log_b(0.5 * 1e-4 / 1.0, 10)) < 1);
    CHECK(std::abs(log_b(R.m(2, 0), 10) - log_b(0.5 * 2e-4 / 0.5, 10)) < 1);
    CHECK(R.m(0, 1) == doctest::Approx(1e-2));

    auto lam = spectral_abscissa(generator(g).m);
    CHECK(std::abs(lam) < 1e-12);
    CHECK(std::abs(spectral_abscissa(R.m)) < 1e-12);

    auto auto_g = g;
    auto_g.kappa[0] = 0.1;
    CHECK_THROWS_AS(renormalized_generator(auto_g, {{0, 1, 2}}), std::invalid_argument);

    auto deg = g;
    deg.beta[3] = 1e-3;
    deg.beta[4] = 1e-3;
    double l = spectral_abscissa(generator(deg).m);
    double lr = spectral_abscissa(renormalized_generator(deg, {{0, 1, 2}}).m);
    CHECK(std::abs(log_b(-l, 10) - log_b(-lr, 10)) <= 1);
}

TEST_CASE("property: coarsening, cut scales, cluster exits") {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 60; ++trial) {
        auto g = random_graph(rng, random_spec());
        auto t = renormalize(g);
        CHECK(static_cast<int>(t.steps.size()) <= g.size());
        for (size_t i = 1; i < t.steps.size(); ++i) CHECK(t.steps[i].cutoff < t.steps[i - 1].cutoff);
        int vertices = g.size();
        for (auto& s : t.steps) {
            for (int id : s.clusters) {
                const auto& node = t.nodes[id];
                vertices -= static_cast<int>(node.children.size()) - 1;
                CHECK(node.children.size() >= 2);
                // outgoing edges of a cluster are never dominant
                if (!node.stats->degraded_exit) CHECK(node.stats->Z0 <= -1);
                CHECK(node.stats->tau_inv == s.cutoff);
            }
        }
        CHECK(t.final_graph.size() == vertices);
        // a compound's outgoing rates sit below its internal minimum
        auto& f = t.final_graph;
        for (int v = 0; v < f.size(); ++v) {
            const auto& node = t.nodes[f.ids[v]];
            if (!node.stats) continue;
            for (auto& [w, k] : f.out[v]) CHECK(scale_of(k) < node.stats->tau_inv);
        }
    }
}

TEST_CASE("property: growth is monotone across cut graphs") {
    std::mt19937_64 rng(23);
    auto spec = random_spec();
    spec.kappa_p = 0.5;
    for (int trial = 0; trial < 40; ++trial) {
        auto g = random_graph(rng, spec);
        auto t = renormalize(g);
        auto A = generator(g).m;
        double prev = neg_inf;
        for (auto& s : t.steps) {
            // drop transition coefficients below the cut, keep the diagonal
            Eigen::MatrixXd C = A;
            for (int x = 0; x < g.size(); ++x)
                for (auto& [y, k] : g.out[x])
                    if (scale_of(log_b(k, g.base_b)) < s.cutoff) C(y, x) = 0;
            double lam = spectral_abscissa(C);
            CHECK(lam >= prev - 1e-12 * std::max(1.0, std::abs(lam)));
            prev = lam;
        }
    }
}

TEST_CASE("property: regimes agree with the first-order growth rate") {
    std::mt19937_64 rng(24);
    auto spec = random_spec();
    spec.kappa_p = 0.5;
    spec.beta_p = 0.0;
    int checked = 0;
    for (int trial = 0; trial < 80; ++trial) {
        auto g = random_graph(rng, spec);
        auto t = renormalize(g);
        for (auto& s : t.steps) {
            if (s.index != 1) continue;
            for (int id : s.clusters) {
                const auto& st = *t.nodes[id].stats;
                if (st.closed || st.Z0 == neg_inf || st.eps_bar == neg_inf) continue;
                if (std::abs(st.eps_bar - st.Z0) < 2) continue;
                auto fo = first_order_lambda(g, st.members);
                if (st.regime == Regime::autocatalytic) CHECK(fo.lambda1 > 0);
                else CHECK(fo.lambda1 < 0);
                ++checked;
            }
        }
    }
    CHECK(checked > 5);
}
