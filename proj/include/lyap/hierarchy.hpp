#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>
#include <stdexcept>
#include <string>
#include <vector>

#include "lyap/graph.hpp"
#include "lyap/network.hpp"
#include "lyap/oracle.hpp"
#include "lyap/renorm.hpp"
#include "lyap/scale.hpp"

namespace lyap {

inline std::vector<int> restrict_accessible(const SplitGraph& g, int sigma0) {
    if (sigma0 < 0 || sigma0 >= g.size()) throw std::invalid_argument("unknown species index " + std::to_string(sigma0));
    auto seen = reachable_from(adjacency(g), {sigma0});
    std::vector<int> r;
    for (int s = 0; s < g.size(); ++s)
        if (seen[s]) r.push_back(s);
    return r;
}

inline std::vector<int> restrict_accessible(const SplitGraph& g, const std::string& id) {
    int s = find_species(g, id);
    if (s < 0) throw std::invalid_argument("unknown species '" + id + "'");
    return restrict_accessible(g, s);
}

struct SccEntry {
    int vertex = 0;  // index in the final effective graph
    int node = 0;    // tree node
    double alpha = neg_inf;
    bool autocatalytic = false;
    bool resonance = false;
};

struct CoreSet {
    int sigma0 = 0;
    std::vector<int> accessible;      // final-graph vertices reachable from top(sigma0)
    std::vector<SccEntry> sccs;
    std::vector<int> cores;           // final-graph vertices
    double threshold = neg_inf;       // log_b of the threshold rate alpha_1
    bool resonant_cores = false;
    bool resonance = false;           // some accessible cluster or bare vertex sits on a resonance
    bool cemetery = false;
};

namespace detail {

inline bool bare_autocatalytic(const EffectiveGraph& g, int v, double tol, bool& resonance) {
    if (g.kappa[v] == neg_inf) return false;
    double k = scale_of(g.ktot(v)), kap = scale_of(g.kappa[v]);
    if (k == neg_inf || kap > k + tol) return true;
    if (std::abs(kap - k) <= tol) resonance = true;
    return false;
}

inline bool beta_dominant(const EffectiveGraph& g, int v, double tol) {
    return g.beta[v] != neg_inf && scale_of(g.beta[v]) >= g.vertex_scale(v) - tol;
}

}  // namespace detail

inline CoreSet cores_and_threshold(const CoalescenceTree& tree, int sigma0) {
    const EffectiveGraph& f = tree.final_graph;
    if (sigma0 < 0 || sigma0 >= tree.n_species) throw std::invalid_argument("unknown species index");
    double tol = tree.options.tol, rtol = tree.options.regime_tol;
    CoreSet cs;
    cs.sigma0 = sigma0;
    int root = f.index_of_node(tree.top(sigma0));
    Adjacency adj(f.size());
    for (int v = 0; v < f.size(); ++v)
        for (auto& [w, k] : f.out[v]) adj[v].push_back(w);
    auto seen = reachable_from(adj, {root});
    for (int v = 0; v < f.size(); ++v) {
        if (!seen[v]) continue;
        cs.accessible.push_back(v);
        const TreeNode& node = tree.nodes[f.ids[v]];
        SccEntry e;
        e.vertex = v;
        e.node = node.id;
        if (node.stats) {
            if (node.stats->regime == Regime::resonance) cs.resonance = true;
            e.resonance = node.stats->regime == Regime::resonance;
            e.autocatalytic = node.stats->growing;
            if (e.autocatalytic) e.alpha = node.stats->lambda;
        } else {
            bool res = false;
            e.autocatalytic = detail::bare_autocatalytic(f, v, rtol, res);
            if (res) {
                cs.resonance = e.resonance = true;
                e.autocatalytic = tree.options.branch == ResonanceBranch::autocatalytic;
            }
            if (e.autocatalytic) e.alpha = f.kappa[v];
        }
        if (e.autocatalytic || f.out[v].empty()) cs.sccs.push_back(e);
    }
    // clusters nested below an accessible top vertex also carry resonance flags
    for (int v : cs.accessible)
        for (int s : tree.nodes[f.ids[v]].members)
            for (int c : tree.enclosing(s))
                if (tree.nodes[c].stats && tree.nodes[c].stats->regime == Regime::resonance) cs.resonance = true;

    double best = neg_inf;
    for (auto& e : cs.sccs) best = std::max(best, e.alpha);
    if (best != neg_inf) {
        cs.threshold = best;
        int near = 0;
        for (auto& e : cs.sccs) {
            if (e.alpha == best) cs.cores.push_back(e.vertex);
            if (e.alpha != neg_inf && scale_of(e.alpha) >= scale_of(best) - rtol) ++near;
        }
        cs.resonant_cores = near >= 2;
    } else {
        for (auto& e : cs.sccs) cs.cores.push_back(e.vertex);
        if (cs.cores.empty()) {
            // every accessible vertex leaks or cycles sub-dominantly: fall back on sink components
            Adjacency sub(f.size());
            for (int v : cs.accessible) sub[v] = adj[v];
            auto comps = tarjan_scc(sub);
            std::vector<int> comp_of(f.size(), -1);
            for (size_t c = 0; c < comps.size(); ++c)
                for (int v : comps[c]) comp_of[v] = static_cast<int>(c);
            for (size_t c = 0; c < comps.size(); ++c) {
                if (!seen[comps[c][0]]) continue;
                bool sink = true;
                for (int v : comps[c])
                    for (int w : adj[v])
                        if (comp_of[w] != static_cast<int>(c)) sink = false;
                if (sink) cs.cores.insert(cs.cores.end(), comps[c].begin(), comps[c].end());
            }
            std::sort(cs.cores.begin(), cs.cores.end());
        }
        for (int v : cs.accessible)
            if (detail::beta_dominant(f, v, tol)) cs.cemetery = true;
    }
    return cs;
}

// log_b w(alpha)_{x->y}: the compound prefactor is already folded into the stored rate.
inline double edge_log_weight(const EffectiveGraph& g, int x, int y, double alpha) {
    auto it = g.out[x].find(y);
    if (it == g.out[x].end()) throw std::invalid_argument("missing edge");
    return it->second - std::max(g.ktot(x), alpha);
}

inline double edge_depth(const EffectiveGraph& g, int x, int y, double alpha) {
    return -scale_of(edge_log_weight(g, x, y, alpha));
}

inline double path_depth(const EffectiveGraph& g, const std::vector<int>& path, double alpha) {
    double d = 0;
    for (size_t i = 1; i < path.size(); ++i) d += edge_depth(g, path[i - 1], path[i], alpha);
    return d;
}

struct DepthDag {
    std::vector<int> roots;
    EdgeSet edges;
    std::vector<double> depth;  // +inf where unreachable
};

namespace detail {

struct Reach {
    std::vector<double> depth;  // +inf where unreachable
    std::vector<int> hops;      // fewest edges among depth-minimizing paths
};

// Multi-source Dijkstra on (depth, hops) in lexicographic order.
inline Reach reach(const EffectiveGraph& g, const std::vector<int>& roots, double alpha, bool reverse) {
    int n = g.size();
    std::vector<std::vector<std::pair<int, double>>> adj(n);
    for (int x = 0; x < n; ++x)
        for (auto& [y, k] : g.out[x]) {
            double d = edge_depth(g, x, y, alpha);
            if (d < 0) throw std::logic_error("negative edge depth");
            if (reverse) adj[y].emplace_back(x, d);
            else adj[x].emplace_back(y, d);
        }
    Reach r{std::vector<double>(n, pos_inf), std::vector<int>(n, std::numeric_limits<int>::max())};
    using Item = std::tuple<double, int, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    for (int v : roots) {
        r.depth[v] = 0;
        r.hops[v] = 0;
        pq.emplace(0.0, 0, v);
    }
    while (!pq.empty()) {
        auto [d, h, x] = pq.top();
        pq.pop();
        if (std::make_pair(d, h) > std::make_pair(r.depth[x], r.hops[x])) continue;
        for (auto [y, w] : adj[x]) {
            auto cand = std::make_pair(d + w, h + 1);
            if (cand < std::make_pair(r.depth[y], r.hops[y])) {
                r.depth[y] = cand.first;
                r.hops[y] = cand.second;
                pq.emplace(cand.first, cand.second, y);
            }
        }
    }
    return r;
}

inline std::vector<double> dijkstra(const EffectiveGraph& g, const std::vector<int>& roots, double alpha,
                                    bool reverse) {
    return reach(g, roots, alpha, reverse).depth;
}

}  // namespace detail

// Depth ties (zero-depth cycles left by non-maximal clusters) are broken by hop count,
// so kept edges strictly increase (depth, hops).
inline DepthDag leading_dag(const EffectiveGraph& g, const std::vector<int>& roots, double alpha) {
    DepthDag dag;
    dag.roots = roots;
    auto r = detail::reach(g, roots, alpha, false);
    dag.depth = r.depth;
    Adjacency adj(g.size());
    for (int x = 0; x < g.size(); ++x) {
        if (dag.depth[x] == pos_inf) continue;
        for (auto& [y, k] : g.out[x]) {
            if (dag.depth[x] + edge_depth(g, x, y, alpha) == dag.depth[y] && r.hops[x] + 1 == r.hops[y]) {
                dag.edges.emplace_back(x, y);
                adj[x].push_back(y);
            }
        }
    }
    if (!is_acyclic(adj)) throw std::logic_error("leading DAG has a cycle");
    return dag;
}

inline DepthDag leading_dag(const EffectiveGraph& g, int root, double alpha) {
    return leading_dag(g, std::vector<int>{root}, alpha);
}

enum class LambdaStatus { autocatalytic, non_positive, cemetery, resonant };

inline const char* to_string(LambdaStatus s) {
    switch (s) {
    case LambdaStatus::autocatalytic: return "autocatalytic";
    case LambdaStatus::non_positive: return "non-autocatalytic";
    case LambdaStatus::cemetery: return "cemetery";
    case LambdaStatus::resonant: return "resonant";
    }
    return "?";
}

struct HierEstimate {
    int sigma0 = 0;
    std::vector<int> accessible;  // bare species
    double lambda_log = neg_inf;  // log_b estimate; -inf when not autocatalytic
    LambdaStatus status = LambdaStatus::non_positive;
    std::vector<double> pi_log;        // over all species; -inf outside the support
    std::vector<double> vdagger_log;
    std::vector<double> v_log;
    bool resonance = false;
    bool cemetery = false;
    CoreSet cores;
};

namespace detail {

inline void shift_max_zero(std::vector<double>& x, const std::vector<int>& over) {
    double m = neg_inf;
    for (int i : over) m = std::max(m, x[i]);
    if (m == neg_inf) return;
    for (double& v : x)
        if (v != neg_inf) v -= m;
}

}  // namespace detail

inline HierEstimate hier_estimates(const CoalescenceTree& tree, int sigma0) {
    const EffectiveGraph& f = tree.final_graph;
    const EffectiveGraph& bare = tree.initial_graph;
    double b = tree.base_b;
    HierEstimate h;
    h.sigma0 = sigma0;
    h.cores = cores_and_threshold(tree, sigma0);
    const CoreSet& cs = h.cores;
    double alpha = cs.threshold;
    int n = tree.n_species;

    std::vector<char> is_core(f.size(), 0);
    for (int c : cs.cores) is_core[c] = 1;
    for (int v : cs.accessible)
        for (int s : tree.nodes[f.ids[v]].members) h.accessible.push_back(s);
    std::sort(h.accessible.begin(), h.accessible.end());

    auto D = detail::dijkstra(f, cs.cores, alpha, false);
    auto R = detail::dijkstra(f, cs.cores, alpha, true);

    h.pi_log.assign(n, neg_inf);
    h.vdagger_log.assign(n, neg_inf);
    h.v_log.assign(n, neg_inf);
    std::vector<int> core_species;
    for (int s : h.accessible) {
        int v = f.index_of_node(tree.top(s));
        auto chain = tree.enclosing(s);
        double acc = 0;
        if (is_core[v]) {
            for (int c : chain) {
                const auto& st = *tree.nodes[c].stats;
                if (st.Z_weight != neg_inf) acc -= st.Z_weight;
            }
            h.pi_log[s] = acc;
            core_species.push_back(s);
        } else if (D[v] != pos_inf) {
            for (int c : chain) {
                double z = z_alpha(*tree.nodes[c].stats, alpha, b);
                if (z != neg_inf) acc -= z;
            }
            h.pi_log[s] = acc - D[v];
        }
        if (R[v] != pos_inf) h.vdagger_log[s] = -R[v];
        if (h.pi_log[s] != neg_inf) h.v_log[s] = h.pi_log[s] - std::max(bare.ktot(s), alpha);
    }
    detail::shift_max_zero(h.pi_log, core_species);
    detail::shift_max_zero(h.v_log, h.accessible);

    h.resonance = cs.resonance || cs.resonant_cores;
    h.cemetery = cs.cemetery;
    h.lambda_log = cs.threshold;
    if (cs.threshold != neg_inf) h.status = h.resonance ? LambdaStatus::resonant : LambdaStatus::autocatalytic;
    else if (cs.cemetery) h.status = LambdaStatus::cemetery;
    else h.status = h.resonance ? LambdaStatus::resonant : LambdaStatus::non_positive;
    return h;
}

struct CompareRow {
    std::string quantity;
    double hier = neg_inf;    // log_b
    double oracle = neg_inf;  // log_b
    double deviation = 0.0;
};

struct CompareReport {
    std::vector<CompareRow> rows;
    double max_deviation = 0.0;
};

namespace detail {

inline double log_gap(double a, double b) {
    if (a == neg_inf && b == neg_inf) return 0.0;
    if (a == neg_inf || b == neg_inf) return pos_inf;
    return std::abs(a - b);
}

}  // namespace detail

// `exact` is the oracle on the graph restricted to est.accessible (same order).
inline CompareReport compare(const HierEstimate& est, const OracleResult& exact, double b,
                             const std::vector<std::string>& names, double zero_tol = 1e-9) {
    CompareReport r;
    const auto& acc = est.accessible;
    int m = static_cast<int>(acc.size());
    if (exact.v_star.size() != m) throw std::invalid_argument("compare: oracle size does not match accessible set");

    CompareRow lam;
    lam.quantity = "lambda";
    lam.hier = est.lambda_log;
    bool oracle_grows = exact.lambda_star > zero_tol;
    lam.oracle = oracle_grows ? log_b(exact.lambda_star, b) : neg_inf;
    lam.deviation = detail::log_gap(lam.hier, lam.oracle);
    r.rows.push_back(lam);

    auto aligned = [&](const std::vector<double>& h, const Eigen::VectorXd& o, const std::string& tag) {
        std::vector<double> hl(m), ol(m);
        double hm = neg_inf, om = neg_inf;
        for (int i = 0; i < m; ++i) {
            hl[i] = h[acc[i]];
            ol[i] = log_b(o[i], b);
            hm = std::max(hm, hl[i]);
            om = std::max(om, ol[i]);
        }
        for (int i = 0; i < m; ++i) {
            CompareRow row;
            row.quantity = tag + "_" + names[acc[i]];
            row.hier = hl[i] == neg_inf ? neg_inf : hl[i] - hm;
            row.oracle = ol[i] == neg_inf ? neg_inf : ol[i] - om;
            row.deviation = detail::log_gap(row.hier, row.oracle);
            r.rows.push_back(row);
        }
    };
    aligned(est.pi_log, exact.pi_star, "pi");
    aligned(est.vdagger_log, exact.v_dagger_star, "vdagger");
    for (auto& row : r.rows) r.max_deviation = std::max(r.max_deviation, row.deviation);
    return r;
}

}  // namespace lyap
