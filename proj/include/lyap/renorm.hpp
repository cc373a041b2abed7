#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lyap/graph.hpp"
#include "lyap/network.hpp"
#include "lyap/oracle.hpp"
#include "lyap/scale.hpp"

namespace lyap {

enum class Mode { scale, weighted };
enum class Regime { free, autocatalytic, degraded, resonance };
enum class ResonanceBranch { autocatalytic, free };

inline const char* to_string(Regime r) {
    switch (r) {
    case Regime::free: return "free";
    case Regime::autocatalytic: return "autocatalytic";
    case Regime::degraded: return "degraded";
    case Regime::resonance: return "resonance";
    }
    return "?";
}

struct RenormOptions {
    Mode mode = Mode::scale;
    double tol = 0.0;         // dominance: edge scale within tol of the vertex scale
    double regime_tol = 0.0;  // regimes: resonance when scales differ by <= regime_tol
    ResonanceBranch branch = ResonanceBranch::autocatalytic;
};

// Rates, deficiencies and degradations are stored as log_b values; -inf means absent.
// Vertex i stands for tree node ids[i].
struct EffectiveGraph {
    std::vector<int> ids;
    std::vector<std::map<int, double>> out;
    std::vector<double> kappa;
    std::vector<double> beta;
    Mode mode = Mode::scale;
    double base_b = 10.0;
    int step = 0;
    double cutoff = pos_inf;

    int size() const { return static_cast<int>(ids.size()); }

    // total outgoing rate, degradation included
    double ktot(int v) const {
        double r = beta[v];
        for (auto& [t, k] : out[v]) r = mode == Mode::scale ? std::max(r, k) : log_sum(r, k, base_b);
        return r;
    }
    // vertex scale n_v: deficiency and degradation count like edges
    double vertex_scale(int v) const {
        double r = scale_of(std::max(ktot(v), kappa[v]));
        for (auto& [t, k] : out[v]) r = std::max(r, scale_of(k));
        return r;
    }
    int index_of_node(int node) const {
        auto it = std::find(ids.begin(), ids.end(), node);
        return it == ids.end() ? -1 : static_cast<int>(it - ids.begin());
    }
};

inline EffectiveGraph effective_graph(const SplitGraph& g, Mode mode = Mode::scale) {
    EffectiveGraph e;
    int n = g.size();
    e.mode = mode;
    e.base_b = g.base_b;
    e.out.assign(n, {});
    auto conv = [&](double x) {
        double l = log_b(x, g.base_b);
        return mode == Mode::scale ? scale_of(l) : l;
    };
    for (int s = 0; s < n; ++s) {
        e.ids.push_back(s);
        for (auto& [t, k] : g.out[s]) e.out[s][t] = conv(k);
        e.kappa.push_back(conv(g.kappa[s]));
        e.beta.push_back(conv(g.beta[s]));
    }
    return e;
}

// G_{>=n}: edges of scale >= n, vertices of scale >= n (others kept, isolated).
inline EffectiveGraph cutoff(const EffectiveGraph& g, double n) {
    EffectiveGraph c = g;
    c.cutoff = n;
    for (int v = 0; v < c.size(); ++v) {
        for (auto it = c.out[v].begin(); it != c.out[v].end();) {
            if (scale_of(it->second) < n) it = c.out[v].erase(it);
            else ++it;
        }
        if (scale_of(c.kappa[v]) < n) c.kappa[v] = neg_inf;
        if (scale_of(c.beta[v]) < n) c.beta[v] = neg_inf;
    }
    return c;
}

using EdgeSet = std::vector<std::pair<int, int>>;

// Edges v->w with scale >= n_v - tol, where n_v is taken in `full` (so that edges
// dropped by a cut-off still set the reference scale).
inline EdgeSet dominant_subgraph(const EffectiveGraph& g, double alpha_log, double tol,
                                 const EffectiveGraph* full = nullptr) {
    const EffectiveGraph& ref = full ? *full : g;
    double a = scale_of(alpha_log);
    EdgeSet es;
    for (int v = 0; v < g.size(); ++v) {
        double nv = ref.vertex_scale(v);
        for (auto& [w, k] : g.out[v]) {
            double s = scale_of(k);
            if (s >= nv - tol && s >= a) es.emplace_back(v, w);
        }
    }
    return es;
}

inline std::vector<std::vector<int>> maximal_dominant_sccs(int n, const EdgeSet& dom) {
    Adjacency adj(n);
    for (auto [v, w] : dom) adj[v].push_back(w);
    auto comps = tarjan_scc(adj);
    std::vector<int> comp_of(n, -1);
    for (size_t c = 0; c < comps.size(); ++c)
        for (int v : comps[c]) comp_of[v] = static_cast<int>(c);
    std::vector<std::vector<int>> res;
    for (size_t c = 0; c < comps.size(); ++c) {
        if (comps[c].size() < 2) continue;
        bool leaves = false;
        for (int v : comps[c])
            for (int w : adj[v])
                if (comp_of[w] != static_cast<int>(c)) leaves = true;
        if (!leaves) res.push_back(comps[c]);
    }
    std::sort(res.begin(), res.end());
    return res;
}

inline std::vector<std::vector<int>> maximal_dominant_sccs(const EffectiveGraph& g, double tol) {
    return maximal_dominant_sccs(g.size(), dominant_subgraph(g, neg_inf, tol));
}

struct ClusterStats {
    std::vector<int> members;   // bare species
    std::vector<int> children;  // tree nodes merged at this step
    double tau_inv = neg_inf;
    double eps_bar = neg_inf;
    double Z0 = neg_inf;
    double k_ext = neg_inf;
    double lambda = neg_inf;  // -inf: no growth
    double Z_weight = neg_inf;
    Regime regime = Regime::free;
    Mode mode = Mode::scale;
    bool growing = false;  // autocatalytic after resolving a resonance
    bool closed = false;   // no exits and no deficiency
    bool degraded_exit = false;
};

// Z(0, alpha) of a cluster, log_b
inline double z_alpha(const ClusterStats& s, double alpha_log, double b) {
    if (alpha_log == neg_inf) return s.Z0;
    double a = alpha_log - s.tau_inv;
    return s.mode == Mode::scale ? std::max(s.Z0, scale_of(a)) : log_sum(s.Z0, a, b);
}

struct Rewiring {
    std::map<int, double> out;  // target vertex (local index) -> log rate
    std::map<int, double> in;   // source vertex (local index) -> log rate
    double kappa = neg_inf;
    double beta = neg_inf;
};

namespace detail {

inline void classify(ClusterStats& st, const RenormOptions& opt) {
    if (st.Z0 == neg_inf && st.eps_bar == neg_inf) {
        st.closed = true;
        st.regime = Regime::free;
        st.Z_weight = neg_inf;
        st.growing = false;
    } else {
        double e = scale_of(st.eps_bar), z = scale_of(st.Z0);
        if (z == neg_inf || e > z + opt.regime_tol) st.regime = Regime::autocatalytic;
        else if (e != neg_inf && std::abs(e - z) <= opt.regime_tol) st.regime = Regime::resonance;
        else st.regime = st.degraded_exit ? Regime::degraded : Regime::free;
        st.growing = st.regime == Regime::autocatalytic ||
                     (st.regime == Regime::resonance && opt.branch == ResonanceBranch::autocatalytic);
        st.Z_weight = std::max(st.Z0, st.eps_bar);
    }
    st.k_ext = st.Z0 == neg_inf ? neg_inf : st.tau_inv + st.Z0;
    st.lambda = st.growing ? st.eps_bar + st.tau_inv : neg_inf;
}

}  // namespace detail

inline std::pair<ClusterStats, Rewiring> cluster_stats_and_rewiring(const EffectiveGraph& g,
                                                                    const std::vector<int>& cluster,
                                                                    const RenormOptions& opt) {
    int n = g.size();
    std::vector<int> pos(n, -1);
    for (size_t i = 0; i < cluster.size(); ++i) pos[cluster[i]] = static_cast<int>(i);
    int m = static_cast<int>(cluster.size());
    double b = g.base_b;
    ClusterStats st;
    st.mode = opt.mode;
    Rewiring rw;
    std::vector<double> kt(m);
    for (int i = 0; i < m; ++i) kt[i] = g.ktot(cluster[i]);

    auto in_rate = [&](int x, double k) {
        auto [it, fresh] = rw.in.emplace(x, k);
        if (!fresh) it->second = opt.mode == Mode::scale ? std::max(it->second, k) : log_sum(it->second, k, b);
    };
    for (int x = 0; x < n; ++x) {
        if (pos[x] >= 0) continue;
        for (auto& [y, k] : g.out[x])
            if (pos[y] >= 0) in_rate(x, k);
    }

    if (opt.mode == Mode::scale) {
        double max_edge_exit = neg_inf, max_beta_exit = neg_inf;
        for (int i = 0; i < m; ++i) {
            int v = cluster[i];
            st.tau_inv = i == 0 ? kt[i] : std::min(st.tau_inv, kt[i]);
            double eps = g.kappa[v] == neg_inf ? neg_inf : std::min(0.0, g.kappa[v] - kt[i]);
            st.eps_bar = std::max(st.eps_bar, eps);
            for (auto& [y, k] : g.out[v]) {
                if (pos[y] >= 0) continue;
                double r = k - kt[i];
                max_edge_exit = std::max(max_edge_exit, r);
                auto [it, fresh] = rw.out.emplace(y, r);
                if (!fresh) it->second = std::max(it->second, r);
            }
            if (g.beta[v] != neg_inf) max_beta_exit = std::max(max_beta_exit, g.beta[v] - kt[i]);
        }
        st.Z0 = std::max(max_edge_exit, max_beta_exit);
        st.degraded_exit = max_beta_exit != neg_inf && max_beta_exit >= max_edge_exit;
        for (auto& [y, r] : rw.out) r += st.tau_inv;
        rw.beta = max_beta_exit == neg_inf ? neg_inf : st.tau_inv + max_beta_exit;
    } else {
        Eigen::MatrixXd Wt = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            double kin = neg_inf;
            for (auto& [y, k] : g.out[cluster[i]])
                if (pos[y] >= 0) kin = log_sum(kin, k, b);
            for (auto& [y, k] : g.out[cluster[i]])
                if (pos[y] >= 0) Wt(i, pos[y]) = std::pow(b, k - kin);
        }
        Eigen::VectorXd pt = stationary(Wt);
        double tau = 0, eps_bar = 0, z0 = 0, beta_w = 0, edge_exit = 0;
        std::map<int, double> out_w;
        for (int i = 0; i < m; ++i) {
            int v = cluster[i];
            double k = std::pow(b, kt[i]);
            double kap = pow_b(g.kappa[v], b);
            double d = k - kap;
            double eps = kap == 0 ? 0.0 : (d > 0 ? std::min(1.0, kap / d) : 1.0);
            tau += pt[i] / k;
            eps_bar += pt[i] * eps;
            for (auto& [y, r] : g.out[v]) {
                if (pos[y] >= 0) continue;
                double w = pt[i] * std::pow(b, r) / k;
                out_w[y] += w;
                edge_exit += w;
            }
            beta_w += pt[i] * pow_b(g.beta[v], b) / k;
        }
        z0 = edge_exit + beta_w;
        st.tau_inv = -log_b(tau, b);
        st.eps_bar = log_b(eps_bar, b);
        st.Z0 = log_b(z0, b);
        st.degraded_exit = beta_w > 0 && beta_w >= edge_exit;
        for (auto& [y, w] : out_w) rw.out[y] = st.tau_inv + log_b(w, b);
        rw.beta = beta_w > 0 ? st.tau_inv + log_b(beta_w, b) : neg_inf;
    }
    detail::classify(st, opt);
    rw.kappa = st.eps_bar == neg_inf ? neg_inf : st.eps_bar + st.tau_inv;
    return {st, rw};
}

inline ClusterStats cluster_stats(const EffectiveGraph& g, const std::vector<int>& cluster,
                                  const RenormOptions& opt = {}) {
    return cluster_stats_and_rewiring(g, cluster, opt).first;
}

// Replace `cluster` by one vertex carrying the rewired rates. The new vertex is
// appended last and takes tree node id `node`.
inline EffectiveGraph collapse(const EffectiveGraph& g, const std::vector<int>& cluster, const Rewiring& rw,
                               int node) {
    int n = g.size();
    std::vector<char> gone(n, 0);
    for (int v : cluster) gone[v] = 1;
    std::vector<int> remap(n, -1);
    EffectiveGraph e;
    e.mode = g.mode;
    e.base_b = g.base_b;
    e.step = g.step;
    e.cutoff = g.cutoff;
    for (int v = 0; v < n; ++v) {
        if (gone[v]) continue;
        remap[v] = e.size();
        e.ids.push_back(g.ids[v]);
        e.kappa.push_back(g.kappa[v]);
        e.beta.push_back(g.beta[v]);
    }
    int c = e.size();
    e.ids.push_back(node);
    e.kappa.push_back(rw.kappa);
    e.beta.push_back(rw.beta);
    e.out.assign(e.size(), {});
    for (int v = 0; v < n; ++v) {
        if (gone[v]) continue;
        for (auto& [w, k] : g.out[v])
            if (!gone[w]) e.out[remap[v]][remap[w]] = k;
    }
    for (auto& [x, k] : rw.in) e.out[remap[x]][c] = k;
    for (auto& [y, k] : rw.out) e.out[c][remap[y]] = k;
    return e;
}

struct TreeNode {
    int id = 0;
    std::string name;
    std::vector<int> members;   // bare species, sorted
    std::vector<int> children;  // tree node ids
    int parent = -1;
    int step = 0;
    double cutoff = pos_inf;
    std::optional<ClusterStats> stats;  // compound nodes only
};

struct MergeStep {
    int index = 0;
    double cutoff = 0;
    std::vector<int> clusters;  // tree node ids created at this step
    std::vector<std::tuple<int, int, double>> cut_edges;  // (node, node, log rate) of G_cut(i)
};

struct CoalescenceTree {
    std::vector<TreeNode> nodes;
    std::vector<MergeStep> steps;
    EffectiveGraph initial_graph;
    EffectiveGraph final_graph;
    std::vector<int> cemetery;  // nodes at which degradation is dominant in some cut graph
    RenormOptions options;
    double base_b = 10.0;
    int n_species = 0;

    // top(sigma): the outermost node containing a node
    int top(int node) const {
        while (nodes[node].parent >= 0) node = nodes[node].parent;
        return node;
    }
    // chain of nodes from a bare species up to its top-level node, species itself excluded
    std::vector<int> enclosing(int species) const {
        std::vector<int> r;
        for (int v = nodes[species].parent; v >= 0; v = nodes[v].parent) r.push_back(v);
        return r;
    }
    bool resonance() const {
        for (auto& n : nodes)
            if (n.stats && n.stats->regime == Regime::resonance) return true;
        return false;
    }
};

inline CoalescenceTree renormalize(const SplitGraph& g, const RenormOptions& opt = {}) {
    CoalescenceTree tree;
    tree.options = opt;
    tree.base_b = g.base_b;
    tree.n_species = g.size();
    for (int s = 0; s < g.size(); ++s) {
        TreeNode t;
        t.id = s;
        t.name = g.names[s];
        t.members = {s};
        tree.nodes.push_back(t);
    }
    EffectiveGraph cur = effective_graph(g, opt.mode);
    tree.initial_graph = cur;
    std::set<int> cemetery;

    auto next_cutoff = [&](double below) {
        double best = neg_inf;
        for (int v = 0; v < cur.size(); ++v)
            for (auto& [w, k] : cur.out[v]) {
                double s = scale_of(k);
                if (s < below) best = std::max(best, s);
            }
        return best;
    };

    int compound = 0;
    for (double n = next_cutoff(pos_inf); n != neg_inf; n = next_cutoff(n)) {
        MergeStep step;
        step.cutoff = n;
        step.index = static_cast<int>(tree.steps.size()) + 1;
        bool first = true;
        for (;;) {
            EffectiveGraph cg = cutoff(cur, n);
            EdgeSet dom = dominant_subgraph(cg, neg_inf, opt.tol, &cur);
            if (first) {
                for (int v = 0; v < cg.size(); ++v) {
                    for (auto& [w, k] : cg.out[v]) step.cut_edges.emplace_back(cg.ids[v], cg.ids[w], k);
                    if (cg.beta[v] != neg_inf && scale_of(cur.beta[v]) >= cur.vertex_scale(v) - opt.tol)
                        cemetery.insert(cg.ids[v]);
                }
                first = false;
            }
            auto clusters = maximal_dominant_sccs(cg.size(), dom);
            if (clusters.empty()) break;
            // clusters are vertex-disjoint; collapse the one with the lowest member species first
            auto key = [&](const std::vector<int>& c) {
                int lo = tree.n_species;
                for (int v : c) lo = std::min(lo, tree.nodes[cur.ids[v]].members.front());
                return lo;
            };
            auto it = std::min_element(clusters.begin(), clusters.end(),
                                       [&](auto& a, auto& b) { return key(a) < key(b); });
            const auto& c = *it;
            auto [st, rw] = cluster_stats_and_rewiring(cur, c, opt);
            TreeNode t;
            t.id = static_cast<int>(tree.nodes.size());
            t.name = "G" + std::to_string(++compound);
            t.step = step.index;
            t.cutoff = n;
            for (int v : c) {
                int child = cur.ids[v];
                t.children.push_back(child);
                tree.nodes[child].parent = t.id;
                t.members.insert(t.members.end(), tree.nodes[child].members.begin(), tree.nodes[child].members.end());
            }
            std::sort(t.members.begin(), t.members.end());
            st.members = t.members;
            st.children = t.children;
            t.stats = st;
            tree.nodes.push_back(t);
            step.clusters.push_back(t.id);
            cur = collapse(cur, c, rw, t.id);
        }
        if (!step.clusters.empty()) {
            cur.step = step.index;
            cur.cutoff = n;
            tree.steps.push_back(std::move(step));
        }
    }
    tree.final_graph = cur;
    tree.cemetery.assign(cemetery.begin(), cemetery.end());
    return tree;
}

inline std::string members_str(const CoalescenceTree& t, const std::vector<int>& members,
                               const std::vector<std::string>* names = nullptr) {
    std::string s = "{";
    for (size_t i = 0; i < members.size(); ++i) {
        if (i) s += ",";
        s += names ? (*names)[members[i]] : t.nodes[members[i]].name;
    }
    return s + "}";
}

// One line per node; deterministic, used for golden files.
inline std::string dump(const CoalescenceTree& t) {
    std::ostringstream os;
    for (const auto& n : t.nodes) {
        os << n.name << ' ' << members_str(t, n.members);
        if (!n.stats) {
            os << " step=0 n=- tau_inv=- eps_bar=- Z0=- regime=bare lambda=-\n";
            continue;
        }
        const auto& s = *n.stats;
        os << " step=" << n.step << " n=" << scale_str(n.cutoff) << " tau_inv=" << scale_str(s.tau_inv)
           << " eps_bar=" << scale_str(s.eps_bar) << " Z0=" << scale_str(s.Z0) << " regime=" << to_string(s.regime);
        if (s.closed) os << "(closed)";
        os << " lambda=" << scale_str(s.lambda) << "\n";
    }
    return os.str();
}

struct RenormalizedGenerator {
    Eigen::MatrixXd m;              // column convention, as generator()
    std::vector<std::string> labels;
    std::vector<std::vector<int>> blocks;  // species behind each row
};

// Dense matrix over {compounds} u {external species}. `clusters` must be disjoint
// and non-autocatalytic at alpha.
inline RenormalizedGenerator renormalized_generator(const SplitGraph& g, const std::vector<std::vector<int>>& clusters,
                                                    double alpha = 0.0) {
    int n = g.size();
    std::vector<int> block_of(n, -1);
    RenormalizedGenerator R;
    for (size_t p = 0; p < clusters.size(); ++p) {
        for (int s : clusters[p]) {
            if (block_of[s] >= 0) throw std::invalid_argument("clusters overlap");
            block_of[s] = static_cast<int>(p);
        }
        R.blocks.push_back(clusters[p]);
        R.labels.push_back("G" + std::to_string(p + 1));
    }
    for (int s = 0; s < n; ++s) {
        if (block_of[s] >= 0) continue;
        block_of[s] = static_cast<int>(R.blocks.size());
        R.blocks.push_back({s});
        R.labels.push_back(g.names[s]);
    }
    int nb = static_cast<int>(R.blocks.size());
    int np = static_cast<int>(clusters.size());
    R.m = Eigen::MatrixXd::Zero(nb, nb);
    for (int p = 0; p < nb; ++p) {
        const auto& mem = R.blocks[p];
        if (p >= np) {
            int s = mem[0];
            R.m(p, p) = -(g.abs_diag(s) + alpha);
            for (auto& [t, k] : g.out[s]) R.m(block_of[t], p) += k;
            continue;
        }
        int m = static_cast<int>(mem.size());
        std::vector<int> pos(n, -1);
        for (int i = 0; i < m; ++i) pos[mem[i]] = i;
        Eigen::MatrixXd Wt = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            double kin = 0;
            for (auto& [t, k] : g.out[mem[i]])
                if (pos[t] >= 0) kin += k;
            if (kin <= 0) throw std::invalid_argument("cluster is not strongly connected");
            for (auto& [t, k] : g.out[mem[i]])
                if (pos[t] >= 0) Wt(i, pos[t]) = k / kin;
        }
        Eigen::VectorXd pt = stationary(Wt);
        double tau = 0, z = 0, eps = 0, z0 = 0;
        for (int i = 0; i < m; ++i) {
            int s = mem[i];
            double k = g.k(s) + g.beta[s];
            double kext = g.beta[s];
            for (auto& [t, r] : g.out[s]) {
                if (pos[t] >= 0) continue;
                kext += r;
                R.m(block_of[t], p) += pt[i] * r / k;
            }
            tau += pt[i] / k;
            z += pt[i] * ((kext + alpha) / k - g.kappa[s] / k);
            z0 += pt[i] * kext / k;
            eps += pt[i] * g.kappa[s] / k;
        }
        if (scale_of(log_b(eps, g.base_b)) > scale_of(log_b(z0 + alpha * tau, g.base_b)))
            throw std::invalid_argument("renormalized_generator: cluster " + R.labels[p] + " is autocatalytic");
        for (int q = 0; q < nb; ++q)
            if (q != p) R.m(q, p) /= tau;
        R.m(p, p) = -z / tau;
    }
    return R;
}

}  // namespace lyap
