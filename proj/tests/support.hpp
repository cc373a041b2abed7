#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "lyap/cli.hpp"
#include "lyap/hierarchy.hpp"

namespace testing_support {

using namespace lyap;

inline std::string fixture_path(const std::string& name) { return std::string(LYAP_FIXTURES) + "/" + name; }

inline ReactionNetwork load_net(const std::string& name) { return parse_network(cli::read_file(fixture_path(name))); }

inline SplitGraph load_graph(const std::string& name) { return split(load_net(name)); }

// reaction index is 0-based here
inline ReactionNetwork with_scale(ReactionNetwork net, int reaction, int scale) {
    net.reactions[reaction].scale = scale;
    net.reactions[reaction].rate = std::pow(net.base_b, scale);
    return net;
}

struct RandomGraphSpec {
    int min_n = 3, max_n = 8;
    int lo = -6, hi = 0;           // edge scales
    double extra_edge_p = 0.3;
    double kappa_p = 0.0;          // probability that a vertex carries a deficiency
    int kappa_lo = -8, kappa_hi = -1;
    double beta_p = 0.0;
    int beta_lo = -8, beta_hi = -2;
    bool integer_scales = true;    // rates are exact powers of b
    double b = 10.0;
};

// Strongly connected: a random Hamiltonian cycle plus random chords.
inline SplitGraph random_graph(std::mt19937_64& rng, const RandomGraphSpec& s) {
    std::uniform_int_distribution<int> nd(s.min_n, s.max_n);
    int n = nd(rng);
    SplitGraph g = SplitGraph::empty(n, s.b);
    std::uniform_real_distribution<double> u(0, 1);
    auto rate = [&](int lo, int hi) {
        if (s.integer_scales) return std::pow(s.b, std::uniform_int_distribution<int>(lo, hi)(rng));
        return std::pow(s.b, std::uniform_real_distribution<double>(lo, hi + 1)(rng));
    };
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < n; ++i) g.out[perm[i]][perm[(i + 1) % n]] = rate(s.lo, s.hi);
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            if (x != y && !g.out[x].count(y) && u(rng) < s.extra_edge_p) g.out[x][y] = rate(s.lo, s.hi);
    for (int x = 0; x < n; ++x) {
        if (u(rng) < s.kappa_p) g.kappa[x] = rate(s.kappa_lo, s.kappa_hi);
        if (u(rng) < s.beta_p) g.beta[x] = rate(s.beta_lo, s.beta_hi);
    }
    return g;
}

inline Eigen::MatrixXd random_stochastic(std::mt19937_64& rng, int n, double density) {
    std::uniform_real_distribution<double> u(0, 1);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            if (u(rng) < density) W(i, j) = u(rng);
        if (W.row(i).sum() == 0) W(i, std::uniform_int_distribution<int>(0, n - 1)(rng)) = 1.0;
        W.row(i) /= W.row(i).sum();
    }
    return W;
}

inline double log_max_aligned(const Eigen::VectorXd& v, int i, double b) {
    return log_b(v[i], b) - log_b(v.maxCoeff(), b);
}

}  // namespace testing_support
