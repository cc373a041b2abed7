#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lyap/graph.hpp"
#include "lyap/scale.hpp"

namespace lyap {

class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

class SingularWeightError : public std::runtime_error {
public:
    explicit SingularWeightError(const std::string& species)
        : std::runtime_error("singular weight: vanishing denominator at " + species), species_(species) {}
    const std::string& species() const { return species_; }

private:
    std::string species_;
};

enum class ReactionKind { degradation, one_to_one, one_to_two };

struct Reaction {
    ReactionKind kind = ReactionKind::one_to_one;
    int reactant = 0;
    std::vector<int> products;
    double rate = 0.0;
    std::optional<int> scale;  // set when the file gave "scale n"
};

struct ReactionNetwork {
    std::vector<std::string> species;
    std::vector<Reaction> reactions;
    double base_b = 10.0;

    int index_of(const std::string& id) const {
        auto it = std::find(species.begin(), species.end(), id);
        return it == species.end() ? -1 : static_cast<int>(it - species.begin());
    }
};

namespace detail {

inline std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string t;
    while (is >> t) out.push_back(t);
    return out;
}

inline std::optional<double> to_double(const std::string& s) {
    double v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<int> to_int(const std::string& s) {
    int v = 0;
    const char* b = s.data();
    if (!s.empty() && s[0] == '+') ++b;
    auto r = std::from_chars(b, s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::string fmt_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace detail

// Grammar: "base <real>" first, then species / reaction / degrade lines; '#' starts a comment.
inline ReactionNetwork parse_network(const std::string& text) {
    ReactionNetwork net;
    bool have_base = false;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;

    auto species_at = [&](const std::string& id, int ln) {
        int i = net.index_of(id);
        if (i < 0) throw ParseError(ln, "unknown species '" + id + "'");
        return i;
    };
    auto read_rate = [&](const std::vector<std::string>& tok, size_t pos, int ln, Reaction& r) {
        if (tok.size() != pos + 2) throw ParseError(ln, "expected 'rate <float>' or 'scale <int>'");
        if (tok[pos] == "rate") {
            auto v = detail::to_double(tok[pos + 1]);
            if (!v) throw ParseError(ln, "malformed rate '" + tok[pos + 1] + "'");
            if (!(*v > 0) || !std::isfinite(*v)) throw ParseError(ln, "non-positive rate");
            r.rate = *v;
        } else if (tok[pos] == "scale") {
            auto v = detail::to_int(tok[pos + 1]);
            if (!v) throw ParseError(ln, "malformed scale '" + tok[pos + 1] + "'");
            r.scale = *v;
            r.rate = std::pow(net.base_b, *v);
        } else {
            throw ParseError(ln, "expected 'rate' or 'scale', got '" + tok[pos] + "'");
        }
    };

    while (std::getline(in, raw)) {
        ++lineno;
        auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        auto tok = detail::tokenize(raw);
        if (tok.empty()) continue;

        if (!have_base) {
            if (tok[0] != "base") throw ParseError(lineno, "first statement must be 'base <real>'");
            if (tok.size() != 2) throw ParseError(lineno, "expected 'base <real>'");
            auto v = detail::to_double(tok[1]);
            if (!v || !(*v > 1.0) || !std::isfinite(*v)) throw ParseError(lineno, "base must be a real > 1");
            net.base_b = *v;
            have_base = true;
            continue;
        }
        const std::string& kw = tok[0];
        if (kw == "base") throw ParseError(lineno, "duplicate 'base'");
        if (kw == "species") {
            if (tok.size() < 2) throw ParseError(lineno, "empty species declaration");
            for (size_t i = 1; i < tok.size(); ++i) {
                if (net.index_of(tok[i]) >= 0) throw ParseError(lineno, "duplicate species '" + tok[i] + "'");
                net.species.push_back(tok[i]);
            }
        } else if (kw == "reaction") {
            if (tok.size() < 4 || tok[2] != "->") throw ParseError(lineno, "expected 'reaction <id> -> <id> ...'");
            Reaction r;
            r.reactant = species_at(tok[1], lineno);
            size_t pos = 3;
            r.products.push_back(species_at(tok[pos++], lineno));
            while (pos < tok.size() && tok[pos] == "+") {
                if (pos + 1 >= tok.size()) throw ParseError(lineno, "dangling '+'");
                r.products.push_back(species_at(tok[pos + 1], lineno));
                pos += 2;
            }
            if (r.products.size() > 2) throw ParseError(lineno, "reactions with more than two products are not supported");
            r.kind = r.products.size() == 1 ? ReactionKind::one_to_one : ReactionKind::one_to_two;
            if (r.kind == ReactionKind::one_to_one && r.products[0] == r.reactant)
                throw ParseError(lineno, "trivial reaction " + tok[1] + " -> " + tok[1]);
            read_rate(tok, pos, lineno, r);
            net.reactions.push_back(r);
        } else if (kw == "degrade") {
            if (tok.size() < 2) throw ParseError(lineno, "expected 'degrade <id> ...'");
            Reaction r;
            r.kind = ReactionKind::degradation;
            r.reactant = species_at(tok[1], lineno);
            read_rate(tok, 2, lineno, r);
            net.reactions.push_back(r);
        } else {
            throw ParseError(lineno, "unknown statement '" + kw + "'");
        }
    }
    if (!have_base) throw ParseError(lineno, "missing 'base <real>'");
    if (net.species.empty()) throw ParseError(lineno, "no species declared");
    return net;
}

inline std::string serialize(const ReactionNetwork& net) {
    std::ostringstream os;
    os << "base " << detail::fmt_real(net.base_b) << "\n";
    os << "species";
    for (const auto& s : net.species) os << ' ' << s;
    os << "\n";
    for (const auto& r : net.reactions) {
        if (r.kind == ReactionKind::degradation) {
            os << "degrade " << net.species[r.reactant];
        } else {
            os << "reaction " << net.species[r.reactant] << " -> " << net.species[r.products[0]];
            if (r.products.size() == 2) os << " + " << net.species[r.products[1]];
        }
        if (r.scale) os << " scale " << *r.scale << "\n";
        else os << " rate " << detail::fmt_real(r.rate) << "\n";
    }
    return os.str();
}

struct SplitGraph {
    std::vector<std::string> names;
    std::vector<std::map<int, double>> out;  // out[s][t] = k_{s->t}, s != t
    std::vector<double> kappa;
    std::vector<double> beta;
    double base_b = 10.0;

    int size() const { return static_cast<int>(names.size()); }

    double k(int s) const {
        double sum = 0;
        for (auto& [t, r] : out[s]) sum += r;
        return sum;
    }
    double rate(int s, int t) const {
        auto it = out[s].find(t);
        return it == out[s].end() ? 0.0 : it->second;
    }
    // |A_ss| = k_s + beta_s - kappa_s
    double abs_diag(int s) const { return k(s) + beta[s] - kappa[s]; }

    bool operator==(const SplitGraph& o) const {
        return names == o.names && out == o.out && kappa == o.kappa && beta == o.beta && base_b == o.base_b;
    }

    static SplitGraph empty(int n, double b) {
        SplitGraph g;
        g.base_b = b;
        g.out.assign(n, {});
        g.kappa.assign(n, 0.0);
        g.beta.assign(n, 0.0);
        for (int i = 0; i < n; ++i) g.names.push_back(std::to_string(i + 1));
        return g;
    }
    void add_edge(int s, int t, double r) {
        if (s == t) throw std::invalid_argument("self edge");
        out[s][t] += r;
    }
};

inline SplitGraph split(const ReactionNetwork& net) {
    SplitGraph g = SplitGraph::empty(static_cast<int>(net.species.size()), net.base_b);
    g.names = net.species;
    for (const auto& r : net.reactions) {
        int s = r.reactant;
        switch (r.kind) {
        case ReactionKind::degradation:
            g.beta[s] += r.rate;
            break;
        case ReactionKind::one_to_one:
            g.add_edge(s, r.products[0], r.rate);
            break;
        case ReactionKind::one_to_two:
            for (int p : r.products)
                if (p != s) g.add_edge(s, p, r.rate);
            g.kappa[s] += r.rate;
            break;
        }
    }
    return g;
}

// Principal restriction: edges leaving `keep` are folded into degradation,
// so the generator of the result is the principal submatrix of the original.
inline SplitGraph restrict_to(const SplitGraph& g, const std::vector<int>& keep) {
    std::vector<int> pos(g.size(), -1);
    for (size_t i = 0; i < keep.size(); ++i) pos[keep[i]] = static_cast<int>(i);
    SplitGraph r = SplitGraph::empty(static_cast<int>(keep.size()), g.base_b);
    for (size_t i = 0; i < keep.size(); ++i) {
        int s = keep[i];
        r.names[i] = g.names[s];
        r.kappa[i] = g.kappa[s];
        r.beta[i] = g.beta[s];
        for (auto& [t, k] : g.out[s]) {
            if (pos[t] >= 0) r.out[i][pos[t]] += k;
            else r.beta[i] += k;
        }
    }
    return r;
}

enum class Flavor { A, Conservative };

struct GeneratorMatrix {
    Eigen::MatrixXd m;  // m(t, s) = k_{s->t}
    Flavor flavor = Flavor::A;
    double alpha = 0.0;
};

inline GeneratorMatrix generator(const SplitGraph& g, double alpha = 0.0, Flavor flavor = Flavor::A) {
    if (flavor == Flavor::Conservative && alpha != 0.0)
        throw std::invalid_argument("conservative generator requires alpha = 0");
    int n = g.size();
    GeneratorMatrix G;
    G.flavor = flavor;
    G.alpha = alpha;
    G.m = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < n; ++s) {
        for (auto& [t, k] : g.out[s]) G.m(t, s) = k;
        G.m(s, s) = flavor == Flavor::A ? -(g.abs_diag(s) + alpha) : -g.k(s);
    }
    return G;
}

enum class WeightFlavor { W, Tilde };

struct WeightMatrix {
    Eigen::MatrixXd w;  // w(s, t) = weight of s -> t
    WeightFlavor flavor = WeightFlavor::W;
    double alpha = 0.0;
};

inline WeightMatrix weights(const SplitGraph& g, double alpha = 0.0, WeightFlavor flavor = WeightFlavor::W) {
    int n = g.size();
    WeightMatrix W;
    W.flavor = flavor;
    W.alpha = alpha;
    W.w = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < n; ++s) {
        double d = flavor == WeightFlavor::W ? g.abs_diag(s) + alpha : g.k(s);
        if (g.out[s].empty()) continue;
        if (!(d > 0)) throw SingularWeightError(g.names[s]);
        for (auto& [t, k] : g.out[s]) W.w(s, t) = k / d;
    }
    return W;
}

inline double deficiency_weight(const SplitGraph& g, int s, double alpha = 0.0) {
    if (g.kappa[s] == 0.0) return 0.0;
    double d = g.abs_diag(s) + alpha;
    if (!(d > 0)) throw SingularWeightError(g.names[s]);
    return g.kappa[s] / d;
}

struct ScaleAssignment {
    std::map<std::pair<int, int>, int> edge_scale;
    std::vector<double> vertex_scale;      // -inf for a vertex without outgoing edges
    std::vector<double> deficiency_scale;  // -inf when kappa = 0
    std::vector<double> degradation_scale;
};

inline ScaleAssignment scales(const SplitGraph& g) {
    if (!(g.base_b > 1)) throw std::invalid_argument("base must exceed 1");
    ScaleAssignment sa;
    int n = g.size();
    sa.vertex_scale.assign(n, neg_inf);
    for (int s = 0; s < n; ++s) {
        for (auto& [t, k] : g.out[s]) {
            double sc = scale_of(log_b(k, g.base_b));
            sa.edge_scale[{s, t}] = static_cast<int>(sc);
            sa.vertex_scale[s] = std::max(sa.vertex_scale[s], sc);
        }
        sa.deficiency_scale.push_back(scale_of(log_b(g.kappa[s], g.base_b)));
        sa.degradation_scale.push_back(scale_of(log_b(g.beta[s], g.base_b)));
    }
    return sa;
}

inline Adjacency adjacency(const SplitGraph& g) {
    Adjacency adj(g.size());
    for (int s = 0; s < g.size(); ++s)
        for (auto& [t, k] : g.out[s]) adj[s].push_back(t);
    return adj;
}

inline int find_species(const SplitGraph& g, const std::string& id) {
    auto it = std::find(g.names.begin(), g.names.end(), id);
    return it == g.names.end() ? -1 : static_cast<int>(it - g.names.begin());
}

}  // namespace lyap
