#pragma once

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lyap/hierarchy.hpp"
#include "lyap/network.hpp"
#include "lyap/oracle.hpp"
#include "lyap/renorm.hpp"

namespace lyap::cli {

enum Exit : int { ok = 0, parse_error = 1, resonance = 2, oracle_failure = 3, deviation = 4 };

struct AnalyzeOptions {
    std::string sigma0;  // empty: first declared species
    RenormOptions renorm;
};

struct SweepSpec {
    int reaction = 1;  // 1-based, file order
    int from = 0, to = 0, step = 1;
    std::vector<std::string> quantities;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline int resolve_sigma0(const SplitGraph& g, const std::string& id) {
    if (id.empty()) return 0;
    int s = find_species(g, id);
    if (s < 0) throw std::invalid_argument("unknown species '" + id + "'");
    return s;
}

inline std::string fixed3(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", x);
    return buf;
}

inline std::string integer(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.0f", std::floor(x + 1e-9));
    return buf;
}

inline std::string sci(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6e", x);
    return buf;
}

struct Pipeline {
    ReactionNetwork net;
    SplitGraph g;
    int sigma0 = 0;
    CoalescenceTree tree;
    HierEstimate est;
};

inline Pipeline run_hierarchy(const ReactionNetwork& net, const AnalyzeOptions& opt) {
    Pipeline p;
    p.net = net;
    p.g = split(net);
    p.sigma0 = resolve_sigma0(p.g, opt.sigma0);
    p.tree = renormalize(p.g, opt.renorm);
    p.est = hier_estimates(p.tree, p.sigma0);
    return p;
}

inline std::string node_label(const CoalescenceTree& t, int node) { return t.nodes[node].name; }

inline void print_report(const Pipeline& p, std::ostream& out) {
    const auto& t = p.tree;
    const auto& f = t.final_graph;
    const auto& h = p.est;
    out << "# coalescence tree\n" << dump(t);
    out << "# cores (sigma0 = " << p.g.names[p.sigma0] << ")\n";
    out << "accessible:";
    for (int s : h.accessible) out << ' ' << p.g.names[s];
    out << "\nsccs:";
    for (auto& e : h.cores.sccs)
        out << ' ' << node_label(t, e.node) << "(alpha=" << scale_str(e.alpha) << (e.resonance ? ",resonance" : "") << ")";
    out << "\ncores:";
    for (int v : h.cores.cores) out << ' ' << node_label(t, f.ids[v]);
    out << "\nthreshold: " << scale_str(h.cores.threshold) << (h.cores.resonant_cores ? " (resonant cores)" : "") << "\n";
    out << "# estimates (log_b)\n";
    out << "status: " << to_string(h.status) << "\n";
    out << "lambda: " << scale_str(h.lambda_log) << "\n";
    out << std::left << std::setw(10) << "species" << std::setw(8) << "pi" << std::setw(10) << "vdagger" << "v\n";
    for (int s : h.accessible) {
        out << std::setw(10) << p.g.names[s] << std::setw(8) << integer(h.pi_log[s]) << std::setw(10)
            << integer(h.vdagger_log[s]) << integer(h.v_log[s]) << "\n";
    }
    out << std::right;
    if (h.status == LambdaStatus::non_positive)
        out << "note: non-autocatalytic; stationary-measure scales reported\n";
    if (h.cemetery) out << "note: degradation dominant; absorption into the cemetery, lambda negative (magnitude not estimated)\n";
    if (h.resonance) out << "note: resonance encountered; estimates follow the configured branch and may be inconclusive\n";
}

inline int cmd_analyze(const std::string& path, const AnalyzeOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        auto net = parse_network(read_file(path));
        auto p = run_hierarchy(net, opt);
        print_report(p, out);
        return p.est.resonance ? Exit::resonance : Exit::ok;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return Exit::parse_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return Exit::parse_error;
    }
}

inline int cmd_oracle(const std::string& path, const std::string& sigma0, long green, std::ostream& out,
                      std::ostream& err) {
    SplitGraph g;
    try {
        g = split(parse_network(read_file(path)));
    } catch (const std::exception& e) {
        err << "parse error: " << e.what() << "\n";
        return Exit::parse_error;
    }
    int s0 = 0;
    try {
        s0 = resolve_sigma0(g, sigma0);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return Exit::parse_error;
    }
    auto acc = restrict_accessible(g, s0);
    SplitGraph sub = restrict_to(g, acc);
    double b = g.base_b;
    try {
        auto r = perron(generator(sub).m);
        out << "lambda*: " << sci(r.lambda_star) << "  log_b: "
            << fixed3(r.lambda_star > 0 ? log_b(r.lambda_star, b) : neg_inf) << "\n";
        out << "iterations: " << r.iterations << "  residual: " << sci(r.residual) << "\n";
        out << std::left << std::setw(10) << "species" << std::setw(15) << "v*" << std::setw(15) << "pi*"
            << std::setw(15) << "vdagger*" << std::setw(10) << "log_b pi*" << "\n";
        for (int i = 0; i < sub.size(); ++i) {
            out << std::setw(10) << sub.names[i] << std::setw(15) << sci(r.v_star[i]) << std::setw(15)
                << sci(r.pi_star[i]) << std::setw(15) << sci(r.v_dagger_star[i]) << fixed3(log_b(r.pi_star[i], b))
                << "\n";
        }
        out << std::right;
        auto ab = apriori_bounds(sub);
        out << "apriori: lower " << sci(ab.lower) << "  upper "
            << (ab.upper ? sci(*ab.upper) : std::string("not informative"));
        bool inside = ab.lower <= r.lambda_star * (1 + 1e-9) + 1e-300 &&
                      (!ab.upper || r.lambda_star <= *ab.upper * (1 + 1e-9));
        out << "  (" << (inside ? "lower <= lambda* <= upper" : "sandwich violated") << ")\n";
        if (green > 0) {
            double lam = std::max(r.lambda_star, 0.0);
            auto W = weights(sub, lam);
            int i0 = 0;
            auto gt = green_kernel(W, i0, green);
            out << "green G_N(" << sub.names[i0] << ",.)/N at N=" << green << ":";
            for (int i = 0; i < sub.size(); ++i) out << ' ' << sci(gt.normalized_row[i]);
            out << "\n";
        }
        return Exit::ok;
    } catch (const OracleError& e) {
        err << "oracle failure: " << e.what() << " (residual " << sci(e.residual()) << ")\n";
        return Exit::oracle_failure;
    } catch (const std::exception& e) {
        err << "oracle failure: " << e.what() << "\n";
        return Exit::oracle_failure;
    }
}

inline int cmd_compare(const std::string& path, const AnalyzeOptions& opt, double max_dev, std::ostream& out,
                       std::ostream& err) {
    Pipeline p;
    try {
        p = run_hierarchy(parse_network(read_file(path)), opt);
    } catch (const std::exception& e) {
        err << "parse error: " << e.what() << "\n";
        return Exit::parse_error;
    }
    OracleResult r;
    try {
        r = perron(generator(restrict_to(p.g, p.est.accessible)).m);
    } catch (const std::exception& e) {
        err << "oracle failure: " << e.what() << "\n";
        return Exit::oracle_failure;
    }
    auto rep = compare(p.est, r, p.g.base_b, p.g.names);
    out << std::left << std::setw(16) << "quantity" << std::setw(10) << "hier" << std::setw(10) << "oracle"
        << "|dlog_b|\n";
    for (auto& row : rep.rows)
        out << std::setw(16) << row.quantity << std::setw(10) << integer(row.hier) << std::setw(10)
            << fixed3(row.oracle) << fixed3(row.deviation) << "\n";
    out << std::right << "max deviation: " << fixed3(rep.max_deviation) << " (threshold " << fixed3(max_dev) << ")\n";
    if (p.est.resonance) out << "note: resonance encountered\n";
    return rep.max_deviation <= max_dev ? Exit::ok : Exit::deviation;
}

struct SweepPoint {
    Pipeline pipe;
    std::optional<OracleResult> oracle;
    double lambda_oracle = std::numeric_limits<double>::quiet_NaN();
};

// Oracle lambda for a sweep point: lambda* of the accessible graph when its Perron vector is
// positive, otherwise the abscissa of the strong component of sigma0.
inline SweepPoint evaluate_point(const ReactionNetwork& net, const AnalyzeOptions& opt) {
    SweepPoint pt;
    pt.pipe = run_hierarchy(net, opt);
    const auto& g = pt.pipe.g;
    try {
        pt.oracle = perron(generator(restrict_to(g, pt.pipe.est.accessible)).m);
        pt.lambda_oracle = pt.oracle->lambda_star;
    } catch (const OracleError&) {
        auto comps = tarjan_scc(adjacency(g));
        for (auto& c : comps)
            if (std::find(c.begin(), c.end(), pt.pipe.sigma0) != c.end())
                pt.lambda_oracle = spectral_abscissa(generator(restrict_to(g, c)).m);
    }
    return pt;
}

// -log_b of a rate; inf when there is no growth
inline double neg_log(double x, double b) { return x > 0 ? -log_b(x, b) : (std::isnan(x) ? x : pos_inf); }

inline std::string sweep_value(const SweepPoint& pt, const std::string& q) {
    const auto& g = pt.pipe.g;
    const auto& h = pt.pipe.est;
    double b = g.base_b;
    auto colon = q.find(':');
    std::string key = q.substr(0, colon);
    std::string arg = colon == std::string::npos ? "" : q.substr(colon + 1);
    auto species = [&](const std::string& id) {
        int s = find_species(g, id);
        if (s < 0) throw std::invalid_argument("unknown species '" + id + "' in quantity " + q);
        return s;
    };
    auto oracle_log = [&](const Eigen::VectorXd& v, int s) {
        if (!pt.oracle) return std::nan("");
        auto it = std::find(h.accessible.begin(), h.accessible.end(), s);
        if (it == h.accessible.end()) return neg_inf;
        return log_b(v[it - h.accessible.begin()], b) - log_b(v.maxCoeff(), b);
    };
    if (key == "lambda_hier") return integer(-h.lambda_log);
    if (key == "lambda_oracle") return fixed3(neg_log(pt.lambda_oracle, b));
    if (key == "lambda_cluster") {
        int node = pt.pipe.tree.top(species(arg));
        const auto& n = pt.pipe.tree.nodes[node];
        double l = n.stats ? n.stats->lambda : neg_inf;
        if (!n.stats) {
            const auto& e = pt.pipe.tree.initial_graph;
            l = e.kappa[node];
        }
        return integer(-l);
    }
    if (key == "pi_log") return integer(-h.pi_log[species(arg)]);
    if (key == "vdagger_log") return integer(-h.vdagger_log[species(arg)]);
    if (key == "pi_oracle_log") return fixed3(pt.oracle ? -oracle_log(pt.oracle->pi_star, species(arg)) : std::nan(""));
    if (key == "vdagger_oracle_log")
        return fixed3(pt.oracle ? -oracle_log(pt.oracle->v_dagger_star, species(arg)) : std::nan(""));
    if (key == "ratio") {
        auto slash = arg.find('/');
        if (slash == std::string::npos) throw std::invalid_argument("ratio needs a/b");
        int s1 = species(arg.substr(0, slash)), s2 = species(arg.substr(slash + 1));
        if (!pt.oracle) return "nan";
        return fixed3(-(oracle_log(pt.oracle->pi_star, s1) - oracle_log(pt.oracle->pi_star, s2)));
    }
    throw std::invalid_argument("unknown quantity '" + q + "'");
}

inline std::vector<std::vector<std::string>> sweep_rows(const ReactionNetwork& base, const AnalyzeOptions& opt,
                                                        const SweepSpec& spec) {
    if (spec.reaction < 1 || spec.reaction > static_cast<int>(base.reactions.size()))
        throw std::invalid_argument("unknown target reaction " + std::to_string(spec.reaction));
    if (spec.step < 1 || spec.from > spec.to) throw std::invalid_argument("sweep range needs from <= to and step >= 1");
    std::vector<std::vector<std::string>> rows;
    if (spec.quantities.empty()) return rows;
    for (int p = spec.from; p <= spec.to; p += spec.step) {
        ReactionNetwork net = base;
        auto& r = net.reactions[spec.reaction - 1];
        r.scale = p;
        r.rate = std::pow(net.base_b, p);
        SweepPoint pt = evaluate_point(net, opt);
        std::vector<std::string> row{std::to_string(p)};
        for (auto& q : spec.quantities) row.push_back(sweep_value(pt, q));
        row.push_back(pt.pipe.est.resonance ? "1" : "0");
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_csv(std::ostream& out, const SweepSpec& spec, const std::vector<std::vector<std::string>>& rows) {
    out << "param_scale";
    for (auto& q : spec.quantities) out << ',' << q;
    out << ",resonance\n";
    for (auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
    }
}

inline int cmd_sweep(const std::string& path, const AnalyzeOptions& opt, const SweepSpec& spec, std::ostream& csv,
                     std::ostream& err) {
    ReactionNetwork net;
    try {
        net = parse_network(read_file(path));
    } catch (const std::exception& e) {
        err << "parse error: " << e.what() << "\n";
        return Exit::parse_error;
    }
    try {
        auto rows = sweep_rows(net, opt, spec);
        write_csv(csv, spec, rows);
        return Exit::ok;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return Exit::parse_error;
    }
}

}  // namespace lyap::cli
