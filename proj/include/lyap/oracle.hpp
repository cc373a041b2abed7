#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lyap/graph.hpp"
#include "lyap/network.hpp"

namespace lyap {

class OracleError : public std::runtime_error {
public:
    enum class Kind { nonconvergence, reducible, below_threshold, not_stochastic };
    OracleError(Kind k, const std::string& msg, double residual = 0.0)
        : std::runtime_error(msg), kind_(k), residual_(residual) {}
    Kind kind() const { return kind_; }
    double residual() const { return residual_; }

private:
    Kind kind_;
    double residual_;
};

struct OracleOptions {
    double tol_rel = 1e-13;
    int max_iter = 500;
    int wide_max_n = 200;       // extended-precision polish up to this size
    double wide_spread = 1e-8;  // ... when min/max of the double iterate falls below this
};

struct EigenPair {
    double lambda = 0.0;
    Eigen::VectorXd v;
    int iterations = 0;
    double residual = 0.0;
};

namespace detail {

inline Adjacency pattern(const Eigen::MatrixXd& A) {
    // column convention: A(t, s) != 0 is an edge s -> t
    int n = static_cast<int>(A.rows());
    Adjacency adj(n);
    for (int s = 0; s < n; ++s)
        for (int t = 0; t < n; ++t)
            if (t != s && A(t, s) != 0.0) adj[s].push_back(t);
    return adj;
}

inline double rel_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& v, double lambda) {
    double na = A.cwiseAbs().rowwise().sum().maxCoeff();
    double nv = v.cwiseAbs().maxCoeff();
    if (na == 0 || nv == 0) return 0.0;
    return (A * v - lambda * v).cwiseAbs().maxCoeff() / (na * nv);
}

}  // namespace detail

// Perron root and vector of a Metzler matrix by Noda iteration: shifted inverse
// iteration whose shift is the Collatz-Wielandt upper bound, so it never drops below lambda*.
inline EigenPair noda(const Eigen::MatrixXd& A, const OracleOptions& opt = {}) {
    int n = static_cast<int>(A.rows());
    EigenPair r;
    if (n == 0) throw std::invalid_argument("empty matrix");
    if (n == 1) {
        r.lambda = A(0, 0);
        r.v = Eigen::VectorXd::Ones(1);
        return r;
    }
    double scale = A.cwiseAbs().maxCoeff();
    double floor_abs = 1e-15 * std::max(scale, 1e-300);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / n);
    Eigen::VectorXd ax = A * x;
    double mu = (ax.array() / x.array()).maxCoeff();
    mu += 1e-12 * std::max(std::abs(mu), scale);
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    for (int it = 1; it <= opt.max_iter; ++it) {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(mu * I - A);
        Eigen::VectorXd y = lu.solve(x);
        r.iterations = it;
        if (!y.allFinite() || (y.array() <= 0).any()) break;  // shift hit lambda* to machine precision
        Eigen::ArrayXd q = x.array() / y.array();
        double upper = mu - q.minCoeff();
        double lower = mu - q.maxCoeff();
        x = y / y.sum();
        double width = std::max(std::abs(upper), floor_abs);
        bool closed = upper - lower <= opt.tol_rel * width;
        bool stalled = std::abs(upper - mu) <= opt.tol_rel * width;
        mu = upper;
        if (closed || stalled) {
            r.lambda = mu;
            r.v = x;
            r.residual = detail::rel_residual(A, x, mu);
            return r;
        }
        if (it == opt.max_iter) {
            throw OracleError(OracleError::Kind::nonconvergence,
                              "perron iteration did not converge", detail::rel_residual(A, x, mu));
        }
    }
    r.lambda = mu;
    r.v = x;
    r.residual = detail::rel_residual(A, x, mu);
    return r;
}

// Plain Cesaro-averaged power iteration on A + cI. Slow on stiff input; kept as an independent route.
inline EigenPair cesaro_power(const Eigen::MatrixXd& A, double tol_rel = 1e-12, long max_iter = 10000000) {
    int n = static_cast<int>(A.rows());
    double c = 1.0 + A.diagonal().cwiseAbs().maxCoeff();
    Eigen::MatrixXd M = A + c * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / n), avg = Eigen::VectorXd::Zero(n);
    double prev = std::numeric_limits<double>::quiet_NaN();
    EigenPair r;
    for (long it = 1; it <= max_iter; ++it) {
        Eigen::VectorXd y = M * x;
        x = y / y.sum();
        avg += (x - avg) / static_cast<double>(it);
        if (it % 64 == 0) {
            Eigen::VectorXd u = avg / avg.sum();
            double est = (M * u).sum() - c;
            if (std::abs(est - prev) <= tol_rel * std::max(std::abs(est), 1e-300) ||
                std::abs(est - prev) <= 1e-15 * c) {
                r.lambda = est;
                r.v = u;
                r.iterations = static_cast<int>(it);
                r.residual = detail::rel_residual(A, u, est);
                return r;
            }
            prev = est;
        }
    }
    throw OracleError(OracleError::Kind::nonconvergence, "power iteration did not converge");
}

// Largest real eigenvalue of a Metzler matrix that need not be irreducible.
inline double spectral_abscissa(const Eigen::MatrixXd& A, const OracleOptions& opt = {}) {
    auto comps = tarjan_scc(detail::pattern(A));
    double best = neg_inf;
    for (auto& c : comps) {
        int m = static_cast<int>(c.size());
        Eigen::MatrixXd B(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) B(i, j) = A(c[i], c[j]);
        best = std::max(best, noda(B, opt).lambda);
    }
    return best;
}

struct OracleResult {
    double lambda_star = 0.0;
    Eigen::VectorXd v_star;             // sum = 1
    Eigen::VectorXd v_dagger_star;      // <v_dagger, v_star> = 1
    Eigen::VectorXd pi_star;            // (|A_ss| + lambda) v_s, sum = 1
    Eigen::VectorXd v_dagger_discrete;  // <v_dagger_discrete, pi_star> = 1
    int iterations = 0;
    double residual = 0.0;
};

namespace detail {

#if defined(__SIZEOF_FLOAT128__) && !defined(__clang__)
using wide = __float128;
#else
using wide = long double;
#endif

// Partial-pivot Gaussian elimination; a is row-major n x n and is destroyed.
template <class T>
bool dense_solve(int n, std::vector<T>& a, std::vector<T>& x) {
    for (int k = 0; k < n; ++k) {
        int p = k;
        T best = a[k * n + k] < 0 ? -a[k * n + k] : a[k * n + k];
        for (int i = k + 1; i < n; ++i) {
            T v = a[i * n + k] < 0 ? -a[i * n + k] : a[i * n + k];
            if (v > best) { best = v; p = i; }
        }
        if (best == 0) return false;
        if (p != k) {
            for (int j = 0; j < n; ++j) std::swap(a[k * n + j], a[p * n + j]);
            std::swap(x[k], x[p]);
        }
        for (int i = k + 1; i < n; ++i) {
            T f = a[i * n + k] / a[k * n + k];
            if (f == 0) continue;
            for (int j = k + 1; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
            x[i] -= f * x[k];
        }
    }
    for (int i = n - 1; i >= 0; --i) {
        T s = x[i];
        for (int j = i + 1; j < n; ++j) s -= a[i * n + j] * x[j];
        x[i] = s / a[i * n + i];
    }
    return true;
}

// Noda iteration in extended precision, started from a double iterate. Small
// Perron components (relative size far below 1e-16) are resolved this way.
inline EigenPair noda_wide(const Eigen::MatrixXd& A, const Eigen::VectorXd& start, int max_iter = 80) {
    using T = wide;
    int n = static_cast<int>(A.rows());
    double top = start.cwiseAbs().maxCoeff();
    std::vector<T> M(n * n), x(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M[i * n + j] = A(i, j);
    T sum = 0;
    for (int i = 0; i < n; ++i) {
        x[i] = std::max(start[i], 1e-30 * top);
        sum += x[i];
    }
    for (auto& v : x) v /= sum;
    T mu = 0;
    for (int i = 0; i < n; ++i) {
        T ax = 0;
        for (int j = 0; j < n; ++j) ax += M[i * n + j] * x[j];
        T q = ax / x[i];
        if (i == 0 || q > mu) mu = q;
    }
    T scale = 0;
    for (auto v : M) scale = std::max(scale, v < 0 ? -v : v);
    EigenPair r;
    for (int it = 1; it <= max_iter; ++it) {
        std::vector<T> B(n * n), y = x;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) B[i * n + j] = (i == j ? mu : T(0)) - M[i * n + j];
        r.iterations = it;
        if (!dense_solve(n, B, y)) break;
        bool ok = true;
        T ys = 0;
        for (auto v : y) {
            if (!(v > 0) || v != v) ok = false;
            ys += v;
        }
        if (!ok) break;
        T qmin = x[0] / y[0], qmax = qmin;
        for (int i = 1; i < n; ++i) {
            T q = x[i] / y[i];
            qmin = std::min(qmin, q);
            qmax = std::max(qmax, q);
        }
        T upper = mu - qmin, lower = mu - qmax;
        for (int i = 0; i < n; ++i) x[i] = y[i] / ys;
        T width = std::max(upper < 0 ? -upper : upper, T(1e-24) * scale);
        bool done = upper - lower <= T(1e-28) * width || upper >= mu;
        mu = upper;
        if (done) break;
    }
    r.lambda = static_cast<double>(mu);
    r.v.resize(n);
    for (int i = 0; i < n; ++i) r.v[i] = static_cast<double>(x[i]);
    r.residual = rel_residual(A, r.v, r.lambda);
    return r;
}

inline EigenPair perron_pair(const Eigen::MatrixXd& A, const OracleOptions& opt) {
    EigenPair p = noda(A, opt);
    int n = static_cast<int>(A.rows());
    double lo = p.v.minCoeff(), hi = p.v.cwiseAbs().maxCoeff();
    if (n > 1 && n <= opt.wide_max_n && !(lo > opt.wide_spread * hi)) {
        EigenPair w = noda_wide(A, p.v);
        w.iterations += p.iterations;
        return w;
    }
    return p;
}

}  // namespace detail

inline OracleResult perron(const Eigen::MatrixXd& A, const OracleOptions& opt = {}) {
    int n = static_cast<int>(A.rows());
    auto adj = detail::pattern(A);
    auto comps = tarjan_scc(adj);
    std::vector<double> block(comps.size());
    double lam_blocks = neg_inf;
    for (size_t i = 0; i < comps.size(); ++i) {
        auto& c = comps[i];
        int m = static_cast<int>(c.size());
        Eigen::MatrixXd B(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) B(a, b) = A(c[a], c[b]);
        block[i] = noda(B, opt).lambda;
        lam_blocks = std::max(lam_blocks, block[i]);
    }
    // v* is positive iff every vertex lies downstream of a block attaining lambda*;
    // v_dagger vanishes exactly off the vertices upstream of such a block
    double slack = 1e-9 * std::max(std::abs(lam_blocks), 1e-15 * A.cwiseAbs().maxCoeff());
    std::vector<int> sources;
    for (size_t i = 0; i < comps.size(); ++i)
        if (block[i] >= lam_blocks - slack) sources.insert(sources.end(), comps[i].begin(), comps[i].end());
    auto down = reachable_from(adj, sources);
    auto up = reachable_from(reversed(adj), sources);
    for (int s = 0; s < n; ++s)
        if (!down[s]) throw OracleError(OracleError::Kind::reducible, "reducible input: Perron vector has zero entries");

    EigenPair right = detail::perron_pair(A, opt);
    EigenPair left = detail::perron_pair(A.transpose(), opt);
    OracleResult r;
    r.lambda_star = right.lambda;
    r.iterations = right.iterations + left.iterations;
    r.residual = std::max(right.residual, left.residual);
    r.v_star = right.v.cwiseMax(0.0);
    r.v_star /= r.v_star.sum();
    if ((r.v_star.array() <= 0).any())
        throw OracleError(OracleError::Kind::reducible, "reducible input: Perron vector has zero entries");
    r.v_dagger_star = left.v.cwiseMax(0.0);
    for (int s = 0; s < n; ++s)
        if (!up[s]) r.v_dagger_star[s] = 0.0;
    r.v_dagger_star /= r.v_dagger_star.dot(r.v_star);
    r.pi_star.resize(n);
    for (int s = 0; s < n; ++s) r.pi_star[s] = std::max(r.lambda_star - A(s, s), 0.0) * r.v_star[s];
    double ps = r.pi_star.sum();
    if (ps > 0) r.pi_star /= ps;
    double d = r.v_dagger_star.dot(r.pi_star);
    r.v_dagger_discrete = d > 0 ? Eigen::VectorXd(r.v_dagger_star / d) : r.v_dagger_star;
    return r;
}

inline OracleResult perron(const GeneratorMatrix& G, const OracleOptions& opt = {}) { return perron(G.m, opt); }
inline OracleResult perron(const SplitGraph& g, const OracleOptions& opt = {}) { return perron(generator(g).m, opt); }

// Stationary measure of a row-stochastic kernel: pi W = pi, sum pi = 1.
inline Eigen::VectorXd stationary(const Eigen::MatrixXd& W) {
    int n = static_cast<int>(W.rows());
    if (!strongly_connected(detail::pattern(W.transpose())))
        throw OracleError(OracleError::Kind::reducible, "stationary: reducible chain");
    Eigen::MatrixXd M = (W - Eigen::MatrixXd::Identity(n, n)).transpose();
    M.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs[n - 1] = 1.0;
    Eigen::VectorXd pi = M.fullPivLu().solve(rhs);
    if ((pi.array() <= 0).any()) throw OracleError(OracleError::Kind::reducible, "stationary: non-positive solution");
    return pi;
}

inline Eigen::VectorXd stationary(const WeightMatrix& W) { return stationary(W.w); }

// (alpha I - A)^{-1}; nonnegativity certifies alpha > lambda*.
inline Eigen::MatrixXd resolvent(const Eigen::MatrixXd& A, double alpha) {
    int n = static_cast<int>(A.rows());
    Eigen::FullPivLU<Eigen::MatrixXd> lu(alpha * Eigen::MatrixXd::Identity(n, n) - A);
    if (!lu.isInvertible())
        throw OracleError(OracleError::Kind::below_threshold, "alpha below Lyapunov threshold (singular)");
    Eigen::MatrixXd R = lu.inverse();
    double big = R.cwiseAbs().maxCoeff();
    if (!R.allFinite() || (R.array() < -1e-12 * big).any())
        throw OracleError(OracleError::Kind::below_threshold, "alpha below Lyapunov threshold");
    return R.cwiseMax(0.0);
}

inline Eigen::MatrixXd resolvent(const GeneratorMatrix& G, double alpha) { return resolvent(G.m, alpha); }

// Sum over paths s -> t of length <= max_len of w(alpha)_path / (|A_tt| + alpha), laid out like resolvent().
inline Eigen::MatrixXd path_sum_resolvent(const SplitGraph& g, double alpha, int max_len) {
    int n = g.size();
    Eigen::MatrixXd Wt = weights(g, alpha).w.transpose();  // Wt(t, s) = w_{s->t}
    Eigen::VectorXd dinv(n);
    for (int s = 0; s < n; ++s) dinv[s] = 1.0 / (g.abs_diag(s) + alpha);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n), acc = term;
    for (int l = 1; l <= max_len; ++l) {
        term = Wt * term;
        acc += term;
    }
    return dinv.asDiagonal() * acc;
}

// Total weight of excursions sigma -> sigma at shift alpha; nullopt when the series diverges.
inline std::optional<double> excursion_weight(const SplitGraph& g, double alpha, int sigma) {
    int n = g.size();
    Eigen::MatrixXd W = weights(g, alpha).w;
    std::vector<int> rest;
    for (int s = 0; s < n; ++s)
        if (s != sigma) rest.push_back(s);
    int m = static_cast<int>(rest.size());
    if (m == 0) return 0.0;
    Eigen::MatrixXd Q(m, m);
    Eigen::VectorXd b(m), first(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) Q(i, j) = W(rest[i], rest[j]);
        b[i] = W(rest[i], sigma);
        first[i] = W(sigma, rest[i]);
    }
    if (spectral_abscissa(Q) >= 1.0 - 1e-10) return std::nullopt;
    Eigen::VectorXd f = (Eigen::MatrixXd::Identity(m, m) - Q).fullPivLu().solve(b);
    if (!f.allFinite() || (f.array() < 0).any()) return std::nullopt;
    return first.dot(f);
}

namespace detail {

inline void split_sets(int n, const std::vector<int>& internal, std::vector<int>& pos) {
    pos.assign(n, -1);
    for (size_t i = 0; i < internal.size(); ++i) pos[internal[i]] = static_cast<int>(i);
}

}  // namespace detail

// Solve (W(alpha) - Id) f = 0 inside `internal` with f = delta_target outside.
inline Eigen::VectorXd exit_probabilities(const SplitGraph& g, const std::vector<int>& internal, double alpha,
                                          int target) {
    int n = g.size();
    std::vector<int> pos;
    detail::split_sets(n, internal, pos);
    if (pos[target] >= 0) throw std::invalid_argument("exit target must be external");
    int m = static_cast<int>(internal.size());
    Eigen::MatrixXd W = weights(g, alpha).w;
    Eigen::MatrixXd Q(m, m);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) Q(i, j) = W(internal[i], internal[j]);
        b[i] = W(internal[i], target);
    }
    if (spectral_abscissa(Q) >= 1.0 - 1e-12)
        throw OracleError(OracleError::Kind::below_threshold, "alpha at or below internal Lyapunov threshold");
    return (Eigen::MatrixXd::Identity(m, m) - Q).fullPivLu().solve(b);
}

// Solve A(alpha) v = 0 on `internal` rows with v = delta_source outside.
inline Eigen::VectorXd adjoint_boundary_solve(const SplitGraph& g, const std::vector<int>& internal, double alpha,
                                              int source) {
    int n = g.size();
    std::vector<int> pos;
    detail::split_sets(n, internal, pos);
    if (pos[source] >= 0) throw std::invalid_argument("source must be external");
    int m = static_cast<int>(internal.size());
    Eigen::MatrixXd A = generator(g, alpha).m;
    Eigen::MatrixXd B(m, m);
    Eigen::VectorXd rhs(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) B(i, j) = A(internal[i], internal[j]);
        rhs[i] = A(internal[i], source);
    }
    if (spectral_abscissa(B) >= 0.0)
        throw OracleError(OracleError::Kind::below_threshold, "alpha at or below internal Lyapunov threshold");
    return B.fullPivLu().solve(-rhs);
}

struct GreenTable {
    int source = 0;
    long horizon = 0;
    std::vector<std::pair<long, Eigen::VectorXd>> rows;  // G_N(source, .) at checkpoints
    Eigen::VectorXd normalized_row;                      // G_N / N at the horizon
    double log_scale = 0.0;  // natural log of a common factor divided out of every stored row
};

// G_N(s, .) = sum_{l < N} (W^l)(s, .)
inline GreenTable green_kernel(const Eigen::MatrixXd& W, int sigma, long N, std::vector<long> checkpoints = {}) {
    if (N < 1) throw std::invalid_argument("green_kernel: N must be >= 1");
    int n = static_cast<int>(W.rows());
    GreenTable t;
    t.source = sigma;
    t.horizon = N;
    std::sort(checkpoints.begin(), checkpoints.end());
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n), acc = Eigen::RowVectorXd::Zero(n);
    row[sigma] = 1.0;
    size_t next = 0;
    constexpr double big = 1e250;
    for (long l = 0; l < N; ++l) {
        acc += row;
        while (next < checkpoints.size() && checkpoints[next] == l + 1) {
            t.rows.emplace_back(l + 1, acc.transpose());
            ++next;
        }
        row = row * W;
        double m = std::max(row.cwiseAbs().maxCoeff(), acc.cwiseAbs().maxCoeff());
        if (m > big) {
            row /= big;
            acc /= big;
            for (auto& [k, r] : t.rows) r /= big;
            t.log_scale += std::log(big);
        }
    }
    if (t.rows.empty() || t.rows.back().first != N) t.rows.emplace_back(N, acc.transpose());
    t.normalized_row = acc.transpose() / static_cast<double>(N);
    return t;
}

inline GreenTable green_kernel(const WeightMatrix& W, int sigma, long N, std::vector<long> checkpoints = {}) {
    return green_kernel(W.w, sigma, N, std::move(checkpoints));
}

struct AprioriRow {
    int sigma = 0;
    double alpha_m = 0.0, alpha_M = 0.0;
    double x_m = 0.0, x_M = 0.0, y2_m = 0.0, y2_M = 0.0;
    bool upper_informative = true;
};

struct AprioriBounds {
    double lower = 0.0;
    std::optional<double> upper;  // empty: no sigma* gives an informative bound
    double m = 0.0, M = 0.0, d = 0.0, D = 0.0;
    std::vector<AprioriRow> per_sigma;
};

// Degradation plays the role of the external leak: k^ext = beta, |A~| = k (transition rates only),
// so that |A~| = |A| + kappa - k^ext holds on the whole graph.
inline AprioriBounds apriori_bounds(const SplitGraph& g) {
    int n = g.size();
    AprioriBounds r;
    r.m = pos_inf;
    r.M = 0.0;
    r.d = pos_inf;
    r.D = neg_inf;
    for (int s = 0; s < n; ++s) {
        double kt = g.k(s), a = g.abs_diag(s);
        r.m = std::min(r.m, kt);
        r.M = std::max(r.M, kt);
        double ratio = (g.kappa[s] - g.beta[s]) / a;
        r.d = std::min(r.d, ratio);
        r.D = std::max(r.D, ratio);
    }
    auto thr = [](double x, double y2) { return 0.5 * (-x + std::sqrt(x * x + y2)); };
    r.lower = neg_inf;
    for (int s = 0; s < n; ++s) {
        AprioriRow row;
        row.sigma = s;
        double a = g.abs_diag(s), at = g.k(s), net = g.kappa[s] - g.beta[s];
        row.x_m = a + r.m;
        row.x_M = a + r.M;
        row.y2_m = 4.0 * r.m * (r.d * at + net);
        row.y2_M = 4.0 * r.M * (r.D * at + net);
        row.alpha_m = row.y2_m < 0 ? 0.0 : thr(row.x_m, row.y2_m);
        row.upper_informative = row.y2_M >= 0;
        row.alpha_M = row.upper_informative ? thr(row.x_M, row.y2_M) : 0.0;
        r.lower = std::max(r.lower, row.alpha_m);
        if (row.upper_informative) r.upper = r.upper ? std::min(*r.upper, row.alpha_M) : row.alpha_M;
        r.per_sigma.push_back(row);
    }
    return r;
}

struct DoeblinResult {
    double rho = 0.0;
    int period = 1;
    int q = 1;
};

inline double doeblin_coefficient(const Eigen::MatrixXd& W) {
    return W.colwise().minCoeff().sum();
}

inline int chain_period(const Eigen::MatrixXd& W) {
    int n = static_cast<int>(W.rows());
    std::vector<int> level(n, -1);
    std::vector<int> todo{0};
    level[0] = 0;
    int p = 0;
    for (size_t h = 0; h < todo.size(); ++h) {
        int u = todo[h];
        for (int v = 0; v < n; ++v) {
            if (W(u, v) <= 0) continue;
            if (level[v] < 0) {
                level[v] = level[u] + 1;
                todo.push_back(v);
            } else {
                p = std::gcd(p, std::abs(level[u] + 1 - level[v]));
            }
        }
    }
    return p == 0 ? 1 : p;
}

inline DoeblinResult doeblin_rho(const Eigen::MatrixXd& W, bool average = false) {
    int n = static_cast<int>(W.rows());
    for (int i = 0; i < n; ++i) {
        if ((W.row(i).array() < 0).any() || std::abs(W.row(i).sum() - 1.0) > 1e-9)
            throw OracleError(OracleError::Kind::not_stochastic, "doeblin_rho: input is not row-stochastic");
    }
    DoeblinResult r;
    if (!average) {
        r.rho = doeblin_coefficient(W);
        return r;
    }
    r.period = chain_period(W);
    Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(n, n), pw = Eigen::MatrixXd::Identity(n, n);
    for (int th = 1; th <= r.period; ++th) {
        pw = pw * W;
        avg += pw;
    }
    avg /= r.period;
    // Wielandt's bound (n-1)^2+1 caps the power needed for a primitive matrix
    int cap = (n - 1) * (n - 1) + 1;
    Eigen::MatrixXd M = avg;
    r.q = 1;
    while (r.q < cap && !(M.array() > 0).all()) {
        M = M * avg;
        ++r.q;
    }
    r.rho = doeblin_coefficient(M);
    return r;
}

inline DoeblinResult doeblin_rho(const WeightMatrix& W, bool average = false) { return doeblin_rho(W.w, average); }

// Semi-norm dual to L1 on zero-sum vectors: half the oscillation.
inline double dual_sup_norm(const Eigen::VectorXd& f) { return 0.5 * (f.maxCoeff() - f.minCoeff()); }

struct FirstOrder {
    double lambda1 = 0.0, tau = 0.0, eps_bar = 0.0, Z0 = 0.0;
    Eigen::VectorXd pi_tilde;
};

// First-order growth rate from averages over the internal conservative chain; degradation counts as an exit.
inline FirstOrder first_order_lambda(const SplitGraph& g, const std::vector<int>& internal) {
    int n = g.size();
    std::vector<int> pos;
    detail::split_sets(n, internal, pos);
    int m = static_cast<int>(internal.size());
    FirstOrder r;
    if (m == 1) {
        r.pi_tilde = Eigen::VectorXd::Ones(1);
    } else {
        Eigen::MatrixXd Wt = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            int s = internal[i];
            double kin = 0;
            for (auto& [t, k] : g.out[s])
                if (pos[t] >= 0) kin += k;
            if (kin <= 0) throw OracleError(OracleError::Kind::reducible, "first_order_lambda: reducible internal graph");
            for (auto& [t, k] : g.out[s])
                if (pos[t] >= 0) Wt(i, pos[t]) = k / kin;
        }
        r.pi_tilde = stationary(Wt);
    }
    for (int i = 0; i < m; ++i) {
        int s = internal[i];
        double ktot = g.k(s) + g.beta[s], kext = g.beta[s];
        for (auto& [t, k] : g.out[s])
            if (pos[t] < 0) kext += k;
        double eps = g.kappa[s] > 0 ? g.kappa[s] / (ktot - g.kappa[s]) : 0.0;
        r.tau += r.pi_tilde[i] / ktot;
        r.eps_bar += r.pi_tilde[i] * eps;
        r.Z0 += r.pi_tilde[i] * kext / ktot;
    }
    r.lambda1 = (r.eps_bar - r.Z0) / r.tau;
    return r;
}

}  // namespace lyap
