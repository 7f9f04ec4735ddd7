#include "dsgd/topology.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "dsgd/rng.hpp"

namespace dsgd {

std::vector<int> CommGraph::degrees() const {
    std::vector<int> deg(S, 0);
    for (const auto& [u, v] : model_edges) {
        ++deg[u - 1];
        ++deg[v - 1];
    }
    return deg;
}

int CommGraph::max_degree() const {
    const auto deg = degrees();
    return deg.empty() ? 0 : *std::max_element(deg.begin(), deg.end());
}

CommGraph build_agent_grid(int S, int K, const EdgeList& model_edges) {
    if (S < 1 || K < 1) throw std::invalid_argument("build_agent_grid: S and K must be >= 1");
    std::set<std::pair<int, int>> norm;
    for (const auto& [u, v] : model_edges) {
        if (u == v) throw std::invalid_argument("build_agent_grid: self-loop on node " + std::to_string(u));
        if (u < 1 || u > S || v < 1 || v > S)
            throw std::invalid_argument("build_agent_grid: edge endpoint out of range [1.." +
                                        std::to_string(S) + "]");
        norm.emplace(std::min(u, v), std::max(u, v));
    }
    CommGraph g;
    g.S = S;
    g.K = K;
    g.model_edges.assign(norm.begin(), norm.end());
    return g;
}

bool is_connected(int S, const EdgeList& edges) {
    if (S <= 1) return true;
    std::vector<std::vector<int>> adj(S + 1);
    for (const auto& [u, v] : edges) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    std::vector<char> seen(S + 1, 0);
    std::vector<int> stack{1};
    seen[1] = 1;
    int count = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v : adj[u]) {
            if (!seen[v]) {
                seen[v] = 1;
                ++count;
                stack.push_back(v);
            }
        }
    }
    return count == S;
}

TopologyReport validate_topology(const CommGraph& g) {
    TopologyReport rep;

    // Data-group sub-graphs are the chains (s,1)-...-(s,K) by construction;
    // report the structural facts that make them paths.
    const bool chains_ok = g.S >= 1 && g.K >= 1;
    rep.items.push_back({"data_group_chains", chains_ok,
                         "each data-group is the path over its K=" + std::to_string(g.K) + " modules"});

    const bool connected = is_connected(g.S, g.model_edges);
    rep.items.push_back({"model_group_connected", connected,
                         connected ? "shared model-group graph over S=" + std::to_string(g.S) +
                                         " nodes is connected"
                                   : "shared model-group graph is disconnected"});

    rep.pass = chains_ok && connected;
    return rep;
}

double default_alpha(int max_degree) { return 0.9 / (max_degree + 1); }

MixingMatrix build_mixing_matrix(int S, const EdgeList& model_edges, double alpha) {
    CommGraph g = build_agent_grid(S, 1, model_edges);  // reuse edge validation
    const auto deg = g.degrees();
    const int max_deg = g.max_degree();
    const double upper = max_deg > 0 ? 1.0 / max_deg : 1.0;
    if (!(alpha > 0.0 && alpha < upper))
        throw std::invalid_argument("build_mixing_matrix: alpha must lie in (0, " +
                                    std::to_string(upper) + ")");

    MixingMatrix m;
    m.S = S;
    m.alpha = alpha;
    m.P.assign(static_cast<std::size_t>(S) * S, 0.0);
    for (int i = 0; i < S; ++i) m.P[static_cast<std::size_t>(i) * S + i] = 1.0 - deg[i] * alpha;
    for (const auto& [u, v] : g.model_edges) {
        m.P[static_cast<std::size_t>(u - 1) * S + (v - 1)] = alpha;
        m.P[static_cast<std::size_t>(v - 1) * S + (u - 1)] = alpha;
    }
    m.gamma = spectral_gap(m.P, S);
    return m;
}

namespace {

// y = M x for the deviation matrix M = P - (1/S) 11^T.
void apply_deviation(const std::vector<double>& P, int S, const std::vector<double>& x,
                     std::vector<double>& y) {
    double mean = 0.0;
    for (int j = 0; j < S; ++j) mean += x[j];
    mean /= S;
    for (int i = 0; i < S; ++i) {
        double acc = 0.0;
        const double* row = P.data() + static_cast<std::size_t>(i) * S;
        for (int j = 0; j < S; ++j) acc += row[j] * x[j];
        y[i] = acc - mean;
    }
}

double norm2(const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return std::sqrt(acc);
}

}  // namespace

double spectral_gap(const std::vector<double>& P, int S) {
    if (S == 1) return 0.0;

    constexpr int kMaxIter = 10000;
    constexpr int kMaxRestarts = 4;

    std::vector<double> v(S), w(S), u(S);
    std::vector<std::vector<double>> converged;  // deflated directions
    double best = 0.0;
    bool ok = false;

    for (int restart = 0; restart < kMaxRestarts; ++restart) {
        Rng rng(derive_seed(0x5eedULL + S, seed_tag::power, restart));
        for (int i = 0; i < S; ++i) v[i] = rng.normal();
        // Deflate previously converged directions so a restart explores the
        // orthogonal complement.
        for (const auto& q : converged) {
            double dot = 0.0;
            for (int i = 0; i < S; ++i) dot += v[i] * q[i];
            for (int i = 0; i < S; ++i) v[i] -= dot * q[i];
        }
        double nv = norm2(v);
        if (nv == 0.0) continue;
        for (int i = 0; i < S; ++i) v[i] /= nv;

        for (int iter = 0; iter < kMaxIter; ++iter) {
            apply_deviation(P, S, v, w);
            const double s2 = [&] {
                double acc = 0.0;
                for (int i = 0; i < S; ++i) acc += w[i] * w[i];
                return acc;
            }();
            if (s2 == 0.0) {
                // v is in the kernel of M; the deviation matrix may still be
                // zero (complete-graph case) or v was unlucky.
                best = std::max(best, 0.0);
                ok = true;
                break;
            }
            // Residual of the M^2 eigenproblem bounds the eigenvalue error
            // for symmetric M: |s2 - lambda^2| <= ||M^2 v - s2 v||.
            apply_deviation(P, S, w, u);
            double res = 0.0;
            for (int i = 0; i < S; ++i) {
                const double r = u[i] - s2 * v[i];
                res += r * r;
            }
            res = std::sqrt(res);
            if (res <= std::max(1e-15, 1e-11 * s2)) {
                best = std::max(best, std::sqrt(s2));
                ok = true;
                break;
            }
            // Next iterate: normalized M^2 v.
            const double nu = norm2(u);
            if (nu == 0.0) {
                best = std::max(best, 0.0);
                ok = true;
                break;
            }
            for (int i = 0; i < S; ++i) v[i] = u[i] / nu;
        }
        if (ok) {
            const double nv2 = norm2(v);
            if (nv2 > 0.0) {
                auto q = v;
                for (int i = 0; i < S; ++i) q[i] /= nv2;
                converged.push_back(std::move(q));
            }
            // One restart after first convergence guards against a start
            // vector orthogonal to the dominant eigenspace.
            if (restart >= 1) return best;
            ok = false;
            continue;
        }
    }
    if (best > 0.0 || !converged.empty()) return best;
    throw std::runtime_error("spectral_gap: power iteration did not converge");
}

double spectral_gap(const MixingMatrix& m) { return spectral_gap(m.P, m.S); }

}  // namespace dsgd
