#ifndef DSGD_TOPOLOGY_HPP
#define DSGD_TOPOLOGY_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dsgd {

// Agent (s, k): member of data-group s (1..S) and model-group k (1..K).
struct AgentId {
    int s = 1;
    int k = 1;
};

using EdgeList = std::vector<std::pair<int, int>>;

// The S*K agent grid. Every model-group shares one undirected graph over the
// data-group indices [1..S]; the data-group sub-graphs are the implicit
// chains (s,1)-(s,2)-...-(s,K) and are not stored.
struct CommGraph {
    int S = 1;
    int K = 1;
    EdgeList model_edges;  // normalized: u < v, sorted, no duplicates

    int max_degree() const;
    std::vector<int> degrees() const;  // size S, index s-1
};

// Gossip weight matrix over one model-group: P[i][j] = alpha on edges,
// 1 - deg(i)*alpha on the diagonal, 0 otherwise. Symmetric, doubly
// stochastic; gamma is the spectral radius of P - (1/S) 11^T.
struct MixingMatrix {
    int S = 1;
    std::vector<double> P;  // row-major S*S
    double alpha = 0.0;
    double gamma = 0.0;

    double at(int i, int j) const { return P[static_cast<std::size_t>(i) * S + j]; }
};

struct TopologyReport {
    struct Item {
        std::string name;
        bool pass = false;
        std::string detail;
    };
    std::vector<Item> items;
    bool pass = false;
};

// Builds the grid; rejects self-loops and out-of-range endpoints. Duplicate
// edges collapse. Connectivity is checked by validate_topology, not here.
CommGraph build_agent_grid(int S, int K, const EdgeList& model_edges);

// Report-only validation: data-group sub-graphs are chains, model-group
// graph is connected. Overall pass iff both hold.
TopologyReport validate_topology(const CommGraph& g);

// true iff the graph over [1..S] induced by the edges is connected.
bool is_connected(int S, const EdgeList& edges);

// Requires 0 < alpha < 1/max_degree (any alpha in (0,1) for an edgeless
// single node). gamma is filled in via spectral_gap.
MixingMatrix build_mixing_matrix(int S, const EdgeList& model_edges, double alpha);

// Spectral radius of P - (1/S) 11^T by power iteration on the squared
// deviation matrix with a residual-bound stopping rule (relative tolerance
// 1e-10 or better on gamma), 10000-iteration cap and deflation restarts.
// Throws std::runtime_error on non-convergence.
double spectral_gap(const MixingMatrix& m);
double spectral_gap(const std::vector<double>& P, int S);

// Default construction parameter, safely inside (0, 1/max_degree).
double default_alpha(int max_degree);

}  // namespace dsgd

#endif  // DSGD_TOPOLOGY_HPP
