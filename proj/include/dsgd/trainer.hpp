#ifndef DSGD_TRAINER_HPP
#define DSGD_TRAINER_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dsgd/dataset.hpp"
#include "dsgd/nn.hpp"
#include "dsgd/pipeline.hpp"
#include "dsgd/schedule.hpp"
#include "dsgd/topology.hpp"

namespace dsgd {

// One CSV row. Rows are written at t = 0, eval_interval, 2*eval_interval,
// ... plus the final state t = T. loss/delta columns describe the state
// entering iteration t; grad_norm is the stacked stale-gradient norm
// computed during iteration t (0 for the final row); wall_ms is the
// duration of the preceding iteration.
struct MetricsRecord {
    std::int64_t t = 0;
    double eta = 0.0;
    double loss = 0.0;
    double delta_max = 0.0;   // per-layer max disagreement
    double delta_norm = 0.0;  // stacked consensus error ||delta(t)||
    double grad_norm = 0.0;   // ||grad-stack(t)||
    double lemma2_rhs = 0.0;  // geometric bound on ||delta(t)||
    bool contraction_ok = true;  // all per-step contraction checks so far
    double wall_ms = 0.0;
};

struct DiagnosticsReport {
    double gamma = 0.0;
    double rho_hat = 0.0;    // max ||grad phi(W1)-grad phi(W2)|| / ||W1-W2|| over probe pairs
    double sigma_hat = 0.0;  // max per-sample gradient norm observed
    double m1 = 0.0;         // fixed-step reporting constants (see theorem1_constants)
    double m2 = 0.0;
    bool eta_warning = false;  // eta0 > S / rho_hat
    double eta_sum = 0.0;
    double eta_sq_sum = 0.0;
    double eta_weighted_grad_norm = 0.0;  // sum eta_t ||grad Psi|| / sum eta_t over eval points
    double delta_norm_final = 0.0;
    double delta_norm_peak = 0.0;
    std::int64_t iterations = 0;
    std::int64_t contraction_failures = 0;
    std::int64_t bound_failures = 0;
};

// The full S*K agent grid plus everything shared across one run.
struct GlobalState {
    int S = 1;
    int K = 1;
    NetworkSpec net;
    LayerGrouping grouping;
    MixingMatrix mix;
    std::vector<ModuleAgentState> agents;  // s-major: index (s-1)*K + (k-1)
    std::vector<DataGroupContext> groups;  // index s-1
    std::int64_t t = 0;

    ModuleAgentState& agent(int s, int k) { return agents[(s - 1) * static_cast<std::size_t>(K) + (k - 1)]; }
    const ModuleAgentState& agent(int s, int k) const {
        return agents[(s - 1) * static_cast<std::size_t>(K) + (k - 1)];
    }

    std::vector<double> group_params(int s) const;  // concatenated segments of data-group s
    std::vector<double> average_params() const;     // mean of group_params over s
    double grad_stack_norm() const;                 // norm of all agents' stale gradients
};

struct TrainOptions {
    int S = 1;
    int K = 1;
    int B = 32;
    std::int64_t T = 500;
    std::uint64_t seed = 1;
    NetworkSpec net;
    EdgeList model_edges;  // graph over [1..S]
    double alpha = 0.0;    // <= 0 means default_alpha(max degree)
    SplitStrategy split = SplitStrategy::params;
    StepSchedule sched = StepSchedule::strategy1();
    std::int64_t eval_interval = 50;
    int eval_batch = 512;
    bool record_history = false;
    bool measure_wall = true;
    std::int64_t fault_iteration = -1;  // test hook: drop messages produced at this iteration
};

struct TrainResult {
    std::vector<MetricsRecord> metrics;
    DiagnosticsReport diag;
    HistoryLog history;  // filled iff record_history
    std::vector<std::vector<double>> final_group_params;  // [s-1], concatenated segments
    std::vector<double> final_avg_params;
    bool checks_ok = true;  // no contraction or bound violations
};

// eta-step on the local copy; the agent's weights are left untouched until
// the mixing phase.
std::vector<double> local_update(const ModuleAgentState& agent, double eta);

// New weights for one model-group: row s of the result is sum_r P[s][r] *
// u[r]. All u vectors must have equal length.
std::vector<std::vector<double>> mixing_update(const MixingMatrix& mix,
                                               const std::vector<std::vector<double>>& u);

// Max over layers l and groups s of ||w_{s,l} - mean_r w_{r,l}||.
double consensus_error_max(const std::vector<std::vector<double>>& group_params,
                           const NetworkSpec& net);
// Euclidean norm of the stacked deviation from the group average.
double consensus_error_norm(const std::vector<std::vector<double>>& group_params);

double consensus_error_max(const GlobalState& state);
double consensus_error_norm(const GlobalState& state);

// gamma^{t+1} * delta0 + g_max * sum_{tau=0..t} gamma^{t+1-tau} eta_tau;
// bounds the consensus error after iteration t.
double lemma2_rhs(double gamma, double delta0_norm, double g_max, const StepSchedule& sched,
                  std::int64_t t);

// ||delta(t+1)|| <= gamma ||delta(t)|| + gamma eta_t ||grad-stack(t)|| + 1e-9.
bool contraction_check(double delta_next_norm, double delta_prev_norm, double eta, double gamma,
                       double grad_stack_norm);

struct Theorem1Constants {
    double m1 = 0.0;
    double m2 = 0.0;
    bool eta_warning = false;  // eta > S / rho
};
// Closed-form fixed-step constants; reporting only (rho and sigma are
// empirical surrogates, so this is a diagnostic, not a certified bound).
Theorem1Constants theorem1_constants(double rho, double sigma, double gamma, double eta, int K,
                                     int S, int B, double delta0_norm);

TrainResult run_training(const Dataset& ds, const TrainOptions& opt);

// The four-method comparison: (S,K) in {(1,1),(1,2),(4,1),(4,2)} on a
// complete gossip graph each, otherwise identical options.
struct ComparisonResult {
    std::array<std::string, 4> labels;
    std::array<TrainResult, 4> runs;
};
ComparisonResult run_comparison(const Dataset& ds, const TrainOptions& base);

// CSV with the pinned header t,eta,loss,delta_max,delta_norm,grad_norm,
// lemma2_rhs,contraction_ok,wall_ms.
std::string metrics_to_csv(const std::vector<MetricsRecord>& metrics);
// Merged comparison table: method,samples_seen + the standard columns.
std::string comparison_summary_csv(const ComparisonResult& cmp, int B);
// Flat key=value lines.
std::string diagnostics_to_text(const DiagnosticsReport& diag);

}  // namespace dsgd

#endif  // DSGD_TRAINER_HPP
