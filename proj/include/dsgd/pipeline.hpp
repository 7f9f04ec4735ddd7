#ifndef DSGD_PIPELINE_HPP
#define DSGD_PIPELINE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dsgd/dataset.hpp"
#include "dsgd/nn.hpp"
#include "dsgd/topology.hpp"

namespace dsgd {

// A missing trace or message for a required batch id is a bug in the
// lockstep schedule, never a recoverable condition.
struct SchedulingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Contiguous layer ranges [lo_k .. hi_k], k = 1..K, covering 1..L.
struct LayerGrouping {
    std::vector<int> lo;
    std::vector<int> hi;

    int K() const { return static_cast<int>(lo.size()); }
};

enum class SplitStrategy {
    params,  // minimize the largest per-group parameter count
    even,    // balance layer counts
};

LayerGrouping split_layers(const NetworkSpec& spec, int K, SplitStrategy strategy);

// Mini-batch ids processed by module k at iteration t: forward works on
// batch t-k+1, backward on batch t-2K+k+1. Negative ids mean the pass is
// skipped (warm-up).
struct StalenessIndices {
    std::int64_t fwd = -1;
    std::int64_t bwd = -1;
};
StalenessIndices staleness_indices(std::int64_t t, int k, int K);

// Activation hand-off (s,k) -> (s,k+1), consumed one iteration later.
struct ActivationMsg {
    std::int64_t batch_id = -1;
    AgentId from;
    AgentId to;
    Mat payload;  // h_{q_k} for the batch
};

// Error-gradient hand-off (s,k) -> (s,k-1). The message consumed by module
// k at iteration t always carries batch id t-2K+k+1.
struct ErrorGradMsg {
    std::int64_t batch_id = -1;
    AgentId from;
    AgentId to;
    Mat payload;  // dphi/dh_{q_{k-1}} for the batch
};

struct ModuleAgentState {
    AgentId id;
    ParamSegment params;
    std::map<std::int64_t, ForwardTrace> traces;  // in-flight forward traces
    std::optional<ActivationMsg> inbox_fwd;
    std::optional<ErrorGradMsg> inbox_bwd;
    std::vector<double> stale_grad;  // zero vector during warm-up

    std::size_t trace_count() const { return traces.size(); }
};

// Shared per-data-group resources: the data subset, the batch stream and
// the metadata of batches still somewhere in the pipeline.
struct DataGroupContext {
    const Dataset* data = nullptr;
    const DataPartition* partition = nullptr;
    std::uint64_t sample_stream = 0;
    int batch_size = 1;
    double grad_scale = 1.0;  // |D_s| / N
    std::map<std::int64_t, MiniBatch> batch_log;
};

struct StepOutput {
    std::optional<ActivationMsg> fwd_msg;
    std::optional<ErrorGradMsg> bwd_msg;
    bool did_forward = false;
    bool did_backward = false;
};

// One lockstep iteration for one agent: forward for batch t-k+1 (module 1
// samples, others consume the activation inbox), then backward for batch
// t-2K+k+1 against the stored trace (module K seeds it from the loss).
// Gradients are taken at the snapshot weights recorded in the trace and
// scaled by |D_s|/N; agent.stale_grad is set to zero when the backward
// batch id is negative.
StepOutput pipeline_step(ModuleAgentState& agent, std::int64_t t, const NetworkSpec& spec,
                         const LayerGrouping& grouping, DataGroupContext& group);

// Full recorded run history, enough to recompute any stale gradient from
// scratch. Indexing: weights[t][s-1][k-1] is the segment vector entering
// iteration t; grads[t][s-1][k-1] the stale gradient set during iteration t.
struct HistoryLog {
    std::vector<std::vector<std::vector<std::vector<double>>>> weights;
    std::vector<std::vector<std::vector<std::vector<double>>>> grads;
    std::vector<std::map<std::int64_t, MiniBatch>> batches;  // [s-1][tau]
};

// Reference stale gradient for agent (s,k) at iteration t: assembles the
// mixed-age parameter vector whose segment j is the recorded weights of
// module j at iteration tau+j-1 (tau = t-2K+k+1), then runs one monolithic
// backward on batch tau. Independent of the trace-buffer path.
std::vector<double> history_oracle(const HistoryLog& log, const Dataset& ds,
                                   const NetworkSpec& spec, const LayerGrouping& grouping,
                                   double grad_scale, int s, int k, std::int64_t t);

}  // namespace dsgd

#endif  // DSGD_PIPELINE_HPP
