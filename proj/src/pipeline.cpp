#include "dsgd/pipeline.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace dsgd {

namespace {

LayerGrouping grouping_from_cuts(const std::vector<int>& sizes) {
    LayerGrouping g;
    int next = 1;
    for (int size : sizes) {
        g.lo.push_back(next);
        g.hi.push_back(next + size - 1);
        next += size;
    }
    return g;
}

}  // namespace

LayerGrouping split_layers(const NetworkSpec& spec, int K, SplitStrategy strategy) {
    const int L = spec.num_layers();
    if (K < 1 || K > L)
        throw std::invalid_argument("split_layers: need 1 <= K <= L, got K=" + std::to_string(K) +
                                    ", L=" + std::to_string(L));

    if (strategy == SplitStrategy::even) {
        std::vector<int> sizes(K, L / K);
        for (int k = 0; k < L % K; ++k) ++sizes[k];
        return grouping_from_cuts(sizes);
    }

    // Contiguous partition minimizing the largest per-group parameter count
    // (exact DP; L is small). Ties resolve to the earliest cut.
    std::vector<long long> prefix(L + 1, 0);
    for (int l = 1; l <= L; ++l) prefix[l] = prefix[l - 1] + spec.layer_param_count(l);

    constexpr long long kInf = std::numeric_limits<long long>::max();
    std::vector<std::vector<long long>> best(K + 1, std::vector<long long>(L + 1, kInf));
    std::vector<std::vector<int>> cut(K + 1, std::vector<int>(L + 1, 0));
    best[0][0] = 0;
    for (int k = 1; k <= K; ++k) {
        for (int i = k; i <= L; ++i) {
            for (int j = k - 1; j < i; ++j) {
                if (best[k - 1][j] == kInf) continue;
                const long long cost = std::max(best[k - 1][j], prefix[i] - prefix[j]);
                if (cost < best[k][i]) {
                    best[k][i] = cost;
                    cut[k][i] = j;
                }
            }
        }
    }

    std::vector<int> sizes(K);
    int i = L;
    for (int k = K; k >= 1; --k) {
        const int j = cut[k][i];
        sizes[k - 1] = i - j;
        i = j;
    }
    return grouping_from_cuts(sizes);
}

StalenessIndices staleness_indices(std::int64_t t, int k, int K) {
    return {t - k + 1, t - 2 * K + k + 1};
}

StepOutput pipeline_step(ModuleAgentState& agent, std::int64_t t, const NetworkSpec& spec,
                         const LayerGrouping& grouping, DataGroupContext& group) {
    const int k = agent.id.k;
    const int K = grouping.K();
    const auto [fwd_batch, bwd_batch] = staleness_indices(t, k, K);
    StepOutput out;

    if (fwd_batch >= 0) {
        Mat input;
        if (k == 1) {
            MiniBatch batch = sample_minibatch(*group.partition, agent.id.s, group.batch_size,
                                               fwd_batch, group.sample_stream);
            std::vector<int> labels;
            assemble_batch(*group.data, batch.indices, input, labels);
            group.batch_log.emplace(fwd_batch, std::move(batch));
        } else {
            if (!agent.inbox_fwd)
                throw SchedulingError("agent (" + std::to_string(agent.id.s) + "," +
                                      std::to_string(k) + ") t=" + std::to_string(t) +
                                      ": missing activation message");
            if (agent.inbox_fwd->batch_id != fwd_batch)
                throw SchedulingError("activation message carries batch " +
                                      std::to_string(agent.inbox_fwd->batch_id) + ", expected " +
                                      std::to_string(fwd_batch));
            input = std::move(agent.inbox_fwd->payload);
            agent.inbox_fwd.reset();
        }
        ForwardTrace trace = forward_segment(input, agent.params, spec, fwd_batch);
        if (k < K) {
            out.fwd_msg = ActivationMsg{fwd_batch, agent.id, {agent.id.s, k + 1}, trace.output()};
        }
        agent.traces.emplace(fwd_batch, std::move(trace));
        out.did_forward = true;
    }

    if (bwd_batch >= 0) {
        const auto it = agent.traces.find(bwd_batch);
        if (it == agent.traces.end())
            throw SchedulingError("agent (" + std::to_string(agent.id.s) + "," + std::to_string(k) +
                                  ") t=" + std::to_string(t) + ": no trace for batch " +
                                  std::to_string(bwd_batch));
        const ForwardTrace& trace = it->second;

        Mat upstream;
        if (k == K) {
            const auto& batch = group.batch_log.at(bwd_batch);
            std::vector<int> labels(batch.indices.size());
            for (std::size_t i = 0; i < batch.indices.size(); ++i)
                labels[i] = group.data->labels[batch.indices[i]];
            upstream = loss_and_output_grad(trace.output(), labels, spec.loss, spec.output_dim()).dout;
        } else {
            if (!agent.inbox_bwd)
                throw SchedulingError("agent (" + std::to_string(agent.id.s) + "," +
                                      std::to_string(k) + ") t=" + std::to_string(t) +
                                      ": missing error-gradient message");
            if (agent.inbox_bwd->batch_id != bwd_batch)
                throw SchedulingError("error-gradient message carries batch " +
                                      std::to_string(agent.inbox_bwd->batch_id) + ", expected " +
                                      std::to_string(bwd_batch));
            upstream = std::move(agent.inbox_bwd->payload);
            agent.inbox_bwd.reset();
        }

        SegmentGrads grads = backward_segment(trace, upstream, spec);
        if (k > 1) {
            out.bwd_msg = ErrorGradMsg{bwd_batch, agent.id, {agent.id.s, k - 1}, std::move(grads.dinput)};
        }
        agent.stale_grad = std::move(grads.dw);
        for (double& v : agent.stale_grad) v *= group.grad_scale;
        agent.traces.erase(it);
        if (k == 1) {
            // Module 1 is the last consumer of a batch's metadata.
            group.batch_log.erase(group.batch_log.begin(), group.batch_log.upper_bound(bwd_batch));
        }
        out.did_backward = true;
    } else {
        agent.stale_grad.assign(agent.params.w.size(), 0.0);
    }

    return out;
}

std::vector<double> history_oracle(const HistoryLog& log, const Dataset& ds,
                                   const NetworkSpec& spec, const LayerGrouping& grouping,
                                   double grad_scale, int s, int k, std::int64_t t) {
    const int K = grouping.K();
    const std::int64_t tau = t - 2 * K + k + 1;
    const int seg_len = spec.segment_param_count(grouping.lo[k - 1], grouping.hi[k - 1]);
    if (tau < 0) return std::vector<double>(seg_len, 0.0);

    // Mixed-age network: segment j uses the weights module j held when it
    // forwarded batch tau, i.e. at iteration tau + j - 1.
    std::vector<double> params;
    params.reserve(spec.total_param_count());
    for (int j = 1; j <= K; ++j) {
        const auto& seg = log.weights.at(tau + j - 1).at(s - 1).at(j - 1);
        params.insert(params.end(), seg.begin(), seg.end());
    }

    const MiniBatch& batch = log.batches.at(s - 1).at(tau);
    Mat features;
    std::vector<int> labels;
    assemble_batch(ds, batch.indices, features, labels);

    const auto full = network_loss_grad(spec, params, features, labels);
    const int off = spec.layer_param_offset(grouping.lo[k - 1]);
    std::vector<double> grad(full.grad.begin() + off, full.grad.begin() + off + seg_len);
    for (double& v : grad) v *= grad_scale;
    return grad;
}

}  // namespace dsgd
