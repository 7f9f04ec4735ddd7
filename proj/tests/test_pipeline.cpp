#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "dsgd/pipeline.hpp"
#include "dsgd/rng.hpp"
#include "dsgd/trainer.hpp"
#include "support/oracles.hpp"

using namespace dsgd;

namespace {

NetworkSpec tiny_net(std::vector<int> widths) {
    NetworkSpec net;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i)
        net.layers.push_back({widths[i], widths[i + 1],
                              i + 2 == widths.size() ? Activation::identity : Activation::tanh});
    net.loss = LossKind::softmax_cross_entropy;
    return net;
}

double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double diff2 = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff2 += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return std::sqrt(diff2) / std::max({1.0, std::sqrt(na), std::sqrt(nb)});
}

}  // namespace

TEST_CASE("split_layers even and singleton") {
    const NetworkSpec net4 = tiny_net({3, 3, 3, 3, 3});  // L = 4
    const LayerGrouping even = split_layers(net4, 2, SplitStrategy::even);
    CHECK(even.lo == std::vector<int>{1, 3});
    CHECK(even.hi == std::vector<int>{2, 4});

    const NetworkSpec net3 = tiny_net({2, 2, 2, 2});  // L = 3
    const LayerGrouping singles = split_layers(net3, 3, SplitStrategy::params);
    CHECK(singles.lo == std::vector<int>{1, 2, 3});
    CHECK(singles.hi == std::vector<int>{1, 2, 3});

    CHECK_THROWS_AS(split_layers(net3, 4, SplitStrategy::even), std::invalid_argument);
}

TEST_CASE("split_layers params strategy minimizes the worst group") {
    // Layer parameter counts derived from dims 100,100,10,10,10.
    NetworkSpec net;
    net.layers.push_back({100, 100, Activation::tanh});
    net.layers.push_back({100, 10, Activation::tanh});
    net.layers.push_back({10, 10, Activation::tanh});
    net.layers.push_back({10, 10, Activation::tanh});
    net.layers.push_back({10, 10, Activation::identity});

    for (int K = 2; K <= 5; ++K) {
        const LayerGrouping g = split_layers(net, K, SplitStrategy::params);
        REQUIRE(g.K() == K);
        CHECK(g.lo[0] == 1);
        CHECK(g.hi[K - 1] == 5);
        long long worst = 0;
        for (int k = 0; k < K; ++k) {
            CHECK(g.lo[k] <= g.hi[k]);
            if (k > 0) CHECK(g.lo[k] == g.hi[k - 1] + 1);
            worst = std::max<long long>(worst, net.segment_param_count(g.lo[k], g.hi[k]));
        }
        CHECK(worst == oracles::brute_force_minimax_params(net, K));
    }
}

TEST_CASE("staleness_indices formulas") {
    CHECK(staleness_indices(10, 2, 3).fwd == 9);
    CHECK(staleness_indices(10, 2, 3).bwd == 7);
    for (std::int64_t t : {0, 1, 5, 100}) {
        CHECK(staleness_indices(t, 1, 1).fwd == t);
        CHECK(staleness_indices(t, 1, 1).bwd == t);
        CHECK(staleness_indices(t, 3, 3).fwd == t - 2);
        CHECK(staleness_indices(t, 3, 3).bwd == t - 2);  // last module: same batch
    }
    CHECK(staleness_indices(0, 2, 3).fwd == -1);
    CHECK(staleness_indices(0, 1, 2).bwd == -2);
}

TEST_CASE("warm-up: no passes, zero gradient") {
    const NetworkSpec net = tiny_net({2, 2, 2, 2});
    const LayerGrouping grouping = split_layers(net, 3, SplitStrategy::even);
    const Dataset ds = gen_synthetic(12, 2, 2, 3);
    const DataPartition part = split_data(ds, 1, 3);
    DataGroupContext group{&ds, &part, 99, 4, 1.0, {}};

    ModuleAgentState agent;
    agent.id = {1, 3};
    agent.params.layer_lo = 3;
    agent.params.layer_hi = 3;
    agent.params.w.assign(net.layer_param_count(3), 0.1);

    for (std::int64_t t = 0; t < 2; ++t) {  // t < k-1: nothing may happen
        const StepOutput out = pipeline_step(agent, t, net, grouping, group);
        CHECK_FALSE(out.did_forward);
        CHECK_FALSE(out.did_backward);
        CHECK_FALSE(out.fwd_msg.has_value());
        CHECK_FALSE(out.bwd_msg.has_value());
        CHECK(agent.traces.empty());
        for (double v : agent.stale_grad) CHECK(v == 0.0);
    }
}

TEST_CASE("lockstep chain: trace bound and message discipline") {
    const int K = 3;
    const NetworkSpec net = tiny_net({3, 4, 3, 2});
    const LayerGrouping grouping = split_layers(net, K, SplitStrategy::params);
    const Dataset ds = gen_synthetic(30, 2, 3, 17);
    const DataPartition part = split_data(ds, 1, 17);
    DataGroupContext group{&ds, &part, derive_seed(17, seed_tag::sample, 1), 5, 1.0, {}};

    const auto init = init_params(net, 2);
    std::vector<ModuleAgentState> agents(K);
    for (int k = 1; k <= K; ++k) {
        agents[k - 1].id = {1, k};
        agents[k - 1].params.layer_lo = grouping.lo[k - 1];
        agents[k - 1].params.layer_hi = grouping.hi[k - 1];
        const int off = net.layer_param_offset(grouping.lo[k - 1]);
        const int len = net.segment_param_count(grouping.lo[k - 1], grouping.hi[k - 1]);
        agents[k - 1].params.w.assign(init.begin() + off, init.begin() + off + len);
    }

    for (std::int64_t t = 0; t < 20; ++t) {
        std::vector<StepOutput> outs(K);
        for (int k = 1; k <= K; ++k)
            outs[k - 1] = pipeline_step(agents[k - 1], t, net, grouping, group);

        for (int k = 1; k <= K; ++k) {
            // Buffer bound 2(K-k)+1 per module.
            CHECK(agents[k - 1].trace_count() <= static_cast<std::size_t>(2 * (K - k) + 1));
            // Activation messages carry batch t-k+1, error messages t-2K+k+1.
            if (outs[k - 1].fwd_msg) {
                CHECK(outs[k - 1].fwd_msg->batch_id == t - k + 1);
                CHECK(outs[k - 1].fwd_msg->to.k == k + 1);
            }
            if (outs[k - 1].bwd_msg) {
                CHECK(outs[k - 1].bwd_msg->batch_id == t - 2 * K + k + 1);
                CHECK(outs[k - 1].bwd_msg->to.k == k - 1);
            }
        }
        // Post-retirement steady state: 2(K-1) in-flight traces at module 1;
        // the 2(K-1)+1 bound is touched only between forward and backward.
        if (t >= 2 * K) CHECK(agents[0].trace_count() == 4);

        for (int k = 1; k <= K; ++k) {
            if (outs[k - 1].fwd_msg) {
                auto& target = agents[outs[k - 1].fwd_msg->to.k - 1];
                REQUIRE_FALSE(target.inbox_fwd.has_value());
                target.inbox_fwd = std::move(outs[k - 1].fwd_msg);
            }
            if (outs[k - 1].bwd_msg) {
                auto& target = agents[outs[k - 1].bwd_msg->to.k - 1];
                REQUIRE_FALSE(target.inbox_bwd.has_value());
                target.inbox_bwd = std::move(outs[k - 1].bwd_msg);
            }
        }
    }
}

TEST_CASE("scheduling faults are fatal") {
    const int K = 3;
    const NetworkSpec net = tiny_net({2, 2, 2, 2});
    const LayerGrouping grouping = split_layers(net, K, SplitStrategy::even);
    const Dataset ds = gen_synthetic(10, 2, 2, 5);
    const DataPartition part = split_data(ds, 1, 5);
    DataGroupContext group{&ds, &part, 1, 3, 1.0, {}};

    auto make_agent = [&](int k) {
        ModuleAgentState a;
        a.id = {1, k};
        a.params.layer_lo = k;
        a.params.layer_hi = k;
        a.params.w.assign(net.layer_param_count(k), 0.05);
        return a;
    };

    // Missing activation message (k = 2 at t = 4 expects batch 3).
    {
        ModuleAgentState a = make_agent(2);
        CHECK_THROWS_AS(pipeline_step(a, 4, net, grouping, group), SchedulingError);
    }
    // Wrong batch id on the activation message.
    {
        ModuleAgentState a = make_agent(2);
        a.inbox_fwd = ActivationMsg{99, {1, 1}, {1, 2}, Mat(2, 3)};
        CHECK_THROWS_AS(pipeline_step(a, 4, net, grouping, group), SchedulingError);
    }
    // Forward message present but the backward trace is gone.
    {
        ModuleAgentState a = make_agent(2);
        a.inbox_fwd = ActivationMsg{3, {1, 1}, {1, 2}, Mat(2, 3)};
        a.inbox_bwd = ErrorGradMsg{0, {1, 3}, {1, 2}, Mat(2, 3)};
        CHECK_THROWS_AS(pipeline_step(a, 4, net, grouping, group), SchedulingError);
    }
}

TEST_CASE("history oracle assembles mixed-age weights") {
    // K = 2: the gradient emitted by module 1 at t = 2 is the batch-0
    // gradient taken at col{w1(0), w2(1)}.
    const NetworkSpec net = tiny_net({2, 3, 2});
    const LayerGrouping grouping = split_layers(net, 2, SplitStrategy::even);
    const Dataset ds = gen_synthetic(8, 2, 2, 21);

    HistoryLog log;
    log.batches.resize(1);
    Rng rng(6);
    const int d1 = net.layer_param_count(1), d2 = net.layer_param_count(2);
    for (int t = 0; t < 3; ++t) {
        std::vector<double> w1(d1), w2(d2);
        for (double& v : w1) v = rng.normal();
        for (double& v : w2) v = rng.normal();
        log.weights.push_back({{w1, w2}});
        MiniBatch b;
        b.batch_id = t;
        b.group = 1;
        b.indices = {t, t + 1, t + 2};
        log.batches[0].emplace(t, b);
    }

    const auto got = history_oracle(log, ds, net, grouping, 0.5, 1, 1, 2);

    std::vector<double> mixed = log.weights[0][0][0];  // w1 at time 0
    mixed.insert(mixed.end(), log.weights[1][0][1].begin(), log.weights[1][0][1].end());  // w2 at 1
    Mat x;
    std::vector<int> y;
    assemble_batch(ds, log.batches[0].at(0).indices, x, y);
    const auto full = network_loss_grad(net, mixed, x, y);
    std::vector<double> expect(full.grad.begin(), full.grad.begin() + d1);
    for (double& v : expect) v *= 0.5;

    CHECK(rel_err(got, expect) <= 1e-12);

    // Negative batch index: zero vector of segment length.
    const auto zero = history_oracle(log, ds, net, grouping, 0.5, 1, 1, 0);
    CHECK(static_cast<int>(zero.size()) == d1);
    for (double v : zero) CHECK(v == 0.0);
}

TEST_CASE("pipeline stale gradients equal the history oracle") {
    struct Case {
        int S, K;
        std::int64_t T;
    };
    for (const Case c : {Case{1, 2, 12}, Case{2, 2, 14}, Case{1, 3, 14}, Case{2, 3, 16}}) {
        const Dataset ds = gen_synthetic(36, 3, 6, 100 + c.S * 10 + c.K);
        TrainOptions opt;
        opt.S = c.S;
        opt.K = c.K;
        opt.B = 5;
        opt.T = c.T;
        opt.seed = 77;
        opt.net = tiny_net({6, 5, 4, 3});
        for (int u = 1; u <= c.S; ++u)
            for (int v = u + 1; v <= c.S; ++v) opt.model_edges.emplace_back(u, v);
        opt.sched = StepSchedule::constant(0.05);
        opt.eval_interval = 8;
        opt.record_history = true;
        opt.measure_wall = false;

        const TrainResult res = run_training(ds, opt);
        const DataPartition part = split_data(ds, c.S, opt.seed);
        const LayerGrouping grouping = split_layers(opt.net, c.K, opt.split);

        for (std::int64_t t = 0; t < c.T; ++t) {
            for (int s = 1; s <= c.S; ++s) {
                const double scale = static_cast<double>(part.subsets[s - 1].size()) / ds.n;
                for (int k = 1; k <= c.K; ++k) {
                    const auto& got = res.history.grads[t][s - 1][k - 1];
                    const auto want =
                        history_oracle(res.history, ds, opt.net, grouping, scale, s, k, t);
                    CHECK(rel_err(got, want) <= 1e-10);
                    if (t - 2 * c.K + k + 1 < 0) {
                        for (double v : got) CHECK(v == 0.0);
                    }
                }
            }
        }
    }
}
