#include "support/reference_loops.hpp"

#include "dsgd/rng.hpp"

namespace reference {

using namespace dsgd;

SgdRun run_sgd(const Dataset& ds, const NetworkSpec& net, const StepSchedule& sched, int B,
               std::int64_t T, std::uint64_t seed) {
    std::vector<double> w = init_params(net, derive_seed(seed, seed_tag::init));
    const DataPartition part = split_data(ds, 1, seed);
    const std::uint64_t stream = derive_seed(seed, seed_tag::sample, 1);
    const double scale = static_cast<double>(part.subsets[0].size()) / ds.n;

    SgdRun run;
    for (std::int64_t t = 0; t < T; ++t) {
        run.weights_per_iter.push_back(w);
        const MiniBatch batch = sample_minibatch(part, 1, B, t, stream);
        Mat x;
        std::vector<int> y;
        assemble_batch(ds, batch.indices, x, y);
        const auto fg = network_loss_grad(net, w, x, y);
        const double eta = schedule_eta(sched, t);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= eta * (scale * fg.grad[i]);
    }
    run.final_weights = w;
    return run;
}

DecentralizedRun run_decentralized(const Dataset& ds, const NetworkSpec& net,
                                   const StepSchedule& sched, int S, const EdgeList& edges,
                                   double alpha, int B, std::int64_t T, std::uint64_t seed) {
    const auto init = init_params(net, derive_seed(seed, seed_tag::init));
    const DataPartition part = split_data(ds, S, seed);
    const MixingMatrix mix = build_mixing_matrix(S, edges, alpha);

    std::vector<std::vector<double>> w(S, init);
    std::vector<std::uint64_t> streams(S);
    std::vector<double> scales(S);
    for (int s = 1; s <= S; ++s) {
        streams[s - 1] = derive_seed(seed, seed_tag::sample, s);
        scales[s - 1] = static_cast<double>(part.subsets[s - 1].size()) / ds.n;
    }

    DecentralizedRun run;
    for (std::int64_t t = 0; t < T; ++t) {
        run.weights_per_iter.push_back(w);
        const double eta = schedule_eta(sched, t);

        std::vector<std::vector<double>> u(S);
        for (int s = 1; s <= S; ++s) {
            const MiniBatch batch = sample_minibatch(part, s, B, t, streams[s - 1]);
            Mat x;
            std::vector<int> y;
            assemble_batch(ds, batch.indices, x, y);
            const auto fg = network_loss_grad(net, w[s - 1], x, y);
            u[s - 1] = w[s - 1];
            for (std::size_t i = 0; i < u[s - 1].size(); ++i)
                u[s - 1][i] -= eta * (scales[s - 1] * fg.grad[i]);
        }
        for (int s = 0; s < S; ++s) {
            std::vector<double> next(u[0].size(), 0.0);
            for (int r = 0; r < S; ++r) {
                const double p = mix.at(s, r);
                if (p == 0.0) continue;
                for (std::size_t i = 0; i < next.size(); ++i) next[i] += p * u[r][i];
            }
            w[s] = std::move(next);
        }
    }
    run.final_weights = w;
    return run;
}

}  // namespace reference
