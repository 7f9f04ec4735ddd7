#include "dsgd/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "dsgd/rng.hpp"

namespace dsgd {

std::vector<double> GlobalState::group_params(int s) const {
    std::vector<double> out;
    out.reserve(net.total_param_count());
    for (int k = 1; k <= K; ++k) {
        const auto& w = agent(s, k).params.w;
        out.insert(out.end(), w.begin(), w.end());
    }
    return out;
}

std::vector<double> GlobalState::average_params() const {
    std::vector<double> avg = group_params(1);
    for (int s = 2; s <= S; ++s) {
        const auto w = group_params(s);
        for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += w[i];
    }
    const double inv = 1.0 / S;
    for (double& v : avg) v *= inv;
    return avg;
}

double GlobalState::grad_stack_norm() const {
    double acc = 0.0;
    for (const auto& a : agents)
        for (double v : a.stale_grad) acc += v * v;
    return std::sqrt(acc);
}

std::vector<double> local_update(const ModuleAgentState& agent, double eta) {
    std::vector<double> u = agent.params.w;
    if (!agent.stale_grad.empty()) {
        if (agent.stale_grad.size() != u.size())
            throw std::invalid_argument("local_update: gradient length mismatch");
        for (std::size_t i = 0; i < u.size(); ++i) u[i] -= eta * agent.stale_grad[i];
    }
    return u;
}

std::vector<std::vector<double>> mixing_update(const MixingMatrix& mix,
                                               const std::vector<std::vector<double>>& u) {
    const int S = mix.S;
    if (static_cast<int>(u.size()) != S)
        throw std::invalid_argument("mixing_update: need one vector per data-group");
    const std::size_t len = u[0].size();
    for (const auto& v : u)
        if (v.size() != len) throw std::invalid_argument("mixing_update: dimension mismatch across group");

    std::vector<std::vector<double>> next(S, std::vector<double>(len, 0.0));
    for (int s = 0; s < S; ++s) {
        for (int r = 0; r < S; ++r) {
            const double p = mix.at(s, r);
            if (p == 0.0) continue;
            const auto& src = u[r];
            auto& dst = next[s];
            for (std::size_t i = 0; i < len; ++i) dst[i] += p * src[i];
        }
    }
    return next;
}

double consensus_error_norm(const std::vector<std::vector<double>>& group_params) {
    const int S = static_cast<int>(group_params.size());
    const std::size_t len = group_params[0].size();
    std::vector<double> mean(len, 0.0);
    for (const auto& w : group_params)
        for (std::size_t i = 0; i < len; ++i) mean[i] += w[i];
    const double inv = 1.0 / S;
    for (double& v : mean) v *= inv;

    double acc = 0.0;
    for (const auto& w : group_params)
        for (std::size_t i = 0; i < len; ++i) {
            const double d = w[i] - mean[i];
            acc += d * d;
        }
    return std::sqrt(acc);
}

double consensus_error_max(const std::vector<std::vector<double>>& group_params,
                           const NetworkSpec& net) {
    const int S = static_cast<int>(group_params.size());
    double worst = 0.0;
    for (int l = 1; l <= net.num_layers(); ++l) {
        const int off = net.layer_param_offset(l);
        const int len = net.layer_param_count(l);
        std::vector<double> mean(len, 0.0);
        for (const auto& w : group_params)
            for (int i = 0; i < len; ++i) mean[i] += w[off + i];
        const double inv = 1.0 / S;
        for (double& v : mean) v *= inv;
        for (const auto& w : group_params) {
            double acc = 0.0;
            for (int i = 0; i < len; ++i) {
                const double d = w[off + i] - mean[i];
                acc += d * d;
            }
            worst = std::max(worst, std::sqrt(acc));
        }
    }
    return worst;
}

namespace {

std::vector<std::vector<double>> all_group_params(const GlobalState& state) {
    std::vector<std::vector<double>> out;
    out.reserve(state.S);
    for (int s = 1; s <= state.S; ++s) out.push_back(state.group_params(s));
    return out;
}

}  // namespace

double consensus_error_max(const GlobalState& state) {
    return consensus_error_max(all_group_params(state), state.net);
}

double consensus_error_norm(const GlobalState& state) {
    return consensus_error_norm(all_group_params(state));
}

double lemma2_rhs(double gamma, double delta0_norm, double g_max, const StepSchedule& sched,
                  std::int64_t t) {
    double sum = 0.0;
    double power = 1.0;  // gamma^{t+1-tau}, built from tau = t downwards
    std::int64_t tau = t;
    for (; tau >= 0; --tau) {
        power *= gamma;
        if (power == 0.0) break;
        sum += power * schedule_eta(sched, tau);
    }
    const double decay = tau < 0 ? power : 0.0;  // gamma^{t+1}, or underflowed
    return decay * delta0_norm + g_max * sum;
}

bool contraction_check(double delta_next_norm, double delta_prev_norm, double eta, double gamma,
                       double grad_stack_norm) {
    return delta_next_norm <= gamma * delta_prev_norm + gamma * eta * grad_stack_norm + 1e-9;
}

Theorem1Constants theorem1_constants(double rho, double sigma, double gamma, double eta, int K,
                                     int S, int B, double delta0_norm) {
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw std::invalid_argument("theorem1_constants: need 0 <= gamma < 1");
    Theorem1Constants c;
    c.eta_warning = rho > 0.0 && eta > static_cast<double>(S) / rho;

    const double k3 = 24.0 * K * K * K + 1.0;
    const double s_rho_eta = S + rho * eta;
    const double gg = gamma / (1.0 - gamma);
    const double gg2 = gamma * gamma / (1.0 - gamma * gamma);
    const double s2 = static_cast<double>(S) * S;
    const double s4 = s2 * s2;

    c.m1 = k3 * s_rho_eta * rho * rho * (gg2 * delta0_norm * delta0_norm + gg * delta0_norm * eta);
    c.m2 = rho * K * sigma * sigma / (B * s2) +
           (eta * S + rho * eta * eta) * (6.0 * K * K * K * rho * rho * sigma * sigma) / (B * s4) +
           k3 * s_rho_eta * rho * rho * gg * gg * eta * eta;
    return c;
}

namespace {

EdgeList complete_edges(int S) {
    EdgeList edges;
    for (int u = 1; u <= S; ++u)
        for (int v = u + 1; v <= S; ++v) edges.emplace_back(u, v);
    return edges;
}

double vec_norm(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

}  // namespace

TrainResult run_training(const Dataset& ds, const TrainOptions& opt) {
    opt.net.validate();
    opt.sched.validate();
    if (opt.S < 1 || opt.K < 1 || opt.B < 1 || opt.T < 1 || opt.eval_interval < 1)
        throw std::invalid_argument("run_training: counts must be >= 1");

    const CommGraph grid = build_agent_grid(opt.S, opt.K, opt.model_edges);
    const TopologyReport rep = validate_topology(grid);
    if (!rep.pass) throw std::invalid_argument("run_training: topology validation failed");
    const double alpha = opt.alpha > 0.0 ? opt.alpha : default_alpha(grid.max_degree());

    GlobalState st;
    st.S = opt.S;
    st.K = opt.K;
    st.net = opt.net;
    st.grouping = split_layers(opt.net, opt.K, opt.split);
    st.mix = build_mixing_matrix(opt.S, grid.model_edges, alpha);

    // One init vector broadcast to every data-group, so delta(0) = 0.
    const auto full_init = init_params(opt.net, derive_seed(opt.seed, seed_tag::init));
    const DataPartition partition = split_data(ds, opt.S, opt.seed);

    st.agents.resize(static_cast<std::size_t>(opt.S) * opt.K);
    for (int s = 1; s <= opt.S; ++s) {
        for (int k = 1; k <= opt.K; ++k) {
            ModuleAgentState& a = st.agent(s, k);
            a.id = {s, k};
            a.params.layer_lo = st.grouping.lo[k - 1];
            a.params.layer_hi = st.grouping.hi[k - 1];
            const int off = opt.net.layer_param_offset(a.params.layer_lo);
            const int len = opt.net.segment_param_count(a.params.layer_lo, a.params.layer_hi);
            a.params.w.assign(full_init.begin() + off, full_init.begin() + off + len);
            a.stale_grad.assign(len, 0.0);
        }
    }
    st.groups.resize(opt.S);
    for (int s = 1; s <= opt.S; ++s) {
        DataGroupContext& g = st.groups[s - 1];
        g.data = &ds;
        g.partition = &partition;
        g.sample_stream = derive_seed(opt.seed, seed_tag::sample, s);
        g.batch_size = opt.B;
        g.grad_scale = static_cast<double>(partition.subsets[s - 1].size()) / ds.n;
    }

    // Fixed seeded evaluation batch, drawn once without replacement.
    const int eval_n = std::min(opt.eval_batch, ds.n);
    std::vector<int> eval_indices(ds.n);
    for (int i = 0; i < ds.n; ++i) eval_indices[i] = i;
    {
        Rng erng(derive_seed(opt.seed, seed_tag::eval));
        for (int i = 0; i < eval_n; ++i) {
            const int j = i + static_cast<int>(erng.uniform_index(static_cast<std::uint64_t>(ds.n - i)));
            std::swap(eval_indices[i], eval_indices[j]);
        }
        eval_indices.resize(eval_n);
    }
    Mat eval_x;
    std::vector<int> eval_y;
    assemble_batch(ds, eval_indices, eval_x, eval_y);

    TrainResult res;
    if (opt.record_history) {
        res.history.batches.resize(opt.S);
    }

    const double delta0 = consensus_error_norm(st);
    double delta_prev = delta0;
    double delta_peak = delta0;
    double g_max = 0.0;
    double last_bound = delta0;
    bool contraction_all_ok = true;
    std::int64_t contraction_failures = 0;
    std::int64_t bound_failures = 0;
    double wall_prev = 0.0;
    double eta_sum = 0.0, eta_sq_sum = 0.0;
    double ew_num = 0.0, ew_den = 0.0;
    std::vector<std::vector<double>> snapshots;

    auto emit_row = [&](std::int64_t t, double grad_norm_t, double bound_t) {
        const auto avg = st.average_params();
        const auto fg = network_loss_grad(st.net, avg, eval_x, eval_y);
        MetricsRecord r;
        r.t = t;
        r.eta = schedule_eta(opt.sched, t);
        r.loss = fg.loss;
        r.delta_max = consensus_error_max(st);
        r.delta_norm = consensus_error_norm(st);
        r.grad_norm = grad_norm_t;
        r.lemma2_rhs = bound_t;
        r.contraction_ok = contraction_all_ok;
        r.wall_ms = wall_prev;
        res.metrics.push_back(r);
        ew_num += r.eta * vec_norm(fg.grad);
        ew_den += r.eta;
        snapshots.push_back(avg);
    };

    for (std::int64_t t = 0; t < opt.T; ++t) {
        const auto t_start = opt.measure_wall ? std::chrono::steady_clock::now()
                                              : std::chrono::steady_clock::time_point{};

        if (opt.record_history) {
            std::vector<std::vector<std::vector<double>>> grid_w(opt.S);
            for (int s = 1; s <= opt.S; ++s) {
                grid_w[s - 1].resize(opt.K);
                for (int k = 1; k <= opt.K; ++k) grid_w[s - 1][k - 1] = st.agent(s, k).params.w;
            }
            res.history.weights.push_back(std::move(grid_w));
            for (int s = 1; s <= opt.S; ++s)
                res.history.batches[s - 1].emplace(
                    t, sample_minibatch(partition, s, opt.B, t, st.groups[s - 1].sample_stream));
        }

        // Compute phase: every agent reads its inboxes and runs its passes.
        std::vector<StepOutput> outputs(st.agents.size());
        for (int s = 1; s <= opt.S; ++s)
            for (int k = 1; k <= opt.K; ++k)
                outputs[(s - 1) * static_cast<std::size_t>(opt.K) + (k - 1)] =
                    pipeline_step(st.agent(s, k), t, st.net, st.grouping, st.groups[s - 1]);

        const double grad_norm_t = st.grad_stack_norm();

        if (opt.record_history) {
            std::vector<std::vector<std::vector<double>>> grid_g(opt.S);
            for (int s = 1; s <= opt.S; ++s) {
                grid_g[s - 1].resize(opt.K);
                for (int k = 1; k <= opt.K; ++k) grid_g[s - 1][k - 1] = st.agent(s, k).stale_grad;
            }
            res.history.grads.push_back(std::move(grid_g));
        }

        if (t % opt.eval_interval == 0) emit_row(t, grad_norm_t, last_bound);

        const double eta = schedule_eta(opt.sched, t);
        eta_sum += eta;
        eta_sq_sum += eta * eta;

        // Local steps, then the gossip round per model-group.
        std::vector<std::vector<double>> u(opt.S);
        for (int k = 1; k <= opt.K; ++k) {
            for (int s = 1; s <= opt.S; ++s) u[s - 1] = local_update(st.agent(s, k), eta);
            auto mixed = mixing_update(st.mix, u);
            for (int s = 1; s <= opt.S; ++s) st.agent(s, k).params.w = std::move(mixed[s - 1]);
        }

        // Delivery phase: messages produced at t are consumed at t+1.
        if (t != opt.fault_iteration) {
            for (auto& out : outputs) {
                if (out.fwd_msg) {
                    ModuleAgentState& target = st.agent(out.fwd_msg->to.s, out.fwd_msg->to.k);
                    if (target.inbox_fwd)
                        throw SchedulingError("activation inbox of (" + std::to_string(target.id.s) +
                                              "," + std::to_string(target.id.k) + ") not consumed");
                    target.inbox_fwd = std::move(out.fwd_msg);
                }
                if (out.bwd_msg) {
                    ModuleAgentState& target = st.agent(out.bwd_msg->to.s, out.bwd_msg->to.k);
                    if (target.inbox_bwd)
                        throw SchedulingError("error-gradient inbox of (" + std::to_string(target.id.s) +
                                              "," + std::to_string(target.id.k) + ") not consumed");
                    target.inbox_bwd = std::move(out.bwd_msg);
                }
            }
        }

        g_max = std::max(g_max, grad_norm_t);
        const double delta_next = consensus_error_norm(st);
        if (!contraction_check(delta_next, delta_prev, eta, st.mix.gamma, grad_norm_t)) {
            ++contraction_failures;
            contraction_all_ok = false;
        }
        last_bound = lemma2_rhs(st.mix.gamma, delta0, g_max, opt.sched, t);
        if (delta_next > last_bound + 1e-9) ++bound_failures;
        delta_prev = delta_next;
        delta_peak = std::max(delta_peak, delta_next);

        if (opt.measure_wall) {
            const auto t_end = std::chrono::steady_clock::now();
            wall_prev = std::chrono::duration<double, std::milli>(t_end - t_start).count();
        }
        st.t = t + 1;
    }

    emit_row(opt.T, 0.0, last_bound);

    // Diagnostics: empirical smoothness/second-moment surrogates from seeded
    // probe pairs near the recorded trajectory.
    DiagnosticsReport diag;
    diag.gamma = st.mix.gamma;
    {
        Rng prng(derive_seed(opt.seed, seed_tag::probe));
        const double radius = 0.01;
        const std::size_t d = snapshots[0].size();
        for (int i = 0; i < 64; ++i) {
            const auto& snap = snapshots[i % snapshots.size()];
            const int sample = eval_indices[prng.uniform_index(eval_indices.size())];
            Mat x(ds.dim, 1);
            for (int r = 0; r < ds.dim; ++r) x(r, 0) = ds.sample(sample)[r];
            const std::vector<int> y{ds.labels[sample]};

            std::vector<double> w1(snap), w2(snap);
            double dist2 = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double p1 = radius * prng.normal();
                const double p2 = radius * prng.normal();
                w1[j] += p1;
                w2[j] += p2;
                dist2 += (p1 - p2) * (p1 - p2);
            }
            const auto g1 = network_loss_grad(st.net, w1, x, y);
            const auto g2 = network_loss_grad(st.net, w2, x, y);
            double diff2 = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double dd = g1.grad[j] - g2.grad[j];
                diff2 += dd * dd;
            }
            const double dist = std::sqrt(dist2);
            if (dist > 1e-12) diag.rho_hat = std::max(diag.rho_hat, std::sqrt(diff2) / dist);
            diag.sigma_hat = std::max({diag.sigma_hat, vec_norm(g1.grad), vec_norm(g2.grad)});
        }
    }
    const auto t1 = theorem1_constants(diag.rho_hat, diag.sigma_hat, st.mix.gamma,
                                       schedule_eta(opt.sched, 0), opt.K, opt.S, opt.B, delta0);
    diag.m1 = t1.m1;
    diag.m2 = t1.m2;
    diag.eta_warning = t1.eta_warning;
    diag.eta_sum = eta_sum;
    diag.eta_sq_sum = eta_sq_sum;
    diag.eta_weighted_grad_norm = ew_den > 0.0 ? ew_num / ew_den : 0.0;
    diag.delta_norm_final = delta_prev;
    diag.delta_norm_peak = delta_peak;
    diag.iterations = opt.T;
    diag.contraction_failures = contraction_failures;
    diag.bound_failures = bound_failures;
    res.diag = diag;
    res.checks_ok = contraction_failures == 0 && bound_failures == 0;

    res.final_group_params.reserve(opt.S);
    for (int s = 1; s <= opt.S; ++s) res.final_group_params.push_back(st.group_params(s));
    res.final_avg_params = st.average_params();
    return res;
}

ComparisonResult run_comparison(const Dataset& ds, const TrainOptions& base) {
    const std::array<std::pair<int, int>, 4> methods{{{1, 1}, {1, 2}, {4, 1}, {4, 2}}};
    ComparisonResult cmp;
    cmp.labels = {"s1_k1", "s1_k2", "s4_k1", "s4_k2"};
    for (std::size_t i = 0; i < methods.size(); ++i) {
        TrainOptions o = base;
        o.S = methods[i].first;
        o.K = methods[i].second;
        o.model_edges = complete_edges(o.S);
        o.alpha = 0.0;  // default for the per-method complete graph
        cmp.runs[i] = run_training(ds, o);
    }
    return cmp;
}

namespace {

void append_double(std::string& s, double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    s += buf;
}

void append_metrics_row(std::string& s, const MetricsRecord& r) {
    s += std::to_string(r.t);
    s += ',';
    append_double(s, r.eta);
    s += ',';
    append_double(s, r.loss);
    s += ',';
    append_double(s, r.delta_max);
    s += ',';
    append_double(s, r.delta_norm);
    s += ',';
    append_double(s, r.grad_norm);
    s += ',';
    append_double(s, r.lemma2_rhs);
    s += ',';
    s += r.contraction_ok ? '1' : '0';
    s += ',';
    append_double(s, r.wall_ms);
    s += '\n';
}

constexpr const char* kMetricsHeader =
    "t,eta,loss,delta_max,delta_norm,grad_norm,lemma2_rhs,contraction_ok,wall_ms";

}  // namespace

std::string metrics_to_csv(const std::vector<MetricsRecord>& metrics) {
    std::string s = kMetricsHeader;
    s += '\n';
    for (const auto& r : metrics) append_metrics_row(s, r);
    return s;
}

std::string comparison_summary_csv(const ComparisonResult& cmp, int B) {
    std::string s = "method,samples_seen,";
    s += kMetricsHeader;
    s += '\n';
    const std::array<int, 4> group_counts{1, 1, 4, 4};
    for (std::size_t i = 0; i < cmp.runs.size(); ++i) {
        for (const auto& r : cmp.runs[i].metrics) {
            s += cmp.labels[i];
            s += ',';
            s += std::to_string(r.t * B * group_counts[i]);
            s += ',';
            append_metrics_row(s, r);
        }
    }
    return s;
}

std::string diagnostics_to_text(const DiagnosticsReport& d) {
    std::string s;
    auto kv = [&s](const char* key, double v) {
        s += key;
        s += '=';
        append_double(s, v);
        s += '\n';
    };
    kv("gamma", d.gamma);
    kv("rho_hat", d.rho_hat);
    kv("sigma_hat", d.sigma_hat);
    kv("m1", d.m1);
    kv("m2", d.m2);
    s += "eta_warning=";
    s += d.eta_warning ? '1' : '0';
    s += '\n';
    kv("eta_sum", d.eta_sum);
    kv("eta_sq_sum", d.eta_sq_sum);
    kv("eta_weighted_grad_norm", d.eta_weighted_grad_norm);
    kv("delta_norm_final", d.delta_norm_final);
    kv("delta_norm_peak", d.delta_norm_peak);
    s += "iterations=" + std::to_string(d.iterations) + '\n';
    s += "contraction_failures=" + std::to_string(d.contraction_failures) + '\n';
    s += "bound_failures=" + std::to_string(d.bound_failures) + '\n';
    return s;
}

}  // namespace dsgd
