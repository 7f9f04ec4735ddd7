#include "dsgd/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dsgd/rng.hpp"

namespace dsgd {

namespace {

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << contents;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void print_row(bool pass, const std::string& name, const std::string& detail) {
    std::printf("[%s] %-24s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
}

}  // namespace

int cmd_train(const RunConfig& cfg) {
    const Dataset ds = load_dataset(cfg);
    const TrainResult res = run_training(ds, cfg.train);

    const std::filesystem::path out(cfg.out_dir);
    std::filesystem::create_directories(out);
    write_file(out / "metrics.csv", metrics_to_csv(res.metrics));
    write_file(out / "diagnostics.txt", diagnostics_to_text(res.diag));

    std::printf("train: %lld iterations, loss %.6f -> %.6f, delta_norm %.3e, %s\n",
                static_cast<long long>(cfg.train.T), res.metrics.front().loss,
                res.metrics.back().loss, res.diag.delta_norm_final,
                res.checks_ok ? "all per-step checks passed" : "per-step checks FAILED");
    return res.checks_ok ? 0 : 1;
}

int cmd_compare(const RunConfig& cfg) {
    const Dataset ds = load_dataset(cfg);
    const ComparisonResult cmp = run_comparison(ds, cfg.train);

    const std::filesystem::path out(cfg.out_dir);
    std::filesystem::create_directories(out);
    bool ok = true;
    for (std::size_t i = 0; i < cmp.runs.size(); ++i) {
        write_file(out / ("metrics_" + cmp.labels[i] + ".csv"), metrics_to_csv(cmp.runs[i].metrics));
        ok = ok && cmp.runs[i].checks_ok;
        std::printf("compare %-6s loss %.6f -> %.6f\n", cmp.labels[i].c_str(),
                    cmp.runs[i].metrics.front().loss, cmp.runs[i].metrics.back().loss);
    }
    write_file(out / "summary.csv", comparison_summary_csv(cmp, cfg.train.B));
    return ok ? 0 : 1;
}

namespace {

int check_topology(const RunConfig& cfg) {
    const CommGraph grid = build_agent_grid(cfg.train.S, cfg.train.K, cfg.train.model_edges);
    const TopologyReport rep = validate_topology(grid);
    bool ok = true;
    for (const auto& item : rep.items) {
        print_row(item.pass, item.name, item.detail);
        ok = ok && item.pass;
    }

    const double alpha =
        cfg.train.alpha > 0.0 ? cfg.train.alpha : default_alpha(grid.max_degree());
    const MixingMatrix mix = build_mixing_matrix(cfg.train.S, grid.model_edges, alpha);

    double worst_row = 0.0, worst_col = 0.0, worst_sym = 0.0;
    for (int i = 0; i < mix.S; ++i) {
        double row = 0.0, col = 0.0;
        for (int j = 0; j < mix.S; ++j) {
            row += mix.at(i, j);
            col += mix.at(j, i);
            worst_sym = std::max(worst_sym, std::abs(mix.at(i, j) - mix.at(j, i)));
        }
        worst_row = std::max(worst_row, std::abs(row - 1.0));
        worst_col = std::max(worst_col, std::abs(col - 1.0));
    }
    const bool stochastic = worst_row <= 1e-12 && worst_col <= 1e-12;
    print_row(stochastic, "doubly_stochastic",
              "max row/col sum error " + std::to_string(std::max(worst_row, worst_col)));
    print_row(worst_sym == 0.0, "symmetric", "");
    const bool gap_ok = mix.gamma < 1.0 - 1e-9;
    char buf[64];
    std::snprintf(buf, sizeof buf, "gamma = %.12f (alpha = %.6f)", mix.gamma, alpha);
    print_row(gap_ok, "spectral_gap_lt_1", buf);

    return (ok && stochastic && worst_sym == 0.0 && gap_ok) ? 0 : 1;
}

int check_grad(const RunConfig& cfg) {
    const Dataset ds = load_dataset(cfg);
    const auto params = init_params(cfg.train.net, derive_seed(cfg.train.seed, seed_tag::init));

    const int b = std::min(cfg.train.B, ds.n);
    std::vector<int> idx(ds.n);
    for (int i = 0; i < ds.n; ++i) idx[i] = i;
    Rng rng(derive_seed(cfg.train.seed, seed_tag::eval));
    for (int i = 0; i < b; ++i) {
        const int j = i + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(ds.n - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(b);
    Mat x;
    std::vector<int> y;
    assemble_batch(ds, idx, x, y);

    const double err = finite_diff_check(cfg.train.net, params, x, y);
    const bool ok = err <= 1e-4;
    char buf[64];
    std::snprintf(buf, sizeof buf, "max relative error %.3e (tolerance 1e-4)", err);
    print_row(ok, "finite_difference", buf);
    return ok ? 0 : 1;
}

int check_bound(const RunConfig& cfg) {
    const Dataset ds = load_dataset(cfg);
    const TrainResult res = run_training(ds, cfg.train);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%lld violations over %lld iterations",
                  static_cast<long long>(res.diag.contraction_failures),
                  static_cast<long long>(res.diag.iterations));
    print_row(res.diag.contraction_failures == 0, "contraction_per_step", buf);
    std::snprintf(buf, sizeof buf, "%lld violations over %lld iterations",
                  static_cast<long long>(res.diag.bound_failures),
                  static_cast<long long>(res.diag.iterations));
    print_row(res.diag.bound_failures == 0, "consensus_bound", buf);
    return res.checks_ok ? 0 : 1;
}

}  // namespace

int cmd_check(const RunConfig& cfg, const std::string& which) {
    if (which == "topology") return check_topology(cfg);
    if (which == "grad") return check_grad(cfg);
    if (which == "bound") return check_bound(cfg);
    throw std::invalid_argument("cmd_check: unknown suite '" + which + "'");
}

}  // namespace dsgd
