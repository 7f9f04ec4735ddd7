#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "dsgd/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Decentralized pipelined stale-gradient training simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed_flag = 0;
    int s_flag = 0, k_flag = 0, batch_flag = 0;
    long long iters_flag = 0;
    double alpha_flag = 0.0;
    std::string schedule_flag, out_flag;
    long long fault_iteration = -1;
    std::string check_which = "topology";

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key=value config file");
        cmd->add_option("--seed", seed_flag, "master seed");
        cmd->add_option("--s", s_flag, "data-group count");
        cmd->add_option("--k", k_flag, "model-group count");
        cmd->add_option("--batch", batch_flag, "mini-batch size per data-group");
        cmd->add_option("--iters", iters_flag, "iteration count");
        cmd->add_option("--alpha", alpha_flag, "gossip weight parameter");
        cmd->add_option("--schedule", schedule_flag,
                        "strategy1 | strategy2 | constant:V | diminishing:V | piecewise:B,..:V,..");
        cmd->add_option("--out", out_flag, "output directory");
    };

    CLI::App* train = app.add_subcommand("train", "run one training configuration");
    add_common(train);
    train->add_option("--inject-fault", fault_iteration,
                      "test hook: drop all messages produced at this iteration")
        ->group("");

    CLI::App* compare = app.add_subcommand("compare", "run the four-method comparison");
    add_common(compare);

    CLI::App* check = app.add_subcommand("check", "run a verification suite");
    add_common(check);
    check->add_option("--check", check_which, "topology | grad | bound");

    CLI11_PARSE(app, argc, argv);

    CLI::App* active = train->parsed() ? train : compare->parsed() ? compare : check;
    dsgd::ConfigOverrides ov;
    if (active->count("--seed")) ov.seed = seed_flag;
    if (active->count("--s")) ov.s = s_flag;
    if (active->count("--k")) ov.k = k_flag;
    if (active->count("--batch")) ov.batch = batch_flag;
    if (active->count("--iters")) ov.iters = iters_flag;
    if (active->count("--alpha")) ov.alpha = alpha_flag;
    if (active->count("--schedule")) ov.schedule = schedule_flag;
    if (active->count("--out")) ov.out = out_flag;

    try {
        dsgd::RunConfig cfg = dsgd::parse_config(config_path, ov);
        cfg.train.fault_iteration = fault_iteration;
        if (train->parsed()) return dsgd::cmd_train(cfg);
        if (compare->parsed()) return dsgd::cmd_compare(cfg);
        return dsgd::cmd_check(cfg, check_which);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
