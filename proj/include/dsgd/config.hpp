#ifndef DSGD_CONFIG_HPP
#define DSGD_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>

#include "dsgd/dataset.hpp"
#include "dsgd/trainer.hpp"

namespace dsgd {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class DataKind { synthetic, cifar10 };

// Fully validated run configuration. The file format is flat key=value text
// with section prefixes (run.*, data.*, net.*, sched.*, graph.*); '#' starts
// a comment, unknown keys are rejected, command-line flags override file
// keys.
struct RunConfig {
    TrainOptions train;  // S, K, B, T, seed, net, edges, alpha, split, sched, eval cadence

    DataKind data_kind = DataKind::synthetic;
    int data_n = 1024;
    int data_classes = 4;
    int data_dim = 20;
    std::uint64_t data_seed = 7;
    std::string data_path;  // cifar10 only

    std::string out_dir = "out";
};

// Command-line overrides; unset fields keep the file/default values.
struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> s;
    std::optional<int> k;
    std::optional<int> batch;
    std::optional<std::int64_t> iters;
    std::optional<double> alpha;
    std::optional<std::string> schedule;
    std::optional<std::string> out;
};

// path may be empty (defaults only). Throws ConfigError on unknown keys,
// type mismatches, invalid ranges or missing referenced paths.
RunConfig parse_config(const std::string& path, const ConfigOverrides& overrides = {});

// "strategy1", "strategy2", "constant:0.05", "diminishing:0.5" or
// "piecewise:1500,3000,4000:0.1,0.01,0.001,0.0001".
StepSchedule parse_schedule_string(const std::string& text);

// Builds the dataset the config describes.
Dataset load_dataset(const RunConfig& cfg);

}  // namespace dsgd

#endif  // DSGD_CONFIG_HPP
