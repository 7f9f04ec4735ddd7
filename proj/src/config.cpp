#include "dsgd/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace dsgd {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

long long to_int(const std::string& key, const std::string& v) {
    long long x = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
    return x;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "on") return true;
    if (v == "0" || v == "false" || v == "off") return false;
    throw ConfigError("config: key '" + key + "' expects a boolean, got '" + v + "'");
}

Activation parse_activation(const std::string& v) {
    if (v == "identity") return Activation::identity;
    if (v == "relu") return Activation::relu;
    if (v == "tanh") return Activation::tanh;
    throw ConfigError("config: unknown activation '" + v + "'");
}

LossKind parse_loss(const std::string& v) {
    if (v == "softmax_ce") return LossKind::softmax_cross_entropy;
    if (v == "half_mse") return LossKind::half_squared_error;
    throw ConfigError("config: unknown loss '" + v + "'");
}

const std::vector<std::string> kKnownKeys = {
    "run.s",       "run.k",           "run.batch",   "run.iters",    "run.seed",
    "run.alpha",   "run.split",       "run.eval_interval", "run.eval_batch", "run.out",
    "run.wall_clock",
    "data.kind",   "data.n",          "data.classes", "data.dim",    "data.seed",
    "data.path",
    "net.layers",  "net.activation",  "net.loss",
    "sched.kind",  "sched.eta",       "sched.eta_star", "sched.breaks", "sched.values",
    "graph.edges",
};

}  // namespace

StepSchedule parse_schedule_string(const std::string& text) {
    const auto parts = split_on(text, ':');
    const std::string& kind = parts[0];
    if (kind == "strategy1" && parts.size() == 1) return StepSchedule::strategy1();
    if (kind == "strategy2" && parts.size() == 1) return StepSchedule::strategy2();
    if (kind == "constant" && parts.size() == 2)
        return StepSchedule::constant(to_double("schedule", parts[1]));
    if (kind == "diminishing" && parts.size() == 2)
        return StepSchedule::diminishing(to_double("schedule", parts[1]));
    if (kind == "piecewise" && parts.size() == 3) {
        std::vector<std::int64_t> breaks;
        for (const auto& b : split_on(parts[1], ','))
            breaks.push_back(to_int("schedule breaks", trim(b)));
        std::vector<double> values;
        for (const auto& v : split_on(parts[2], ','))
            values.push_back(to_double("schedule values", trim(v)));
        return StepSchedule::piecewise(std::move(breaks), std::move(values));
    }
    throw ConfigError("config: cannot parse schedule '" + text + "'");
}

RunConfig parse_config(const std::string& path, const ConfigOverrides& overrides) {
    std::map<std::string, std::string> kv;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("config: cannot open '" + path + "'");
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config: line " + std::to_string(lineno) + " is not key=value");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end())
                throw ConfigError("config: unknown key '" + key + "'");
            if (kv.count(key)) throw ConfigError("config: duplicate key '" + key + "'");
            kv[key] = value;
        }
    }
    auto take = [&kv](const char* key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };

    RunConfig cfg;

    // run.*
    if (auto v = take("run.s")) cfg.train.S = static_cast<int>(to_int("run.s", *v));
    if (auto v = take("run.k")) cfg.train.K = static_cast<int>(to_int("run.k", *v));
    if (auto v = take("run.batch")) cfg.train.B = static_cast<int>(to_int("run.batch", *v));
    if (auto v = take("run.iters")) cfg.train.T = to_int("run.iters", *v);
    if (auto v = take("run.seed"))
        cfg.train.seed = static_cast<std::uint64_t>(to_int("run.seed", *v));
    if (auto v = take("run.alpha")) {
        cfg.train.alpha = to_double("run.alpha", *v);
        if (!(cfg.train.alpha > 0.0)) throw ConfigError("config: run.alpha must be positive");
    }
    if (auto v = take("run.split")) {
        if (*v == "params") cfg.train.split = SplitStrategy::params;
        else if (*v == "even") cfg.train.split = SplitStrategy::even;
        else throw ConfigError("config: run.split must be 'params' or 'even'");
    }
    if (auto v = take("run.eval_interval"))
        cfg.train.eval_interval = to_int("run.eval_interval", *v);
    if (auto v = take("run.eval_batch"))
        cfg.train.eval_batch = static_cast<int>(to_int("run.eval_batch", *v));
    if (auto v = take("run.out")) cfg.out_dir = *v;
    if (auto v = take("run.wall_clock")) cfg.train.measure_wall = to_bool("run.wall_clock", *v);

    // data.*
    if (auto v = take("data.kind")) {
        if (*v == "synthetic") cfg.data_kind = DataKind::synthetic;
        else if (*v == "cifar10") cfg.data_kind = DataKind::cifar10;
        else throw ConfigError("config: data.kind must be 'synthetic' or 'cifar10'");
    }
    if (auto v = take("data.n")) cfg.data_n = static_cast<int>(to_int("data.n", *v));
    if (auto v = take("data.classes")) cfg.data_classes = static_cast<int>(to_int("data.classes", *v));
    if (auto v = take("data.dim")) cfg.data_dim = static_cast<int>(to_int("data.dim", *v));
    if (auto v = take("data.seed")) cfg.data_seed = static_cast<std::uint64_t>(to_int("data.seed", *v));
    if (auto v = take("data.path")) cfg.data_path = *v;

    // net.*
    std::vector<int> widths{20, 16, 8, 4};
    if (auto v = take("net.layers")) {
        widths.clear();
        for (const auto& tok : split_ws(*v)) widths.push_back(static_cast<int>(to_int("net.layers", tok)));
        if (widths.size() < 2) throw ConfigError("config: net.layers needs at least two dims");
    }
    Activation hidden_act = Activation::tanh;
    if (auto v = take("net.activation")) hidden_act = parse_activation(*v);
    LossKind loss = LossKind::softmax_cross_entropy;
    if (auto v = take("net.loss")) loss = parse_loss(*v);

    // sched.*
    if (auto v = take("sched.kind")) {
        const std::string kind = *v;
        if (kind == "strategy1") cfg.train.sched = StepSchedule::strategy1();
        else if (kind == "strategy2") cfg.train.sched = StepSchedule::strategy2();
        else if (kind == "constant")
            cfg.train.sched = StepSchedule::constant(
                take("sched.eta") ? to_double("sched.eta", *take("sched.eta")) : 0.1);
        else if (kind == "diminishing")
            cfg.train.sched = StepSchedule::diminishing(
                take("sched.eta_star") ? to_double("sched.eta_star", *take("sched.eta_star")) : 0.5);
        else if (kind == "piecewise") {
            const auto breaks_s = take("sched.breaks");
            const auto values_s = take("sched.values");
            if (!breaks_s || !values_s)
                throw ConfigError("config: piecewise schedule needs sched.breaks and sched.values");
            std::vector<std::int64_t> breaks;
            for (const auto& tok : split_ws(*breaks_s)) breaks.push_back(to_int("sched.breaks", tok));
            std::vector<double> values;
            for (const auto& tok : split_ws(*values_s)) values.push_back(to_double("sched.values", tok));
            cfg.train.sched = StepSchedule::piecewise(std::move(breaks), std::move(values));
        } else {
            throw ConfigError("config: unknown sched.kind '" + kind + "'");
        }
    } else if (take("sched.eta") || take("sched.eta_star") || take("sched.breaks") ||
               take("sched.values")) {
        throw ConfigError("config: sched.* parameters require sched.kind");
    }

    // graph.*
    bool edges_given = false;
    EdgeList edges;
    if (auto v = take("graph.edges")) {
        edges_given = true;
        const auto toks = split_ws(*v);
        if (toks.size() % 2 != 0)
            throw ConfigError("config: graph.edges needs whitespace-separated 'u v' pairs");
        for (std::size_t i = 0; i < toks.size(); i += 2)
            edges.emplace_back(static_cast<int>(to_int("graph.edges", toks[i])),
                               static_cast<int>(to_int("graph.edges", toks[i + 1])));
    }

    // Flag overrides.
    if (overrides.seed) cfg.train.seed = *overrides.seed;
    if (overrides.s) cfg.train.S = *overrides.s;
    if (overrides.k) cfg.train.K = *overrides.k;
    if (overrides.batch) cfg.train.B = *overrides.batch;
    if (overrides.iters) cfg.train.T = *overrides.iters;
    if (overrides.alpha) {
        if (!(*overrides.alpha > 0.0)) throw ConfigError("config: run.alpha must be positive");
        cfg.train.alpha = *overrides.alpha;
    }
    if (overrides.schedule) cfg.train.sched = parse_schedule_string(*overrides.schedule);
    if (overrides.out) cfg.out_dir = *overrides.out;

    // Validation.
    if (cfg.train.S < 1 || cfg.train.K < 1 || cfg.train.B < 1 || cfg.train.T < 1 ||
        cfg.train.eval_interval < 1 || cfg.train.eval_batch < 1)
        throw ConfigError("config: counts must be >= 1");
    cfg.train.sched.validate();

    if (cfg.data_kind == DataKind::synthetic) {
        if (cfg.data_n < 1 || cfg.data_classes < 1 || cfg.data_dim < 1)
            throw ConfigError("config: data.n, data.classes, data.dim must be >= 1");
    } else {
        if (cfg.data_path.empty()) throw ConfigError("config: data.kind=cifar10 requires data.path");
        if (!std::filesystem::exists(cfg.data_path))
            throw ConfigError("config: data.path '" + cfg.data_path + "' does not exist");
        cfg.data_dim = 3072;
        cfg.data_classes = 10;
    }

    // Assemble the network: hidden layers use net.activation, the output
    // layer is linear (softmax folds into the loss).
    cfg.train.net.layers.clear();
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const bool last = i + 2 == widths.size();
        cfg.train.net.layers.push_back({widths[i], widths[i + 1],
                                        last ? Activation::identity : hidden_act});
    }
    cfg.train.net.loss = loss;
    cfg.train.net.validate();
    if (cfg.train.net.input_dim() != cfg.data_dim)
        throw ConfigError("config: net input dim " + std::to_string(cfg.train.net.input_dim()) +
                          " != data dim " + std::to_string(cfg.data_dim));
    if (cfg.train.net.output_dim() != cfg.data_classes)
        throw ConfigError("config: net output dim " + std::to_string(cfg.train.net.output_dim()) +
                          " != class count " + std::to_string(cfg.data_classes));
    if (cfg.train.K > cfg.train.net.num_layers())
        throw ConfigError("config: run.k exceeds the layer count");

    // Model graph: explicit edges or a complete graph over [1..S].
    if (edges_given) {
        cfg.train.model_edges = std::move(edges);
    } else {
        for (int u = 1; u <= cfg.train.S; ++u)
            for (int v = u + 1; v <= cfg.train.S; ++v) cfg.train.model_edges.emplace_back(u, v);
    }
    CommGraph grid;
    try {
        grid = build_agent_grid(cfg.train.S, cfg.train.K, cfg.train.model_edges);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (cfg.train.alpha > 0.0) {
        const int max_deg = grid.max_degree();
        const double upper = max_deg > 0 ? 1.0 / max_deg : 1.0;
        if (!(cfg.train.alpha < upper))
            throw ConfigError("config: run.alpha must be < 1/max_degree = " + std::to_string(upper));
    }

    return cfg;
}

Dataset load_dataset(const RunConfig& cfg) {
    if (cfg.data_kind == DataKind::synthetic)
        return gen_synthetic(cfg.data_n, cfg.data_classes, cfg.data_dim, cfg.data_seed);

    // A directory holds the standard training batches data_batch_1..5.bin;
    // a plain path is a single batch file.
    if (!std::filesystem::is_directory(cfg.data_path)) return read_cifar10_bin(cfg.data_path);
    Dataset all;
    for (int i = 1; i <= 5; ++i) {
        const auto file =
            std::filesystem::path(cfg.data_path) / ("data_batch_" + std::to_string(i) + ".bin");
        Dataset part = read_cifar10_bin(file.string());
        if (all.n == 0) {
            all = std::move(part);
        } else {
            all.features.insert(all.features.end(), part.features.begin(), part.features.end());
            all.labels.insert(all.labels.end(), part.labels.begin(), part.labels.end());
            all.n += part.n;
        }
    }
    return all;
}

}  // namespace dsgd
