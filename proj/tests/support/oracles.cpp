#include "support/oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

namespace oracles {

using dsgd::Activation;
using dsgd::LossKind;
using dsgd::Mat;

double dense_gamma(const std::vector<double>& P, int S) {
    Eigen::MatrixXd m(S, S);
    for (int i = 0; i < S; ++i)
        for (int j = 0; j < S; ++j) m(i, j) = P[static_cast<std::size_t>(i) * S + j] - 1.0 / S;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    double gamma = 0.0;
    for (int i = 0; i < S; ++i) gamma = std::max(gamma, std::abs(es.eigenvalues()[i]));
    return gamma;
}

double ring_gamma(int S, double alpha) {
    double gamma = 0.0;
    for (int j = 1; j < S; ++j) {
        const double lam =
            1.0 - 2.0 * alpha * (1.0 - std::cos(2.0 * M_PI * j / static_cast<double>(S)));
        gamma = std::max(gamma, std::abs(lam));
    }
    return gamma;
}

dsgd::EdgeList random_connected_graph(int S, dsgd::Rng& rng) {
    std::set<std::pair<int, int>> edges;
    for (int v = 2; v <= S; ++v) {
        const int u = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(v - 1)));
        edges.emplace(std::min(u, v), std::max(u, v));
    }
    for (int u = 1; u <= S; ++u)
        for (int v = u + 1; v <= S; ++v)
            if (rng.uniform() < 0.35) edges.emplace(u, v);
    return {edges.begin(), edges.end()};
}

namespace {

double apply_act(Activation act, double z) {
    switch (act) {
        case Activation::identity: return z;
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::tanh: return std::tanh(z);
    }
    return z;
}

double act_derivative(Activation act, double z) {
    switch (act) {
        case Activation::identity: return 1.0;
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
    }
    return 1.0;
}

}  // namespace

Mat ref_forward(const dsgd::NetworkSpec& spec, const std::vector<double>& params,
                const Mat& input) {
    Mat h = input;
    std::size_t off = 0;
    for (int l = 1; l <= spec.num_layers(); ++l) {
        const auto& ls = spec.layers[l - 1];
        Mat z(ls.output_dim, h.cols);
        for (int i = 0; i < ls.output_dim; ++i) {
            for (int j = 0; j < h.cols; ++j) {
                double acc = params[off + static_cast<std::size_t>(ls.input_dim) * ls.output_dim + i];
                for (int k = 0; k < ls.input_dim; ++k)
                    acc += params[off + static_cast<std::size_t>(i) * ls.input_dim + k] * h(k, j);
                z(i, j) = apply_act(ls.act, acc);
            }
        }
        h = std::move(z);
        off += static_cast<std::size_t>(spec.layer_param_count(l));
    }
    return h;
}

RefLossGrad ref_loss_grad(const dsgd::NetworkSpec& spec, const std::vector<double>& params,
                          const Mat& input, const std::vector<int>& labels) {
    const int L = spec.num_layers();
    const int B = input.cols;

    std::vector<Mat> zs(L);
    std::vector<Mat> hs(L + 1);
    hs[0] = input;
    std::size_t off = 0;
    for (int l = 1; l <= L; ++l) {
        const auto& ls = spec.layers[l - 1];
        zs[l - 1] = Mat(ls.output_dim, B);
        hs[l] = Mat(ls.output_dim, B);
        for (int i = 0; i < ls.output_dim; ++i) {
            for (int j = 0; j < B; ++j) {
                double acc = params[off + static_cast<std::size_t>(ls.input_dim) * ls.output_dim + i];
                for (int k = 0; k < ls.input_dim; ++k)
                    acc += params[off + static_cast<std::size_t>(i) * ls.input_dim + k] * hs[l - 1](k, j);
                zs[l - 1](i, j) = acc;
                hs[l](i, j) = apply_act(ls.act, acc);
            }
        }
        off += static_cast<std::size_t>(spec.layer_param_count(l));
    }

    RefLossGrad out;
    const int C = spec.output_dim();
    Mat g(C, B);
    if (spec.loss == LossKind::softmax_cross_entropy) {
        for (int j = 0; j < B; ++j) {
            double zmax = -1e300;
            for (int i = 0; i < C; ++i) zmax = std::max(zmax, hs[L](i, j));
            double denom = 0.0;
            for (int i = 0; i < C; ++i) denom += std::exp(hs[L](i, j) - zmax);
            out.loss += (std::log(denom) - (hs[L](labels[j], j) - zmax)) / B;
            for (int i = 0; i < C; ++i)
                g(i, j) = (std::exp(hs[L](i, j) - zmax) / denom - (labels[j] == i ? 1.0 : 0.0)) / B;
        }
    } else {
        for (int j = 0; j < B; ++j) {
            for (int i = 0; i < C; ++i) {
                const double r = hs[L](i, j) - (labels[j] == i ? 1.0 : 0.0);
                out.loss += 0.5 * r * r / B;
                g(i, j) = r / B;
            }
        }
    }

    out.grad.assign(params.size(), 0.0);
    for (int l = L; l >= 1; --l) {
        const auto& ls = spec.layers[l - 1];
        off -= static_cast<std::size_t>(spec.layer_param_count(l));
        Mat gz(ls.output_dim, B);
        for (int i = 0; i < ls.output_dim; ++i)
            for (int j = 0; j < B; ++j)
                gz(i, j) = g(i, j) * act_derivative(ls.act, zs[l - 1](i, j));
        for (int i = 0; i < ls.output_dim; ++i) {
            for (int k = 0; k < ls.input_dim; ++k) {
                double acc = 0.0;
                for (int j = 0; j < B; ++j) acc += gz(i, j) * hs[l - 1](k, j);
                out.grad[off + static_cast<std::size_t>(i) * ls.input_dim + k] = acc;
            }
        }
        for (int i = 0; i < ls.output_dim; ++i) {
            double acc = 0.0;
            for (int j = 0; j < B; ++j) acc += gz(i, j);
            out.grad[off + static_cast<std::size_t>(ls.input_dim) * ls.output_dim + i] = acc;
        }
        if (l > 1) {
            Mat gp(ls.input_dim, B);
            for (int k = 0; k < ls.input_dim; ++k) {
                for (int j = 0; j < B; ++j) {
                    double acc = 0.0;
                    for (int i = 0; i < ls.output_dim; ++i)
                        acc += params[off + static_cast<std::size_t>(i) * ls.input_dim + k] * gz(i, j);
                    gp(k, j) = acc;
                }
            }
            g = std::move(gp);
        }
    }
    return out;
}

long long brute_force_minimax_params(const dsgd::NetworkSpec& spec, int K) {
    const int L = spec.num_layers();
    std::vector<long long> d(L);
    for (int l = 1; l <= L; ++l) d[l - 1] = spec.layer_param_count(l);
    if (K == 1) {
        long long total = 0;
        for (long long v : d) total += v;
        return total;
    }

    long long best = -1;
    std::vector<int> cuts(K - 1);
    auto recurse = [&](auto&& self, int idx, int from) -> void {
        if (idx == K - 1) {
            long long worst = 0;
            int start = 0;
            for (int c : cuts) {
                long long acc = 0;
                for (int l = start; l < c; ++l) acc += d[l];
                worst = std::max(worst, acc);
                start = c;
            }
            long long acc = 0;
            for (int l = start; l < L; ++l) acc += d[l];
            worst = std::max(worst, acc);
            if (best < 0 || worst < best) best = worst;
            return;
        }
        for (int c = from; c <= L - (K - 1 - idx); ++c) {
            cuts[idx] = c;
            self(self, idx + 1, c + 1);
        }
    };
    recurse(recurse, 0, 1);
    return best;
}

std::pair<double, double> retyped_m1_m2(double rho, double sigma, double gamma, double eta, int K,
                                        int S, int B, double delta0) {
    const double kterm = 24.0 * std::pow(K, 3) + 1.0;
    const double common = kterm * (S + rho * eta) * std::pow(rho, 2);
    const double m1 = common * (std::pow(gamma, 2) / (1.0 - std::pow(gamma, 2)) * std::pow(delta0, 2) +
                                gamma / (1.0 - gamma) * delta0 * eta);
    const double m2 = rho * K * std::pow(sigma, 2) / (B * std::pow(S, 2)) +
                      (eta * S + rho * std::pow(eta, 2)) * 6.0 * std::pow(K, 3) * std::pow(rho, 2) *
                          std::pow(sigma, 2) / (B * std::pow(S, 4)) +
                      common * std::pow(gamma / (1.0 - gamma), 2) * std::pow(eta, 2);
    return {m1, m2};
}

}  // namespace oracles
