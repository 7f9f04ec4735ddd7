#include "dsgd/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dsgd/rng.hpp"

namespace dsgd {

void NetworkSpec::validate() const {
    if (layers.empty()) throw std::invalid_argument("NetworkSpec: at least one layer required");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].input_dim < 1 || layers[i].output_dim < 1)
            throw std::invalid_argument("NetworkSpec: layer dims must be >= 1");
        if (i > 0 && layers[i].input_dim != layers[i - 1].output_dim)
            throw std::invalid_argument("NetworkSpec: layer " + std::to_string(i + 1) +
                                        " input_dim does not chain");
    }
}

std::vector<double> init_params(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    std::vector<double> w(spec.total_param_count());
    std::size_t pos = 0;
    for (const auto& ls : spec.layers) {
        const double bound = std::sqrt(6.0 / (ls.input_dim + ls.output_dim));
        const std::size_t n_weights = static_cast<std::size_t>(ls.input_dim) * ls.output_dim;
        for (std::size_t i = 0; i < n_weights; ++i) w[pos++] = rng.uniform_in(-bound, bound);
        for (int i = 0; i < ls.output_dim; ++i) w[pos++] = 0.0;  // biases
    }
    return w;
}

namespace {

void apply_activation(Activation act, const Mat& z, Mat& h) {
    switch (act) {
        case Activation::identity:
            h = z;
            break;
        case Activation::relu:
            h = z;
            for (double& v : h.data) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::tanh:
            h = z;
            for (double& v : h.data) v = std::tanh(v);
            break;
    }
}

// Multiplies the upstream gradient by the activation Jacobian in place.
void apply_activation_grad(Activation act, const Mat& z, const Mat& h, Mat& g) {
    switch (act) {
        case Activation::identity:
            break;
        case Activation::relu:
            for (std::size_t i = 0; i < g.data.size(); ++i)
                if (z.data[i] <= 0.0) g.data[i] = 0.0;
            break;
        case Activation::tanh:
            for (std::size_t i = 0; i < g.data.size(); ++i)
                g.data[i] *= 1.0 - h.data[i] * h.data[i];
            break;
    }
}

// z = W h + b with W, b taken from the flat layer parameters.
void affine_forward(const double* wp, const LayerSpec& ls, const Mat& h, Mat& z) {
    const int in = ls.input_dim, out = ls.output_dim, batch = h.cols;
    const double* bias = wp + static_cast<std::size_t>(in) * out;
    for (int i = 0; i < out; ++i) {
        const double* row = wp + static_cast<std::size_t>(i) * in;
        for (int j = 0; j < batch; ++j) {
            double acc = bias[i];
            for (int k = 0; k < in; ++k) acc += row[k] * h(k, j);
            z(i, j) = acc;
        }
    }
}

}  // namespace

ForwardTrace forward_segment(const Mat& input, const ParamSegment& params,
                             const NetworkSpec& spec, std::int64_t batch_id) {
    const int lo = params.layer_lo, hi = params.layer_hi;
    if (lo < 1 || hi > spec.num_layers() || lo > hi)
        throw std::invalid_argument("forward_segment: bad layer range");
    if (static_cast<int>(params.w.size()) != spec.segment_param_count(lo, hi))
        throw std::invalid_argument("forward_segment: parameter vector has wrong length");
    if (input.rows != spec.layers[lo - 1].input_dim)
        throw std::invalid_argument("forward_segment: input has " + std::to_string(input.rows) +
                                    " rows, layer " + std::to_string(lo) + " expects " +
                                    std::to_string(spec.layers[lo - 1].input_dim));

    ForwardTrace trace;
    trace.batch_id = batch_id;
    trace.input = input;
    trace.weight_snapshot = params;

    const Mat* h_prev = &trace.input;
    std::size_t off = 0;
    for (int l = lo; l <= hi; ++l) {
        const LayerSpec& ls = spec.layers[l - 1];
        Mat z(ls.output_dim, input.cols);
        affine_forward(params.w.data() + off, ls, *h_prev, z);
        Mat h;
        apply_activation(ls.act, z, h);
        trace.preacts.push_back(std::move(z));
        trace.acts.push_back(std::move(h));
        h_prev = &trace.acts.back();
        off += static_cast<std::size_t>(spec.layer_param_count(l));
    }
    return trace;
}

SegmentGrads backward_segment(const ForwardTrace& trace, const Mat& upstream,
                              const NetworkSpec& spec) {
    const ParamSegment& params = trace.weight_snapshot;
    const int lo = params.layer_lo, hi = params.layer_hi;
    if (trace.acts.empty() || static_cast<int>(trace.acts.size()) != hi - lo + 1)
        throw std::invalid_argument("backward_segment: incomplete trace");
    if (!upstream.same_shape(trace.acts.back()))
        throw std::invalid_argument("backward_segment: upstream gradient shape mismatch");

    SegmentGrads out;
    out.dw.assign(params.w.size(), 0.0);

    Mat g = upstream;  // dphi/dh_l, starts at l = hi
    for (int l = hi; l >= lo; --l) {
        const int idx = l - lo;
        const LayerSpec& ls = spec.layers[l - 1];
        apply_activation_grad(ls.act, trace.preacts[idx], trace.acts[idx], g);

        const Mat& h_prev = idx > 0 ? trace.acts[idx - 1] : trace.input;
        const std::size_t off = static_cast<std::size_t>(spec.segment_param_count(lo, l - 1));
        double* dwp = out.dw.data() + off;
        const int in = ls.input_dim, outd = ls.output_dim, batch = g.cols;
        // dW = g h_prev^T, db = row sums of g
        for (int i = 0; i < outd; ++i) {
            for (int k = 0; k < in; ++k) {
                double acc = 0.0;
                for (int j = 0; j < batch; ++j) acc += g(i, j) * h_prev(k, j);
                dwp[static_cast<std::size_t>(i) * in + k] = acc;
            }
        }
        double* dbp = dwp + static_cast<std::size_t>(in) * outd;
        for (int i = 0; i < outd; ++i) {
            double acc = 0.0;
            for (int j = 0; j < batch; ++j) acc += g(i, j);
            dbp[i] = acc;
        }
        // dphi/dh_{l-1} = W^T g
        const double* wp = params.w.data() + off;
        Mat g_prev(in, batch);
        for (int k = 0; k < in; ++k) {
            for (int j = 0; j < batch; ++j) {
                double acc = 0.0;
                for (int i = 0; i < outd; ++i) acc += wp[static_cast<std::size_t>(i) * in + k] * g(i, j);
                g_prev(k, j) = acc;
            }
        }
        g = std::move(g_prev);
    }
    out.dinput = std::move(g);
    return out;
}

LossGrad loss_and_output_grad(const Mat& outputs, const std::vector<int>& labels,
                              LossKind kind, int num_classes) {
    if (static_cast<int>(labels.size()) != outputs.cols)
        throw std::invalid_argument("loss_and_output_grad: one label per column required");
    if (outputs.rows != num_classes)
        throw std::invalid_argument("loss_and_output_grad: output rows != num_classes");

    const int B = outputs.cols;
    const double inv_b = 1.0 / B;
    LossGrad lg;
    lg.dout = Mat(outputs.rows, outputs.cols);

    switch (kind) {
        case LossKind::softmax_cross_entropy: {
            double total = 0.0;
            for (int j = 0; j < B; ++j) {
                double zmax = outputs(0, j);
                for (int i = 1; i < outputs.rows; ++i) zmax = std::max(zmax, outputs(i, j));
                double denom = 0.0;
                for (int i = 0; i < outputs.rows; ++i) denom += std::exp(outputs(i, j) - zmax);
                const int y = labels[j];
                total += -(outputs(y, j) - zmax - std::log(denom));
                for (int i = 0; i < outputs.rows; ++i) {
                    const double p = std::exp(outputs(i, j) - zmax) / denom;
                    lg.dout(i, j) = inv_b * (p - (i == y ? 1.0 : 0.0));
                }
            }
            lg.loss = total * inv_b;
            break;
        }
        case LossKind::half_squared_error: {
            double total = 0.0;
            for (int j = 0; j < B; ++j) {
                const int y = labels[j];
                for (int i = 0; i < outputs.rows; ++i) {
                    const double r = outputs(i, j) - (i == y ? 1.0 : 0.0);
                    total += 0.5 * r * r;
                    lg.dout(i, j) = inv_b * r;
                }
            }
            lg.loss = total * inv_b;
            break;
        }
        default:
            throw std::invalid_argument("loss_and_output_grad: unknown loss kind");
    }
    return lg;
}

ParamSegment full_segment(const NetworkSpec& spec, std::vector<double> params) {
    ParamSegment seg;
    seg.layer_lo = 1;
    seg.layer_hi = spec.num_layers();
    seg.w = std::move(params);
    return seg;
}

Mat forward_full(const NetworkSpec& spec, const std::vector<double>& params, const Mat& input) {
    return forward_segment(input, full_segment(spec, params), spec, -1).output();
}

FullLossGrad network_loss_grad(const NetworkSpec& spec, const std::vector<double>& params,
                               const Mat& input, const std::vector<int>& labels) {
    const auto trace = forward_segment(input, full_segment(spec, params), spec, -1);
    const auto lg = loss_and_output_grad(trace.output(), labels, spec.loss, spec.output_dim());
    auto grads = backward_segment(trace, lg.dout, spec);
    return {lg.loss, std::move(grads.dw)};
}

double finite_diff_check(const NetworkSpec& spec, const std::vector<double>& params,
                         const Mat& input, const std::vector<int>& labels, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("finite_diff_check: epsilon must be > 0");
    const auto analytic = network_loss_grad(spec, params, input, labels);

    std::vector<double> probe = params;
    double worst = 0.0;
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + epsilon;
        const auto hi = loss_and_output_grad(forward_full(spec, probe, input), labels, spec.loss,
                                             spec.output_dim());
        probe[i] = orig - epsilon;
        const auto lo = loss_and_output_grad(forward_full(spec, probe, input), labels, spec.loss,
                                             spec.output_dim());
        probe[i] = orig;
        const double fd = (hi.loss - lo.loss) / (2.0 * epsilon);
        const double a = analytic.grad[i];
        const double err = std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)});
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace dsgd
