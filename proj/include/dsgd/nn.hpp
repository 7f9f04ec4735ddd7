#ifndef DSGD_NN_HPP
#define DSGD_NN_HPP

#include <cstdint>
#include <vector>

#include "dsgd/mat.hpp"

namespace dsgd {

enum class Activation { identity, relu, tanh };
enum class LossKind { softmax_cross_entropy, half_squared_error };

struct LayerSpec {
    int input_dim = 0;
    int output_dim = 0;
    Activation act = Activation::identity;
};

// Dense feed-forward network: h_l = act_l(W_l h_{l-1} + b_l), layers 1..L.
// Per-layer parameters are stored flat as [W_l row-major | b_l]; the full
// parameter vector concatenates layers in order.
struct NetworkSpec {
    std::vector<LayerSpec> layers;
    LossKind loss = LossKind::softmax_cross_entropy;

    int num_layers() const { return static_cast<int>(layers.size()); }
    int input_dim() const { return layers.front().input_dim; }
    int output_dim() const { return layers.back().output_dim; }

    // d_l = (input_dim + 1) * output_dim, l is 1-based.
    int layer_param_count(int l) const {
        const auto& ls = layers[l - 1];
        return (ls.input_dim + 1) * ls.output_dim;
    }
    int segment_param_count(int lo, int hi) const {
        int n = 0;
        for (int l = lo; l <= hi; ++l) n += layer_param_count(l);
        return n;
    }
    int total_param_count() const { return segment_param_count(1, num_layers()); }

    // Offset of layer l inside the full parameter vector.
    int layer_param_offset(int l) const { return segment_param_count(1, l - 1); }

    // Throws std::invalid_argument if dims do not chain or L < 1.
    void validate() const;
};

// Weights for the contiguous layer range [layer_lo .. layer_hi].
struct ParamSegment {
    int layer_lo = 1;
    int layer_hi = 1;
    std::vector<double> w;
};

// Everything a later backward pass needs: the input block, per-layer
// pre-activations and activations, and a snapshot of the weights used.
struct ForwardTrace {
    std::int64_t batch_id = -1;
    Mat input;               // h_{p-1}, one column per sample
    std::vector<Mat> preacts;
    std::vector<Mat> acts;   // acts.back() is the segment output h_q
    ParamSegment weight_snapshot;

    const Mat& output() const { return acts.back(); }
};

struct SegmentGrads {
    std::vector<double> dw;  // same layout as the segment parameter vector
    Mat dinput;              // dphi/dh_{p-1}, handed to the previous segment
};

struct LossGrad {
    double loss = 0.0;  // mean over the batch
    Mat dout;           // gradient of the mean loss w.r.t. the outputs
};

// Deterministic init: weights uniform in +-sqrt(6/(fan_in+fan_out)), biases
// zero. Identical bytes for identical (spec, seed).
std::vector<double> init_params(const NetworkSpec& spec, std::uint64_t seed);

// Runs layers [layer_lo..layer_hi] on the input block and records the trace.
ForwardTrace forward_segment(const Mat& input, const ParamSegment& params,
                             const NetworkSpec& spec, std::int64_t batch_id);

// Gradients taken at the snapshot weights stored in the trace.
SegmentGrads backward_segment(const ForwardTrace& trace, const Mat& upstream,
                              const NetworkSpec& spec);

// Mean loss over the batch and its gradient w.r.t. the network outputs. For
// half_squared_error the targets are one-hot encodings of the labels.
LossGrad loss_and_output_grad(const Mat& outputs, const std::vector<int>& labels,
                              LossKind kind, int num_classes);

// Whole-network convenience wrappers (single segment spanning all layers).
ParamSegment full_segment(const NetworkSpec& spec, std::vector<double> params);
Mat forward_full(const NetworkSpec& spec, const std::vector<double>& params, const Mat& input);

struct FullLossGrad {
    double loss = 0.0;
    std::vector<double> grad;  // w.r.t. the full parameter vector
};
FullLossGrad network_loss_grad(const NetworkSpec& spec, const std::vector<double>& params,
                               const Mat& input, const std::vector<int>& labels);

// Max over coordinates of |analytic - central difference| / max(1,|a|,|f|).
double finite_diff_check(const NetworkSpec& spec, const std::vector<double>& params,
                         const Mat& input, const std::vector<int>& labels,
                         double epsilon = 1e-6);

}  // namespace dsgd

#endif  // DSGD_NN_HPP
