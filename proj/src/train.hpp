#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "forward.hpp"
#include "network.hpp"

namespace sdc {

struct TrainConfig {
    int epochs = 200;
    int batch_size = 100;
    double lr_peak = 0.5;
    double lr_floor = 0.0005;
    double phase1_frac = 0.5;
    double phase2_frac = 0.9;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    double drop_prob = 0.0;
    int lambda_frozen_train = 0;
    MaskMode mode = MaskMode::dropconnect;
    ScaleMode scale_mode = ScaleMode::inverted;
    int shift_max = 4;
    double flip_prob = 0.5;
    std::uint64_t seed = 0;

    MaskPlan plan() const { return {drop_prob, lambda_frozen_train, mode, scale_mode}; }
};

void validate_train_config(const TrainConfig& cfg);

// Piecewise schedule: lr_peak until phase1_frac of the run, linear ramp down
// to lr_floor until phase2_frac, lr_floor afterward.
inline double lr_at(long long step, long long total_steps, const TrainConfig& cfg) {
    const double frac = total_steps > 0 ? static_cast<double>(step) / static_cast<double>(total_steps) : 1.0;
    if (frac < cfg.phase1_frac) return cfg.lr_peak;
    if (frac < cfg.phase2_frac) {
        const double t = (frac - cfg.phase1_frac) / (cfg.phase2_frac - cfg.phase1_frac);
        return cfg.lr_peak + t * (cfg.lr_floor - cfg.lr_peak);
    }
    return cfg.lr_floor;
}

// Mean NLL of the true classes (probabilities clamped at 1e-12) plus
// weight_decay times the summed squared L2 norm of all weight tensors.
// Biases are exempt from the decay term.
template <class S>
double loss_mc(const TensorT<S>& probs, const std::vector<int>& labels, const NetworkT<S>& net,
               double weight_decay) {
    if (probs.rank() != 2) throw_dimension("loss expects probability rows, got " + shape_str(probs.shape));
    if (static_cast<std::size_t>(probs.dim(0)) != labels.size())
        throw_data("probability rows and label count disagree");
    const int n = probs.dim(0), c = probs.dim(1);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= c) throw_data("label " + std::to_string(y) + " out of range for " + std::to_string(c));
        const double p = static_cast<double>(probs.at({i, y}));
        total -= std::log(std::max(p, 1e-12));
    }
    total /= n;
    double decay = 0.0;
    for (const TensorT<S>& w : net.weights)
        for (S v : w.data) decay += static_cast<double>(v) * static_cast<double>(v);
    return total + weight_decay * decay;
}

template <class S>
struct Gradients {
    std::vector<TensorT<S>> weights, biases;
};

// dL/dprobs for the mean-NLL term; entries clamped below 1e-12 get zero slope
// to stay consistent with the clamp in the loss.
template <class S>
TensorT<S> loss_probs_gradient(const TensorT<S>& probs, const std::vector<int>& labels) {
    const int n = probs.dim(0);
    TensorT<S> d(probs.shape);
    for (int i = 0; i < n; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        const double p = static_cast<double>(probs.at({i, y}));
        if (p > 1e-12) d.at({i, y}) = static_cast<S>(-1.0 / (p * n));
    }
    return d;
}

namespace detail {

// Column sums of dy ([n, c] -> [c]) for dense bias gradients.
template <class S>
TensorT<S> column_sums(const TensorT<S>& dy) {
    TensorT<S> out({dy.dim(1)});
    for (int i = 0; i < dy.dim(0); ++i)
        for (int j = 0; j < dy.dim(1); ++j)
            out.data[static_cast<std::size_t>(j)] += dy.at({i, j});
    return out;
}

// Per-channel sums of dy ([b, c, h, w] -> [c]) for conv bias gradients.
template <class S>
TensorT<S> channel_sums(const TensorT<S>& dy) {
    TensorT<S> out({dy.dim(1)});
    const std::size_t hw = static_cast<std::size_t>(dy.dim(2)) * dy.dim(3);
    for (int b = 0; b < dy.dim(0); ++b)
        for (int c = 0; c < dy.dim(1); ++c) {
            const S* plane = dy.ptr() + (static_cast<std::size_t>(b) * dy.dim(1) + c) * hw;
            S sum = S(0);
            for (std::size_t i = 0; i < hw; ++i) sum += plane[i];
            out.data[static_cast<std::size_t>(c)] += sum;
        }
    return out;
}

template <class S>
void scale_channels_inplace(TensorT<S>& t, const TensorT<S>& factors) {
    const std::size_t hw = static_cast<std::size_t>(t.dim(2)) * t.dim(3);
    for (int b = 0; b < t.dim(0); ++b)
        for (int c = 0; c < t.dim(1); ++c) {
            S* plane = t.ptr() + (static_cast<std::size_t>(b) * t.dim(1) + c) * hw;
            const S f = factors.data[static_cast<std::size_t>(c)];
            for (std::size_t i = 0; i < hw; ++i) plane[i] *= f;
        }
}

template <class S>
void scale_columns_inplace(TensorT<S>& t, const TensorT<S>& factors) {
    for (int i = 0; i < t.dim(0); ++i)
        for (int j = 0; j < t.dim(1); ++j) t.at({i, j}) *= factors.data[static_cast<std::size_t>(j)];
}

}  // namespace detail

// Reverse-mode gradients of loss_mc through the traced forward pass. Masks
// are treated as constants; masked-out weights get zero data gradient but the
// full weight-decay gradient.
template <class S>
Gradients<S> compute_gradients(const NetworkT<S>& net, const ForwardTrace<S>& trace, const std::vector<int>& labels,
                               double weight_decay) {
    Gradients<S> g;
    g.weights.reserve(net.weights.size());
    g.biases.reserve(net.biases.size());
    for (std::size_t i = 0; i < net.weights.size(); ++i) {
        g.weights.emplace_back(net.weights[i].shape);
        g.biases.emplace_back(net.biases[i].shape);
    }

    TensorT<S> dy = loss_probs_gradient(trace.output, labels);
    int wi = net.n_weight_layers();
    for (int i = net.n_layers() - 1; i >= 0; --i) {
        const LayerSpec& layer = net.layers[static_cast<std::size_t>(i)];
        const TensorT<S>& x = trace.inputs[static_cast<std::size_t>(i)];
        switch (layer.kind) {
        case LayerKind::softmax:
            dy = softmax_backward(trace.output, dy);
            break;
        case LayerKind::relu:
            dy = relu_backward(x, dy);
            break;
        case LayerKind::maxpool2:
            dy = maxpool2_backward(dy, trace.pool_argmax[static_cast<std::size_t>(i)], x.shape);
            break;
        case LayerKind::flatten:
            dy = dy.reshaped(x.shape);
            break;
        case LayerKind::dense: {
            --wi;
            const std::size_t w = static_cast<std::size_t>(wi);
            const TensorT<S>& mask = trace.masks[w];
            const S scale = trace.scales[w];
            if (mask.rank() == 2) {
                // dropconnect: y = scale*(x.(w(.)m)) + b
                g.biases[w] = detail::column_sums(dy);
                TensorT<S> dz = dy;
                for (S& v : dz.data) v *= scale;
                TensorT<S> dw = matmul_at_b(x, dz);
                g.weights[w] = hadamard(dw, mask);
                dy = matmul_a_bt(dz, hadamard(net.weights[w], mask));
            } else {
                TensorT<S> dz = dy;
                if (mask.rank() == 1) {
                    // dropout: y = scale*((x.w + b)(.)m)
                    TensorT<S> factors = mask;
                    for (S& v : factors.data) v *= scale;
                    detail::scale_columns_inplace(dz, factors);
                }
                g.biases[w] = detail::column_sums(dz);
                g.weights[w] = matmul_at_b(x, dz);
                dy = matmul_a_bt(dz, net.weights[w]);
            }
            break;
        }
        case LayerKind::conv2d: {
            --wi;
            const std::size_t w = static_cast<std::size_t>(wi);
            const TensorT<S>& mask = trace.masks[w];
            const S scale = trace.scales[w];
            const ConvGeom geom = conv_geometry(x, net.weights[w], layer.stride, layer.pad);
            TensorT<S> dz = dy;
            TensorT<S> w_eff = net.weights[w];
            if (mask.rank() == 4) {
                // dropconnect: y = scale*conv(x, w(.)m) + b, bias outside the scale
                g.biases[w] = detail::channel_sums(dz);
                for (S& v : dz.data) v *= scale;
                w_eff = hadamard(w_eff, mask);
            } else if (mask.rank() == 1) {
                // dropout: y = scale*((conv(x, w) + b)(.)m), bias inside
                TensorT<S> factors = mask;
                for (S& v : factors.data) v *= scale;
                detail::scale_channels_inplace(dz, factors);
                g.biases[w] = detail::channel_sums(dz);
            } else {
                g.biases[w] = detail::channel_sums(dz);
            }
            TensorT<S> dz_rows = chw_to_rows(dz);
            TensorT<S> cols = im2col(x, geom);
            TensorT<S> dw_cols = matmul_at_b(cols, dz_rows);
            TensorT<S> dw = cols_as_kernel(dw_cols, geom.c_out, geom.c_in, geom.kh, geom.kw);
            g.weights[w] = mask.rank() == 4 ? hadamard(dw, mask) : dw;
            TensorT<S> dcols = matmul_a_bt(dz_rows, kernel_as_cols(w_eff));
            dy = col2im(dcols, geom);
            break;
        }
        }
    }

    if (weight_decay != 0.0) {
        for (std::size_t i = 0; i < net.weights.size(); ++i) {
            const S k = static_cast<S>(2.0 * weight_decay);
            for (std::size_t j = 0; j < g.weights[i].data.size(); ++j)
                g.weights[i].data[j] += k * net.weights[i].data[j];
        }
    }
    return g;
}

// v <- momentum*v - lr*grad; w <- w + momentum*v - lr*grad.
template <class S>
void sgd_nesterov_step(TensorT<S>& w, const TensorT<S>& grad, TensorT<S>& velocity, double lr, double momentum) {
    if (!w.same_shape(grad) || !w.same_shape(velocity))
        throw_dimension("optimizer tensors disagree in shape");
    const S l = static_cast<S>(lr), m = static_cast<S>(momentum);
    for (std::size_t i = 0; i < w.data.size(); ++i) {
        const S v = m * velocity.data[i] - l * grad.data[i];
        velocity.data[i] = v;
        w.data[i] += m * v - l * grad.data[i];
    }
}

template <class S>
struct OptimizerState {
    std::vector<TensorT<S>> w_vel, b_vel;

    static OptimizerState zeros_like(const NetworkT<S>& net) {
        OptimizerState s;
        for (std::size_t i = 0; i < net.weights.size(); ++i) {
            s.w_vel.emplace_back(net.weights[i].shape);
            s.b_vel.emplace_back(net.biases[i].shape);
        }
        return s;
    }
};

// Integer translation by (dx, dy) drawn uniformly from [-shift_max, shift_max]
// (zero fill at the exposed border), then horizontal mirror with probability
// flip_prob. Draw order per image: dx, dy, flip; all three are always drawn
// so the stream stays aligned whatever the parameters.
Tensor augment(const Tensor& image, int shift_max, double flip_prob, RngStream& stream);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_accuracy = -1.0;  // -1 when no validation set was given
    double lr_end = 0.0;
};

struct FitResult {
    std::vector<EpochStats> epochs;
    long long steps = 0;
};

// Shuffled mini-batch training: augment, one fresh mask set per batch on the
// layers past lambda_frozen_train, loss_mc, backprop, Nesterov step on the
// lr_at schedule. Bit-reproducible from cfg.seed. Aborts with a numeric error
// if the loss stops being finite.
FitResult fit(Network& net, const Dataset& train_set, const Dataset* val_set, const TrainConfig& cfg);

// Deterministic single-pass accuracy, batched to bound memory.
double deterministic_accuracy(const Network& net, const Dataset& ds, int batch_size);

}  // namespace sdc
