#pragma once

#include <cstdint>
#include <vector>

#include "kernels.hpp"
#include "network.hpp"
#include "rng.hpp"

namespace sdc {

enum class Activation { identity, relu, softmax };

// Bernoulli keep/drop mask: each element is 0 with probability drop_prob.
// Elements are drawn in row-major order from the given stream.
template <class S>
TensorT<S> sample_mask(const std::vector<int>& shape, double drop_prob, RngStream& stream) {
    if (drop_prob < 0.0 || drop_prob > 1.0)
        throw_config("drop probability must lie in [0,1], got " + std::to_string(drop_prob));
    TensorT<S> mask(shape);
    for (S& v : mask.data) v = stream.next_uniform() < drop_prob ? S(0) : S(1);
    return mask;
}

inline double inverted_scale(double drop_prob) { return drop_prob < 1.0 ? 1.0 / (1.0 - drop_prob) : 1.0; }

inline double plan_scale(const MaskPlan& plan) {
    return plan.scale_mode == ScaleMode::inverted ? inverted_scale(plan.drop_prob) : 1.0;
}

template <class S>
TensorT<S> apply_activation(TensorT<S> y, Activation act) {
    switch (act) {
    case Activation::identity: return y;
    case Activation::relu: return relu(y);
    case Activation::softmax: return softmax(y);
    }
    return y;
}

namespace detail {

// y = scale * z + bias, broadcast over the trailing feature axis (dense) or
// the channel axis (conv).
template <class S>
void scale_and_bias(TensorT<S>& z, S scale, const TensorT<S>& bias, bool conv) {
    if (conv) {
        const int batch = z.dim(0), c = z.dim(1);
        const std::size_t hw = static_cast<std::size_t>(z.dim(2)) * z.dim(3);
        S* p = z.ptr();
        for (int b = 0; b < batch; ++b)
            for (int cc = 0; cc < c; ++cc) {
                const S bv = bias.data[static_cast<std::size_t>(cc)];
                S* plane = p + (static_cast<std::size_t>(b) * c + cc) * hw;
                for (std::size_t i = 0; i < hw; ++i) plane[i] = scale * plane[i] + bv;
            }
    } else {
        const int n = z.dim(0), c = z.dim(1);
        S* p = z.ptr();
        for (int i = 0; i < n; ++i) {
            S* row = p + static_cast<std::size_t>(i) * c;
            for (int j = 0; j < c; ++j) row[j] = scale * row[j] + bias.data[static_cast<std::size_t>(j)];
        }
    }
}

template <class S>
TensorT<S> linear_forward(const TensorT<S>& x, const TensorT<S>& w, int stride, int pad) {
    if (w.rank() == 2) return matmul(x, w);
    return conv2d(x, w, stride, pad);
}

}  // namespace detail

template <class S>
TensorT<S> hadamard(const TensorT<S>& a, const TensorT<S>& b) {
    if (a.shape != b.shape)
        throw_dimension("elementwise product shape mismatch: " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    TensorT<S> out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
    return out;
}

// y = act(scale * (x . (w (.) mask)) + bias); bias is never masked.
// w rank 2 selects the dense path, rank 4 the conv path (per-element kernel mask).
template <class S>
TensorT<S> dropconnect_forward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& bias,
                               const TensorT<S>& mask, S scale, Activation act, int stride = 1, int pad = 0) {
    if (mask.shape != w.shape)
        throw_dimension("dropconnect mask shape " + shape_str(mask.shape) + " must equal weight shape " +
                        shape_str(w.shape));
    TensorT<S> z = detail::linear_forward(x, hadamard(w, mask), stride, pad);
    detail::scale_and_bias(z, scale, bias, w.rank() == 4);
    return apply_activation(std::move(z), act);
}

// y = act(scale * ((x . w + bias) (.) neuron_mask)); whole output neurons or
// channels are zeroed.
template <class S>
TensorT<S> dropout_forward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& bias,
                           const TensorT<S>& neuron_mask, S scale, Activation act, int stride = 1, int pad = 0) {
    const bool conv = w.rank() == 4;
    const int out_units = conv ? w.dim(0) : w.dim(1);
    if (neuron_mask.rank() != 1 || neuron_mask.dim(0) != out_units)
        throw_dimension("dropout mask length " + shape_str(neuron_mask.shape) + " must match output width " +
                        std::to_string(out_units));
    TensorT<S> z = detail::linear_forward(x, w, stride, pad);
    detail::scale_and_bias(z, S(1), bias, conv);
    if (conv) {
        const int batch = z.dim(0), c = z.dim(1);
        const std::size_t hw = static_cast<std::size_t>(z.dim(2)) * z.dim(3);
        for (int b = 0; b < batch; ++b)
            for (int cc = 0; cc < c; ++cc) {
                const S m = neuron_mask.data[static_cast<std::size_t>(cc)] * scale;
                S* plane = z.ptr() + (static_cast<std::size_t>(b) * c + cc) * hw;
                for (std::size_t i = 0; i < hw; ++i) plane[i] *= m;
            }
    } else {
        const int n = z.dim(0), c = z.dim(1);
        for (int i = 0; i < n; ++i) {
            S* row = z.ptr() + static_cast<std::size_t>(i) * c;
            for (int j = 0; j < c; ++j) row[j] *= neuron_mask.data[static_cast<std::size_t>(j)] * scale;
        }
    }
    return apply_activation(std::move(z), act);
}

// Everything the backward pass needs from one forward pass.
template <class S>
struct ForwardTrace {
    std::vector<TensorT<S>> inputs;              // input tensor of each layer
    std::vector<std::vector<int>> pool_argmax;   // per layer; empty unless maxpool2
    std::vector<TensorT<S>> masks;               // per weight layer; empty tensor if unmasked
    std::vector<S> scales;                       // per weight layer
    TensorT<S> output;
};

// Runs layers [layer_begin, layer_end). Weight-bearing layers are numbered by
// absolute index across the whole network; layer j draws its mask from
// rng_stream(seed, pass_index, j) iff j >= plan.lambda_frozen and the plan is
// stochastic. Frozen layers run with unmasked, unscaled weights.
template <class S>
TensorT<S> forward_range(const NetworkT<S>& net, TensorT<S> x, int layer_begin, int layer_end, const MaskPlan& plan,
                         std::uint64_t seed, int pass_index, ForwardTrace<S>* trace = nullptr) {
    int weight_index = 0;
    for (int i = 0; i < layer_begin; ++i)
        if (net.layers[static_cast<std::size_t>(i)].weight_bearing()) ++weight_index;

    if (trace) {
        trace->inputs.clear();
        trace->pool_argmax.clear();
        trace->masks.assign(net.weights.size(), {});
        trace->scales.assign(net.weights.size(), S(1));
    }

    const S scale = static_cast<S>(plan_scale(plan));
    for (int i = layer_begin; i < layer_end; ++i) {
        const LayerSpec& layer = net.layers[static_cast<std::size_t>(i)];
        if (trace) {
            trace->inputs.push_back(x);
            trace->pool_argmax.emplace_back();
        }
        switch (layer.kind) {
        case LayerKind::dense:
        case LayerKind::conv2d: {
            const TensorT<S>& w = net.weights[static_cast<std::size_t>(weight_index)];
            const TensorT<S>& b = net.biases[static_cast<std::size_t>(weight_index)];
            const bool stochastic = plan.mode != MaskMode::deterministic && weight_index >= plan.lambda_frozen;
            if (!stochastic) {
                TensorT<S> z = detail::linear_forward(x, w, layer.stride, layer.pad);
                detail::scale_and_bias(z, S(1), b, layer.kind == LayerKind::conv2d);
                x = std::move(z);
            } else {
                RngStream stream = rng_stream(seed, static_cast<std::uint64_t>(pass_index),
                                              static_cast<std::uint64_t>(weight_index));
                if (plan.mode == MaskMode::dropconnect) {
                    TensorT<S> mask = sample_mask<S>(w.shape, plan.drop_prob, stream);
                    x = dropconnect_forward(x, w, b, mask, scale, Activation::identity, layer.stride, layer.pad);
                    if (trace) {
                        trace->masks[static_cast<std::size_t>(weight_index)] = std::move(mask);
                        trace->scales[static_cast<std::size_t>(weight_index)] = scale;
                    }
                } else {
                    const int out_units = layer.kind == LayerKind::dense ? layer.out_dim : layer.out_channels;
                    TensorT<S> mask = sample_mask<S>({out_units}, plan.drop_prob, stream);
                    x = dropout_forward(x, w, b, mask, scale, Activation::identity, layer.stride, layer.pad);
                    if (trace) {
                        trace->masks[static_cast<std::size_t>(weight_index)] = std::move(mask);
                        trace->scales[static_cast<std::size_t>(weight_index)] = scale;
                    }
                }
            }
            ++weight_index;
            break;
        }
        case LayerKind::relu:
            x = relu(x);
            break;
        case LayerKind::maxpool2: {
            std::vector<int>* arg = trace ? &trace->pool_argmax.back() : nullptr;
            x = maxpool2(x, arg);
            break;
        }
        case LayerKind::flatten: {
            int flat = 1;
            for (int d = 1; d < x.rank(); ++d) flat *= x.dim(d);
            x = x.reshaped({x.dim(0), flat});
            break;
        }
        case LayerKind::softmax:
            x = softmax_rows(x);
            break;
        }
    }
    if (trace) trace->output = x;
    return x;
}

// One stochastic (or deterministic) pass through the whole network; returns
// the softmax probability rows [batch, classes].
template <class S>
TensorT<S> network_forward(const NetworkT<S>& net, const TensorT<S>& x, const MaskPlan& plan, std::uint64_t seed,
                           int pass_index, ForwardTrace<S>* trace = nullptr) {
    validate_plan(plan, net);
    std::vector<int> expect = net.input_shape;
    expect.insert(expect.begin(), x.dim(0));
    if (x.shape != expect)
        throw_dimension("input shape " + shape_str(x.shape) + " does not match network input " +
                        shape_str(net.input_shape));
    return forward_range(net, x, 0, net.n_layers(), plan, seed, pass_index, trace);
}

// Wraps a single example into a batch of one.
template <class S>
TensorT<S> single_input_batch(const TensorT<S>& image) {
    std::vector<int> shape = image.shape;
    shape.insert(shape.begin(), 1);
    return image.reshaped(shape);
}

}  // namespace sdc
