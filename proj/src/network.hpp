#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace sdc {

enum class LayerKind : std::uint8_t { dense = 1, conv2d = 2, relu = 3, maxpool2 = 4, flatten = 5, softmax = 6 };

const char* layer_kind_name(LayerKind k);

struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    // dense
    int in_dim = 0;
    int out_dim = 0;
    // conv2d
    int in_channels = 0;
    int out_channels = 0;
    int kernel_h = 0;
    int kernel_w = 0;
    int stride = 1;
    int pad = 0;

    bool weight_bearing() const { return kind == LayerKind::dense || kind == LayerKind::conv2d; }

    std::vector<int> weight_shape() const;
    std::vector<int> bias_shape() const;

    static LayerSpec dense(int in_dim, int out_dim);
    static LayerSpec conv2d(int in_channels, int out_channels, int kh, int kw, int stride = 1, int pad = 0);
    static LayerSpec activation(LayerKind kind);
};

// Output shape (batch dimension excluded) of every layer given the network
// input shape; throws a dimension error on any incompatibility.
std::vector<std::vector<int>> activation_shapes(const std::vector<LayerSpec>& layers,
                                                const std::vector<int>& input_shape);

template <class S>
struct NetworkT {
    std::vector<int> input_shape;  // [c,h,w] or [d]
    std::vector<LayerSpec> layers;
    std::vector<TensorT<S>> weights;  // one per weight-bearing layer, in layer order
    std::vector<TensorT<S>> biases;

    int n_weight_layers() const { return static_cast<int>(weights.size()); }
    int n_layers() const { return static_cast<int>(layers.size()); }

    int n_classes() const {
        auto shapes = activation_shapes(layers, input_shape);
        return shapes.empty() ? 0 : shapes.back().back();
    }
};

using Network = NetworkT<float>;
using NetworkD = NetworkT<double>;

enum class MaskMode { dropconnect, dropout, deterministic };
enum class ScaleMode { inverted, none };

const char* mask_mode_name(MaskMode m);
const char* scale_mode_name(ScaleMode m);
MaskMode mask_mode_from_name(const std::string& name);
ScaleMode scale_mode_from_name(const std::string& name);

struct MaskPlan {
    double drop_prob = 0.0;
    int lambda_frozen = 0;
    MaskMode mode = MaskMode::deterministic;
    ScaleMode scale_mode = ScaleMode::inverted;
};

template <class S>
void validate_plan(const MaskPlan& plan, const NetworkT<S>& net) {
    if (plan.drop_prob < 0.0 || plan.drop_prob > 1.0)
        throw_config("drop_prob must lie in [0,1], got " + std::to_string(plan.drop_prob));
    if (plan.lambda_frozen < 0 || plan.lambda_frozen > net.n_weight_layers())
        throw_config("lambda_frozen must lie in [0," + std::to_string(net.n_weight_layers()) + "], got " +
                     std::to_string(plan.lambda_frozen));
}

// Structural checks shared by the arch builder and the model loader: shapes
// consistent, weights present for every weight-bearing layer, softmax last.
template <class S>
void validate_network(const NetworkT<S>& net) {
    auto shapes = activation_shapes(net.layers, net.input_shape);  // throws on mismatch
    std::size_t wi = 0;
    for (const LayerSpec& layer : net.layers) {
        if (!layer.weight_bearing()) continue;
        if (wi >= net.weights.size()) throw_dimension("network is missing weight tensors");
        if (net.weights[wi].shape != layer.weight_shape())
            throw_dimension("weight tensor shape " + shape_str(net.weights[wi].shape) + " does not match layer " +
                            shape_str(layer.weight_shape()));
        if (net.biases[wi].shape != layer.bias_shape())
            throw_dimension("bias tensor shape mismatch for layer " + std::string(layer_kind_name(layer.kind)));
        ++wi;
    }
    if (wi != net.weights.size()) throw_dimension("network carries more weight tensors than weight-bearing layers");
    if (net.layers.empty() || net.layers.back().kind != LayerKind::softmax)
        throw_config("network must end with a softmax layer");
}

// Builds a randomly initialized network from an architecture description:
//   {"input":[c,h,w], "layers":[{"kind":"conv2d","out_channels":16,...}, ...]}
// or {"preset":"default_cnn", "input":[c,h,w], "classes":n}
Network network_from_arch_json(const std::string& json_text, std::uint64_t init_seed);

// He-normal weights, zero biases, deterministic in seed.
void init_weights(Network& net, std::uint64_t seed);

std::string default_cnn_arch_json(int classes, int channels, int height, int width);

}  // namespace sdc
