#include "network.hpp"

#include <json.hpp>

#include <set>

namespace sdc {

using nlohmann::json;

const char* layer_kind_name(LayerKind k) {
    switch (k) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool2: return "maxpool2";
    case LayerKind::flatten: return "flatten";
    case LayerKind::softmax: return "softmax";
    }
    return "unknown";
}

const char* mask_mode_name(MaskMode m) {
    switch (m) {
    case MaskMode::dropconnect: return "dropconnect";
    case MaskMode::dropout: return "dropout";
    case MaskMode::deterministic: return "deterministic";
    }
    return "unknown";
}

const char* scale_mode_name(ScaleMode m) { return m == ScaleMode::inverted ? "inverted" : "none"; }

MaskMode mask_mode_from_name(const std::string& name) {
    if (name == "dropconnect") return MaskMode::dropconnect;
    if (name == "dropout") return MaskMode::dropout;
    if (name == "deterministic") return MaskMode::deterministic;
    throw_config("unknown mask mode '" + name + "' (expected dropconnect, dropout, or deterministic)");
}

ScaleMode scale_mode_from_name(const std::string& name) {
    if (name == "inverted") return ScaleMode::inverted;
    if (name == "none") return ScaleMode::none;
    throw_config("unknown scale mode '" + name + "' (expected inverted or none)");
}

std::vector<int> LayerSpec::weight_shape() const {
    if (kind == LayerKind::dense) return {in_dim, out_dim};
    if (kind == LayerKind::conv2d) return {out_channels, in_channels, kernel_h, kernel_w};
    return {};
}

std::vector<int> LayerSpec::bias_shape() const {
    if (kind == LayerKind::dense) return {out_dim};
    if (kind == LayerKind::conv2d) return {out_channels};
    return {};
}

LayerSpec LayerSpec::dense(int in_dim, int out_dim) {
    LayerSpec s;
    s.kind = LayerKind::dense;
    s.in_dim = in_dim;
    s.out_dim = out_dim;
    return s;
}

LayerSpec LayerSpec::conv2d(int in_channels, int out_channels, int kh, int kw, int stride, int pad) {
    LayerSpec s;
    s.kind = LayerKind::conv2d;
    s.in_channels = in_channels;
    s.out_channels = out_channels;
    s.kernel_h = kh;
    s.kernel_w = kw;
    s.stride = stride;
    s.pad = pad;
    return s;
}

LayerSpec LayerSpec::activation(LayerKind kind) {
    LayerSpec s;
    s.kind = kind;
    return s;
}

std::vector<std::vector<int>> activation_shapes(const std::vector<LayerSpec>& layers,
                                                const std::vector<int>& input_shape) {
    std::vector<std::vector<int>> shapes;
    shapes.reserve(layers.size());
    std::vector<int> cur = input_shape;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        const std::string where = "layer " + std::to_string(i) + " (" + layer_kind_name(l.kind) + ")";
        switch (l.kind) {
        case LayerKind::dense: {
            if (cur.size() != 1)
                throw_dimension(where + " needs a flat input, got " + shape_str(cur) + "; insert a flatten layer");
            if (cur[0] != l.in_dim)
                throw_dimension(where + " expects fan-in " + std::to_string(l.in_dim) + ", got " + shape_str(cur));
            cur = {l.out_dim};
            break;
        }
        case LayerKind::conv2d: {
            if (cur.size() != 3) throw_dimension(where + " needs a [c,h,w] input, got " + shape_str(cur));
            if (cur[0] != l.in_channels)
                throw_dimension(where + " expects " + std::to_string(l.in_channels) + " input channels, got " +
                                shape_str(cur));
            const int num_h = cur[1] + 2 * l.pad - l.kernel_h;
            const int num_w = cur[2] + 2 * l.pad - l.kernel_w;
            if (num_h < 0 || num_w < 0 || num_h % l.stride != 0 || num_w % l.stride != 0)
                throw_dimension(where + " output size is not a positive integer for input " + shape_str(cur));
            cur = {l.out_channels, num_h / l.stride + 1, num_w / l.stride + 1};
            break;
        }
        case LayerKind::relu:
            break;
        case LayerKind::maxpool2: {
            if (cur.size() != 3) throw_dimension(where + " needs a [c,h,w] input, got " + shape_str(cur));
            if (cur[1] < 2 || cur[2] < 2) throw_dimension(where + " input smaller than the 2x2 window: " + shape_str(cur));
            cur = {cur[0], cur[1] / 2, cur[2] / 2};
            break;
        }
        case LayerKind::flatten: {
            int n = 1;
            for (int d : cur) n *= d;
            cur = {n};
            break;
        }
        case LayerKind::softmax: {
            if (cur.size() != 1) throw_dimension(where + " needs a flat input, got " + shape_str(cur));
            break;
        }
        }
        shapes.push_back(cur);
    }
    return shapes;
}

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& context) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw_config(context + ": unknown key '" + it.key() + "'");
}

int require_int(const json& obj, const std::string& key, const std::string& context) {
    if (!obj.contains(key)) throw_config(context + ": missing key '" + key + "'");
    if (!obj[key].is_number_integer()) throw_config(context + ": key '" + key + "' must be an integer");
    return obj[key].get<int>();
}

LayerSpec parse_layer(const json& obj, std::vector<int>& cur, std::size_t index) {
    const std::string where = "architecture layer " + std::to_string(index);
    if (!obj.is_object() || !obj.contains("kind") || !obj["kind"].is_string())
        throw_config(where + ": each layer needs a string 'kind'");
    const std::string kind = obj["kind"].get<std::string>();
    LayerSpec spec;
    if (kind == "dense") {
        reject_unknown_keys(obj, {"kind", "in", "out"}, where);
        if (cur.size() != 1) throw_config(where + ": dense needs a flat input; insert a flatten layer first");
        int in_dim = obj.contains("in") ? require_int(obj, "in", where) : cur[0];
        spec = LayerSpec::dense(in_dim, require_int(obj, "out", where));
    } else if (kind == "conv2d") {
        reject_unknown_keys(obj, {"kind", "in_channels", "out_channels", "kernel", "stride", "pad"}, where);
        if (cur.size() != 3) throw_config(where + ": conv2d needs a [c,h,w] input");
        int in_c = obj.contains("in_channels") ? require_int(obj, "in_channels", where) : cur[0];
        int out_c = require_int(obj, "out_channels", where);
        int kh = 3, kw = 3;
        if (obj.contains("kernel")) {
            if (obj["kernel"].is_number_integer()) {
                kh = kw = obj["kernel"].get<int>();
            } else if (obj["kernel"].is_array() && obj["kernel"].size() == 2) {
                kh = obj["kernel"][0].get<int>();
                kw = obj["kernel"][1].get<int>();
            } else {
                throw_config(where + ": 'kernel' must be an integer or [kh,kw]");
            }
        }
        int stride = obj.contains("stride") ? require_int(obj, "stride", where) : 1;
        int pad = obj.contains("pad") ? require_int(obj, "pad", where) : 0;
        if (kh <= 0 || kw <= 0 || stride <= 0 || pad < 0 || out_c <= 0)
            throw_config(where + ": conv2d hyperparameters out of range");
        spec = LayerSpec::conv2d(in_c, out_c, kh, kw, stride, pad);
    } else if (kind == "relu" || kind == "maxpool2" || kind == "flatten" || kind == "softmax") {
        reject_unknown_keys(obj, {"kind"}, where);
        spec = LayerSpec::activation(kind == "relu"       ? LayerKind::relu
                                     : kind == "maxpool2" ? LayerKind::maxpool2
                                     : kind == "flatten"  ? LayerKind::flatten
                                                          : LayerKind::softmax);
    } else {
        throw_config(where + ": unknown layer kind '" + kind + "'");
    }
    // advance the running shape so later layers can infer their fan-in
    cur = activation_shapes({spec}, cur).back();
    return spec;
}

std::vector<int> parse_input_shape(const json& arch) {
    if (!arch.contains("input") || !arch["input"].is_array() || arch["input"].empty())
        throw_config("architecture: missing 'input' shape array");
    std::vector<int> shape;
    for (const auto& v : arch["input"]) {
        if (!v.is_number_integer() || v.get<int>() <= 0)
            throw_config("architecture: 'input' entries must be positive integers");
        shape.push_back(v.get<int>());
    }
    if (shape.size() != 1 && shape.size() != 3)
        throw_config("architecture: 'input' must be [d] or [c,h,w]");
    return shape;
}

}  // namespace

std::string default_cnn_arch_json(int classes, int channels, int height, int width) {
    json arch;
    arch["input"] = {channels, height, width};
    arch["layers"] = json::array({
        {{"kind", "conv2d"}, {"out_channels", 16}, {"kernel", 3}},
        {{"kind", "relu"}},
        {{"kind", "maxpool2"}},
        {{"kind", "conv2d"}, {"out_channels", 32}, {"kernel", 3}},
        {{"kind", "relu"}},
        {{"kind", "maxpool2"}},
        {{"kind", "flatten"}},
        {{"kind", "dense"}, {"out", 128}},
        {{"kind", "relu"}},
        {{"kind", "dense"}, {"out", classes}},
        {{"kind", "softmax"}},
    });
    return arch.dump();
}

Network network_from_arch_json(const std::string& json_text, std::uint64_t init_seed) {
    json arch;
    try {
        arch = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw_config(std::string("architecture JSON is malformed: ") + e.what());
    }
    if (!arch.is_object()) throw_config("architecture must be a JSON object");

    if (arch.contains("preset")) {
        reject_unknown_keys(arch, {"preset", "input", "classes"}, "architecture");
        const std::string preset = arch["preset"].get<std::string>();
        if (preset != "default_cnn") throw_config("unknown architecture preset '" + preset + "'");
        std::vector<int> in = parse_input_shape(arch);
        if (in.size() != 3) throw_config("preset default_cnn needs a [c,h,w] input");
        int classes = arch.contains("classes") ? require_int(arch, "classes", "architecture") : 10;
        if (classes < 2) throw_config("architecture: 'classes' must be at least 2");
        return network_from_arch_json(default_cnn_arch_json(classes, in[0], in[1], in[2]), init_seed);
    }

    reject_unknown_keys(arch, {"input", "layers"}, "architecture");
    Network net;
    net.input_shape = parse_input_shape(arch);
    if (!arch.contains("layers") || !arch["layers"].is_array() || arch["layers"].empty())
        throw_config("architecture: missing non-empty 'layers' array");
    std::vector<int> cur = net.input_shape;
    std::size_t index = 0;
    for (const auto& lj : arch["layers"]) net.layers.push_back(parse_layer(lj, cur, index++));

    for (const LayerSpec& l : net.layers) {
        if (!l.weight_bearing()) continue;
        net.weights.emplace_back(l.weight_shape());
        net.biases.emplace_back(l.bias_shape());
    }
    init_weights(net, init_seed);
    validate_network(net);
    return net;
}

void init_weights(Network& net, std::uint64_t seed) {
    std::size_t wi = 0;
    for (const LayerSpec& l : net.layers) {
        if (!l.weight_bearing()) continue;
        const int fan_in = l.kind == LayerKind::dense ? l.in_dim : l.in_channels * l.kernel_h * l.kernel_w;
        const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        RngStream stream(tagged_seed(seed, StreamTag::init), wi, 0);
        for (float& v : net.weights[wi].data) v = static_cast<float>(stddev * stream.next_normal());
        for (float& v : net.biases[wi].data) v = 0.0f;
        ++wi;
    }
}

}  // namespace sdc
