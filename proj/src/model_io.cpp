#include "model_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "error.hpp"

namespace sdc {
namespace {

constexpr char kMagic[4] = {'S', 'D', 'C', 'M'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw_io("cannot open " + path + " for writing");
    }
    void u8(std::uint8_t v) { put(&v, 1); }
    void u32(std::uint32_t v) {
        std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                             static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
        put(b, 4);
    }
    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }
    void raw(const char* p, std::size_t n) { put(p, n); }
    void close() {
        out_.close();
        if (!out_) throw_io("write to " + path_ + " failed");
    }

private:
    void put(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out_) throw_io("write to " + path_ + " failed");
    }
    std::string path_;
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw_io("cannot open " + path + " for reading");
    }
    std::size_t offset() const { return offset_; }
    std::uint8_t u8() {
        std::uint8_t v;
        get(&v, 1, "u8");
        return v;
    }
    std::uint32_t u32() {
        std::uint8_t b[4];
        get(b, 4, "u32");
        return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
               static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
    }
    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    void raw(char* p, std::size_t n, const char* what) { get(p, n, what); }
    void expect_eof() {
        char c;
        in_.read(&c, 1);
        if (!in_.eof())
            throw_data(path_ + ": trailing bytes at offset " + std::to_string(offset_));
    }
    [[noreturn]] void fail(const std::string& what, std::size_t at) const {
        throw_data(path_ + ": " + what + " at offset " + std::to_string(at));
    }

private:
    void get(void* p, std::size_t n, const char* what) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw_data(path_ + ": truncated file, expected " + what + " at offset " + std::to_string(offset_));
        offset_ += n;
    }
    std::string path_;
    std::ifstream in_;
    std::size_t offset_ = 0;
};

std::uint32_t checked_u32(int v, const char* what) {
    if (v < 0) throw_data(std::string("negative ") + what + " cannot be serialized");
    return static_cast<std::uint32_t>(v);
}

int checked_int(Reader& r, std::uint32_t v, const char* what, std::size_t at) {
    if (v > 0x7fffffffu) r.fail(std::string("oversized ") + what, at);
    return static_cast<int>(v);
}

}  // namespace

void save_model(const Network& net, const std::string& path) {
    validate_network(net);
    Writer w(path);
    w.raw(kMagic, 4);
    w.u32(kVersion);
    if (net.input_shape.size() == 3) {
        w.u32(checked_u32(net.input_shape[0], "input channel"));
        w.u32(checked_u32(net.input_shape[1], "input height"));
        w.u32(checked_u32(net.input_shape[2], "input width"));
    } else {
        w.u32(0);
        w.u32(0);
        w.u32(checked_u32(net.input_shape[0], "input width"));
    }
    w.u32(checked_u32(net.n_layers(), "layer count"));
    for (const LayerSpec& layer : net.layers) {
        w.u8(static_cast<std::uint8_t>(layer.kind));
        switch (layer.kind) {
        case LayerKind::dense:
            w.u32(checked_u32(layer.in_dim, "dense in"));
            w.u32(checked_u32(layer.out_dim, "dense out"));
            break;
        case LayerKind::conv2d:
            w.u32(checked_u32(layer.in_channels, "conv in_channels"));
            w.u32(checked_u32(layer.out_channels, "conv out_channels"));
            w.u32(checked_u32(layer.kernel_h, "conv kernel_h"));
            w.u32(checked_u32(layer.kernel_w, "conv kernel_w"));
            w.u32(checked_u32(layer.stride, "conv stride"));
            w.u32(checked_u32(layer.pad, "conv pad"));
            break;
        default:
            break;
        }
    }
    for (std::size_t i = 0; i < net.weights.size(); ++i) {
        for (float v : net.weights[i].data) w.f32(v);
        for (float v : net.biases[i].data) w.f32(v);
    }
    w.close();
}

Network load_model(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.raw(magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) r.fail("bad magic, expected \"SDCM\"", 0);
    std::size_t at = r.offset();
    std::uint32_t version = r.u32();
    if (version != kVersion) r.fail("unsupported version " + std::to_string(version), at);

    std::uint32_t c = r.u32(), h = r.u32(), width = r.u32();
    Network net;
    if (c == 0 && h == 0)
        net.input_shape = {checked_int(r, width, "input width", r.offset() - 4)};
    else
        net.input_shape = {checked_int(r, c, "input channel", r.offset() - 12),
                           checked_int(r, h, "input height", r.offset() - 8),
                           checked_int(r, width, "input width", r.offset() - 4)};

    at = r.offset();
    std::uint32_t count = r.u32();
    if (count == 0 || count > 4096) r.fail("implausible layer count " + std::to_string(count), at);
    net.layers.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        at = r.offset();
        std::uint8_t tag = r.u8();
        LayerSpec layer;
        switch (tag) {
        case static_cast<std::uint8_t>(LayerKind::dense): {
            int in = checked_int(r, r.u32(), "dense in", at);
            int out = checked_int(r, r.u32(), "dense out", at);
            layer = LayerSpec::dense(in, out);
            break;
        }
        case static_cast<std::uint8_t>(LayerKind::conv2d): {
            int in_c = checked_int(r, r.u32(), "conv in_channels", at);
            int out_c = checked_int(r, r.u32(), "conv out_channels", at);
            int kh = checked_int(r, r.u32(), "conv kernel_h", at);
            int kw = checked_int(r, r.u32(), "conv kernel_w", at);
            int stride = checked_int(r, r.u32(), "conv stride", at);
            int pad = checked_int(r, r.u32(), "conv pad", at);
            layer = LayerSpec::conv2d(in_c, out_c, kh, kw, stride, pad);
            break;
        }
        case static_cast<std::uint8_t>(LayerKind::relu):
        case static_cast<std::uint8_t>(LayerKind::maxpool2):
        case static_cast<std::uint8_t>(LayerKind::flatten):
        case static_cast<std::uint8_t>(LayerKind::softmax):
            layer = LayerSpec::activation(static_cast<LayerKind>(tag));
            break;
        default:
            r.fail("unknown layer tag " + std::to_string(tag), at);
        }
        net.layers.push_back(layer);
    }

    std::vector<std::vector<int>> shapes;
    try {
        shapes = activation_shapes(net.layers, net.input_shape);
    } catch (const Error& e) {
        throw_data(path + ": inconsistent layer geometry: " + e.what());
    }
    (void)shapes;

    for (const LayerSpec& layer : net.layers) {
        if (!layer.weight_bearing()) continue;
        Tensor w(layer.weight_shape());
        Tensor b(layer.bias_shape());
        for (float& v : w.data) v = r.f32();
        for (float& v : b.data) v = r.f32();
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    r.expect_eof();
    try {
        validate_network(net);
    } catch (const Error& e) {
        throw_data(path + ": " + e.what());
    }
    return net;
}

std::string model_summary_json(const Network& net) {
    nlohmann::json j;
    j["input"] = net.input_shape;
    j["classes"] = net.n_classes();
    j["weight_layers"] = net.n_weight_layers();
    nlohmann::json layers = nlohmann::json::array();
    auto shapes = activation_shapes(net.layers, net.input_shape);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        nlohmann::json rec;
        rec["kind"] = layer_kind_name(net.layers[i].kind);
        rec["output"] = shapes[i];
        layers.push_back(rec);
    }
    j["layers"] = layers;
    return j.dump(2);
}

}  // namespace sdc
