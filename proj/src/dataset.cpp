#include "dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>

#include "error.hpp"
#include "rng.hpp"

namespace sdc {
namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

class IdxReader {
public:
    explicit IdxReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw_io("cannot open " + path + " for reading");
    }
    std::uint32_t u32be(const char* what) {
        unsigned char b[4];
        read(b, 4, what);
        return static_cast<std::uint32_t>(b[0]) << 24 | static_cast<std::uint32_t>(b[1]) << 16 |
               static_cast<std::uint32_t>(b[2]) << 8 | static_cast<std::uint32_t>(b[3]);
    }
    void bytes(std::vector<unsigned char>& out, std::size_t n, const char* what) {
        out.resize(n);
        read(out.data(), n, what);
    }
    void expect_magic(std::uint32_t want) {
        std::uint32_t got = u32be("magic");
        if (got != want) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "bad magic 0x%08x (want 0x%08x) at offset 0", got, want);
            throw_data(path_ + ": " + buf);
        }
    }

private:
    void read(void* p, std::size_t n, const char* what) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw_data(path_ + ": truncated file, expected " + what + " at offset " + std::to_string(offset_));
        offset_ += n;
    }
    std::string path_;
    std::ifstream in_;
    std::size_t offset_ = 0;
};

void u32be_out(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    IdxReader img(images_path);
    img.expect_magic(kImageMagic);
    const std::uint32_t n = img.u32be("image count");
    const std::uint32_t rows = img.u32be("row count");
    const std::uint32_t cols = img.u32be("column count");
    if (n == 0 || rows == 0 || cols == 0)
        throw_data(images_path + ": empty dimension in header");
    if (rows > 4096 || cols > 4096 || n > 10'000'000)
        throw_data(images_path + ": implausible header dimensions");
    std::vector<unsigned char> pixels;
    img.bytes(pixels, static_cast<std::size_t>(n) * rows * cols, "pixel data");

    IdxReader lab(labels_path);
    lab.expect_magic(kLabelMagic);
    const std::uint32_t n_labels = lab.u32be("label count");
    if (n_labels != n)
        throw_data(labels_path + ": label count " + std::to_string(n_labels) + " does not match image count " +
                   std::to_string(n));
    std::vector<unsigned char> raw_labels;
    lab.bytes(raw_labels, n_labels, "label data");

    Dataset ds;
    ds.images = Tensor({static_cast<int>(n), 1, static_cast<int>(rows), static_cast<int>(cols)});
    for (std::size_t i = 0; i < pixels.size(); ++i) ds.images.data[i] = static_cast<float>(pixels[i]) / 255.0f;
    ds.labels.resize(n);
    int max_label = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
        ds.labels[i] = raw_labels[i];
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.classes = max_label + 1;
    return ds;
}

void save_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path) {
    if (ds.images.rank() != 4 || ds.images.dim(1) != 1)
        throw_data("IDX export needs single-channel [n,1,h,w] images, got " + shape_str(ds.images.shape));
    if (static_cast<std::size_t>(ds.size()) != ds.labels.size())
        throw_data("image/label count mismatch");
    for (int y : ds.labels)
        if (y < 0 || y > 255) throw_data("label " + std::to_string(y) + " does not fit one byte");

    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw_io("cannot open " + images_path + " for writing");
    u32be_out(img, kImageMagic);
    u32be_out(img, static_cast<std::uint32_t>(ds.size()));
    u32be_out(img, static_cast<std::uint32_t>(ds.images.dim(2)));
    u32be_out(img, static_cast<std::uint32_t>(ds.images.dim(3)));
    std::vector<unsigned char> pixels(ds.images.data.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const float v = std::clamp(ds.images.data[i], 0.0f, 1.0f);
        pixels[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
    img.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (!img) throw_io("write to " + images_path + " failed");

    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw_io("cannot open " + labels_path + " for writing");
    u32be_out(lab, kLabelMagic);
    u32be_out(lab, static_cast<std::uint32_t>(ds.size()));
    for (int y : ds.labels) {
        const char b = static_cast<char>(y);
        lab.write(&b, 1);
    }
    if (!lab) throw_io("write to " + labels_path + " failed");
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_io("cannot open " + path + " for reading");
    std::string line;
    if (!std::getline(in, line)) throw_data(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("label", 0) != 0)
        throw_data(path + ": header must start with \"label\", got \"" + line.substr(0, 20) + "\"");
    const std::size_t columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (columns < 2) throw_data(path + ": header has no pixel columns");
    const std::size_t d = columns - 1;

    std::vector<float> pixels;
    std::vector<int> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const char* p = line.data();
        const char* end = p + line.size();
        std::size_t field = 0;
        while (true) {
            const char* comma = std::find(p, end, ',');
            double value;
            auto [ptr, ec] = std::from_chars(p, comma, value);
            if (ec != std::errc() || ptr != comma)
                throw_data(path + ": line " + std::to_string(line_no) + ": bad number in field " +
                           std::to_string(field));
            if (field == 0) {
                if (value < 0 || value != std::floor(value))
                    throw_data(path + ": line " + std::to_string(line_no) + ": label must be a non-negative integer");
                labels.push_back(static_cast<int>(value));
            } else {
                pixels.push_back(static_cast<float>(value / 255.0));
            }
            ++field;
            if (comma == end) break;
            p = comma + 1;
        }
        if (field != columns)
            throw_data(path + ": line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                       " fields, got " + std::to_string(field));
    }
    if (labels.empty()) throw_data(path + ": no data rows");

    Dataset ds;
    ds.images = Tensor({static_cast<int>(labels.size()), static_cast<int>(d)}, std::move(pixels));
    ds.labels = std::move(labels);
    ds.classes = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
    return ds;
}

SynthKind synth_kind_from_name(const std::string& name) {
    if (name == "blobs") return SynthKind::blobs;
    if (name == "stripes") return SynthKind::stripes;
    if (name == "noise") return SynthKind::noise;
    throw_config("unknown synthetic dataset kind \"" + name + "\"");
}

const char* synth_kind_name(SynthKind k) {
    switch (k) {
    case SynthKind::blobs: return "blobs";
    case SynthKind::stripes: return "stripes";
    case SynthKind::noise: return "noise";
    }
    return "?";
}

Dataset synth_dataset(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.n < spec.classes) throw_config("synthetic dataset needs n >= classes");
    if (spec.classes < 1) throw_config("synthetic dataset needs at least one class");
    if (spec.image_size < 8) throw_config("synthetic image size must be >= 8");
    const int s = spec.image_size;
    Dataset ds;
    ds.images = Tensor({spec.n, 1, s, s});
    ds.labels.resize(static_cast<std::size_t>(spec.n));
    ds.classes = spec.classes;

    const double center = (s - 1) / 2.0;
    const double radius = 0.30 * s;
    const double sigma = 0.075 * s;
    const double jitter = 0.03 * s;
    const std::uint64_t root = tagged_seed(seed, StreamTag::synth);

    for (int i = 0; i < spec.n; ++i) {
        RngStream stream(root, static_cast<std::uint64_t>(i), 0);
        const int label = spec.kind == SynthKind::noise ? 0 : i % spec.classes;
        ds.labels[static_cast<std::size_t>(i)] = label;
        float* img = ds.images.ptr() + static_cast<std::size_t>(i) * s * s;
        switch (spec.kind) {
        case SynthKind::blobs: {
            const double angle = 2.0 * std::numbers::pi * label / spec.classes;
            const double cx = center + radius * std::cos(angle) + jitter * stream.next_normal();
            const double cy = center + radius * std::sin(angle) + jitter * stream.next_normal();
            const double amp = 0.8 + 0.4 * stream.next_uniform();
            for (int y = 0; y < s; ++y)
                for (int x = 0; x < s; ++x) {
                    const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                    const double v = amp * std::exp(-d2 / (2.0 * sigma * sigma));
                    img[y * s + x] = static_cast<float>(std::min(v, 1.0));
                }
            break;
        }
        case SynthKind::stripes: {
            const double angle = std::numbers::pi * label / spec.classes;
            const double offset = stream.next_normal();
            const double amp = 0.8 + 0.4 * stream.next_uniform();
            const double width = 0.06 * s;
            const double nx = -std::sin(angle), ny = std::cos(angle);
            for (int y = 0; y < s; ++y)
                for (int x = 0; x < s; ++x) {
                    const double d = nx * (x - center) + ny * (y - center) - offset;
                    const double v = amp * std::exp(-d * d / (2.0 * width * width));
                    img[y * s + x] = static_cast<float>(std::min(v, 1.0));
                }
            break;
        }
        case SynthKind::noise:
            for (int k = 0; k < s * s; ++k) img[k] = static_cast<float>(stream.next_uniform());
            break;
        }
    }
    return ds;
}

Tensor batch_images(const Dataset& ds, int start, int count) {
    if (start < 0 || count < 0 || start + count > ds.size())
        throw_data("batch range [" + std::to_string(start) + "," + std::to_string(start + count) +
                   ") outside dataset of " + std::to_string(ds.size()));
    std::vector<int> shape = ds.images.shape;
    shape[0] = count;
    Tensor out(shape);
    const std::size_t per = ds.images.data.size() / static_cast<std::size_t>(ds.size());
    std::copy_n(ds.images.data.begin() + static_cast<std::size_t>(start) * per, static_cast<std::size_t>(count) * per,
                out.data.begin());
    return out;
}

std::vector<int> batch_labels(const Dataset& ds, int start, int count) {
    if (start < 0 || count < 0 || start + count > ds.size())
        throw_data("batch range outside dataset");
    return {ds.labels.begin() + start, ds.labels.begin() + start + count};
}

Tensor shaped_images(const Dataset& ds, const std::vector<int>& input_shape) {
    std::vector<int> shape = input_shape;
    shape.insert(shape.begin(), ds.size());
    long long want = 1;
    for (int d : shape) want *= d;
    if (want != static_cast<long long>(ds.images.data.size()))
        throw_data("dataset images " + shape_str(ds.images.shape) + " cannot take input shape " +
                   shape_str(input_shape));
    return ds.images.reshaped(shape);
}

}  // namespace sdc
