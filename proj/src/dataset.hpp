#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace sdc {

struct Dataset {
    Tensor images;            // [n,1,h,w] or [n,d]
    std::vector<int> labels;  // one per image
    int classes = 0;
    int size() const { return images.rank() == 0 ? 0 : images.dim(0); }
};

// IDX binary pair (big-endian magic 0x00000803 for images, 0x00000801 for
// labels), pixels scaled to [0,1]. Malformed input reports the byte offset.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Writes a dataset as an IDX pair; pixels quantized to the nearest of 256
// levels. Images must be single-channel [n,1,h,w].
void save_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path);

// CSV with header "label,p0,p1,...", one row per image, pixels in [0,255]
// scaled down by 255. Images come back flat [n,d].
Dataset load_csv(const std::string& path);

enum class SynthKind { blobs, stripes, noise };

SynthKind synth_kind_from_name(const std::string& name);
const char* synth_kind_name(SynthKind k);

struct SynthSpec {
    SynthKind kind = SynthKind::blobs;
    int n = 0;
    int classes = 10;
    int image_size = 28;
};

// Deterministic in (spec, seed). blobs: one Gaussian bump per class, placed
// on a circle around the image center, with per-image position and amplitude
// jitter. stripes: an oriented bar through the center per class. noise:
// uniform pixels, all labeled 0, for OOD use.
Dataset synth_dataset(const SynthSpec& spec, std::uint64_t seed);

// Rows [start, start+count) of the image tensor as one batch.
Tensor batch_images(const Dataset& ds, int start, int count);
std::vector<int> batch_labels(const Dataset& ds, int start, int count);

// Reshapes images to [n, input_shape...]; element counts must agree.
Tensor shaped_images(const Dataset& ds, const std::vector<int>& input_shape);

}  // namespace sdc
