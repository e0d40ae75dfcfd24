#pragma once

#include <string>

#include "camref/image.hpp"
#include "camref/manifest.hpp"

namespace camref {

// Desk-scale synthetic corpus: textured background, 1-3 solid contrasting
// shapes as ground truth, and a simulated CAM per class made of the blurred
// ground-truth plane plus off-object distractor blobs.
struct SynthSpec {
    int image_count = 20;
    int image_size = 128;
    int max_shapes = 3;          // shapes drawn per image: 1..max_shapes
    int texture_amplitude = 12;  // per-pixel background brightness jitter
    double cam_blur_sigma = 2.0; // 0 disables the blur (CAM == GT plane)
    int distractor_blob_count = 2;
    uint64_t rng_seed = 0;

    void validate() const;
};

// Class ids are fixed per shape kind.
constexpr int kClassDisk = 1;
constexpr int kClassRect = 2;
constexpr int kClassTriangle = 3;

// Writes images/, gt/, scores/, manifest.json, palette.json and classes.json
// under out_dir, all derived from the seed alone. Returns the manifest with
// the relative paths as written.
Manifest synth_generate(const SynthSpec& spec, const std::string& out_dir);

// Single-class fixture whose scores sit in two narrow bands around 0.2 and
// 0.8, with a visible decoy object scoring 0.25. By construction any
// refinement threshold in [0.3, 0.7] is optimal and thresholds outside
// strictly hurt, which pins the expected grid-search winner.
Manifest generate_bimodal_fixture(int image_count, int image_size, uint64_t seed,
                                  const std::string& out_dir);

}  // namespace camref
