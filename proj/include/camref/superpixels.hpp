#pragma once

#include <string>
#include <vector>

#include "camref/image.hpp"

namespace camref {

enum class SimplifyMethod { slic, quickshift };

struct SimplifyParams {
    SimplifyMethod method = SimplifyMethod::slic;
    int q = 32;                     // maximum cluster count after merging
    int slic_k = 256;               // initial seed count
    double slic_compactness = 10.0;
    int slic_iters = 10;
    double qs_kernel_size = 5.0;
    double qs_max_dist = 10.0;
    uint64_t rng_seed = 0;          // reserved for stochastic variants; the
                                    // methods below are fully deterministic

    void validate() const;
};

// Per-pixel segment ids, contiguous in [0, num_segments).
struct SegmentMap {
    int width = 0;
    int height = 0;
    std::vector<int> segments;
    int num_segments = 0;

    int at(int x, int y) const { return segments[size_t(y) * width + x]; }
};

// Local k-means over (L,a,b,x,y): grid seeds perturbed to the lowest-gradient
// pixel in a 3x3 window, distance sqrt(d_lab^2 + (compactness/S)^2 d_xy^2)
// with S = sqrt(w*h/k), search window 2Sx2S per seed. Connectivity is
// enforced on the result.
SegmentMap slic(const RasterImage& image, const SimplifyParams& params);

// Mode seeking: Gaussian Parzen density over joint (L,a,b,x,y) within a
// qs_max_dist spatial window; each pixel links to its nearest strictly-denser
// neighbor within joint distance qs_max_dist; trees of the resulting forest
// are the segments.
SegmentMap quickshift(const RasterImage& image, const SimplifyParams& params);

// Quickshift internals, exposed so the forest invariants can be checked.
struct QuickshiftForest {
    std::vector<double> density;
    std::vector<int> parent;  // linear index of the link target, -1 for roots
    SegmentMap segments;
};
QuickshiftForest quickshift_forest(const RasterImage& image, const SimplifyParams& params);

// Repeatedly merges the smallest segment into its 4-adjacent neighbor with
// the closest mean CIELAB color until at most q segments remain. All ties
// break toward lower segment id; ids are re-compacted at the end.
SegmentMap merge_to_cap(const RasterImage& image, const SegmentMap& seg, int q);

// Splits every label into its 4-connected components, then absorbs components
// smaller than (w*h)/(4*num_segments) into their largest 4-neighbor.
SegmentMap enforce_connectivity(const SegmentMap& seg);

// Replaces every pixel with its segment's mean RGB, rounded half-up.
RasterImage flatten(const RasterImage& image, const SegmentMap& seg);

// Full simplification pipeline: method -> enforce_connectivity -> merge_to_cap.
SegmentMap simplify(const RasterImage& image, const SimplifyParams& params);

// PGM when ids fit in a byte, otherwise "SEG1 <w> <h>\n" + little-endian
// 32-bit ids. load sniffs the magic.
void save_segment_map(const SegmentMap& seg, const std::string& path);
SegmentMap load_segment_map(const std::string& path);

const char* to_string(SimplifyMethod m);
SimplifyMethod simplify_method_from_string(const std::string& s);

}  // namespace camref
